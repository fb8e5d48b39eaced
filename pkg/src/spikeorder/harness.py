"""Seeded Monte-Carlo experiment runner with paired estimator comparison.

For each grid point: calibrate the ridges once on pure noise, then run R
replications in which a single simulated spectrum is fed to every estimator
(paired comparison).  The true order used for the error metrics is the
*identifiable* order from the random-matrix oracle, not the nominal spike
count.  Replications use independent counter-based RNG streams spawned from
the master seed and are reduced in replication order, so all metrics are
independent of the worker count.
"""

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rmt
from .calibration import CalibrationResult, calibrate_ridge, py_constant
from .errors import ConfigurationError
from .estimators import (
    EstimatorConfig,
    loglog_rate,
    lwy_estimator,
    py_estimator,
    tvacle,
    vacle,
    wy_estimator,
)
from .spectra import AutocovModel, FisherModel, PopulationModel, simulate

__all__ = [
    "EstimatorSetting",
    "GridPoint",
    "ExperimentConfig",
    "SimulationReport",
    "ExperimentResult",
    "run_experiment",
    "summarize",
    "ESTIMATOR_NAMES",
]

ESTIMATOR_NAMES = ("vacle", "tvacle", "py", "lwy", "wy")

# reported distributions always use buckets 0..19 plus a >=20 bucket
N_BUCKETS = 20


@dataclass(frozen=True)
class EstimatorSetting:
    """One estimator plus its tuning overrides.

    ``ridge`` picks the calibrated ridge for the valley-cliff methods
    (default c1 for the plain variant, c2 for the transformed one, c3a for
    the transformed one on Fisher spectra).  ``tau`` defaults to 0.5, or
    0.8 for the Fisher family.
    """

    name: str
    ridge: str | None = None
    tau: float | None = None
    L: int = 20
    k1: float = 5.0
    k2: float = 5.0
    d_t: float | None = None
    py_C: float | None = None
    py_start_index: int = 0
    label: str | None = None

    def __post_init__(self):
        if self.name not in ESTIMATOR_NAMES:
            raise ConfigurationError(
                f"unknown estimator {self.name!r}; expected one of {ESTIMATOR_NAMES}"
            )
        if self.ridge is not None and self.ridge not in ("c1", "c2", "c3a", "c3b"):
            raise ConfigurationError(f"unknown ridge {self.ridge!r}")

    @property
    def column(self) -> str:
        return self.label or self.name


@dataclass(frozen=True)
class GridPoint:
    p: int
    n: int | None = None
    T: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """A model template, a size grid, and the estimators to compare."""

    model_id: str
    model: object
    grid: tuple
    estimators: tuple
    reps: int = 200
    seed: int = 0
    sigma2_mode: str = "known"
    calibration_reps: int = 500
    calibration_seed: int = 7

    def __post_init__(self):
        if self.reps < 1:
            raise ConfigurationError("reps must be at least 1")
        if not self.grid:
            raise ConfigurationError("grid must be nonempty")
        if not self.estimators:
            raise ConfigurationError("estimator list must be nonempty")
        if self.sigma2_mode not in ("known", "estimated"):
            raise ConfigurationError("sigma2_mode must be 'known' or 'estimated'")
        object.__setattr__(self, "grid", tuple(self.grid))
        object.__setattr__(self, "estimators", tuple(self.estimators))


@dataclass(frozen=True)
class SimulationReport:
    """Aggregated metrics for one (model, size, estimator) cell."""

    model_id: str
    p: int
    n: int | None
    T: int | None
    estimator: str
    reps: int
    q_true: int
    mean: float
    mse: float
    misest_rate: float
    distribution: tuple
    seed: int
    runtime_s: float
    partial: bool = False
    error: str | None = None

    def __post_init__(self):
        if self.reps > 0:
            if abs(sum(self.distribution) - 1.0) > 1e-12:
                raise ConfigurationError("distribution must sum to 1")
            if not -1e-12 <= self.misest_rate <= 1.0 + 1e-12:
                raise ConfigurationError("misestimation rate must lie in [0, 1]")
            if self.mse < (self.mean - self.q_true) ** 2 - 1e-9:
                raise ConfigurationError("MSE below squared bias; metrics inconsistent")

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id, "p": self.p, "n": self.n, "T": self.T,
            "estimator": self.estimator, "reps": self.reps, "q_true": self.q_true,
            "mean": self.mean, "mse": self.mse, "misest_rate": self.misest_rate,
            "distribution": list(self.distribution), "seed": self.seed,
            "runtime_s": self.runtime_s, "partial": self.partial, "error": self.error,
        }


@dataclass
class ExperimentResult:
    reports: list
    details: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "reports": [r.to_dict() for r in self.reports],
            "details": self.details,
        })


def _place_model(model, point: GridPoint):
    if isinstance(model, PopulationModel):
        if point.n is None:
            raise ConfigurationError("population grid points need p and n")
        return replace(model, p=point.p, n=point.n)
    if isinstance(model, FisherModel):
        if point.n is None or point.T is None:
            raise ConfigurationError("fisher grid points need p, n and T")
        return replace(model, p=point.p, n=point.n, T=point.T)
    if isinstance(model, AutocovModel):
        if point.T is None:
            raise ConfigurationError("autocov grid points need p and T")
        return replace(model, p=point.p, T=point.T)
    raise ConfigurationError(f"unknown model type {type(model).__name__}")


def _true_order(model) -> int:
    if isinstance(model, PopulationModel):
        return rmt.pop_identifiable_count(model.spikes, c=model.p / model.n,
                                          sigma2=model.sigma2)
    if isinstance(model, FisherModel):
        law = rmt.FisherLaw(c=model.p / model.n, y=model.p / model.T,
                            sigma2=model.sigma2)
        return rmt.fisher_identifiable_count(model.spikes, law)
    law = rmt.AutocovLaw(y=model.p / model.T, sigma2=model.sigma2)
    return rmt.autocov_identifiable_count(model.signatures, law)


def _bulk_edge(model) -> float:
    """Upper bulk edge on the sigma-normalized scale, for the transformation."""
    if isinstance(model, PopulationModel):
        return (1.0 + np.sqrt(model.p / model.n)) ** 2
    if isinstance(model, FisherModel):
        law = rmt.FisherLaw(c=model.p / model.n, y=model.p / model.T, sigma2=1.0)
        return law.upper_edge
    return rmt.AutocovLaw(y=model.p / model.T).b1


def _default_ridge(setting: EstimatorSetting, kind: str) -> str:
    if setting.ridge is not None:
        return setting.ridge
    if setting.name == "vacle":
        return "c1"
    return "c3a" if kind == "fisher" else "c2"


def _build_estimator(setting: EstimatorSetting, model, calib: CalibrationResult,
                     sigma2_mode: str):
    """Return a callable spectrum -> (q_hat, trace-or-None)."""
    kind = model.kind
    tau = setting.tau if setting.tau is not None else (0.8 if kind == "fisher" else 0.5)
    sigma2 = "estimated" if sigma2_mode == "estimated" else model.sigma2
    name = setting.name

    if name in ("vacle", "tvacle"):
        cfg = EstimatorConfig(
            c_n=calib.ridge(_default_ridge(setting, kind)),
            tau=tau, L=setting.L, sigma2=sigma2,
            e=_bulk_edge(model) if name == "tvacle" else None,
            k1=setting.k1, k2=setting.k2,
        )
        fn = tvacle if name == "tvacle" else vacle
        def run(spec, _fn=fn, _cfg=cfg):
            q, trace = _fn(spec, _cfg)
            return q, trace
        return run

    if name == "py":
        C = setting.py_C if setting.py_C is not None else py_constant(model.p / model.n).value
        def run(spec, _C=C, _L=setting.L, _s=sigma2, _start=setting.py_start_index):
            s2 = _resolve_known(spec, _s)
            est = py_estimator(spec, s2, _C, L=_L, start_index=_start)
            return est.q_hat, None
        return run

    if name == "lwy":
        d_t = setting.d_t if setting.d_t is not None else calib.d_t_lwy
        def run(spec, _d=d_t, _L=setting.L):
            est = lwy_estimator(spec, _d, L=_L)
            return est.q_hat, None
        return run

    # wy: bulk-edge exceedance count, Fisher family only
    if kind != "fisher":
        raise ConfigurationError("the wy estimator applies to Fisher spectra only")
    law = rmt.FisherLaw(c=model.p / model.n, y=model.p / model.T, sigma2=model.sigma2)
    edge = law.upper_edge
    d_n = loglog_rate(model.p)
    def run(spec, _edge=edge, _d=d_n, _L=setting.L):
        return min(wy_estimator(spec, _edge, _d), _L), None
    return run


def _resolve_known(spec, sigma2):
    if sigma2 == "estimated":
        from .calibration import estimate_sigma2
        return estimate_sigma2(spec)
    return float(sigma2)


def _aggregate(model_id, model, setting, q_true, qs, seed, runtime_s,
               partial=False, error=None) -> SimulationReport:
    qs = np.asarray(qs, dtype=int)
    reps = qs.size
    if reps:
        mean = float(np.mean(qs))
        mse = float(np.mean((qs - q_true) ** 2))
        misest = float(np.mean(qs != q_true))
        buckets = np.zeros(N_BUCKETS + 1)
        for q in qs:
            buckets[min(int(q), N_BUCKETS)] += 1
        buckets /= reps
    else:
        mean = mse = misest = float("nan")
        buckets = np.zeros(N_BUCKETS + 1)
    return SimulationReport(
        model_id=model_id, p=model.p, n=getattr(model, "n", None),
        T=getattr(model, "T", None), estimator=setting.column, reps=int(reps),
        q_true=int(q_true), mean=mean, mse=mse, misest_rate=misest,
        distribution=tuple(float(b) for b in buckets), seed=seed,
        runtime_s=runtime_s, partial=partial, error=error,
    )


def run_experiment(cfg: ExperimentConfig, workers: int = 1, cache_dir=None,
                   keep_traces: bool = False) -> ExperimentResult:
    """Run every grid point of the experiment; returns reports (and details).

    A replication failure aborts its grid point: metrics over the completed
    replications are still reported, flagged partial, with the diagnostic in
    ``error``.  Other grid points proceed.
    """
    reports = []
    details = []
    for point in cfg.grid:
        model = _place_model(cfg.model, point)
        t0 = time.perf_counter()
        calib = calibrate_ridge(
            model.kind, p=model.p, n=getattr(model, "n", None),
            T=getattr(model, "T", None), reps=cfg.calibration_reps,
            seed=cfg.calibration_seed, workers=workers, cache_dir=cache_dir,
        )
        q_true = _true_order(model)
        runners = [(s, _build_estimator(s, model, calib, cfg.sigma2_mode))
                   for s in cfg.estimators]

        children = np.random.SeedSequence(cfg.seed).spawn(cfg.reps)

        def one(idx: int):
            rng = np.random.Generator(np.random.Philox(children[idx]))
            spec = simulate(model, rng)
            out = {}
            traces = {}
            for setting, fn in runners:
                q, trace = fn(spec)
                out[setting.column] = q
                if keep_traces and trace is not None:
                    traces[setting.column] = trace.to_dict()
            digest = hashlib.sha1(spec.values.tobytes()).hexdigest() if keep_traces else None
            return out, traces, digest

        results = [None] * cfg.reps
        failure = None
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {pool.submit(one, i): i for i in range(cfg.reps)}
                for fut, idx in futures.items():
                    try:
                        results[idx] = fut.result()
                    except Exception as exc:  # noqa: BLE001 - diagnostic path
                        if failure is None or idx < failure[0]:
                            failure = (idx, repr(exc))
        else:
            for idx in range(cfg.reps):
                try:
                    results[idx] = one(idx)
                except Exception as exc:  # noqa: BLE001 - diagnostic path
                    failure = (idx, repr(exc))
                    break

        if failure is None:
            completed = results
            partial, error = False, None
        else:
            completed = results[: failure[0]]
            if any(r is None for r in completed):
                completed = [r for r in completed if r is not None]
            partial, error = True, f"replication {failure[0]} failed: {failure[1]}"

        runtime_s = time.perf_counter() - t0
        point_detail = {
            "model_id": cfg.model_id, "p": model.p,
            "n": getattr(model, "n", None), "T": getattr(model, "T", None),
            "q_true": q_true, "calibration": calib.to_dict(),
            "reps": [],
        }
        for setting, _ in runners:
            qs = [r[0][setting.column] for r in completed]
            reports.append(_aggregate(cfg.model_id, model, setting, q_true, qs,
                                      cfg.seed, runtime_s, partial, error))
        if keep_traces:
            for i, r in enumerate(completed):
                point_detail["reps"].append({
                    "rep": i, "spectrum_sha1": r[2],
                    "estimates": r[0], "traces": r[1],
                })
        details.append(point_detail)
    return ExperimentResult(reports=reports, details=details)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def summarize(reports) -> str:
    """Render reports as CSV text (header always present)."""
    header = (["model_id", "p", "n", "T", "estimator", "R", "mean", "mse",
               "misest_rate"]
              + [f"d{i}" for i in range(N_BUCKETS)] + [f"d_ge_{N_BUCKETS}"]
              + ["seed", "runtime_s"])
    lines = [",".join(header)]
    for r in reports:
        row = ([r.model_id, r.p, r.n, r.T, r.estimator, r.reps, r.mean, r.mse,
                r.misest_rate]
               + list(r.distribution) + [r.seed, r.runtime_s])
        lines.append(",".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"
