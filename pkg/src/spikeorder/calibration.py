"""Data-driven tuning: pure-noise ridge calibration and scale estimation.

The ridge c_n added to the difference ratios must dominate the bulk gap
fluctuations without swamping the signal gap.  Calibration simulates R
pure-noise spectra of the requested family and size, collects the top gap
lambda_1 - lambda_2, and turns its mean m and empirical quantiles q(alpha)
into the ridge family

    c1  = loglog(n) [q(.95) - q(.05)] - m        (plain valley-cliff)
    c2  = sqrt(loglog n) [q(.95) - q(.05)] - m   (transformed variant)
    c3a = sqrt(loglog p) [q(.95) - q(.05)] - m   (Fisher)
    c3b = sqrt(loglog p) [q(.80) - q(.05)] - m   (Fisher, heavy-tailed edge)

where n is the primary sample count (T for the auto-covariance family).
The same noise runs also calibrate the ratio tolerance d_T of the
consecutive-ratio baseline: the largest observed value of
max(1 - l2/l1, 1 - l3/l2) over the noise runs, i.e. the smallest tolerance
whose stopping rule fires at i = 1 in every pure-noise run.
"""

import json
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import ConfigurationError
from .rmt import mp_quantile
from .spectra import AutocovModel, FisherModel, PopulationModel, simulate

__all__ = [
    "CalibrationResult",
    "aggregate_gaps",
    "calibrate_ridge",
    "estimate_sigma2",
    "load_cached",
    "py_constant",
    "PyConstant",
]

QUANTILE_ALPHAS = (0.01, 0.05, 0.8, 0.95, 0.99)
RIDGE_FLOOR = 1e-8
SCHEMA_VERSION = 1

# the ratio-tolerance d_T fires the consecutive-ratio rule at i = 1 in this
# fraction of pure-noise runs; 1.0 picks the largest observed statistic
LWY_FIRE_LEVEL = 1.0

# calibration constants for the consecutive-gap baseline, keyed by c = p/n
_PY_TABLE = ((0.25, 5.5226), (1.0, 6.3424), (2.0, 7.6257))


class PyConstant(NamedTuple):
    value: float
    interpolated: bool


def py_constant(c: float) -> PyConstant:
    """Threshold constant C for the consecutive-gap rule at aspect ratio c.

    Tabulated at c in {0.25, 1, 2}; elsewhere log-linear interpolation in c,
    held flat beyond the table, with the ``interpolated`` flag set.
    """
    if c <= 0:
        raise ConfigurationError(f"c must be positive, got {c}")
    for ck, val in _PY_TABLE:
        if c == ck:
            return PyConstant(value=val, interpolated=False)
    xs = [math.log(ck) for ck, _ in _PY_TABLE]
    ys = [v for _, v in _PY_TABLE]
    return PyConstant(value=float(np.interp(math.log(c), xs, ys)), interpolated=True)


@lru_cache(maxsize=256)
def _mp_quantile_cached(alpha: float, c: float) -> float:
    return mp_quantile(alpha, c)


def estimate_sigma2(spec, c: float | None = None) -> float:
    """One-step scale estimate from a bulk quantile of the spectrum.

    Matches the sample quantile lambda_{p - floor(p alpha)} with the
    corresponding unit-scale Marchenko-Pastur quantile, at
    alpha = 1 - (2 max(1, c))^{-1} so the matching point sits at the median
    of the positive eigenvalues.  Exactly scale-equivariant.
    """
    if spec.p < 4:
        raise ConfigurationError(f"need p >= 4 to estimate sigma2, got p = {spec.p}")
    if c is None:
        if spec.n is None:
            raise ConfigurationError("spectrum lacks n; pass the aspect ratio c")
        c = spec.p / spec.n
    alpha = 1.0 - 1.0 / (2.0 * max(1.0, c))
    idx = spec.p - math.floor(spec.p * alpha)
    idx = min(max(idx, 1), spec.p)
    xi_hat = float(spec.values[idx - 1])
    return xi_hat / _mp_quantile_cached(alpha, c)


@dataclass(frozen=True)
class CalibrationResult:
    """Pure-noise top-gap statistics and the ridges derived from them."""

    kind: str
    p: int
    n: int | None
    T: int | None
    reps: int
    seed: int
    m_pn: float
    quantiles: dict
    c1: float
    c2: float
    c3a: float
    c3b: float
    d_t_lwy: float
    clamped: tuple = ()
    schema: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.reps < 2:
            raise ConfigurationError(f"calibration needs R >= 2, got {self.reps}")
        vals = [self.quantiles[a] for a in sorted(self.quantiles)]
        if any(vals[i] > vals[i + 1] for i in range(len(vals) - 1)):
            raise ConfigurationError("quantiles must be nondecreasing in alpha")

    def ridge(self, name: str) -> float:
        try:
            return {"c1": self.c1, "c2": self.c2, "c3a": self.c3a, "c3b": self.c3b}[name]
        except KeyError:
            raise ConfigurationError(f"unknown ridge {name!r} (expected c1/c2/c3a/c3b)") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["quantiles"] = {f"{a:g}": v for a, v in self.quantiles.items()}
        d["clamped"] = list(self.clamped)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationResult":
        d = dict(d)
        d["quantiles"] = {float(a): v for a, v in d["quantiles"].items()}
        d["clamped"] = tuple(d.get("clamped", ()))
        return cls(**d)


def _loglog(x: float) -> float:
    if x <= math.e:
        raise ConfigurationError(f"log log undefined or nonpositive at {x}")
    return math.log(math.log(x))


def _rank_quantile(sorted_vals: np.ndarray, alpha: float) -> float:
    """Order statistic at rank ceil(R alpha); 1e-9 guards float fuzz."""
    r = len(sorted_vals)
    rank = math.ceil(r * alpha - 1e-9)
    rank = min(max(rank, 1), r)
    return float(sorted_vals[rank - 1])


def _noise_model(kind: str, p: int, n, T):
    if kind == "population":
        if n is None:
            raise ConfigurationError("population calibration needs n")
        return PopulationModel(p=p, n=n)
    if kind == "fisher":
        if n is None or T is None:
            raise ConfigurationError("fisher calibration needs n and T")
        return FisherModel(p=p, n=n, T=T)
    if kind == "autocov":
        if T is None:
            raise ConfigurationError("autocov calibration needs T")
        return AutocovModel(p=p, T=T)
    raise ConfigurationError(f"unknown model kind {kind!r}")


def _cache_path(cache_dir, kind, p, n, T, reps, seed):
    name = f"calib_{kind}_p{p}_n{n if n is not None else 'x'}_T{T if T is not None else 'x'}_R{reps}_seed{seed}.json"
    return os.path.join(cache_dir, name)


def load_cached(cache_dir, kind, p, n=None, T=None, reps=500, seed=0):
    """Return the cached CalibrationResult or None."""
    path = _cache_path(cache_dir, kind, p, n, T, reps, seed)
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("schema") != SCHEMA_VERSION:
        return None
    return CalibrationResult.from_dict(payload)


def _store(cache_dir, result: CalibrationResult):
    os.makedirs(cache_dir, exist_ok=True)
    path = _cache_path(cache_dir, result.kind, result.p, result.n, result.T,
                       result.reps, result.seed)
    fd, tmp = tempfile.mkstemp(dir=cache_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(result.to_dict(), fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def calibrate_ridge(kind: str, p: int, n=None, T=None, reps: int = 500,
                    seed: int = 0, workers: int = 1, cache_dir=None,
                    force: bool = False) -> CalibrationResult:
    """Pure-noise calibration of the ridges (and the ratio tolerance d_T).

    Replications get independent counter-based RNG streams spawned from the
    master seed and are reduced in replication order, so the result does not
    depend on the worker count.  With ``cache_dir`` set, results are reused
    across runs keyed by (kind, p, n, T, reps, seed).
    """
    if reps < 2:
        raise ConfigurationError(f"calibration needs R >= 2, got {reps}")
    if cache_dir is not None and not force:
        cached = load_cached(cache_dir, kind, p, n, T, reps, seed)
        if cached is not None:
            return cached

    model = _noise_model(kind, p, n, T)
    children = np.random.SeedSequence(seed).spawn(reps)

    def one(idx: int):
        rng = np.random.Generator(np.random.Philox(children[idx]))
        v = simulate(model, rng).values
        gap = float(v[0] - v[1])
        # same 0/0 -> 1 ratio convention as the consecutive-ratio estimator
        r1 = v[1] / v[0] if v[0] > 0 else 1.0
        r2 = v[2] / v[1] if v[1] > 0 else 1.0
        return gap, max(1.0 - r1, 1.0 - r2)

    gaps = np.empty(reps)
    lwy_stats = np.empty(reps)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for idx, (gap, stat) in enumerate(pool.map(one, range(reps))):
                gaps[idx] = gap
                lwy_stats[idx] = stat
    else:
        for idx in range(reps):
            gaps[idx], lwy_stats[idx] = one(idx)

    result = aggregate_gaps(kind, p, n, T, seed, gaps, lwy_stats)
    if cache_dir is not None:
        _store(cache_dir, result)
    return result


def aggregate_gaps(kind: str, p: int, n, T, seed: int, gaps, lwy_stats) -> CalibrationResult:
    """Turn raw top-gap samples into a CalibrationResult.

    Split out from ``calibrate_ridge`` so degenerate inputs (e.g. identical
    gaps, which clamp every ridge to the floor) can be exercised directly.
    """
    gaps = np.asarray(gaps, dtype=float)
    lwy_stats = np.asarray(lwy_stats, dtype=float)
    reps = gaps.size
    gaps_sorted = np.sort(gaps)
    m = float(np.mean(gaps))
    quantiles = {a: _rank_quantile(gaps_sorted, a) for a in QUANTILE_ALPHAS}
    spread95 = quantiles[0.95] - quantiles[0.05]
    spread80 = quantiles[0.8] - quantiles[0.05]

    count = T if kind == "autocov" else n
    ll_n = _loglog(count)
    ll_p = _loglog(p)
    raw = {
        "c1": ll_n * spread95 - m,
        "c2": math.sqrt(ll_n) * spread95 - m,
        "c3a": math.sqrt(ll_p) * spread95 - m,
        "c3b": math.sqrt(ll_p) * spread80 - m,
    }
    clamped = tuple(name for name, v in raw.items() if v <= 0.0)
    ridges = {name: (v if v > 0.0 else RIDGE_FLOOR) for name, v in raw.items()}
    d_t = _rank_quantile(np.sort(lwy_stats), LWY_FIRE_LEVEL)

    return CalibrationResult(
        kind=kind, p=p, n=n, T=T, reps=reps, seed=seed,
        m_pn=m, quantiles=quantiles,
        c1=ridges["c1"], c2=ridges["c2"], c3a=ridges["c3a"], c3b=ridges["c3b"],
        d_t_lwy=d_t, clamped=clamped,
    )
