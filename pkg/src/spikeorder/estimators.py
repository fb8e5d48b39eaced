"""Order-determination criteria built on eigenvalue-difference ridge ratios.

The central objects are the ridge ratios

    r_i = (delta_{i+1} + c_n) / (delta_i + c_n),   delta_i = x_i - x_{i+1},

computed on the sigma-normalized spectrum x_i.  At the identifiable order q
the sequence dips toward zero (the valley) and jumps back to one for every
later index (the cliff): the estimate is the largest index with a ratio at
or below the threshold tau.  The transformed variant applies a piecewise
quadratic map first, which flattens the bulk below the edge and steepens
the spikes above it, sharpening the valley without touching the cliff.

Three baselines are included for comparison: a consecutive-gap threshold
rule (``py_estimator``), a consecutive-eigenvalue-ratio rule
(``lwy_estimator``) and a bulk-edge exceedance count (``wy_estimator``).
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .calibration import estimate_sigma2
from .errors import ConfigurationError
from .spectra import Spectrum

__all__ = [
    "EstimatorConfig",
    "RatioTrace",
    "PyEstimate",
    "LwyEstimate",
    "loglog",
    "loglog_rate",
    "fn_transform",
    "ridge_ratios",
    "vacle",
    "tvacle",
    "py_estimator",
    "lwy_estimator",
    "wy_estimator",
]


def loglog(x) -> float:
    if x <= math.e:
        raise ConfigurationError(f"log log undefined or nonpositive at {x}")
    return math.log(math.log(x))


def loglog_rate(p: int) -> float:
    """loglog(p) * p^(-2/3): the default transformation radius and edge shift."""
    return loglog(p) * p ** (-2.0 / 3.0)


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning for the valley-cliff estimators.

    ``sigma2`` is either a known positive scale or the string "estimated"
    (population spectra only; resolved through the quantile-based scale
    estimator).  The transformation block (e, kappa_n, k1, k2) only matters
    for the transformed variant; ``kappa_n = None`` selects the default
    loglog(p) * p^(-2/3).
    """

    c_n: float
    tau: float = 0.5
    L: int = 20
    sigma2: float | str = 1.0
    e: float | None = None
    kappa_n: float | None = None
    k1: float = 5.0
    k2: float = 5.0

    def __post_init__(self):
        if not 0.0 < self.tau < 1.0:
            raise ConfigurationError(f"tau must lie in (0, 1), got {self.tau}")
        if self.L < 3:
            raise ConfigurationError(f"search bound L must be at least 3, got {self.L}")
        if self.c_n <= 0:
            raise ConfigurationError(f"ridge c_n must be positive, got {self.c_n}")
        if isinstance(self.sigma2, str):
            if self.sigma2 != "estimated":
                raise ConfigurationError(f"sigma2 must be positive or 'estimated', got {self.sigma2!r}")
        elif self.sigma2 <= 0:
            raise ConfigurationError(f"sigma2 must be positive, got {self.sigma2}")
        if self.kappa_n is not None and self.kappa_n <= 0:
            raise ConfigurationError("kappa_n must be positive")
        if self.k1 < 0 or self.k2 < 0:
            raise ConfigurationError("k1 and k2 must be nonnegative")


@dataclass(frozen=True, eq=False)
class RatioTrace:
    """Normalized gaps, ridge ratios, and the selected order."""

    deltas: np.ndarray
    ratios: np.ndarray
    tau: float
    c_n: float
    q_hat: int

    def to_dict(self) -> dict:
        return {
            "deltas": [float(d) for d in self.deltas],
            "ratios": [float(r) for r in self.ratios],
            "tau": self.tau,
            "c_n": self.c_n,
            "q_hat": self.q_hat,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class PyEstimate:
    q_hat: int
    exhausted: bool
    d_n: float


@dataclass(frozen=True)
class LwyEstimate:
    q_hat: int
    exhausted: bool


def fn_transform(x, e: float, kappa_n: float, k1: float, k2: float):
    """C1 piecewise-quadratic map: identity on [e - kappa_n, e + kappa_n).

    Below the window the slope decays linearly to zero (flat left of
    e - kappa_n - 1/k1); above it the slope grows linearly with rate k2.
    k1 = 0 (resp. k2 = 0) selects the identity on that side; both zero is
    the identity everywhere.  Accepts scalars or arrays.
    """
    if kappa_n <= 0:
        raise ConfigurationError("kappa_n must be positive")
    if k1 < 0 or k2 < 0:
        raise ConfigurationError("k1 and k2 must be nonnegative")
    scalar = np.isscalar(x)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = xs.copy()
    left = e - kappa_n
    right = e + kappa_n
    if k1 > 0:
        knot = left - 1.0 / k1
        m = xs < knot
        out[m] = left - 0.5 / k1
        m = (xs >= knot) & (xs < left)
        v = xs[m]
        out[m] = 0.5 * k1 * v * v + (1.0 - k1 * left) * v + 0.5 * k1 * left * left
    if k2 > 0:
        m = xs >= right
        v = xs[m]
        out[m] = 0.5 * k2 * v * v + (1.0 - k2 * right) * v + 0.5 * k2 * right * right
    return float(out[0]) if scalar else out


def _resolve_sigma2(spec: Spectrum, cfg: EstimatorConfig) -> float:
    if cfg.sigma2 == "estimated":
        if spec.scale_power != 1 or spec.T is not None:
            raise ConfigurationError(
                "sigma2 estimation is only supported for population covariance spectra"
            )
        if spec.n is None:
            raise ConfigurationError("spectrum lacks n; cannot estimate sigma2")
        return estimate_sigma2(spec)
    return float(cfg.sigma2)


def _select(ratios: np.ndarray, tau: float) -> int:
    hits = np.nonzero(ratios <= tau)[0]
    return int(hits[-1]) + 1 if hits.size else 0


def _trace(x: np.ndarray, cfg: EstimatorConfig) -> RatioTrace:
    deltas = x[:-1] - x[1:]
    ratios = (deltas[1:] + cfg.c_n) / (deltas[:-1] + cfg.c_n)
    return RatioTrace(deltas=deltas, ratios=ratios, tau=cfg.tau, c_n=cfg.c_n,
                      q_hat=_select(ratios, cfg.tau))


def _normalized_head(spec: Spectrum, sigma2: float, cfg: EstimatorConfig) -> np.ndarray:
    if spec.p < cfg.L:
        raise ConfigurationError(
            f"search bound L = {cfg.L} exceeds the spectrum length p = {spec.p}"
        )
    if sigma2 <= 0:
        raise ConfigurationError("sigma2 must be positive")
    return spec.values[: cfg.L] / sigma2 ** spec.scale_power


def ridge_ratios(spec: Spectrum, sigma2: float, cfg: EstimatorConfig) -> RatioTrace:
    """Gaps and ridge ratios of the sigma-normalized spectrum.

    Produces delta_1 .. delta_{L-1} and r_1 .. r_{L-2}; q_hat is the
    thresholded valley index (0 when no ratio falls at or below tau).
    """
    return _trace(_normalized_head(spec, sigma2, cfg), cfg)


def vacle(spec: Spectrum, cfg: EstimatorConfig):
    """Valley-cliff estimate on the raw normalized gaps.

    Returns ``(q_hat, trace)``.
    """
    trace = ridge_ratios(spec, _resolve_sigma2(spec, cfg), cfg)
    return trace.q_hat, trace


def tvacle(spec: Spectrum, cfg: EstimatorConfig):
    """Valley-cliff estimate on transformed gaps; returns ``(q_hat, trace)``.

    Requires ``cfg.e``, the bulk upper edge of the model family on the
    normalized scale.  With k1 = k2 = 0 this reproduces ``vacle`` exactly.
    """
    if cfg.e is None:
        raise ConfigurationError("tvacle requires the bulk edge e in the config")
    sigma2 = _resolve_sigma2(spec, cfg)
    x = _normalized_head(spec, sigma2, cfg)
    kappa = cfg.kappa_n if cfg.kappa_n is not None else loglog_rate(spec.p)
    fx = fn_transform(x, cfg.e, kappa, cfg.k1, cfg.k2)
    trace = _trace(fx, cfg)
    return trace.q_hat, trace


def py_estimator(spec: Spectrum, sigma2: float, C: float, L: int = 20,
                 start_index: int = 0) -> PyEstimate:
    """Consecutive-gap threshold rule with d_n = C n^(-2/3) sqrt(2 loglog n).

    Scans i = start_index, ..., L and stops at the first i whose next two
    normalized gaps both fall below d_n.  The default start at i = 0 lets a
    pure-noise spectrum produce 0; ``start_index=1`` reproduces the variant
    whose smallest attainable value is 1.  When no index qualifies the
    result is L with the exhausted flag set.
    """
    if spec.n is None or spec.n < 3:
        raise ConfigurationError("py_estimator needs n >= 3")
    if start_index not in (0, 1):
        raise ConfigurationError("start_index must be 0 or 1")
    n = spec.n
    d_n = C * n ** (-2.0 / 3.0) * math.sqrt(2.0 * loglog(n))
    x = spec.values / sigma2 ** spec.scale_power
    deltas = x[:-1] - x[1:]
    for i in range(start_index, L + 1):
        if i + 1 >= deltas.size:
            break
        if deltas[i] < d_n and deltas[i + 1] < d_n:
            return PyEstimate(q_hat=i, exhausted=False, d_n=d_n)
    return PyEstimate(q_hat=L, exhausted=True, d_n=d_n)


def lwy_estimator(spec: Spectrum, d_T: float, L: int = 20) -> LwyEstimate:
    """Consecutive-eigenvalue-ratio rule; scale-free by construction.

    Stops at the first i >= 1 with lambda_{i+1}/lambda_i > 1 - d_T and
    lambda_{i+2}/lambda_{i+1} > 1 - d_T, and estimates i - 1.  Ratios of
    two zero eigenvalues count as 1 (the bulk-ratio limit).
    """
    if not 0.0 < d_T < 1.0:
        raise ConfigurationError(f"d_T must lie in (0, 1), got {d_T}")
    if spec.p < 3:
        raise ConfigurationError("need at least 3 eigenvalues")
    v = spec.values
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = v[1:] / v[:-1]
    ratios[np.isnan(ratios)] = 1.0  # 0/0 in the zero tail
    cut = 1.0 - d_T
    for i in range(1, L + 1):
        if i >= ratios.size:
            break
        if ratios[i - 1] > cut and ratios[i] > cut:
            return LwyEstimate(q_hat=i - 1, exhausted=False)
    return LwyEstimate(q_hat=L, exhausted=True)


def wy_estimator(spec: Spectrum, edge: float, d_n: float) -> int:
    """Count of eigenvalues at or above the bulk edge plus the shift d_n."""
    if d_n <= 0:
        raise ConfigurationError(f"d_n must be positive, got {d_n}")
    return int(np.sum(spec.values >= edge + d_n))
