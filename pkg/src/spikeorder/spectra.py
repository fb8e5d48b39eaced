"""Model specifications, data generation and spectrum extraction.

Three generative families are supported, each producing a ``Spectrum`` of
descending sample eigenvalues:

* spiked population covariance: n iid Gaussian vectors with diagonal
  covariance diag(spikes, sigma2, ..., sigma2), uncentered S = X X' / n;
* spiked Fisher matrices: S1 from the signal sample, S2 from an independent
  pure-noise sample, eigenvalues of the symmetric-definite pencil (S1, S2);
* lag-1 auto-covariance factor models: VAR(1) factors plus white noise,
  Sigma = sum_{t=2}^{T+1} y_t y_{t-1}' / T, eigenvalues of M = Sigma Sigma'.

All generators are deterministic functions of (spec, rng) and never share
state, so replications can run concurrently with one RNG stream each.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, signal

from .errors import ConfigurationError, IngestionError, SingularMatrixError
from .rmt import FactorSignature

__all__ = [
    "PopulationModel",
    "FisherModel",
    "AutocovModel",
    "Spectrum",
    "simulate_population",
    "simulate_fisher",
    "simulate_autocov",
    "simulate",
    "ingest_spectrum",
]

# eigensolver noise below this (relative) size is clamped to zero
_NEG_TOL = 1e-12


@dataclass(frozen=True)
class PopulationModel:
    """Spiked population covariance: diag(spikes, sigma2, ..., sigma2)."""

    p: int
    n: int
    spikes: tuple = ()
    sigma2: float = 1.0

    kind = "population"

    def __post_init__(self):
        spikes = tuple(float(s) for s in self.spikes)
        object.__setattr__(self, "spikes", spikes)
        if self.n < 2:
            raise ConfigurationError(f"n = {self.n} too small (need n >= 2)")
        if self.p < len(spikes) + 2:
            raise ConfigurationError(
                f"p = {self.p} too small for {len(spikes)} spikes (need p >= q + 2)"
            )
        if any(s <= self.sigma2 for s in spikes):
            raise ConfigurationError("spikes must exceed the noise level sigma2")
        if any(spikes[i] < spikes[i + 1] for i in range(len(spikes) - 1)):
            raise ConfigurationError("spikes must be in descending order")
        if self.sigma2 <= 0:
            raise ConfigurationError("sigma2 must be positive")


@dataclass(frozen=True)
class FisherModel:
    """Spiked Fisher matrix with the three-factor loading structure.

    The loading matrix sends three independent unit-variance signals onto
    the first three coordinates: factor 1 loads coordinate 1 with weight
    sqrt(alpha1); factor 2 loads coordinates 2 and 3 with equal weights
    sqrt(alpha2/2); factor 3 loads them antisymmetrically with
    +-sqrt(alpha3/2).  The resulting spikes of Sigma1 Sigma2^{-1} are
    sigma2 + alpha_i / d1.  The noise covariance is diagonal, value d1 on
    the first floor(p/2) coordinates and d2 on the rest.  ``alpha = ()``
    gives the pure-noise Fisher matrix (Sigma1 = sigma2 Sigma2).
    """

    p: int
    n: int
    T: int
    alpha: tuple = ()
    sigma2: float = 1.0
    noise_diag: tuple = (1.0, 2.0)

    kind = "fisher"

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if len(alpha) not in (0, 3):
            raise ConfigurationError("alpha must have length 0 (pure noise) or 3")
        if self.T <= self.p:
            raise ConfigurationError(
                f"need T > p for an invertible noise covariance (T={self.T}, p={self.p})"
            )
        if self.n < 2:
            raise ConfigurationError("n must be at least 2")
        if self.p < len(alpha) + 2:
            raise ConfigurationError("p too small for the loading structure")
        if self.sigma2 <= 0 or any(d <= 0 for d in self.noise_diag):
            raise ConfigurationError("sigma2 and noise_diag entries must be positive")

    @property
    def spikes(self) -> tuple:
        """Spiked eigenvalues of Sigma1 Sigma2^{-1} implied by the loadings."""
        if not self.alpha:
            return ()
        d1 = self.noise_diag[0]
        return tuple(sorted((self.sigma2 + a / d1 for a in self.alpha), reverse=True))

    def _sigma2_diag(self) -> np.ndarray:
        d = np.full(self.p, self.noise_diag[1], dtype=float)
        d[: self.p // 2] = self.noise_diag[0]
        return d

    def _loading(self) -> np.ndarray:
        a1, a2, a3 = self.alpha
        A = np.zeros((self.p, 3))
        A[0, 0] = math.sqrt(a1)
        A[1, 1] = math.sqrt(a2 / 2.0)
        A[2, 1] = math.sqrt(a2 / 2.0)
        A[1, 2] = math.sqrt(a3 / 2.0)
        A[2, 2] = -math.sqrt(a3 / 2.0)
        return A


@dataclass(frozen=True)
class AutocovModel:
    """Factor model y_t = A x_t + eps_t with diagonal VAR(1) factors.

    x_t = Theta x_{t-1} + e_t, e_t ~ N(0, Gamma), loading A = (I_q, O)',
    eps_t ~ N(0, sigma2 I_p).  theta holds the diagonal of Theta and
    gamma_diag the diagonal of Gamma (a scalar is broadcast).
    """

    p: int
    T: int
    theta: tuple = ()
    gamma_diag: tuple = ()
    sigma2: float = 1.0
    burn_in: int = 1000

    kind = "autocov"

    def __post_init__(self):
        theta = tuple(float(t) for t in self.theta)
        object.__setattr__(self, "theta", theta)
        gd = self.gamma_diag
        if isinstance(gd, (int, float)):
            gd = (float(gd),) * len(theta)
        gd = tuple(float(g) for g in gd)
        if not gd and theta:
            gd = (2.0,) * len(theta)
        object.__setattr__(self, "gamma_diag", gd)
        if self.T < 3:
            raise ConfigurationError(f"T = {self.T} too small (need T >= 3)")
        if len(gd) != len(theta):
            raise ConfigurationError("theta and gamma_diag lengths differ")
        if any(abs(t) >= 1.0 for t in theta):
            raise ConfigurationError("VAR(1) coefficients must satisfy |theta| < 1")
        if any(g <= 0 for g in gd):
            raise ConfigurationError("innovation variances must be positive")
        if self.p < len(theta) + 2:
            raise ConfigurationError("p too small for the factor count")
        if self.sigma2 <= 0:
            raise ConfigurationError("sigma2 must be positive")
        if self.burn_in < 0:
            raise ConfigurationError("burn_in must be nonnegative")

    @property
    def q(self) -> int:
        return len(self.theta)

    @property
    def signatures(self) -> tuple:
        """Per-factor (gamma0, gamma1) implied by the AR(1) dynamics."""
        out = []
        for th, g in zip(self.theta, self.gamma_diag):
            g0 = g / (1.0 - th * th)
            out.append(FactorSignature(gamma0=g0, gamma1=th * g0))
        return tuple(out)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Descending sample eigenvalues plus the metadata estimators need.

    ``scale_power`` is the power of sigma^2 that normalizes the values:
    1 for covariance and Fisher eigenvalues, 2 for the squared-auto-covariance
    eigenvalues (which live on the sigma^4 scale).
    """

    values: np.ndarray
    p: int
    n: int | None = None
    T: int | None = None
    scale_power: int = 1
    provenance: str = "simulated"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ConfigurationError("spectrum values must be one-dimensional")
        if values.size != self.p:
            raise ConfigurationError(
                f"spectrum length {values.size} does not match p = {self.p}"
            )
        if not np.all(np.isfinite(values)):
            raise ConfigurationError("spectrum contains non-finite values")
        if np.any(np.diff(values) > 0):
            raise ConfigurationError("spectrum values must be sorted descending")
        if values.size and values[-1] < 0:
            raise ConfigurationError("spectrum values must be nonnegative")
        if self.scale_power not in (1, 2):
            raise ConfigurationError("scale_power must be 1 or 2")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def _finish(values: np.ndarray, ref_scale: float) -> np.ndarray:
    """Sort descending and clamp eigensolver noise below zero."""
    values = np.sort(values)[::-1]
    floor = -_NEG_TOL * max(ref_scale, 1.0)
    values[(values < 0) & (values > floor)] = 0.0
    return np.maximum(values, 0.0)


def simulate_population(spec: PopulationModel, rng: np.random.Generator) -> Spectrum:
    """Spectrum of the uncentered sample covariance S = X X' / n."""
    p, n = spec.p, spec.n
    scale = np.full(p, math.sqrt(spec.sigma2))
    for i, s in enumerate(spec.spikes):
        scale[i] = math.sqrt(s)
    X = rng.standard_normal((p, n))
    X *= scale[:, None]
    if p > n:
        # S shares its nonzero eigenvalues with the n x n Gram matrix
        gram = X.T @ X / n
        w = np.linalg.eigvalsh(gram)
        w = np.concatenate([np.zeros(p - n), w])
    else:
        w = np.linalg.eigvalsh(X @ X.T / n)
    values = _finish(w, ref_scale=float(w[-1]) if w.size else 1.0)
    return Spectrum(values=values, p=p, n=n, scale_power=1)


def simulate_fisher(spec: FisherModel, rng: np.random.Generator) -> Spectrum:
    """Spectrum of S1 S2^{-1} via the symmetric-definite pencil (S1, S2).

    Draw order (fixed for reproducibility): signal factors u, signal noise,
    then the independent pure-noise sample behind S2.
    """
    p, n, T = spec.p, spec.n, spec.T
    d = spec._sigma2_diag()
    u = rng.standard_normal((3, n)) if spec.alpha else None
    X = rng.standard_normal((p, n))
    X *= np.sqrt(spec.sigma2 * d)[:, None]
    if u is not None:
        X += spec._loading() @ u
    E = rng.standard_normal((p, T))
    E *= np.sqrt(d)[:, None]

    S1 = X @ X.T / n
    S2 = E @ E.T / T
    w2 = np.linalg.eigvalsh(S2)
    if w2[0] <= 0.0 or w2[-1] / w2[0] > 1e12:
        raise SingularMatrixError(
            f"noise covariance numerically singular (condition ~ {w2[-1] / max(w2[0], 1e-300):.3e})"
        )
    w = linalg.eigh(S1, S2, eigvals_only=True)
    values = _finish(w, ref_scale=float(w[-1]))
    return Spectrum(values=values, p=p, n=n, T=T, scale_power=1)


def simulate_autocov(spec: AutocovModel, rng: np.random.Generator) -> Spectrum:
    """Spectrum of M = Sigma Sigma' with Sigma = sum_t y_t y_{t-1}' / T.

    T + 1 observations are kept after burn-in so that exactly T lag-1
    products enter Sigma.  Draw order: factor innovations, then noise.
    """
    p, T, q = spec.p, spec.T, spec.q
    keep = T + 1
    if q:
        e = rng.standard_normal((q, spec.burn_in + keep))
        e *= np.sqrt(np.asarray(spec.gamma_diag))[:, None]
        x = np.empty_like(e)
        for i, th in enumerate(spec.theta):
            x[i] = signal.lfilter([1.0], [1.0, -th], e[i])
        x = x[:, -keep:]
    Y = rng.standard_normal((p, keep))
    Y *= math.sqrt(spec.sigma2)
    if q:
        Y[:q] += x
    Sig = Y[:, 1:] @ Y[:, :-1].T / T
    M = Sig @ Sig.T
    w = np.linalg.eigvalsh(M)
    values = _finish(w, ref_scale=float(w[-1]))
    return Spectrum(values=values, p=p, n=T, T=T, scale_power=2)


def simulate(spec, rng: np.random.Generator) -> Spectrum:
    """Dispatch on the model family."""
    if isinstance(spec, PopulationModel):
        return simulate_population(spec, rng)
    if isinstance(spec, FisherModel):
        return simulate_fisher(spec, rng)
    if isinstance(spec, AutocovModel):
        return simulate_autocov(spec, rng)
    raise ConfigurationError(f"unknown model spec {type(spec).__name__}")


def ingest_spectrum(path, n=None, T=None, scale_power=1, p=None, column=None) -> Spectrum:
    """Read eigenvalues from a text or CSV file, in any order.

    Plain format: one decimal float per line, blank lines and ``#`` comments
    allowed.  With ``column``, the file is parsed as CSV with a header row
    and the named column is used.  Values are validated finite and
    nonnegative; negatives above -1e-12 are clamped to zero.
    """
    raw = []
    if column is not None:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or column not in reader.fieldnames:
                raise IngestionError(f"column {column!r} not found in {path}")
            for lineno, row in enumerate(reader, start=2):
                cell = (row[column] or "").strip()
                if not cell:
                    continue
                try:
                    raw.append(float(cell))
                except ValueError:
                    raise IngestionError(
                        f"{path}:{lineno}: cannot parse {cell!r} as a float"
                    ) from None
    else:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.split("#", 1)[0].strip()
                if not text:
                    continue
                try:
                    raw.append(float(text))
                except ValueError:
                    raise IngestionError(
                        f"{path}:{lineno}: cannot parse {text!r} as a float"
                    ) from None

    if len(raw) < 3:
        raise IngestionError(f"{path}: need at least 3 eigenvalues, found {len(raw)}")
    values = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(values)):
        raise IngestionError(f"{path}: non-finite eigenvalues present")
    if np.any(values < -1e-12):
        raise IngestionError(f"{path}: negative eigenvalue {values.min()} beyond tolerance")
    values = np.sort(np.maximum(values, 0.0))[::-1]
    if p is not None and p != values.size:
        raise IngestionError(f"{path}: found {values.size} values, expected p = {p}")
    return Spectrum(values=values, p=values.size, n=n, T=T,
                    scale_power=scale_power, provenance="ingested")
