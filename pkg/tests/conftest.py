import numpy as np
import pytest


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    """Shared calibration cache so repeated sizes are computed once per run."""
    return str(tmp_path_factory.mktemp("calib_cache"))


def gauss_legendre_mass(density, lo, hi, nodes=1500, weight=None):
    """Independent quadrature oracle: Gauss-Legendre on the sin^2 substitution.

    Written against numpy only, deliberately sharing no code with the
    package's adaptive quadrature.
    """
    theta, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.25 * np.pi * (theta + 1.0)
    w = w * 0.25 * np.pi
    span = hi - lo
    x = lo + span * np.sin(theta) ** 2
    f = np.array([density(xi) for xi in x])
    if weight is not None:
        f = f * np.array([weight(xi) for xi in x])
    return float(np.sum(w * f * span * np.sin(2.0 * theta)))
