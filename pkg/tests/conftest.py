import numpy as np
import pytest
from scipy.optimize import minimize

from dw_suite_service import DavisWielandtSuite
from identities_service import IdentityService
from operator_core import ToleranceConfig
from orthogonality_service import OrthogonalityService
from radii_service import RadiiService

PROJECTION = np.array([[1, 0], [0, 0]], dtype=np.complex128)
NILPOTENT = np.array([[0, 1], [0, 0]], dtype=np.complex128)


@pytest.fixture
def cfg():
    return ToleranceConfig()


@pytest.fixture
def fast_cfg():
    return ToleranceConfig(shell_points=24, oracle_samples=16)


@pytest.fixture
def radii(cfg):
    return RadiiService(cfg)


@pytest.fixture
def ortho(cfg):
    return OrthogonalityService(cfg)


@pytest.fixture
def identities(cfg):
    return IdentityService(cfg)


@pytest.fixture
def suite(fast_cfg):
    return DavisWielandtSuite(fast_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def ginibre(rng, n):
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)


def _from_real(p):
    n = p.shape[0] // 2
    x = p[:n] + 1j * p[n:]
    return x / np.linalg.norm(x)


def sphere_oracle(T, objective, samples=4000, polish=6, seed=0):
    """
    Brute-force maximum of objective(x) over unit x: random sampling followed
    by Nelder-Mead/BFGS polish of the best samples.
    """
    rng = np.random.default_rng(seed)
    n = T.shape[0]
    X = rng.standard_normal((samples, n)) + 1j * rng.standard_normal((samples, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    values = np.array([objective(x) for x in X])
    best = float(values.max())
    for j in np.argsort(-values)[:polish]:
        p0 = np.concatenate([X[j].real, X[j].imag])
        res = minimize(lambda p: -objective(_from_real(p)), p0, method='BFGS', options={'gtol': 1e-12})
        best = max(best, float(-res.fun))
    return best


def numerical_radius_oracle(T):
    return sphere_oracle(T, lambda x: abs(np.vdot(x, T @ x)))


def crawford_oracle(T):
    """Brute-force inf of |<Tx, x>| over unit x, minimised in squared form so the polish stays smooth."""
    return float(np.sqrt(max(-sphere_oracle(T, lambda x: -abs(np.vdot(x, T @ x)) ** 2), 0.0)))


def dw_oracle(T):
    def f(x):
        Tx = T @ x
        return float(np.sqrt(abs(np.vdot(x, Tx)) ** 2 + np.vdot(Tx, Tx).real ** 2))
    return sphere_oracle(T, f)


def bj_oracle_min(T, S, points=41):
    """min over the gamma disk |g| <= 2||T||/||S|| of ||T + gS||, grid plus Nelder-Mead."""
    nT, nS = np.linalg.norm(T, 2), np.linalg.norm(S, 2)
    radius = 2.0 * nT / nS
    xs = np.linspace(-radius, radius, points)
    best, best_g = np.inf, 0.0
    for re in xs:
        for im in xs:
            v = np.linalg.norm(T + (re + 1j * im) * S, 2)
            if v < best:
                best, best_g = v, (re, im)
    res = minimize(lambda p: np.linalg.norm(T + (p[0] + 1j * p[1]) * S, 2), np.array(best_g),
                   method='Nelder-Mead', options={'xatol': 1e-12, 'fatol': 1e-14, 'maxiter': 2000})
    return min(best, float(res.fun))


def parallel_oracle_max(T, S, points=4096):
    """max over a unit-circle grid of ||T + lambda S||."""
    lams = np.exp(2j * np.pi * np.arange(points) / points)
    return max(np.linalg.norm(T + lam * S, 2) for lam in lams)
