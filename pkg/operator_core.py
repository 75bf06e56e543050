"""
Dense complex operators on C^n: domain types, spectral primitives and the
shared tolerance configuration.

Matrices are plain ``numpy`` arrays of dtype complex128; ``ensure_matrix`` and
``ensure_vector`` validate and coerce them at every public entry point.
Inner products are linear in the first argument: <x, y> = y* x.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg

logger = logging.getLogger(__name__)


class OpgeomError(Exception):
    """Base class for every error raised by the toolkit."""


class OperatorError(OpgeomError, ValueError):
    """Invalid operator or vector input, or a violated precondition."""


class ConfigError(OpgeomError, ValueError):
    """Invalid tolerance configuration or ensemble specification."""


class MatrixFormatError(OperatorError):
    """A matrix file could not be parsed."""


class SolverError(OpgeomError, RuntimeError):
    """A spectral decomposition or optimiser did not deliver a result."""


@dataclass(frozen=True)
class ToleranceConfig:
    unit_tol: float = 1e-10
    subspace_tol: float = 1e-8
    sweep_points: int = 720
    shell_points: int = 64
    refine_tol: float = 1e-10
    decision_margin: float = 1e-8
    marginal_band: float = 1e-6
    oracle_samples: int = 64
    rng_seed: int = 20170101

    def __post_init__(self):
        for name in ('unit_tol', 'subspace_tol', 'refine_tol', 'decision_margin', 'marginal_band'):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be a positive finite number, got {value}")
        if self.marginal_band < self.decision_margin:
            raise ConfigError("marginal_band must not be smaller than decision_margin")
        if int(self.sweep_points) < 16:
            raise ConfigError(f"sweep_points must be at least 16, got {self.sweep_points}")
        if int(self.shell_points) < 4:
            raise ConfigError(f"shell_points must be at least 4, got {self.shell_points}")
        if int(self.oracle_samples) < 1:
            raise ConfigError(f"oracle_samples must be at least 1, got {self.oracle_samples}")
        if not 0 <= int(self.rng_seed) < 2 ** 64:
            raise ConfigError(f"rng_seed must fit in 64 unsigned bits, got {self.rng_seed}")

    def replace(self, **overrides) -> 'ToleranceConfig':
        """Copy with the non-None overrides applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **changes)

    def rng(self, stream: int = 0) -> np.random.Generator:
        """Counter-based generator keyed by (rng_seed, stream)."""
        return np.random.Generator(np.random.Philox(key=int(self.rng_seed) | (int(stream) << 64)))


@dataclass(frozen=True)
class UnitVector:
    v: np.ndarray
    norm_defect: float

    @property
    def n(self) -> int:
        return self.v.shape[0]


@dataclass(frozen=True)
class NormingBasis:
    V: np.ndarray
    sigma_max: float
    gap: float

    @property
    def k(self) -> int:
        return self.V.shape[1]


@dataclass(frozen=True)
class RadiusResult:
    """
    A certified value of a norm-like functional.

    ``kind`` is "sup" for ||T||, w, dw and "inf" for m(T), c(T). The functional
    evaluated at ``witness`` is ``lower`` for sup functionals and ``upper`` for
    inf functionals; see ``attained``.
    """
    value: float
    witness: UnitVector
    lower: float
    upper: float
    sweep_resolution: float
    kind: str = 'sup'
    name: str = ''
    diagnostics: dict = field(default_factory=dict)

    @property
    def attained(self) -> float:
        return self.lower if self.kind == 'sup' else self.upper

    def to_dict(self) -> dict:
        return {
            'functional': self.name,
            'kind': self.kind,
            'value': float(self.value),
            'lower': float(self.lower),
            'upper': float(self.upper),
            'sweep_resolution': float(self.sweep_resolution),
            'witness': [[float(z.real), float(z.imag)] for z in self.witness.v],
            'witness_norm_defect': float(self.witness.norm_defect),
            'diagnostics': {k: float(v) if isinstance(v, (float, np.floating)) else v
                            for k, v in self.diagnostics.items()},
        }


def ensure_matrix(T, name: str = 'T') -> np.ndarray:
    """Coerce to an n x n complex128 array with finite entries."""
    try:
        A = np.asarray(T, dtype=np.complex128)
    except (TypeError, ValueError) as e:
        raise OperatorError(f"{name} is not a complex matrix: {e}") from e
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise OperatorError(f"{name} must be square, got shape {A.shape}")
    if A.shape[0] < 1:
        raise OperatorError(f"{name} must have dimension n >= 1")
    if not np.all(np.isfinite(A)):
        raise OperatorError(f"{name} has non-finite entries")
    return A


def ensure_vector(x, name: str = 'x', n: Optional[int] = None) -> np.ndarray:
    if isinstance(x, UnitVector):
        x = x.v
    try:
        v = np.asarray(x, dtype=np.complex128)
    except (TypeError, ValueError) as e:
        raise OperatorError(f"{name} is not a complex vector: {e}") from e
    if v.ndim != 1 or v.shape[0] < 1:
        raise OperatorError(f"{name} must be a non-empty 1-d vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise OperatorError(f"{name} has non-finite entries")
    if n is not None and v.shape[0] != n:
        raise OperatorError(f"{name} has dimension {v.shape[0]}, expected {n}")
    return v


def ensure_same_shape(T: np.ndarray, S: np.ndarray):
    if T.shape != S.shape:
        raise OperatorError(f"dimension mismatch: {T.shape} vs {S.shape}")


def unit_vector(x, cfg: Optional[ToleranceConfig] = None, normalize: bool = True) -> UnitVector:
    """
    Wrap ``x`` as a UnitVector. With ``normalize`` the vector is rescaled first;
    without it the norm must already be within ``unit_tol`` of one.
    """
    cfg = cfg or ToleranceConfig()
    v = ensure_vector(x)
    norm = float(np.linalg.norm(v))
    if normalize:
        if norm == 0.0:
            raise OperatorError("cannot normalise the zero vector")
        v = v / norm
        norm = float(np.linalg.norm(v))
    defect = abs(norm - 1.0)
    if defect > cfg.unit_tol:
        raise OperatorError(f"vector is not a unit vector (| ||v|| - 1 | = {defect:.3e})")
    return UnitVector(v=v, norm_defect=defect)


def basis_vector(n: int, i: int) -> np.ndarray:
    e = np.zeros(n, dtype=np.complex128)
    e[i] = 1.0
    return e


def identity(n: int) -> np.ndarray:
    if n < 1:
        raise OperatorError(f"identity needs n >= 1, got {n}")
    return np.eye(n, dtype=np.complex128)


def adjoint(T) -> np.ndarray:
    return ensure_matrix(T).conj().T


def inner(x: np.ndarray, y: np.ndarray) -> complex:
    """<x, y>, linear in x."""
    return complex(np.vdot(y, x))


def rayleigh(T, x) -> complex:
    """<Tx, x> for a unit (or any) vector x."""
    A = ensure_matrix(T)
    v = ensure_vector(x, n=A.shape[0])
    return complex(np.vdot(v, A @ v))


def hermitian_part(T: np.ndarray) -> np.ndarray:
    return 0.5 * (T + T.conj().T)


def skew_part(T: np.ndarray) -> np.ndarray:
    """Im T = (T - T*) / 2i, Hermitian."""
    return (T - T.conj().T) / 2j


def spectral_norm(T: np.ndarray) -> float:
    try:
        return float(scipy.linalg.svdvals(T)[0])
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"Singular value computation failed: {e}")
        raise SolverError(f"singular value computation failed: {e}") from e


def _svd(T: np.ndarray):
    try:
        return scipy.linalg.svd(T)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.error(f"SVD failed for {T.shape} matrix: {e}")
        raise SolverError(f"SVD failed: {e}") from e


def eigh(H: np.ndarray):
    """Hermitian eigendecomposition, ascending eigenvalues; batched over leading axes."""
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as e:
        logger.error(f"Hermitian eigendecomposition failed: {e}")
        raise SolverError(f"Hermitian eigendecomposition failed: {e}") from e


def op_norm(T) -> RadiusResult:
    """||T|| = sigma_max(T) with the top right singular vector as witness."""
    A = ensure_matrix(T)
    _, s, Vh = _svd(A)
    witness = unit_vector(Vh[0].conj())
    value = float(s[0])
    attained = min(float(np.linalg.norm(A @ witness.v)), value)
    return RadiusResult(value=value, witness=witness, lower=attained, upper=value,
                        sweep_resolution=0.0, kind='sup', name='opnorm')


def min_modulus(T) -> RadiusResult:
    """
    m(T) realised as sigma_min(T): in finite dimensions the largest alpha with
    ||Tx|| >= alpha ||x|| is the smallest singular value.
    """
    A = ensure_matrix(T)
    _, s, Vh = _svd(A)
    witness = unit_vector(Vh[-1].conj())
    value = float(s[-1])
    attained = max(float(np.linalg.norm(A @ witness.v)), value)
    return RadiusResult(value=value, witness=witness, lower=value, upper=attained,
                        sweep_resolution=0.0, kind='inf', name='minmod')


def norming_basis(T, cfg: Optional[ToleranceConfig] = None) -> NormingBasis:
    """
    Orthonormal basis of the top singular subspace of T; its unit sphere is M_T.
    Singular values with sigma^2 >= (1 - subspace_tol) sigma_max^2 are merged
    into the cluster.
    """
    cfg = cfg or ToleranceConfig()
    A = ensure_matrix(T)
    _, s, Vh = _svd(A)
    top = float(s[0])
    if top == 0.0:
        raise OperatorError("zero operator has no norming set of interest")
    sq = s ** 2
    in_cluster = sq >= (1.0 - cfg.subspace_tol) * sq[0]
    V = Vh[in_cluster].conj().T
    rest = sq[~in_cluster]
    gap = float(sq[0] - rest[0]) if rest.size else float(sq[0])
    logger.debug(f"Norming subspace of dimension {V.shape[1]} (sigma_max={top:.6g}, gap={gap:.3g})")
    return NormingBasis(V=V, sigma_max=top, gap=gap)


def subspace_intersection(V1: np.ndarray, V2: np.ndarray, cfg: Optional[ToleranceConfig] = None):
    """
    Intersection of range(V1) and range(V2) (orthonormal columns) via principal
    angles. Returns (Q, cosines) where Q has orthonormal columns spanning the
    directions whose principal-angle cosine exceeds 1 - subspace_tol; Q has
    zero columns when the intersection is trivial.
    """
    cfg = cfg or ToleranceConfig()
    C = V1.conj().T @ V2
    try:
        U, cosines, _ = scipy.linalg.svd(C)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SolverError(f"principal angle computation failed: {e}") from e
    keep = cosines > 1.0 - cfg.subspace_tol
    Q = V1 @ U[:, :cosines.shape[0]][:, keep]
    if Q.shape[1]:
        Q, _ = np.linalg.qr(Q)
    return Q, cosines


def rank_one(x, y) -> np.ndarray:
    """(x (x) y)(z) = <z, y> x, i.e. the matrix x y*."""
    xv = ensure_vector(x, 'x')
    yv = ensure_vector(y, 'y', n=xv.shape[0])
    return np.outer(xv, yv.conj())


def power(T: np.ndarray, k: int) -> np.ndarray:
    return np.linalg.matrix_power(T, k)


def eigvalsh(H: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(H)
    except np.linalg.LinAlgError as e:
        logger.error(f"Hermitian eigenvalue computation failed: {e}")
        raise SolverError(f"Hermitian eigenvalue computation failed: {e}") from e
