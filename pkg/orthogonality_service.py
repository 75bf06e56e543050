import logging
import math
from typing import Optional, Tuple

import numpy as np

from operator_core import (
    NormingBasis, OperatorError, ToleranceConfig, eigh, ensure_matrix, ensure_same_shape,
    hermitian_part, identity, norming_basis, spectral_norm, subspace_intersection, unit_vector,
)
from identities_service import IdentityService
from radii_service import RadiiService, numerical_range_preimage
from verdicts import (
    Condition, DecisionCertificate, EquivalenceBattery, Verdict, classify,
)

logger = logging.getLogger(__name__)


def _gamma_radius(norm_T: float, norm_S: float) -> float:
    # beyond |gamma| = 2||T||/||S||: ||T + gamma S|| >= |gamma| ||S|| - ||T|| > ||T||
    return 2.0 * norm_T / norm_S if norm_S > 0 else 2.0


def _complex_grid(radius: float, points: int) -> np.ndarray:
    xs = np.linspace(-radius, radius, points)
    return (xs[:, None] + 1j * xs[None, :]).ravel()


class OrthogonalityService:
    """Birkhoff-James orthogonality, r-orthogonality and norm-parallelism with certificates."""

    def __init__(self, config: Optional[ToleranceConfig] = None, radii: Optional[RadiiService] = None):
        self.config = config or ToleranceConfig()
        self.radii = radii or RadiiService(self.config)
        self.oracle_grid_points = 11
        self.gamma_grid_points = 5
        self.real_grid_points = 25
        self.identity_samples = 16

    def _pair(self, T, S) -> Tuple[np.ndarray, np.ndarray]:
        A, B = ensure_matrix(T, 'T'), ensure_matrix(S, 'S')
        ensure_same_shape(A, B)
        return A, B

    def _compress(self, A: np.ndarray, B: np.ndarray) -> Tuple[np.ndarray, NormingBasis]:
        basis = norming_basis(A, self.config)
        V = basis.V
        return V.conj().T @ (B.conj().T @ A) @ V, basis

    def compressed_form(self, T, S) -> np.ndarray:
        """
        M = V*(S*T)V with V a basis of the norming subspace of T, so that
        {<Tx, Sx> : x in M_T} = W(M).
        """
        A, B = self._pair(T, S)
        return self._compress(A, B)[0]

    def in_numerical_range(self, M, z: complex = 0.0) -> DecisionCertificate:
        """Decide z in W(M) by the minimum over theta of lambda_max(Re(e^{i theta}(M - zI)))."""
        cfg = self.config
        A = ensure_matrix(M, 'M')
        shifted = A - z * np.eye(A.shape[0])
        scale = spectral_norm(A)
        profile = self.radii.support_profile(shifted)
        h = profile.support_values
        _, neg = self.radii.refine_peaks(lambda t: -self.radii.extreme_pair(shifted, t)[0],
                                         profile.angles, -h)
        margin = min(-neg, float(h.min()))
        verdict = classify(margin, cfg, scale=scale)
        if verdict is Verdict.FAILS:
            return DecisionCertificate(verdict=verdict, margin=margin,
                                       notes=f"distance bound {-margin:.3e} from W(M)")
        y, residual = numerical_range_preimage(A, z, cfg, profile.angles)
        if residual <= 10.0 * cfg.decision_margin * max(1.0, scale):
            return DecisionCertificate(verdict=verdict, margin=margin, witness=unit_vector(y),
                                       notes=f"witness residual {residual:.3e}")
        logger.warning(f"Membership witness residual {residual:.3e} above tolerance (margin {margin:.3e})")
        return DecisionCertificate(verdict=verdict, margin=margin,
                                   notes=f"no witness within tolerance (residual {residual:.3e})")

    def is_bj_orthogonal(self, T, S) -> DecisionCertificate:
        """T is BJ-orthogonal to S iff <Tx, Sx> = 0 for some x in M_T."""
        A, B = self._pair(T, S)
        norm_T = spectral_norm(A)
        if norm_T == 0.0:
            raise OperatorError("BJ-orthogonality needs T != 0")
        M, basis = self._compress(A, B)
        cert = self.in_numerical_range(M, 0.0)
        witness = None
        if cert.witness is not None:
            witness = unit_vector(basis.V @ cert.witness.v)

        norm_S = spectral_norm(B)
        grid_note = ''
        if norm_S > 0.0:
            gammas = _complex_grid(_gamma_radius(norm_T, norm_S), self.oracle_grid_points)
            norms = np.linalg.norm(A[None, :, :] + gammas[:, None, None] * B[None, :, :], ord=2, axis=(1, 2))
            grid_gap = float(norms.min()) - norm_T
            grid_note = f"; gamma-grid min ||T+gS|| - ||T|| = {grid_gap:.3e}"
            if cert.holds and grid_gap < -self.config.marginal_band * max(1.0, norm_T):
                logger.warning(f"BJ-orthogonality certificate contradicted on the gamma grid ({grid_gap:.3e})")
        return DecisionCertificate(verdict=cert.verdict, margin=cert.margin, witness=witness,
                                   notes=f"k={basis.k}; {cert.notes}{grid_note}")

    def is_r_orthogonal(self, T, S) -> DecisionCertificate:
        """Re <Tx, Sx> = 0 for some x in M_T, decided from the spectrum of Re M."""
        A, B = self._pair(T, S)
        if spectral_norm(A) == 0.0:
            raise OperatorError("r-orthogonality needs T != 0")
        M, basis = self._compress(A, B)
        evals, vecs = eigh(hermitian_part(M))
        lo, hi = float(evals[0]), float(evals[-1])
        margin = min(-lo, hi)
        verdict = classify(margin, self.config, scale=spectral_norm(M))
        if verdict is Verdict.FAILS:
            return DecisionCertificate(verdict=verdict, margin=margin,
                                       notes=f"Re W(M) = [{lo:.6g}, {hi:.6g}]")
        a, b = max(hi, 0.0), max(-lo, 0.0)
        if a + b == 0.0:
            y = vecs[:, 0]
        else:
            y = math.sqrt(a / (a + b)) * vecs[:, 0] + math.sqrt(b / (a + b)) * vecs[:, -1]
        x = unit_vector(basis.V @ y)
        residual = abs(float(np.vdot(B @ x.v, A @ x.v).real))
        return DecisionCertificate(verdict=verdict, margin=margin, witness=x,
                                   notes=f"Re W(M) = [{lo:.6g}, {hi:.6g}]; |Re<Tx,Sx>| = {residual:.3e}")

    def is_parallel(self, T, S) -> DecisionCertificate:
        """T || S iff w(S*T) = ||T|| ||S||."""
        A, B = self._pair(T, S)
        norm_T, norm_S = spectral_norm(A), spectral_norm(B)
        if norm_T == 0.0 or norm_S == 0.0:
            return DecisionCertificate(verdict=Verdict.HOLDS, margin=0.0,
                                       notes="trivially parallel: zero operator")
        product = norm_T * norm_S
        w = self.radii.numerical_radius(B.conj().T @ A)
        margin = w.value - product
        verdict = classify(margin, self.config, scale=product)
        x = w.witness.v
        pairing = complex(np.vdot(B @ x, A @ x))
        lam = pairing / abs(pairing) if abs(pairing) > 0 else 1.0 + 0.0j
        additivity = spectral_norm(A + lam * B) - (norm_T + norm_S)
        logger.debug(f"Parallelism margin {margin:.3e}, ||T + lambda S|| - ||T|| - ||S|| = {additivity:.3e}")
        return DecisionCertificate(verdict=verdict, margin=margin, witness=w.witness, unimodular=lam,
                                   notes=f"||T + lambda S|| - (||T|| + ||S||) = {additivity:.3e}")

    def _norming_defect(self, A: np.ndarray, x: np.ndarray) -> float:
        norm = spectral_norm(A)
        return 1.0 - float(np.linalg.norm(A @ x)) ** 2 / norm ** 2 if norm > 0 else 0.0

    def verify_theorem_2_1(self, T, S) -> EquivalenceBattery:
        """
        T || S against: some x in M_T and M_S makes Tx + gamma Sx and Sx linearly
        dependent for every gamma. The gamma grid is a redundancy check; at the
        chosen x, |<Tx, Sx>| = ||T|| ||S|| already implies dependence for all gamma.
        """
        cfg = self.config
        A, B = self._pair(T, S)
        norm_T, norm_S = spectral_norm(A), spectral_norm(B)
        if norm_T == 0.0 or norm_S == 0.0:
            raise OperatorError("parallelism equivalence needs T != 0 and S != 0")
        par = self.is_parallel(A, B)
        par_x = par.witness.v
        extras = {'witness_norming_defect_T': self._norming_defect(A, par_x),
                  'witness_norming_defect_S': self._norming_defect(B, par_x)}

        Q, cosines = subspace_intersection(norming_basis(A, cfg).V, norming_basis(B, cfg).V, cfg)
        if Q.shape[1] == 0:
            margin = -(1.0 - float(cosines.max()))
            common = Condition('common_norming_dependence', classify(margin, cfg), margin)
            details = f"intersection empty (largest principal cosine {float(cosines.max()):.12f})"
        else:
            inner_w = self.radii.numerical_radius(Q.conj().T @ (B.conj().T @ A) @ Q)
            x = unit_vector(Q @ inner_w.witness.v)
            a, b = A @ x.v, B @ x.v
            nb = float(np.linalg.norm(b))
            worst = 0.0
            for g in _complex_grid(_gamma_radius(norm_T, norm_S), self.gamma_grid_points):
                u = a + g * b
                defect = float(np.linalg.norm(u)) ** 2 * nb ** 2 - abs(np.vdot(b, u)) ** 2
                scale = (float(np.linalg.norm(a)) + abs(g) * nb) ** 2 * nb ** 2
                worst = max(worst, defect / scale if scale > 0 else 0.0)
            margin = -worst
            common = Condition('common_norming_dependence', classify(margin, cfg), margin, witness=x)
            reduction = abs(np.vdot(b, a)) - norm_T * norm_S
            extras['pairing_gap'] = float(reduction)
            details = f"intersection dimension {Q.shape[1]}; |<Tx,Sx>| - ||T|| ||S|| = {reduction:.3e}"
        conditions = [Condition('parallel', par.verdict, par.margin, witness=par.witness), common]
        return EquivalenceBattery.assemble('thm-2-1', conditions, details=details, extras=extras)

    def _pythagoras_margin(self, A: np.ndarray, B: np.ndarray, x: np.ndarray, gammas: np.ndarray) -> float:
        a, b = A @ x, B @ x
        na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
        worst = 0.0
        for g in gammas:
            lhs = float(np.linalg.norm(a + g * b)) ** 2
            defect = abs(lhs - na ** 2 - abs(g) ** 2 * nb ** 2)
            scale = (na + abs(g) * nb) ** 2
            worst = max(worst, defect / scale if scale > 0 else 0.0)
        return -worst

    def verify_theorem_2_2(self, T, S) -> EquivalenceBattery:
        """T BJ-orthogonal to S against the Pythagoras identity at some x in M_T over a complex gamma grid."""
        cfg = self.config
        A, B = self._pair(T, S)
        norm_T, norm_S = spectral_norm(A), spectral_norm(B)
        bj = self.is_bj_orthogonal(A, B)
        if bj.witness is not None:
            x = bj.witness
            source = 'membership witness'
        else:
            M, basis = self._compress(A, B)
            x = unit_vector(basis.V @ self.radii.crawford_number(M).witness.v)
            source = 'nearest point of W(M) to 0'
        gammas = _complex_grid(_gamma_radius(norm_T, norm_S), self.gamma_grid_points)
        margin = self._pythagoras_margin(A, B, x.v, gammas)
        conditions = [
            Condition('bj_orthogonal', bj.verdict, bj.margin, witness=bj.witness),
            Condition('pythagoras_on_norming_vector', classify(margin, cfg), margin, witness=x),
        ]
        return EquivalenceBattery.assemble('thm-2-2', conditions, details=f"candidate: {source}")

    def verify_theorem_2_3(self, T, S) -> EquivalenceBattery:
        """
        r-orthogonality against the real-gamma Pythagoras identity. The identity
        ||a+gb||^2 ||b||^2 - (Re<a+gb,b>)^2 = ||a||^2 ||b||^2 - (Re<a,b>)^2 is
        re-checked on seeded random vectors and reported in extras.
        """
        cfg = self.config
        A, B = self._pair(T, S)
        norm_T, norm_S = spectral_norm(A), spectral_norm(B)
        r = self.is_r_orthogonal(A, B)
        if r.witness is not None:
            x = r.witness
            source = 'r-orthogonality witness'
        else:
            M, basis = self._compress(A, B)
            evals, vecs = eigh(hermitian_part(M))
            x = unit_vector(basis.V @ vecs[:, int(np.argmin(np.abs(evals)))])
            source = 'eigenvector of Re M closest to 0'
        radius = _gamma_radius(norm_T, norm_S)
        gammas = np.linspace(-radius, radius, self.real_grid_points).astype(np.complex128)
        margin = self._pythagoras_margin(A, B, x.v, gammas)
        conditions = [
            Condition('r_orthogonal', r.verdict, r.margin, witness=r.witness),
            Condition('real_pythagoras_on_norming_vector', classify(margin, cfg), margin, witness=x),
        ]
        extras = {'real_identity_residual': self._real_identity_residual(A.shape[0])}
        return EquivalenceBattery.assemble('thm-2-3', conditions, details=f"candidate: {source}", extras=extras)

    def _real_identity_residual(self, n: int) -> float:
        rng = self.config.rng(stream=3)
        identities = IdentityService(self.config, radii=self.radii)
        worst = 0.0
        for _ in range(self.identity_samples):
            a = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            g = float(rng.standard_normal())
            worst = max(worst, identities.real_identity_residual(a, b, g))
        return worst

    def daugavet(self, T) -> EquivalenceBattery:
        """||T + I|| = ||T|| + 1 against max Re W(T) = ||T||, i.e. T || I with lambda = 1."""
        cfg = self.config
        A = ensure_matrix(T)
        norm_T = spectral_norm(A)
        additivity = spectral_norm(A + identity(A.shape[0])) - norm_T - 1.0
        evals, vecs = eigh(hermitian_part(A))
        attainment = float(evals[-1]) - norm_T
        conditions = [
            Condition('norm_additivity', classify(additivity, cfg, scale=1.0 + norm_T), additivity,
                      lhs=norm_T + 1.0, rhs=norm_T + 1.0 + additivity),
            Condition('real_part_attains_norm', classify(attainment, cfg, scale=norm_T), attainment,
                      lhs=float(evals[-1]), rhs=norm_T, witness=unit_vector(vecs[:, -1])),
        ]
        return EquivalenceBattery.assemble('daugavet', conditions)
