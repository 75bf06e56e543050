import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.optimize import minimize

from operator_core import (
    OperatorError, ToleranceConfig, eigvalsh, ensure_matrix, ensure_vector, op_norm,
    spectral_norm, unit_vector,
)
from radii_service import RadiiService, rotated_hermitian, sweep_angles
from verdicts import InequalityReport, Verdict, classify

logger = logging.getLogger(__name__)


@dataclass
class BestApproximationReport:
    gamma_star: complex
    infimum: float
    identity_lhs: float
    identity_rhs: float
    residual: float
    dependence_margin: float
    dependence: Verdict
    rank_dependent: bool

    @property
    def consistent(self) -> bool:
        """Cauchy-Schwarz equality verdict agrees with the rank test (marginal counts as agreeing)."""
        if self.dependence is Verdict.MARGINAL:
            return True
        return (self.dependence is Verdict.HOLDS) == self.rank_dependent


def _pair_vectors(a, b) -> Tuple[np.ndarray, np.ndarray]:
    av = ensure_vector(a, 'a')
    bv = ensure_vector(b, 'b', n=av.shape[0])
    return av, bv


def _disk_grid(radius: float, points: int) -> np.ndarray:
    # row-major (Re, Im) order, so argmin ties resolve to the lexicographically smallest index
    xs = np.linspace(-radius, radius, points)
    gammas = (xs[:, None] + 1j * xs[None, :]).ravel()
    return gammas[np.abs(gammas) <= radius * (1.0 + 1e-12)]


def lemma_2_1_residual(a, b, gamma: complex) -> float:
    """| ||a+gb||^2 ||b||^2 - |<a+gb,b>|^2 - (||a||^2 ||b||^2 - |<a,b>|^2) |"""
    av, bv = _pair_vectors(a, b)
    u = av + gamma * bv
    nb2 = float(np.vdot(bv, bv).real)
    lhs = float(np.vdot(u, u).real) * nb2 - abs(np.vdot(bv, u)) ** 2
    rhs = float(np.vdot(av, av).real) * nb2 - abs(np.vdot(bv, av)) ** 2
    return abs(lhs - rhs)


def identity_scale(a, b, gamma: complex) -> float:
    """(||a|| + |g| ||b||)^2 ||b||^2, the natural size of both sides of the two-vector identities."""
    av, bv = _pair_vectors(a, b)
    nb = float(np.linalg.norm(bv))
    return (float(np.linalg.norm(av)) + abs(gamma) * nb) ** 2 * nb ** 2


def real_identity_residual(a, b, gamma: float) -> float:
    """| ||a+gb||^2 ||b||^2 - (Re<a+gb,b>)^2 - (||a||^2 ||b||^2 - (Re<a,b>)^2) | for real g."""
    av, bv = _pair_vectors(a, b)
    g = float(gamma)
    u = av + g * bv
    nb2 = float(np.vdot(bv, bv).real)
    lhs = float(np.vdot(u, u).real) * nb2 - float(np.vdot(bv, u).real) ** 2
    rhs = float(np.vdot(av, av).real) * nb2 - float(np.vdot(bv, av).real) ** 2
    return abs(lhs - rhs)


class IdentityService:
    """Scalar identities, the Buzano-type inequality and the refinements of ||T||^2 - w^2(T)."""

    def __init__(self, config: Optional[ToleranceConfig] = None, radii: Optional[RadiiService] = None):
        self.config = config or ToleranceConfig()
        self.radii = radii or RadiiService(self.config)
        self.coarse = RadiiService(self.config.replace(sweep_points=max(16, self.config.sweep_points // 8)))
        self.grid_points = 41
        self.disk_factor = 3.0
        self.boundary_fraction = 0.95
        self.identity_tol = 1e-10

    def lemma_2_1_residual(self, a, b, gamma: complex) -> float:
        return lemma_2_1_residual(a, b, gamma)

    def real_identity_residual(self, a, b, gamma: float) -> float:
        """Real-gamma identity residual relative to identity_scale (0 when the scale vanishes)."""
        scale = identity_scale(a, b, gamma)
        residual = real_identity_residual(a, b, gamma)
        return residual / scale if scale > 0 else residual

    def best_approximation_identity(self, a, b) -> BestApproximationReport:
        """
        ||b||^2 inf_g ||a+gb||^2 = ||a||^2 ||b||^2 - |<a,b>|^2 with the minimiser
        g* = -<a,b>/||b||^2, plus the Cauchy-Schwarz equality case against a rank test.
        """
        cfg = self.config
        av, bv = _pair_vectors(a, b)
        nb = float(np.linalg.norm(bv))
        if nb == 0.0:
            raise OperatorError("best approximation needs b != 0")
        na = float(np.linalg.norm(av))
        pairing = complex(np.vdot(bv, av))
        gamma_star = -pairing / nb ** 2
        infimum = float(np.linalg.norm(av + gamma_star * bv)) ** 2
        lhs = nb ** 2 * infimum
        rhs = na ** 2 * nb ** 2 - abs(pairing) ** 2
        residual = abs(lhs - rhs)
        if residual > self.identity_tol * max(1.0, na ** 2 * nb ** 2):
            logger.warning(f"Best-approximation identity residual {residual:.3e} above tolerance")

        margin = abs(pairing) - na * nb
        dependence = classify(margin, cfg, scale=na * nb)
        sv = scipy.linalg.svdvals(np.stack([av, bv]))
        rank_dependent = bool(sv[-1] <= math.sqrt(2.0 * cfg.decision_margin) * max(float(sv[0]), 1e-300))
        return BestApproximationReport(gamma_star=gamma_star, infimum=infimum, identity_lhs=lhs,
                                       identity_rhs=rhs, residual=residual, dependence_margin=margin,
                                       dependence=dependence, rank_dependent=rank_dependent)

    def vector_bj_orthogonality(self, a, b) -> List[InequalityReport]:
        """a is BJ-orthogonal to b (inf_g ||a+gb|| >= ||a||) against <a,b> = 0."""
        cfg = self.config
        av, bv = _pair_vectors(a, b)
        na, nb = float(np.linalg.norm(av)), float(np.linalg.norm(bv))
        pairing = complex(np.vdot(bv, av))
        distance = float(np.linalg.norm(av - (pairing / nb ** 2) * bv)) if nb > 0 else na
        return [
            InequalityReport.compare('bj_vector_distance', na, distance, cfg),
            InequalityReport.compare('inner_product_vanishes', abs(pairing), 0.0, cfg),
        ]

    def buzano_check(self, a, b, e) -> InequalityReport:
        """2 |<a,e><e,b>| <= ||a|| ||b|| + |<a,b>| for unit e."""
        av, bv = _pair_vectors(a, b)
        ev = unit_vector(ensure_vector(e, 'e', n=av.shape[0]), self.config, normalize=False).v
        lhs = 2.0 * abs(np.vdot(ev, av) * np.vdot(bv, ev))
        rhs = float(np.linalg.norm(av)) * float(np.linalg.norm(bv)) + abs(np.vdot(bv, av))
        return InequalityReport.compare('buzano', lhs, rhs, self.config)

    def z2_consequence_check(self, T) -> List[InequalityReport]:
        """
        ||T||^2 + c^2(T) <= sup_x (||Tx||^2 + |<Tx,x>|^2) <= 4 w^2(T), plus the
        end-to-end comparison. The middle term is maximised over the joint range.
        """
        cfg = self.config
        A = ensure_matrix(T)
        w_res = self.radii.numerical_radius(A)
        nrm_res = op_norm(A)
        nrm = nrm_res.value
        c = self.radii.crawford_number(A)
        w = w_res.value
        left = nrm ** 2 + c.value ** 2
        _, middle, trace = self.radii.maximize_joint_range(
            A,
            objective=lambda p1, p2, q: p1 * p1 + p2 * p2 + q,
            gradient=lambda p1, p2, q: (2.0 * p1, 2.0 * p2, np.ones_like(q)),
            seeds=[w_res.witness.v, c.witness.v, nrm_res.witness.v],
        )
        return [
            InequalityReport.compare('z2_left', left, middle, cfg, optimizer_trace=trace),
            InequalityReport.compare('z2_right', middle, 4.0 * w ** 2, cfg, optimizer_trace=trace),
            InequalityReport.compare('z2_chain', left, 4.0 * w ** 2, cfg),
        ]

    def _crawford_value(self, M: np.ndarray, radii: RadiiService) -> float:
        profile = radii.support_profile(M)
        _, best = radii.refine_peaks(lambda t: radii.extreme_pair(M, t, top=False)[0],
                                     profile.angles, profile.lower_values)
        return max(0.0, best, float(profile.lower_values.max()))

    def _minimize_over_disk(self, coarse: Callable[[np.ndarray], np.ndarray],
                            fine: Callable[[complex], float], radius: float,
                            grid_points: int) -> Tuple[complex, float, float]:
        """Grid argmin of the coarse objective, then Nelder-Mead on the fine one."""
        gammas = _disk_grid(radius, grid_points)
        values = coarse(gammas)
        j = int(np.argmin(values))
        g0, grid_min = complex(gammas[j]), float(values[j])
        best_gamma, best_value = g0, fine(g0)
        step = 2.0 * radius / (grid_points - 1)
        x0 = np.array([g0.real, g0.imag])
        simplex = np.stack([x0, x0 + [step, 0.0], x0 + [0.0, step]])
        try:
            res = minimize(lambda v: fine(complex(v[0], v[1])), x0, method='Nelder-Mead',
                           options={'initial_simplex': simplex, 'maxiter': 200,
                                    'xatol': math.sqrt(self.config.refine_tol) * max(1.0, radius),
                                    'fatol': self.config.refine_tol})
            if float(res.fun) < best_value:
                best_gamma, best_value = complex(res.x[0], res.x[1]), float(res.fun)
        except (ValueError, FloatingPointError) as e:
            logger.warning(f"Nelder-Mead refinement failed from gamma={g0:.6g}: {e}")
        return best_gamma, best_value, grid_min

    def _infimum(self, coarse, fine, radius: float, grid_points: int) -> Tuple[complex, float, dict]:
        gamma, value, grid_min = self._minimize_over_disk(coarse, fine, radius, grid_points)
        expanded = False
        if abs(gamma) >= self.boundary_fraction * radius:
            logger.debug(f"Minimiser touches |gamma|={radius:.6g}; expanding the disk once")
            radius *= 2.0
            expanded = True
            gamma, value, grid_min = self._minimize_over_disk(coarse, fine, radius, grid_points)
        trace = {'grid_points': grid_points, 'radius': radius, 'grid_min': grid_min,
                 'gamma_star': [gamma.real, gamma.imag], 'value': value, 'expanded': expanded}
        return gamma, value, trace

    def refinement_i(self, T, grid_points: Optional[int] = None) -> InequalityReport:
        """||T||^2 - w^2(T) <= inf_g { ||T - gI||^2 - c^2(T - gI) }."""
        cfg = self.config
        grid_points = grid_points or self.grid_points
        A = ensure_matrix(T)
        n = A.shape[0]
        eye = np.eye(n)
        nrm = spectral_norm(A)
        w = self.radii.numerical_radius(A).value
        lhs = nrm ** 2 - w ** 2
        profile = self.radii.support_profile(A)
        phases = np.exp(1j * profile.angles)

        def coarse(gammas):
            # lambda_min(Re(e^{it}(T - gI))) = lambda_min(Re(e^{it}T)) - Re(e^{it} g)
            c = np.maximum(0.0, np.max(profile.lower_values[None, :]
                                       - (phases[None, :] * gammas[:, None]).real, axis=1))
            norms = np.linalg.norm(A[None, :, :] - gammas[:, None, None] * eye, ord=2, axis=(1, 2))
            return norms ** 2 - c ** 2

        def fine(g):
            shifted = A - g * eye
            return spectral_norm(shifted) ** 2 - self._crawford_value(shifted, self.coarse) ** 2

        gamma, _, trace = self._infimum(coarse, fine, self.disk_factor * max(nrm, 1e-12), grid_points)
        shifted = A - gamma * eye
        rhs = spectral_norm(shifted) ** 2 - self.radii.crawford_number(shifted).value ** 2
        trace['value'] = rhs
        return InequalityReport.compare('refinement_i', lhs, rhs, cfg, optimizer_trace=trace)

    def refinement_ii(self, T, xi: complex) -> InequalityReport:
        """(1 - ||T - xi I||^2/|xi|^2) ||T||^2 <= w^2(T) - c^2(T*T - xi T*)/|xi|^2."""
        A = ensure_matrix(T)
        xi = complex(xi)
        if xi == 0:
            raise OperatorError("refinement (ii) needs xi != 0")
        n = A.shape[0]
        nrm = spectral_norm(A)
        lhs = (1.0 - spectral_norm(A - xi * np.eye(n)) ** 2 / abs(xi) ** 2) * nrm ** 2
        Ah = A.conj().T
        c = self.radii.crawford_number(Ah @ A - xi * Ah).value
        rhs = self.radii.numerical_radius(A).value ** 2 - c ** 2 / abs(xi) ** 2
        return InequalityReport.compare('refinement_ii', lhs, rhs, self.config,
                                        optimizer_trace={'xi': [xi.real, xi.imag]})

    def refinement_iii(self, T, grid_points: Optional[int] = None) -> InequalityReport:
        """
        w^2(T) - w(T^2) <= inf_g (||T - g T*||^2 ||T||^2 - c^2(T^2 - g TT*)) / (||T||^2 + c^2(T)).
        TT* is Hermitian, so Re(e^{it}(T^2 - g TT*)) = Re(e^{it}T^2) - Re(e^{it}g) TT*.
        """
        cfg = self.config
        grid_points = grid_points or self.grid_points
        A = ensure_matrix(T)
        nrm = spectral_norm(A)
        if nrm == 0.0:
            raise OperatorError("refinement (iii) needs T != 0")
        Ah = A.conj().T
        P, Q = A @ A, A @ Ah
        w = self.radii.numerical_radius(A).value
        lhs = w ** 2 - self.radii.numerical_radius(P).value
        denominator = nrm ** 2 + self.radii.crawford_number(A).value ** 2
        angles = sweep_angles(self.coarse.config.sweep_points)
        phases = np.exp(1j * angles)
        HP = rotated_hermitian(P, angles)

        def coarse(gammas):
            out = np.empty(gammas.shape[0])
            for start in range(0, gammas.shape[0], self.grid_points):
                chunk = gammas[start:start + self.grid_points]
                shift = (phases[None, :] * chunk[:, None]).real
                stack = HP[None, :, :, :] - shift[:, :, None, None] * Q[None, None, :, :]
                lows = eigvalsh(stack)[..., 0]
                c = np.maximum(0.0, lows.max(axis=1))
                norms = np.linalg.norm(A[None, :, :] - chunk[:, None, None] * Ah[None, :, :], ord=2, axis=(1, 2))
                out[start:start + chunk.shape[0]] = (norms ** 2 * nrm ** 2 - c ** 2) / denominator
            return out

        def fine(g):
            c = self._crawford_value(P - g * Q, self.coarse)
            return (spectral_norm(A - g * Ah) ** 2 * nrm ** 2 - c ** 2) / denominator

        gamma, _, trace = self._infimum(coarse, fine, self.disk_factor, grid_points)
        c = self.radii.crawford_number(P - gamma * Q).value
        rhs = (spectral_norm(A - gamma * Ah) ** 2 * nrm ** 2 - c ** 2) / denominator
        trace['value'] = rhs
        return InequalityReport.compare('refinement_iii', lhs, rhs, cfg, optimizer_trace=trace)

    def pointwise_refinement(self, T, x, gamma: Optional[complex] = None) -> List[InequalityReport]:
        """
        The pointwise inequalities behind the refinements, at a unit x:
        ||Tx||^2 - |<Tx,x>|^2 <= ||T - gI||^2 - c^2(T - gI) (g defaults to the
        refinement (i) minimiser) and 2|<Tx,x>|^2 <= ||Tx|| ||T*x|| + |<T^2 x, x>|.
        """
        cfg = self.config
        A = ensure_matrix(T)
        xv = unit_vector(ensure_vector(x, 'x', n=A.shape[0]), cfg, normalize=False).v
        if gamma is None:
            star = self.refinement_i(A).optimizer_trace['gamma_star']
            gamma = complex(star[0], star[1])
        Tx, Tsx = A @ xv, A.conj().T @ xv
        pairing = complex(np.vdot(xv, Tx))
        shifted = A - gamma * np.eye(A.shape[0])
        gap_rhs = spectral_norm(shifted) ** 2 - self.radii.crawford_number(shifted).value ** 2
        return [
            InequalityReport.compare('pointwise_gap', float(np.linalg.norm(Tx)) ** 2 - abs(pairing) ** 2,
                                     gap_rhs, cfg, optimizer_trace={'gamma': [gamma.real, gamma.imag]}),
            InequalityReport.compare('pointwise_buzano', 2.0 * abs(pairing) ** 2,
                                     float(np.linalg.norm(Tx) * np.linalg.norm(Tsx))
                                     + abs(np.vdot(xv, A @ Tx)), cfg),
        ]
