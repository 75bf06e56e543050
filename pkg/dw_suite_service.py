import logging
import math
from dataclasses import dataclass, asdict
from typing import List, Optional, Sequence

import numpy as np

from operator_core import (
    OperatorError, ToleranceConfig, eigvalsh, ensure_matrix, ensure_vector, identity, norming_basis,
    rank_one, spectral_norm, unit_vector,
)
from orthogonality_service import OrthogonalityService
from radii_service import RadiiService
from verdicts import (
    Condition, EquivalenceBattery, InequalityReport, classify,
)

logger = logging.getLogger(__name__)


@dataclass
class ShiftRow:
    n: int
    norm: float
    w: float
    dw: float
    gap: float
    attained: bool

    def to_dict(self) -> dict:
        return asdict(self)


def shift_truncation(n: int) -> np.ndarray:
    """n x n truncation of the unilateral shift: ones on the first subdiagonal."""
    if n < 2:
        raise OperatorError(f"shift truncation needs n >= 2, got {n}")
    return np.eye(n, k=-1, dtype=np.complex128)


def sine_profile(n: int) -> np.ndarray:
    """Unit vector x_j ~ sin(j pi / (n+1)); <S_n x, x> = cos(pi / (n+1)) = w(S_n)."""
    x = np.sin(np.arange(1, n + 1) * np.pi / (n + 1)).astype(np.complex128)
    return x / np.linalg.norm(x)


class DavisWielandtSuite:
    """Equivalence batteries around T || I and the Davis-Wielandt equality dw(T) = sqrt(w^2 + ||T||^4)."""

    def __init__(self, config: Optional[ToleranceConfig] = None, radii: Optional[RadiiService] = None,
                 orthogonality: Optional[OrthogonalityService] = None):
        self.config = config or ToleranceConfig()
        self.radii = radii or RadiiService(self.config)
        self.orthogonality = orthogonality or OrthogonalityService(self.config, radii=self.radii)
        self.gamma_grid_points = 5

    def _dw_equality(self, A: np.ndarray, nrm: float, w: float, label: str = 'dw_equality') -> Condition:
        dw = self.radii.davis_wielandt_radius(A)
        bound = math.sqrt(w ** 2 + nrm ** 4)
        margin = dw.value - bound
        return Condition(label, classify(margin, self.config, scale=bound), margin,
                         lhs=dw.value, rhs=bound, witness=dw.witness)

    def theorem_3_1_battery(self, T) -> EquivalenceBattery:
        """T || I against dw(T) = sqrt(w^2(T) + ||T||^4)."""
        cfg = self.config
        A = ensure_matrix(T)
        nrm = spectral_norm(A)
        w = self.radii.numerical_radius(A)
        margin = w.value - nrm
        conditions = [
            Condition('parallel_to_identity', classify(margin, cfg, scale=nrm), margin,
                      lhs=w.value, rhs=nrm, witness=w.witness),
            self._dw_equality(A, nrm, w.value),
        ]
        return EquivalenceBattery.assemble('thm-3-1', conditions)

    def corollary_3_1_battery(self, T) -> EquivalenceBattery:
        cfg = self.config
        A = ensure_matrix(T)
        nrm = spectral_norm(A)
        w = self.radii.numerical_radius(A).value
        dw_cond = self._dw_equality(A, nrm, w, label='i_dw_equality')
        closed = nrm * math.sqrt(1.0 + nrm ** 2)
        closed_margin = dw_cond.lhs - closed
        gram_top = float(eigvalsh(A.conj().T @ A)[-1])
        gram_margin = w ** 2 - gram_top
        conditions = [
            dw_cond,
            Condition('ii_w_equals_norm', classify(w - nrm, cfg, scale=nrm), w - nrm, lhs=w, rhs=nrm),
            Condition('iii_dw_closed_form', classify(closed_margin, cfg, scale=closed), closed_margin,
                      lhs=dw_cond.lhs, rhs=closed),
            Condition('iv_gram_below_w2', classify(gram_margin, cfg, scale=nrm ** 2), gram_margin,
                      lhs=gram_top, rhs=w ** 2),
        ]
        return EquivalenceBattery.assemble('cor-3-1', conditions)

    def corollary_3_3_battery(self, T) -> EquivalenceBattery:
        """
        dw equality against w(T^2) = ||T||^2, w(TT*T) = ||T||^3 and the parallelism
        relations T || I, T || T*, T*T || T*.
        """
        cfg = self.config
        A = ensure_matrix(T)
        Ah = A.conj().T
        n = A.shape[0]
        nrm = spectral_norm(A)
        w = self.radii.numerical_radius(A).value
        w_sq = self.radii.numerical_radius(A @ A).value
        w_cube = self.radii.numerical_radius(A @ Ah @ A).value
        conditions = [
            self._dw_equality(A, nrm, w, label='i_dw_equality'),
            Condition('ii_w_square', classify(w_sq - nrm ** 2, cfg, scale=nrm ** 2), w_sq - nrm ** 2,
                      lhs=w_sq, rhs=nrm ** 2),
            Condition('iii_w_cube', classify(w_cube - nrm ** 3, cfg, scale=nrm ** 3), w_cube - nrm ** 3,
                      lhs=w_cube, rhs=nrm ** 3),
        ]
        for label, left, right in (('parallel_T_I', A, identity(n)), ('parallel_T_Tstar', A, Ah),
                                   ('parallel_TstarT_Tstar', Ah @ A, Ah)):
            cert = self.orthogonality.is_parallel(left, right)
            conditions.append(Condition(label, cert.verdict, cert.margin, witness=cert.witness))
        return EquivalenceBattery.assemble('cor-3-3', conditions)

    def corollary_3_4_rank_one(self, x, y) -> EquivalenceBattery:
        """
        For T = x (x) y: the dw equality against linear dependence of x and y.
        Items are labelled (a) and (b); w(T) is cross-checked against the closed
        form (|<x,y>| + ||x|| ||y||)/2 in extras.
        """
        cfg = self.config
        xv = ensure_vector(x, 'x')
        yv = ensure_vector(y, 'y', n=xv.shape[0])
        nx, ny = float(np.linalg.norm(xv)), float(np.linalg.norm(yv))
        if nx == 0.0 or ny == 0.0:
            raise OperatorError("rank-one battery needs x != 0 and y != 0")
        A = rank_one(xv, yv)
        nrm = spectral_norm(A)
        w = self.radii.numerical_radius(A).value
        pairing = abs(np.vdot(yv, xv))
        closed = 0.5 * (pairing + nx * ny)
        cosine_margin = pairing / (nx * ny) - 1.0
        conditions = [
            self._dw_equality(A, nrm, w, label='a_dw_equality'),
            Condition('b_linearly_dependent', classify(cosine_margin, cfg), cosine_margin,
                      lhs=pairing, rhs=nx * ny),
        ]
        closed_gap = abs(w - closed)
        if closed_gap > 10.0 * cfg.decision_margin * max(1.0, closed):
            logger.warning(f"Rank-one numerical radius {w:.15g} differs from closed form {closed:.15g}")
        return EquivalenceBattery.assemble('cor-3-4', conditions,
                                           details=f"w - closed form = {w - closed:.3e}",
                                           extras={'w': w, 'w_closed_form': closed, 'closed_form_gap': closed_gap})

    def corollary_3_5_battery(self, T) -> EquivalenceBattery:
        """
        dw equality against |<Tx,x>| = ||T|| for some unit x, and against linear
        dependence of Tx + gamma x and x for some x in M_T.
        """
        cfg = self.config
        A = ensure_matrix(T)
        nrm = spectral_norm(A)
        w = self.radii.numerical_radius(A)
        attained = abs(complex(np.vdot(w.witness.v, A @ w.witness.v)))
        extras = {'witness_attainment_gap': nrm - attained}
        conditions = [
            self._dw_equality(A, nrm, w.value, label='i_dw_equality'),
            Condition('ii_attained_norm', classify(w.value - nrm, cfg, scale=nrm), w.value - nrm,
                      lhs=attained, rhs=nrm, witness=w.witness),
        ]
        if nrm == 0.0:
            conditions.append(Condition('iii_norming_dependence', classify(0.0, cfg), 0.0))
        else:
            V = norming_basis(A, cfg).V
            inner = self.radii.numerical_radius(V.conj().T @ A @ V)
            x = unit_vector(V @ inner.witness.v)
            Tx = A @ x.v
            worst = 0.0
            xs = np.linspace(-2.0 * nrm, 2.0 * nrm, self.gamma_grid_points)
            for g in (xs[:, None] + 1j * xs[None, :]).ravel():
                u = Tx + g * x.v
                defect = float(np.vdot(u, u).real) - abs(np.vdot(x.v, u)) ** 2
                scale = (float(np.linalg.norm(Tx)) + abs(g)) ** 2
                worst = max(worst, defect / scale if scale > 0 else 0.0)
            conditions.append(Condition('iii_norming_dependence', classify(-worst, cfg), -worst, witness=x))
        return EquivalenceBattery.assemble('cor-3-5', conditions, extras=extras)

    def shift_truncation_demo(self, sizes: Sequence[int]) -> List[ShiftRow]:
        """||S_n||, w(S_n), dw(S_n) and the gap sqrt(2) - dw(S_n) for each truncation size."""
        rows = []
        for n in sizes:
            S = shift_truncation(int(n))
            x = sine_profile(int(n))
            norm = spectral_norm(S)
            w = self.radii.numerical_radius(S).value
            dw = self.radii.davis_wielandt_radius(S, seeds=[x]).value
            Sx = S @ x
            sine_dw = math.sqrt(abs(np.vdot(x, Sx)) ** 2 + float(np.vdot(Sx, Sx).real) ** 2)
            dw = max(dw, sine_dw)
            rows.append(ShiftRow(n=int(n), norm=norm, w=w, dw=dw, gap=math.sqrt(2.0) - dw,
                                 attained=bool(w >= norm - self.config.decision_margin)))
            logger.info(f"Shift truncation n={n}: w={w:.12f} dw={dw:.12f} gap={math.sqrt(2.0) - dw:.3e}")
        return rows

    def shift_contract(self, rows: List[ShiftRow]) -> List[InequalityReport]:
        """Strict growth of w and dw in n, and dw(S_n) <= sqrt(w^2 + 1)."""
        cfg = self.config
        reports = []
        ordered = sorted(rows, key=lambda r: r.n)
        for prev, nxt in zip(ordered, ordered[1:]):
            if prev.n == nxt.n:
                continue
            reports.append(InequalityReport.strictly_less(f'w_increasing_{prev.n}_{nxt.n}', prev.w, nxt.w, cfg))
            reports.append(InequalityReport.strictly_less(f'dw_increasing_{prev.n}_{nxt.n}', prev.dw, nxt.dw, cfg))
        for row in ordered:
            reports.append(InequalityReport.compare(f'dw_upper_bound_{row.n}', row.dw,
                                                    math.sqrt(row.w ** 2 + row.norm ** 4), cfg))
        return reports
