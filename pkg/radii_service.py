import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from operator_core import (
    RadiusResult, ToleranceConfig, basis_vector, eigh,
    ensure_matrix, hermitian_part, op_norm, power, rayleigh, skew_part,
    spectral_norm, unit_vector,
)
from verdicts import InequalityReport, Verdict, classify, equality_margin

logger = logging.getLogger(__name__)

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass
class SupportProfile:
    """
    Support function of W(T) sampled on an angle grid: support_values[i] is
    lambda_max(Re(e^{i theta_i} T)) and witnesses[i] its eigenvector, so that
    <T w_i, w_i> is a boundary point of W(T). lower_values holds lambda_min.
    """
    angles: np.ndarray
    support_values: np.ndarray
    witnesses: np.ndarray
    lower_values: np.ndarray
    lower_witnesses: np.ndarray

    def boundary_points(self, T: np.ndarray) -> np.ndarray:
        return _rayleigh_rows(T, self.witnesses)


def sweep_angles(m: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(m) / m


def rotated_hermitian(T: np.ndarray, angles) -> np.ndarray:
    """Stack of Re(e^{i theta} T) for every angle."""
    phases = np.exp(1j * np.asarray(angles, dtype=float))[:, None, None]
    R = phases * T[None, :, :]
    return 0.5 * (R + np.conj(np.swapaxes(R, -1, -2)))


def fibonacci_directions(count: int) -> np.ndarray:
    """Quasi-uniform unit vectors on the 2-sphere (Fibonacci lattice)."""
    i = np.arange(count, dtype=float)
    z = 1.0 - 2.0 * (i + 0.5) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = GOLDEN_ANGLE * i
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _rayleigh_rows(T: np.ndarray, X: np.ndarray) -> np.ndarray:
    """<T x, x> for every row x of X."""
    return np.einsum('ij,ij->i', X.conj(), X @ T.T)


def _joint_points(T: np.ndarray, X: np.ndarray):
    """(Re <Tx,x>, Im <Tx,x>, ||Tx||^2) for every row x of X."""
    TX = X @ T.T
    r = np.einsum('ij,ij->i', X.conj(), TX)
    q = np.einsum('ij,ij->i', TX.conj(), TX).real
    return r.real, r.imag, q


def _dw_objective(p1, p2, q):
    return p1 * p1 + p2 * p2 + q * q


def _dw_gradient(p1, p2, q):
    return 2.0 * p1, 2.0 * p2, 2.0 * q


def _chunks(count: int, size: int):
    for start in range(0, count, size):
        yield slice(start, min(count, start + size))


def _normalized(y: np.ndarray) -> np.ndarray:
    return y / np.linalg.norm(y)


def _walk_segment(B: np.ndarray, y1: np.ndarray, y2: np.ndarray, target: complex) -> np.ndarray:
    """
    Unit y in span{y1, y2} with <By,y> = target, for a target on the segment
    between the Rayleigh values of y1 and y2. The path
    y(t) = cos t y1 + e^{i phi} sin t y2 keeps the component of <By,y>
    orthogonal to the segment fixed; a root of the parallel component is found
    with brentq.
    """
    y1, y2 = _normalized(y1), _normalized(y2)
    z1, z2 = np.vdot(y1, B @ y1), np.vdot(y2, B @ y2)
    d = z2 - z1
    if abs(d) <= 1e-15 * max(1.0, abs(z1)):
        return y1 if abs(z1 - target) <= abs(z2 - target) else y2
    rot = np.conj(d) / abs(d)
    C = rot * (B - target * np.eye(B.shape[0]))
    g = np.vdot(y1, skew_part(C) @ y2)
    u2 = np.exp(1j * (0.5 * np.pi - np.angle(g))) * y2 if abs(g) > 0 else y2

    def along(t):
        y = math.cos(t) * y1 + math.sin(t) * u2
        return float(np.vdot(y, C @ y).real / np.vdot(y, y).real)

    fa, fb = along(0.0), along(0.5 * np.pi)
    if fa >= 0.0:
        return y1
    if fb <= 0.0:
        return _normalized(u2)
    t = brentq(along, 0.0, 0.5 * np.pi, xtol=1e-15, maxiter=200)
    return _normalized(math.cos(t) * y1 + math.sin(t) * u2)


def numerical_range_preimage(M, z: complex, cfg: Optional[ToleranceConfig] = None,
                             angles: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """
    Construct a unit y with <My, y> = z for z in W(M).

    Boundary points of W(M - zI) from the support sweep are fanned out from the
    point p0 nearest the origin; the ray from p0 through 0 leaves the sampled
    polygon at w on an edge (or collinear vertex). A walk along that edge
    reaches w, a second walk from p0 to w reaches 0. Returns (y, residual)
    where residual = |<My,y> - z|; when z is outside the sampled polygon the
    closest reachable point is returned.
    """
    cfg = cfg or ToleranceConfig()
    A = ensure_matrix(M, 'M')
    k = A.shape[0]
    B = A - z * np.eye(k)
    if k == 1:
        y = np.ones(1, dtype=np.complex128)
        return y, float(abs(B[0, 0]))
    scale = max(1.0, spectral_norm(A))
    tol = 1e-12 * scale
    if angles is None:
        angles = sweep_angles(cfg.sweep_points)
    _, vecs = eigh(rotated_hermitian(B, angles))
    X = vecs[:, :, -1]
    P = _rayleigh_rows(B, X)

    keep = [0]
    for i in range(1, P.shape[0]):
        if abs(P[i] - P[keep[-1]]) > tol:
            keep.append(i)
    if len(keep) > 1 and abs(P[keep[-1]] - P[keep[0]]) <= tol:
        keep.pop()
    pts, vs = P[keep], X[keep]

    j0 = int(np.argmin(np.abs(pts)))
    p0 = pts[j0]
    if abs(p0) <= tol:
        return _normalized(vs[j0]), float(abs(p0))

    d = -p0
    count = pts.shape[0]
    best_s, best = -np.inf, None
    rel = (pts - p0) / d
    for j in range(count):
        if j != j0 and abs(rel[j].imag) * abs(d) <= tol and rel[j].real > best_s:
            best_s, best = float(rel[j].real), ('vertex', j)
    for j in range(count):
        a, b = j, (j + 1) % count
        if a == b:
            continue
        ra, e = rel[a], rel[b] - rel[a]
        if abs(e.imag) <= 1e-300:
            continue
        u = -ra.imag / e.imag
        if -1e-9 <= u <= 1.0 + 1e-9:
            u = min(1.0, max(0.0, u))
            s = ra.real + u * e.real
            if s > best_s:
                best_s, best = float(s), ('edge', a, b, u)

    if best is not None and best_s >= 1.0 - 1e-9:
        if best[0] == 'vertex':
            y_w = vs[best[1]]
        else:
            _, a, b, u = best
            w = pts[a] + u * (pts[b] - pts[a])
            y_w = _walk_segment(B, vs[a], vs[b], w)
        y = _walk_segment(B, vs[j0], y_w, 0.0)
    else:
        # 0 is outside the sampled polygon: walk to the nearest point on its boundary
        best_dist, y = abs(p0), _normalized(vs[j0])
        for j in range(count):
            a, b = j, (j + 1) % count
            seg = pts[b] - pts[a]
            if abs(seg) == 0:
                continue
            u = min(1.0, max(0.0, float((-pts[a] * np.conj(seg)).real / abs(seg) ** 2)))
            dist = abs(pts[a] + u * seg)
            if dist < best_dist:
                best_dist = dist
                y = _walk_segment(B, vs[a], vs[b], pts[a] + u * seg)
    y = _normalized(y)
    residual = float(abs(np.vdot(y, B @ y)))
    return y, residual


class RadiiService:
    """Numerical radius, Crawford number and Davis-Wielandt radius of dense matrices."""

    def __init__(self, config: Optional[ToleranceConfig] = None):
        self.config = config or ToleranceConfig()
        self.refine_candidates = 4
        self.sweep_candidates = 8
        self.polish_phase_iterations = 25
        self.polish_max_iterations = 500
        self.polish_keep = 4
        self.chunk_elements = 1 << 20

    def _chunk_size(self, n: int) -> int:
        return max(1, self.chunk_elements // (n * n))

    def extreme_pair(self, T: np.ndarray, theta: float, top: bool = True):
        evals, vecs = eigh(rotated_hermitian(T, [theta])[0])
        j = -1 if top else 0
        return float(evals[j]), vecs[:, j]

    def support_profile(self, T, angles: Optional[np.ndarray] = None) -> SupportProfile:
        A = ensure_matrix(T)
        if angles is None:
            angles = sweep_angles(self.config.sweep_points)
        angles = np.asarray(angles, dtype=float)
        tops, top_vecs, bottoms, bottom_vecs = [], [], [], []
        for part in _chunks(angles.shape[0], self._chunk_size(A.shape[0])):
            evals, vecs = eigh(rotated_hermitian(A, angles[part]))
            tops.append(evals[:, -1])
            top_vecs.append(vecs[:, :, -1])
            bottoms.append(evals[:, 0])
            bottom_vecs.append(vecs[:, :, 0])
        return SupportProfile(angles=angles,
                              support_values=np.concatenate(tops),
                              witnesses=np.concatenate(top_vecs),
                              lower_values=np.concatenate(bottoms),
                              lower_witnesses=np.concatenate(bottom_vecs))

    def refine_peaks(self, func: Callable[[float], float], angles: np.ndarray,
                      values: np.ndarray) -> Tuple[float, float]:
        """Maximise func over the circle starting from the best local maxima of the sweep."""
        delta = 2.0 * np.pi / angles.shape[0]
        peaks = np.flatnonzero((values >= np.roll(values, 1)) & (values >= np.roll(values, -1)))
        if peaks.size == 0:
            peaks = np.array([int(np.argmax(values))])
        order = peaks[np.argsort(-values[peaks], kind='stable')][:self.refine_candidates]
        best_theta, best_value = float(angles[order[0]]), float(values[order[0]])
        for j in order:
            theta0 = float(angles[j])
            try:
                res = minimize_scalar(lambda t: -func(t), bounds=(theta0 - delta, theta0 + delta),
                                      method='bounded', options={'xatol': self.config.refine_tol})
            except (ValueError, FloatingPointError) as e:
                logger.warning(f"Angle refinement failed near theta={theta0:.6f}: {e}")
                continue
            if -res.fun > best_value:
                best_theta, best_value = float(res.x), float(-res.fun)
        return best_theta, best_value

    def numerical_radius(self, T) -> RadiusResult:
        """w(T) = max over theta of lambda_max(Re(e^{i theta} T))."""
        A = ensure_matrix(T)
        norm = spectral_norm(A)
        m = self.config.sweep_points
        delta = 2.0 * np.pi / m
        if norm == 0.0:
            return RadiusResult(value=0.0, witness=unit_vector(basis_vector(A.shape[0], 0)), lower=0.0,
                                upper=0.0, sweep_resolution=delta, kind='sup', name='w')
        profile = self.support_profile(A)
        h = profile.support_values
        theta, refined = self.refine_peaks(lambda t: self.extreme_pair(A, t)[0], profile.angles, h)
        _, x = self.extreme_pair(A, theta)
        witness = unit_vector(x)
        attained = abs(rayleigh(A, witness.v))
        sweep_max = float(h.max())
        value = max(refined, sweep_max, attained)
        upper = max(min(norm, sweep_max + 0.5 * norm * delta), value)
        logger.debug(f"w(T)={value:.15g} at theta={theta:.12f} (sweep max {sweep_max:.15g})")
        return RadiusResult(value=value, witness=witness, lower=min(attained, value), upper=upper,
                            sweep_resolution=delta, kind='sup', name='w',
                            diagnostics={'theta': theta, 'sweep_max': sweep_max})

    def crawford_number(self, T) -> RadiusResult:
        """
        c(T) = max(0, max over theta of lambda_min(Re(e^{i theta} T))), the
        distance from the origin to W(T).
        """
        A = ensure_matrix(T)
        norm = spectral_norm(A)
        m = self.config.sweep_points
        delta = 2.0 * np.pi / m
        if norm == 0.0:
            return RadiusResult(value=0.0, witness=unit_vector(basis_vector(A.shape[0], 0)), lower=0.0,
                                upper=0.0, sweep_resolution=delta, kind='inf', name='c')
        profile = self.support_profile(A)
        g = profile.lower_values
        theta, refined = self.refine_peaks(lambda t: self.extreme_pair(A, t, top=False)[0],
                                            profile.angles, g)
        refined = max(refined, float(g.max()))
        if refined > 0.0:
            value = refined
            target = value * np.exp(-1j * theta)
            y = self._face_witness(A, theta, target, norm)
        else:
            value = 0.0
            y, residual = numerical_range_preimage(A, 0.0, self.config, profile.angles)
            if residual > 1e-8 * norm:
                logger.warning(f"Crawford witness for c=0 has residual {residual:.3e}")
        witness = unit_vector(y)
        attained = abs(rayleigh(A, witness.v))
        return RadiusResult(value=value, witness=witness, lower=value, upper=max(attained, value),
                            sweep_resolution=delta, kind='inf', name='c',
                            diagnostics={'theta': theta, 'support_max': refined})

    def _face_witness(self, A: np.ndarray, theta: float, target: complex, norm: float) -> np.ndarray:
        """Preimage of the nearest point of W(A) to 0, taken from the exposed face at theta."""
        evals, vecs = eigh(rotated_hermitian(A, [theta])[0])
        face = evals <= evals[0] + 1e-7 * max(1.0, norm)
        if int(face.sum()) == 1:
            return vecs[:, 0]
        E = vecs[:, face]
        y, residual = numerical_range_preimage(E.conj().T @ A @ E, target, self.config)
        logger.debug(f"Crawford face of dimension {E.shape[1]}, witness residual {residual:.3e}")
        return E @ y

    def maximize_joint_range(self, T, objective=_dw_objective, gradient=_dw_gradient,
                             seeds: Sequence[np.ndarray] = ()) -> Tuple[np.ndarray, float, dict]:
        """
        Maximise a convex objective of the joint numerical range point
        (Re <Tx,x>, Im <Tx,x>, ||Tx||^2) over unit x.

        A Fibonacci sweep of shell_points^2 directions u picks top eigenvectors
        of u1 Re T + u2 Im T + u3 T*T; the best sweep points, the seeds and
        oracle_samples random directions are then polished by linearised
        ascent (each step takes the top eigenvector of the objective's gradient
        pencil, which never decreases a convex objective).
        """
        A = ensure_matrix(T)
        n = A.shape[0]
        H1, H2, G = hermitian_part(A), skew_part(A), A.conj().T @ A
        dirs = fibonacci_directions(self.config.shell_points ** 2)

        sweep_X, sweep_f = [], []
        for part in _chunks(dirs.shape[0], self._chunk_size(n)):
            u = dirs[part]
            stack = u[:, 0, None, None] * H1 + u[:, 1, None, None] * H2 + u[:, 2, None, None] * G
            _, vecs = eigh(stack)
            X = vecs[:, :, -1]
            sweep_X.append(X)
            sweep_f.append(objective(*_joint_points(A, X)))
        sweep_X = np.concatenate(sweep_X)
        sweep_f = np.concatenate(sweep_f)
        best = np.argsort(-sweep_f, kind='stable')[:self.sweep_candidates]
        sweep_best = float(sweep_f[best[0]])

        rng = self.config.rng(stream=1)
        random_dirs = rng.standard_normal((self.config.oracle_samples, 3))
        random_dirs /= np.linalg.norm(random_dirs, axis=1, keepdims=True)
        stack = (random_dirs[:, 0, None, None] * H1 + random_dirs[:, 1, None, None] * H2
                 + random_dirs[:, 2, None, None] * G)
        _, vecs = eigh(stack)
        starts = [sweep_X[best], vecs[:, :, -1]]
        if len(seeds):
            starts.append(np.stack([_normalized(np.asarray(s, dtype=np.complex128)) for s in seeds]))
        X = np.concatenate(starts)

        X, f, iterations = self._polish(A, H1, H2, G, X, objective, gradient)
        j = int(np.argmax(f))
        trace = {'sweep_best': sweep_best, 'polished_best': float(f[j]),
                 'iterations': iterations, 'directions': int(dirs.shape[0]), 'starts': int(X.shape[0])}
        return X[j], float(f[j]), trace

    def _polish(self, A, H1, H2, G, X, objective, gradient):
        p1, p2, q = _joint_points(A, X)
        f = objective(p1, p2, q)
        tol = 1e-4 * self.config.refine_tol
        iterations = 0
        for iterations in range(1, self.polish_max_iterations + 1):
            g1, g2, g3 = gradient(p1, p2, q)
            stack = g1[:, None, None] * H1 + g2[:, None, None] * H2 + g3[:, None, None] * G
            _, vecs = eigh(stack)
            Xn = vecs[:, :, -1]
            n1, n2, nq = _joint_points(A, Xn)
            fn = objective(n1, n2, nq)
            better = fn > f
            gain = float(np.max(np.where(better, fn - f, 0.0)))
            X = np.where(better[:, None], Xn, X)
            p1, p2, q = np.where(better, n1, p1), np.where(better, n2, p2), np.where(better, nq, q)
            f = np.where(better, fn, f)
            if iterations == self.polish_phase_iterations and X.shape[0] > self.polish_keep:
                keep = np.argsort(-f, kind='stable')[:self.polish_keep]
                X, p1, p2, q, f = X[keep], p1[keep], p2[keep], q[keep], f[keep]
            if gain <= tol * max(1.0, float(f.max())):
                break
        return X, f, iterations

    def davis_wielandt_radius(self, T, seeds: Sequence[np.ndarray] = ()) -> RadiusResult:
        """dw(T) = max over unit x of sqrt(|<Tx,x>|^2 + ||Tx||^4); value is the attained lower end."""
        A = ensure_matrix(T)
        norm = op_norm(A)
        resolution = math.sqrt(4.0 * math.pi / self.config.shell_points ** 2)
        if norm.value == 0.0:
            return RadiusResult(value=0.0, witness=norm.witness, lower=0.0, upper=0.0,
                                sweep_resolution=resolution, kind='sup', name='dw')
        w = self.numerical_radius(A)
        x, f, trace = self.maximize_joint_range(A, seeds=[w.witness.v, norm.witness.v, *seeds])
        witness = unit_vector(x)
        value = math.sqrt(max(f, 0.0))
        upper = max(math.sqrt(w.upper ** 2 + norm.value ** 4), value)
        logger.debug(f"dw(T)={value:.15g} in [{value:.6g}, {upper:.6g}] after {trace['iterations']} polish steps")
        return RadiusResult(value=value, witness=witness, lower=value, upper=upper,
                            sweep_resolution=resolution, kind='sup', name='dw', diagnostics=trace)

    def check_radius_bounds(self, T, S=None) -> List[InequalityReport]:
        """
        Evaluate the basic bounds of w and dw: 1/2||T|| <= w <= ||T||,
        max(w, ||T||^2) <= dw <= sqrt(w^2 + ||T||^4), positivity of dw, the power
        inequality for k = 2, 3, 4, the dw scaling trichotomy and the dw sum bound
        against a paired S (drawn from the configured generator when omitted).
        """
        cfg = self.config
        A = ensure_matrix(T)
        n = A.shape[0]
        nrm = op_norm(A).value
        w = self.numerical_radius(A).value
        dw = self.davis_wielandt_radius(A).value
        reports = [
            InequalityReport.compare('half_norm_le_w', 0.5 * nrm, w, cfg),
            InequalityReport.compare('w_le_norm', w, nrm, cfg),
            InequalityReport.compare('dw_lower_bound', max(w, nrm ** 2), dw, cfg),
            InequalityReport.compare('dw_upper_bound', dw, math.sqrt(w ** 2 + nrm ** 4), cfg),
        ]
        if nrm == 0.0:
            reports.append(InequalityReport.compare('dw_definite', dw, 0.0, cfg))
        else:
            reports.append(InequalityReport.compare('dw_definite', nrm ** 2, dw, cfg))
        for k in (2, 3, 4):
            wk = self.numerical_radius(power(A, k)).value
            reports.append(InequalityReport.compare(f'power_inequality_{k}', wk, w ** k, cfg))

        for alpha in (0.5 * np.exp(0.3j), np.exp(1.1j), 2.0 * np.exp(-0.7j)):
            scaled = self.davis_wielandt_radius(alpha * A).value
            modulus = abs(alpha)
            name = f'dw_scaling_{modulus:g}'
            if modulus > 1.0:
                reports.append(InequalityReport.compare(name, modulus * dw, scaled, cfg))
            elif modulus < 1.0:
                reports.append(InequalityReport.compare(name, scaled, modulus * dw, cfg))
            else:
                margin = equality_margin(scaled, dw)
                reports.append(InequalityReport(name=name, lhs=scaled, rhs=dw, slack=margin,
                                                verdict=classify(margin, cfg, scale=dw)))

        if S is None:
            rng = cfg.rng(stream=2)
            S = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) * (max(nrm, 1.0) / (2.0 * math.sqrt(n)))
        B = ensure_matrix(S, 'S')
        total = dw + self.davis_wielandt_radius(B).value
        reports.append(InequalityReport.compare('dw_sum_bound', self.davis_wielandt_radius(A + B).value,
                                                math.sqrt(2.0 * total + 4.0 * total ** 2), cfg))
        failing = [r.name for r in reports if r.verdict is Verdict.FAILS]
        if failing:
            logger.warning(f"Radius bounds violated: {failing}")
        return reports
