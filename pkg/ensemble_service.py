import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from operator_core import ConfigError, eigvalsh

logger = logging.getLogger(__name__)

KINDS = ('ginibre', 'hermitian', 'normal', 'unitary', 'nilpotent2', 'rank_one', 'shift_truncation')
RELATIONS = ('independent', 'parallel', 'bj-orthogonal', 'r-orthogonal')


@dataclass(frozen=True)
class EnsembleSpec:
    """
    A seeded family of random matrices.

    The generator is numpy's counter-based Philox keyed with ``seed``; instances
    are drawn one after another from that single stream, so the same spec always
    yields bit-identical matrices.
    """
    kind: str
    n: int
    count: int
    seed: int
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown ensemble kind '{self.kind}', expected one of {', '.join(KINDS)}")
        if int(self.n) < 1:
            raise ConfigError(f"ensemble dimension must be >= 1, got {self.n}")
        if self.kind in ('nilpotent2', 'shift_truncation') and int(self.n) < 2:
            raise ConfigError(f"{self.kind} needs n >= 2, got {self.n}")
        if int(self.count) < 1:
            raise ConfigError(f"ensemble count must be >= 1, got {self.count}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ConfigError(f"scale must be positive, got {self.scale}")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=int(self.seed)))


class EnsembleService:
    """Draws ensemble members and operator pairs from an EnsembleSpec."""

    def __init__(self):
        self.generators = {
            'ginibre': self._ginibre,
            'hermitian': self._hermitian,
            'normal': self._normal,
            'unitary': self._unitary,
            'nilpotent2': self._nilpotent2,
            'rank_one': self._rank_one,
            'shift_truncation': self._shift_truncation,
        }

    def generate(self, spec: EnsembleSpec) -> List[np.ndarray]:
        rng = spec.rng()
        draw = self.generators[spec.kind]
        matrices = [spec.scale * draw(spec.n, rng) for _ in range(spec.count)]
        logger.info(f"Generated {len(matrices)} {spec.kind} matrices of size {spec.n} (seed {spec.seed})")
        return matrices

    def generate_pairs(self, spec: EnsembleSpec, relation: str = 'independent') -> List[Tuple[np.ndarray, np.ndarray]]:
        """
        Pairs (T, S) drawn from one stream, S right after T. ``parallel``,
        ``bj-orthogonal`` and ``r-orthogonal`` replace S by a partner built from T
        and the Gaussian draw so that the relation holds by construction.
        """
        if relation not in RELATIONS:
            raise ConfigError(f"unknown pair relation '{relation}', expected one of {', '.join(RELATIONS)}")
        rng = spec.rng()
        draw = self.generators[spec.kind]
        pairs = []
        for _ in range(spec.count):
            T = spec.scale * draw(spec.n, rng)
            S = spec.scale * draw(spec.n, rng)
            if relation == 'parallel':
                S = self._parallel_partner(T, S)
            elif relation == 'bj-orthogonal':
                S = self._orthogonal_partner(T, S)
            elif relation == 'r-orthogonal':
                S = self._r_orthogonal_partner(T, S)
            pairs.append((T, S))
        logger.info(f"Generated {len(pairs)} {relation} {spec.kind} pairs of size {spec.n} (seed {spec.seed})")
        return pairs

    def _complex_gaussian(self, shape, rng: np.random.Generator) -> np.ndarray:
        re = rng.standard_normal(shape)
        im = rng.standard_normal(shape)
        return (re + 1j * im) / math.sqrt(2.0)

    def _ginibre(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self._complex_gaussian((n, n), rng)

    def _hermitian(self, n: int, rng: np.random.Generator) -> np.ndarray:
        G = self._complex_gaussian((n, n), rng)
        return 0.5 * (G + G.conj().T)

    def _haar_unitary(self, n: int, rng: np.random.Generator) -> np.ndarray:
        Q, R = np.linalg.qr(self._complex_gaussian((n, n), rng))
        d = np.diag(R)
        phases = np.where(np.abs(d) > 0, d / np.where(np.abs(d) > 0, np.abs(d), 1.0), 1.0)
        return Q * phases[None, :]

    def _normal(self, n: int, rng: np.random.Generator) -> np.ndarray:
        U = self._haar_unitary(n, rng)
        D = self._complex_gaussian(n, rng)
        return (U * D[None, :]) @ U.conj().T

    def _unitary(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self._haar_unitary(n, rng)

    def _nilpotent2(self, n: int, rng: np.random.Generator) -> np.ndarray:
        k = n // 2
        T = np.zeros((n, n), dtype=np.complex128)
        T[:k, k:] = self._complex_gaussian((k, n - k), rng)
        return T

    def _rank_one(self, n: int, rng: np.random.Generator) -> np.ndarray:
        x = self._complex_gaussian(n, rng)
        y = self._complex_gaussian(n, rng)
        return np.outer(x, y.conj())

    def _shift_truncation(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.eye(n, k=-1, dtype=np.complex128)

    def _parallel_partner(self, T: np.ndarray, G: np.ndarray) -> np.ndarray:
        """sigma e^{i phi} u v* plus noise on the orthogonal complements, so ||S|| is attained at v."""
        U, s, Vh = np.linalg.svd(T)
        if s[0] == 0.0:
            return G
        u, v = U[:, 0], Vh[0].conj()
        n = T.shape[0]
        R = (np.eye(n) - np.outer(u, u.conj())) @ G @ (np.eye(n) - np.outer(v, v.conj()))
        r = math.sqrt(max(float(eigvalsh(R.conj().T @ R)[-1]), 0.0))
        if r > 0:
            R *= 0.5 * s[0] / r
        phase = np.exp(1j * float(np.angle(G[0, 0])))
        return s[0] * phase * np.outer(u, v.conj()) + R

    def _orthogonal_partner(self, T: np.ndarray, G: np.ndarray) -> np.ndarray:
        """Remove from G v its component along Tv, for v the top right singular vector of T."""
        _, s, Vh = np.linalg.svd(T)
        if s[0] == 0.0:
            return G
        v = Vh[0].conj()
        u = T @ v
        u = u / np.linalg.norm(u)
        return G - np.outer(u, v.conj()) * np.vdot(u, G @ v)

    def _r_orthogonal_partner(self, T: np.ndarray, G: np.ndarray) -> np.ndarray:
        """As above but only the real part of <u, Gv> is removed, so Re<Tv, Sv> = 0 while <Tv, Sv> stays nonzero."""
        _, s, Vh = np.linalg.svd(T)
        if s[0] == 0.0:
            return G
        v = Vh[0].conj()
        u = T @ v
        u = u / np.linalg.norm(u)
        return G - np.outer(u, v.conj()) * np.vdot(u, G @ v).real


def ensemble_spec(kind: str, n: int, count: int, seed: int, scale: Optional[float] = None) -> EnsembleSpec:
    return EnsembleSpec(kind=kind, n=int(n), count=int(count), seed=int(seed),
                        scale=1.0 if scale is None else float(scale))
