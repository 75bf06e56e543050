import numpy as np
import pytest

from ensemble_service import KINDS, EnsembleService, EnsembleSpec, ensemble_spec
from operator_core import ConfigError


@pytest.fixture
def ensembles():
    return EnsembleService()


@pytest.mark.parametrize('kind', KINDS)
def test_same_spec_same_matrices(ensembles, kind):
    spec = ensemble_spec(kind, 4, 3, 99)
    first = ensembles.generate(spec)
    second = ensembles.generate(spec)
    assert len(first) == 3
    for a, b in zip(first, second):
        assert a.shape == (4, 4)
        assert a.dtype == np.complex128
        assert np.array_equal(a, b)


def test_different_seeds_differ(ensembles):
    a = ensembles.generate(ensemble_spec('ginibre', 3, 1, 1))[0]
    b = ensembles.generate(ensemble_spec('ginibre', 3, 1, 2))[0]
    assert not np.array_equal(a, b)


def test_members_are_distinct(ensembles):
    a, b = ensembles.generate(ensemble_spec('ginibre', 3, 2, 5))
    assert not np.array_equal(a, b)


def test_structural_properties(ensembles):
    for T in ensembles.generate(ensemble_spec('hermitian', 4, 3, 1)):
        assert np.array_equal(T, T.conj().T)
    for T in ensembles.generate(ensemble_spec('normal', 4, 3, 1)):
        commutator = T.conj().T @ T - T @ T.conj().T
        assert np.linalg.norm(commutator) <= 1e-12 * max(1.0, np.linalg.norm(T) ** 2)
    for U in ensembles.generate(ensemble_spec('unitary', 4, 3, 1)):
        assert np.allclose(U.conj().T @ U, np.eye(4), atol=1e-12)
    for T in ensembles.generate(ensemble_spec('nilpotent2', 5, 3, 1)):
        assert np.all(T @ T == 0)
    for T in ensembles.generate(ensemble_spec('rank_one', 4, 3, 1)):
        s = np.linalg.svd(T, compute_uv=False)
        assert s[1] <= 1e-12 * s[0]
    S = ensembles.generate(ensemble_spec('shift_truncation', 3, 1, 1))[0]
    assert np.array_equal(S, np.eye(3, k=-1))


def test_scale(ensembles):
    base = ensembles.generate(ensemble_spec('ginibre', 3, 1, 4))[0]
    scaled = ensembles.generate(ensemble_spec('ginibre', 3, 1, 4, scale=2.0))[0]
    assert np.allclose(scaled, 2.0 * base)


def test_pairs_draw_partner_after_operator(ensembles):
    spec = ensemble_spec('ginibre', 3, 2, 8)
    singles = ensembles.generate(ensemble_spec('ginibre', 3, 4, 8))
    pairs = ensembles.generate_pairs(spec)
    assert np.array_equal(pairs[0][0], singles[0])
    assert np.array_equal(pairs[0][1], singles[1])
    assert np.array_equal(pairs[1][0], singles[2])


def test_orthogonal_partner(ensembles):
    for T, S in ensembles.generate_pairs(ensemble_spec('ginibre', 4, 3, 2), 'bj-orthogonal'):
        _, _, Vh = np.linalg.svd(T)
        v = Vh[0].conj()
        assert abs(np.vdot(S @ v, T @ v)) <= 1e-12 * np.linalg.norm(T, 2) * np.linalg.norm(S, 2)


def test_parallel_partner(ensembles):
    for T, S in ensembles.generate_pairs(ensemble_spec('ginibre', 4, 3, 2), 'parallel'):
        assert np.linalg.norm(S, 2) == pytest.approx(np.linalg.norm(T, 2), rel=1e-12)


@pytest.mark.parametrize('kwargs', [
    {'kind': 'wishart', 'n': 3, 'count': 1, 'seed': 0},
    {'kind': 'ginibre', 'n': 0, 'count': 1, 'seed': 0},
    {'kind': 'ginibre', 'n': 3, 'count': 0, 'seed': 0},
    {'kind': 'ginibre', 'n': 3, 'count': 1, 'seed': -1},
    {'kind': 'nilpotent2', 'n': 1, 'count': 1, 'seed': 0},
    {'kind': 'ginibre', 'n': 3, 'count': 1, 'seed': 0, 'scale': 0.0},
])
def test_invalid_specs(kwargs):
    with pytest.raises(ConfigError):
        EnsembleSpec(**kwargs)


def test_unknown_relation(ensembles):
    with pytest.raises(ConfigError):
        ensembles.generate_pairs(ensemble_spec('ginibre', 2, 1, 0), 'perpendicular')


def test_r_orthogonal_partner(ensembles):
    for T, S in ensembles.generate_pairs(ensemble_spec('ginibre', 4, 3, 2), 'r-orthogonal'):
        _, _, Vh = np.linalg.svd(T)
        v = Vh[0].conj()
        pairing = np.vdot(S @ v, T @ v)
        scale = np.linalg.norm(T, 2) * np.linalg.norm(S, 2)
        assert abs(pairing.real) <= 1e-12 * scale
        assert abs(pairing.imag) > 1e-6 * scale
