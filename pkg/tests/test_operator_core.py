import numpy as np
import pytest

from conftest import ginibre
from operator_core import (
    ConfigError, OperatorError, ToleranceConfig, adjoint, inner, min_modulus, norming_basis,
    op_norm, rank_one, rayleigh, subspace_intersection, unit_vector,
)


class TestToleranceConfig:
    def test_defaults(self):
        cfg = ToleranceConfig()
        assert cfg.decision_margin == 1e-8
        assert cfg.marginal_band == 1e-6
        assert cfg.sweep_points == 720

    @pytest.mark.parametrize('overrides', [
        {'decision_margin': -1.0},
        {'unit_tol': 0.0},
        {'decision_margin': 1e-4, 'marginal_band': 1e-6},
        {'sweep_points': 4},
        {'oracle_samples': 0},
    ])
    def test_rejects_invalid(self, overrides):
        with pytest.raises(ConfigError):
            ToleranceConfig(**overrides)

    def test_replace_ignores_none(self):
        cfg = ToleranceConfig().replace(decision_margin=None, sweep_points=90)
        assert cfg.decision_margin == 1e-8
        assert cfg.sweep_points == 90

    def test_rng_streams(self):
        cfg = ToleranceConfig(rng_seed=5)
        a = cfg.rng(stream=1).standard_normal(4)
        b = cfg.rng(stream=1).standard_normal(4)
        c = cfg.rng(stream=2).standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestValidation:
    @pytest.mark.parametrize('bad', [
        np.zeros((2, 3)),
        np.zeros((0, 0)),
        np.array([[1.0, np.nan], [0.0, 1.0]]),
        np.zeros(3),
    ])
    def test_op_norm_rejects(self, bad):
        with pytest.raises(OperatorError):
            op_norm(bad)

    def test_unit_vector_normalizes(self):
        u = unit_vector([3.0, 4.0j])
        assert np.isclose(np.linalg.norm(u.v), 1.0)
        assert u.norm_defect <= 1e-15

    def test_unit_vector_strict(self):
        with pytest.raises(OperatorError):
            unit_vector([1.0, 1.0], normalize=False)
        with pytest.raises(OperatorError):
            unit_vector([0.0, 0.0])


class TestPrimitives:
    def test_inner_is_linear_in_first_argument(self, rng):
        x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        y = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        assert np.isclose(inner(2j * x, y), 2j * inner(x, y))
        assert np.isclose(inner(x, 2j * y), -2j * inner(x, y))

    def test_rank_one_action(self, rng):
        x, y, z = (rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(3))
        assert np.allclose(rank_one(x, y) @ z, inner(z, y) * x)

    def test_adjoint_and_rayleigh(self):
        T = np.array([[1, 2j], [0, 3]])
        assert np.array_equal(adjoint(T), np.array([[1, 0], [-2j, 3]]))
        assert rayleigh(T, np.array([0, 1])) == 3


class TestNorms:
    def test_op_norm_diagonal(self):
        r = op_norm(np.diag([3.0, 1.0]))
        assert r.value == pytest.approx(3.0)
        assert abs(abs(r.witness.v[0]) - 1.0) < 1e-12
        assert r.kind == 'sup'
        assert r.lower <= r.value

    def test_min_modulus_is_smallest_singular_value(self, rng):
        T = ginibre(rng, 4)
        r = min_modulus(T)
        assert r.value == pytest.approx(np.linalg.svd(T, compute_uv=False)[-1])
        X = rng.standard_normal((200, 4)) + 1j * rng.standard_normal((200, 4))
        X /= np.linalg.norm(X, axis=1, keepdims=True)
        assert np.all(np.linalg.norm(X @ T.T, axis=1) >= r.value - 1e-12)
        assert r.kind == 'inf'
        assert r.attained >= r.value

    def test_zero_operator(self):
        assert op_norm(np.zeros((2, 2))).value == 0.0
        assert min_modulus(np.zeros((2, 2))).value == 0.0


class TestNormingSets:
    def test_identity_is_fully_norming(self):
        assert norming_basis(np.eye(3)).k == 3

    def test_cluster_and_gap(self):
        basis = norming_basis(np.diag([2.0, 2.0, 1.0]))
        assert basis.k == 2
        assert basis.sigma_max == pytest.approx(2.0)
        assert basis.gap == pytest.approx(3.0)

    def test_zero_operator_rejected(self):
        with pytest.raises(OperatorError):
            norming_basis(np.zeros((2, 2)))

    def test_subspace_intersection(self):
        e = np.eye(3, dtype=np.complex128)
        Q, cosines = subspace_intersection(e[:, :2], e[:, 1:])
        assert Q.shape == (3, 1)
        assert abs(abs(Q[1, 0]) - 1.0) < 1e-12
        assert cosines.max() == pytest.approx(1.0)

    def test_trivial_intersection(self):
        e = np.eye(3, dtype=np.complex128)
        Q, _ = subspace_intersection(e[:, :1], e[:, 1:2])
        assert Q.shape[1] == 0
