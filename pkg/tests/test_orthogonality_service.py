import numpy as np
import pytest

from conftest import NILPOTENT, PROJECTION, bj_oracle_min, ginibre, parallel_oracle_max
from ensemble_service import EnsembleService, ensemble_spec
from operator_core import OperatorError, norming_basis
from verdicts import Agreement, Verdict

R_ORTH_S = np.array([[1j, 0], [0, 0]])


def _pairs(relation, count=4, n=3, seed=11):
    return EnsembleService().generate_pairs(ensemble_spec('ginibre', n, count, seed), relation)


class TestMembership:
    def test_compressed_form_of_projection_pair(self, ortho):
        M = ortho.compressed_form(PROJECTION, NILPOTENT)
        assert M.shape == (1, 1)
        assert abs(M[0, 0]) == 0.0

    def test_identity_pair_compresses_to_identity(self, ortho):
        assert np.allclose(ortho.compressed_form(np.eye(3), np.eye(3)), np.eye(3), atol=1e-12)

    def test_compressed_form_matches_sampled_pairings(self, ortho, rng):
        Q, _ = np.linalg.qr(ginibre(rng, 4))
        T = Q @ np.diag([2.0, 2.0j, 1.0, 0.5]) @ Q.conj().T
        S = ginibre(rng, 4)
        M = ortho.compressed_form(T, S)
        V = norming_basis(T).V
        assert M.shape == (2, 2)
        for _ in range(20):
            y = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            y /= np.linalg.norm(y)
            x = V @ y
            assert np.linalg.norm(T @ x) == pytest.approx(2.0, abs=1e-10)
            assert np.vdot(y, M @ y) == pytest.approx(np.vdot(S @ x, T @ x), abs=1e-10)

    def test_zero_scalar_contains_origin(self, ortho):
        cert = ortho.in_numerical_range(np.zeros((1, 1)))
        assert cert.verdict is Verdict.HOLDS
        assert cert.witness is not None
        assert np.allclose(cert.witness.v, [1.0])

    def test_identity_excludes_origin(self, ortho):
        cert = ortho.in_numerical_range(np.eye(2))
        assert cert.verdict is Verdict.FAILS
        assert cert.margin == pytest.approx(-1.0, abs=1e-9)
        assert cert.witness is None

    def test_segment_through_origin(self, ortho):
        M = np.diag([1.0, -1.0])
        cert = ortho.in_numerical_range(M)
        assert cert.verdict is Verdict.HOLDS
        y = cert.witness.v
        assert abs(np.vdot(y, M @ y)) <= 1e-8
        assert np.allclose(np.abs(y), np.sqrt(0.5), atol=1e-6)

    def test_shifted_membership(self, ortho):
        M = np.diag([1.0, 1.0j])
        assert ortho.in_numerical_range(M, 0.5 + 0.5j).verdict is Verdict.HOLDS
        assert ortho.in_numerical_range(M, 0.0).verdict is Verdict.FAILS


class TestBirkhoffJames:
    def test_projection_pair(self, ortho):
        cert = ortho.is_bj_orthogonal(PROJECTION, NILPOTENT)
        assert cert.holds
        assert abs(abs(cert.witness.v[0]) - 1.0) < 1e-12

    def test_disjoint_projections(self, ortho):
        assert ortho.is_bj_orthogonal(np.diag([1.0, 0.0]), np.diag([0.0, 1.0])).holds

    def test_identity_not_orthogonal_to_itself(self, ortho):
        cert = ortho.is_bj_orthogonal(np.eye(2), np.eye(2))
        assert cert.verdict is Verdict.FAILS
        assert cert.witness is None

    def test_zero_left_operand(self, ortho):
        with pytest.raises(OperatorError):
            ortho.is_bj_orthogonal(np.zeros((2, 2)), np.eye(2))

    def test_dimension_mismatch(self, ortho):
        with pytest.raises(OperatorError):
            ortho.is_bj_orthogonal(np.eye(2), np.eye(3))

    def test_constructed_pairs_agree_with_oracle(self, ortho):
        for T, S in _pairs('bj-orthogonal'):
            cert = ortho.is_bj_orthogonal(T, S)
            assert cert.holds
            norm_T = np.linalg.norm(T, 2)
            assert bj_oracle_min(T, S) >= norm_T - 1e-7 * norm_T
            x = cert.witness.v
            assert abs(np.vdot(S @ x, T @ x)) <= 1e-6 * norm_T * np.linalg.norm(S, 2)

    def test_random_pairs_agree_with_oracle(self, ortho):
        for T, S in _pairs('independent', count=5):
            cert = ortho.is_bj_orthogonal(T, S)
            if cert.margin < -1e-2:
                assert bj_oracle_min(T, S) < np.linalg.norm(T, 2)

    def test_bj_implies_r(self, ortho):
        for T, S in _pairs('bj-orthogonal'):
            assert ortho.is_r_orthogonal(T, S).holds

    def test_scale_covariance(self, ortho):
        T, S = _pairs('independent', count=1)[0]
        a = ortho.is_bj_orthogonal(T, S).verdict
        b = ortho.is_bj_orthogonal(2.5 * T, -3j * S).verdict
        assert a is b


class TestROrthogonality:
    def test_r_orthogonal_but_not_bj(self, ortho):
        T = np.diag([1.0, 0.0])
        r = ortho.is_r_orthogonal(T, R_ORTH_S)
        assert r.holds
        x = r.witness.v
        assert abs(np.vdot(R_ORTH_S @ x, T @ x).real) <= 1e-12
        assert ortho.is_bj_orthogonal(T, R_ORTH_S).verdict is Verdict.FAILS

    def test_fails_with_definite_real_part(self, ortho):
        assert ortho.is_r_orthogonal(np.eye(2), np.eye(2)).verdict is Verdict.FAILS

    def test_constructed_pairs(self, ortho):
        for T, S in _pairs('r-orthogonal'):
            r = ortho.is_r_orthogonal(T, S)
            assert r.holds
            x = r.witness.v
            assert abs(np.vdot(S @ x, T @ x).real) <= 1e-8 * np.linalg.norm(T, 2) * np.linalg.norm(S, 2)
            assert ortho.is_bj_orthogonal(T, S).verdict is Verdict.FAILS


class TestParallelism:
    def test_scalar_multiple(self, ortho, rng):
        T = ginibre(rng, 3)
        S = 2.0 * np.exp(1j) * T
        cert = ortho.is_parallel(T, S)
        assert cert.holds
        assert abs(cert.unimodular) == pytest.approx(1.0)
        total = np.linalg.norm(T, 2) + np.linalg.norm(S, 2)
        assert np.linalg.norm(T + cert.unimodular * S, 2) == pytest.approx(total, rel=1e-8)

    def test_projection_pair_not_parallel(self, ortho):
        cert = ortho.is_parallel(PROJECTION, NILPOTENT)
        assert cert.verdict is Verdict.FAILS
        assert cert.margin == pytest.approx(-0.5, abs=1e-9)

    def test_zero_operand_is_trivially_parallel(self, ortho):
        assert ortho.is_parallel(np.zeros((2, 2)), np.eye(2)).holds

    def test_symmetry(self, ortho):
        for T, S in _pairs('independent', count=3):
            assert ortho.is_parallel(T, S).verdict is ortho.is_parallel(S, T).verdict

    def test_constructed_pairs_agree_with_oracle(self, ortho):
        for T, S in _pairs('parallel'):
            assert ortho.is_parallel(T, S).holds
            total = np.linalg.norm(T, 2) + np.linalg.norm(S, 2)
            assert parallel_oracle_max(T, S) == pytest.approx(total, rel=1e-5)

    def test_independent_pairs_agree_with_oracle(self, ortho):
        for T, S in _pairs('independent', count=3):
            assert ortho.is_parallel(T, S).verdict is Verdict.FAILS
            total = np.linalg.norm(T, 2) + np.linalg.norm(S, 2)
            assert parallel_oracle_max(T, S) < total - 1e-6


class TestEquivalenceBatteries:
    def test_parallel_battery_on_multiples(self, ortho, rng):
        T = ginibre(rng, 3)
        battery = ortho.verify_theorem_2_1(T, 2.0 * T)
        assert battery.all_hold()
        assert battery.consistent is Agreement.AGREE
        assert abs(battery.extras['pairing_gap']) <= 1e-8 * np.linalg.norm(T, 2) ** 2

    def test_parallel_battery_on_projection_pair(self, ortho):
        battery = ortho.verify_theorem_2_1(PROJECTION, NILPOTENT)
        assert battery.all_fail()
        assert battery.consistent is Agreement.AGREE

    def test_parallel_battery_on_constructed_pairs(self, ortho):
        for T, S in _pairs('parallel', count=3):
            battery = ortho.verify_theorem_2_1(T, S)
            assert battery.consistent is Agreement.AGREE
            assert battery.verdict_of('parallel') is Verdict.HOLDS

    def test_parallel_battery_rejects_zero(self, ortho):
        with pytest.raises(OperatorError):
            ortho.verify_theorem_2_1(np.zeros((2, 2)), np.eye(2))

    def test_orthogonality_battery(self, ortho):
        holds = ortho.verify_theorem_2_2(PROJECTION, NILPOTENT)
        assert holds.all_hold()
        fails = ortho.verify_theorem_2_2(np.eye(2), np.eye(2))
        assert fails.all_fail()
        for T, S in _pairs('bj-orthogonal', count=3):
            assert ortho.verify_theorem_2_2(T, S).consistent is Agreement.AGREE

    def test_r_orthogonality_battery(self, ortho):
        battery = ortho.verify_theorem_2_3(np.diag([1.0, 0.0]), R_ORTH_S)
        assert battery.all_hold()
        assert battery.extras['real_identity_residual'] <= 1e-12
        for T, S in _pairs('independent', count=3):
            assert ortho.verify_theorem_2_3(T, S).consistent is not Agreement.DISAGREE
        for T, S in _pairs('r-orthogonal', count=3):
            battery = ortho.verify_theorem_2_3(T, S)
            assert battery.all_hold()
            assert battery.consistent is Agreement.AGREE

    def test_daugavet(self, ortho):
        assert ortho.daugavet(np.diag([2.0, 1.0])).all_hold()
        assert ortho.daugavet(-np.eye(2)).all_fail()
