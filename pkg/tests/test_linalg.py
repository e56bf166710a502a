import json

import numpy as np
import pytest

from oneshot.errors import DomainError
from oneshot.linalg import (
    EIG_POS_TOL,
    NORMALIZED,
    SUBNORMALIZED,
    HermitianOperator,
    PositiveOperator,
    QuantumState,
    eig,
    generalized_fidelity,
    load_state,
    matrix_from_json,
    matrix_to_json,
    mp_power,
    operator_leq,
    partial_trace,
    positive_part_projector,
    purified_distance,
    save_matrix,
    state_from_json,
    state_to_json,
    support_projector,
    trace_distance,
    trace_norm,
)


def random_hermitian(dim, seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (g + g.conj().T) / 2


def random_state(dim, seed, rank=None):
    rng = np.random.default_rng(seed)
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / m.trace().real


class TestContainers:
    def test_hermitian_symmetrizes_small_deviation(self):
        m = np.array([[1.0, 0.5 + 1e-13j], [0.5, 2.0]])
        op = HermitianOperator(m)
        np.testing.assert_allclose(op.mat, op.mat.conj().T)

    def test_hermitian_rejects_asymmetric(self):
        with pytest.raises(DomainError):
            HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_hermitian_rejects_rectangular(self):
        with pytest.raises(DomainError):
            HermitianOperator(np.zeros((2, 3)))

    def test_state_clips_roundoff_negatives(self):
        m = np.diag([1.0 + 5e-10, -5e-10])
        st = QuantumState(m)
        w = np.linalg.eigvalsh(st.mat)
        assert w[0] >= 0.0

    def test_state_rejects_true_negatives(self):
        with pytest.raises(DomainError):
            QuantumState(np.diag([1.1, -0.1]))

    def test_state_trace_validation(self):
        with pytest.raises(DomainError):
            QuantumState(np.diag([0.4, 0.4]))
        st = QuantumState(np.diag([0.4, 0.4]), normalization=SUBNORMALIZED)
        assert st.trace == pytest.approx(0.8)
        with pytest.raises(DomainError):
            QuantumState(np.diag([0.8, 0.4]), normalization=SUBNORMALIZED)
        with pytest.raises(DomainError):
            QuantumState(np.diag([0.5, 0.5]), normalization="bogus")

    def test_positive_operator_allows_large_trace(self):
        op = PositiveOperator(np.diag([3.0, 4.0]))
        assert op.dim == 2
        with pytest.raises(DomainError):
            PositiveOperator(np.zeros((2, 2)))

    def test_containers_are_write_protected(self):
        st = QuantumState(np.eye(2) / 2)
        with pytest.raises(ValueError):
            st.mat[0, 0] = 5.0


class TestSpectral:
    def test_eig_reconstructs(self):
        h = random_hermitian(5, seed=7)
        dec = eig(h)
        np.testing.assert_allclose(dec.reconstruct(), h, atol=1e-12)
        gram = dec.vectors.conj().T @ dec.vectors
        np.testing.assert_allclose(gram, np.eye(5), atol=1e-12)
        assert np.all(np.diff(dec.values) >= 0)

    def test_positive_part_projector_plain(self):
        p = positive_part_projector(np.diag([2.0, -3.0, 0.0]))
        np.testing.assert_allclose(p, np.diag([1.0, 0.0, 0.0]), atol=1e-14)

    def test_positive_part_projector_zero_matrix(self):
        np.testing.assert_allclose(positive_part_projector(np.zeros((3, 3))), 0.0)

    def test_positive_part_projector_strictness(self):
        # eigenvalues within EIG_POS_TOL * max of zero do not count as positive
        m = np.diag([1.0, 0.5 * EIG_POS_TOL, -1.0])
        p = positive_part_projector(m)
        np.testing.assert_allclose(p, np.diag([1.0, 0.0, 0.0]), atol=1e-14)

    def test_projector_is_idempotent(self):
        h = random_hermitian(6, seed=3)
        p = positive_part_projector(h)
        np.testing.assert_allclose(p @ p, p, atol=1e-12)

    def test_support_projector_rank(self):
        rho = random_state(4, seed=11, rank=2)
        s = support_projector(rho)
        assert np.trace(s).real == pytest.approx(2.0, abs=1e-9)

    def test_mp_power_inverts_on_support(self):
        sigma = np.diag([4.0, 0.0])
        np.testing.assert_allclose(mp_power(sigma, -0.5), np.diag([0.5, 0.0]), atol=1e-14)

    def test_mp_power_square_root(self):
        m = random_state(4, seed=2)
        r = mp_power(m, 0.5)
        np.testing.assert_allclose(r @ r, m, atol=1e-12)

    def test_mp_power_zero_operator(self):
        np.testing.assert_allclose(mp_power(np.zeros((2, 2)), 0.5), 0.0)
        with pytest.raises(DomainError):
            mp_power(np.zeros((2, 2)), -1.0)

    def test_mp_power_rejects_negative_input(self):
        with pytest.raises(DomainError):
            mp_power(np.diag([1.0, -1.0]), 0.5)


class TestDistances:
    def test_trace_norm_value(self):
        assert trace_norm(np.diag([0.2, -0.2])) == pytest.approx(0.4)

    def test_trace_distance_frozen(self):
        a = np.diag([0.8, 0.2])
        b = np.diag([0.6, 0.4])
        assert trace_distance(a, b) == pytest.approx(0.2, abs=1e-12)

    def test_trace_distance_shape_mismatch(self):
        with pytest.raises(DomainError):
            trace_distance(np.eye(2), np.eye(3))

    def test_fidelity_equal_states(self):
        rho = random_state(3, seed=5)
        assert generalized_fidelity(rho, rho) == pytest.approx(1.0, abs=1e-12)

    def test_fidelity_half_scaled(self):
        # || sqrt(rho) sqrt(rho/2) ||_1 = 1/sqrt(2) and the slack term vanishes
        # for the normalized argument, so F = 1/2.
        rho = random_state(3, seed=8)
        assert generalized_fidelity(rho, rho / 2) == pytest.approx(0.5, abs=1e-10)

    def test_fidelity_orthogonal_pure(self):
        a = np.diag([1.0, 0.0])
        b = np.diag([0.0, 1.0])
        assert generalized_fidelity(a, b) == pytest.approx(0.0, abs=1e-12)
        assert purified_distance(a, b) == pytest.approx(1.0, abs=1e-12)

    def test_fidelity_subnormalized_frozen(self):
        a = np.diag([0.6, 0.0])
        b = np.diag([0.5, 0.0])
        expected = (np.sqrt(0.3) + np.sqrt(0.4 * 0.5)) ** 2
        assert generalized_fidelity(a, b) == pytest.approx(expected, abs=1e-12)

    def test_fidelity_rejects_large_trace(self):
        with pytest.raises(DomainError):
            generalized_fidelity(np.eye(2), np.eye(2) / 2)

    def test_purified_distance_pure_overlap(self):
        # |0> versus |+>: F = |<0|+>|^2 = 1/2
        plus = np.full((2, 2), 0.5)
        zero = np.diag([1.0, 0.0])
        assert purified_distance(zero, plus) == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_distance_fidelity_identity(self):
        for seed in range(5):
            a = random_state(4, seed=seed)
            b = random_state(4, seed=seed + 100, rank=2)
            p = purified_distance(a, b)
            f = generalized_fidelity(a, b)
            assert p * p + f == pytest.approx(1.0, abs=1e-12)

    def test_operator_leq(self):
        assert operator_leq(np.diag([1.0, 2.0]), np.diag([2.0, 2.0]))
        assert not operator_leq(np.diag([2.0, 2.0]), np.diag([1.0, 2.0]))


class TestPartialTrace:
    def test_product_state_marginals(self):
        a = random_state(2, seed=21)
        b = random_state(3, seed=22)
        joint = np.kron(a, b)
        np.testing.assert_allclose(partial_trace(joint, 2, 3, "a"), a, atol=1e-12)
        np.testing.assert_allclose(partial_trace(joint, 2, 3, "b"), b, atol=1e-12)

    def test_trace_consistency(self):
        m = random_hermitian(6, seed=30)
        ta = np.trace(partial_trace(m, 2, 3, "a"))
        assert ta == pytest.approx(np.trace(m), abs=1e-12)

    def test_keep_validation(self):
        with pytest.raises(DomainError):
            partial_trace(np.eye(6), 2, 3, "c")
        with pytest.raises(DomainError):
            partial_trace(np.eye(5), 2, 3, "a")


class TestJsonSchema:
    def test_matrix_round_trip(self):
        m = random_hermitian(4, seed=13)
        again = matrix_from_json(json.loads(json.dumps(matrix_to_json(m))))
        np.testing.assert_array_equal(again, m)

    def test_state_round_trip(self):
        st = QuantumState(np.diag([0.3, 0.2]), normalization=SUBNORMALIZED)
        again = state_from_json(state_to_json(st))
        assert again.normalization == SUBNORMALIZED
        np.testing.assert_allclose(again.mat, st.mat)

    def test_shape_validation(self):
        with pytest.raises(DomainError):
            matrix_from_json({"dim": 2, "entries": [[[1.0, 0.0]]]})

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "state.json"
        rho = random_state(3, seed=40)
        save_matrix(path, rho)
        loaded = load_state(path)
        assert loaded.normalization == NORMALIZED
        np.testing.assert_allclose(loaded.mat, rho, atol=1e-15)
