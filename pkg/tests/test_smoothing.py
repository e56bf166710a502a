"""Tests for the constructive smoothing procedures.

Frozen references: the two-atom threshold example for the Renyi smoother and
the diagonal joint-truncation oracle were computed by hand (likelihood
ratios, quantiles, and kept sets on two-atom distributions); the closed forms
for self-pairs follow from beta = 1 - eps at the optimum.
"""

import json
import math

import numpy as np
import pytest

from oneshot.divergences import dmax
from oneshot.errors import CertificateViolation, DegenerateProjection, DomainError
from oneshot.linalg import (
    generalized_fidelity,
    operator_leq,
    partial_trace,
    purified_distance,
)
from oneshot.smoothing import (
    JointSmoothingResult,
    SmoothingCertificate,
    gentle_projection,
    hypothesis_smoother,
    joint_smoother_feasibility,
    joint_smoother_response,
    renyi_smoother,
    verify_dmax_lower_bound,
)


def diag(*vals):
    return np.diag(np.asarray(vals, dtype=float))


def random_state(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_positive(rng, d, scale=1.0):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    return m / np.trace(m).real * scale


def random_projector(rng, d, rank):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, _ = np.linalg.qr(g)
    v = q[:, :rank]
    return v @ v.conj().T


def normalized_witness(rng, d, sigma):
    m = random_positive(rng, d)
    return m / max(float(np.trace(m @ sigma).real), 1e-12) * rng.uniform(0.2, 1.0)


MIXED2 = np.eye(2) / 2


class TestGentleProjection:
    def test_zero_projector_is_identity(self):
        rng = np.random.default_rng(1)
        rho = random_state(rng, 3)
        smoothed, dist = gentle_projection(rho, np.zeros((3, 3)))
        assert dist == 0.0
        assert np.allclose(smoothed.mat, rho, atol=1e-12)

    def test_qubit_example(self):
        smoothed, dist = gentle_projection(diag(0.8, 0.2), diag(0.0, 1.0))
        assert np.allclose(smoothed.mat, diag(1.0, 0.0), atol=1e-12)
        assert dist == pytest.approx(math.sqrt(0.2), abs=1e-12)

    def test_distance_identity_random(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            d = int(rng.integers(2, 5))
            rho = random_state(rng, d)
            p = random_projector(rng, d, 1)
            if float(np.trace(p @ rho).real) >= 1.0 - 1e-6:
                continue
            smoothed, dist = gentle_projection(rho, p)
            fbar = generalized_fidelity(rho, smoothed.mat)
            assert fbar == pytest.approx(
                1.0 - float(np.trace(p @ rho).real), abs=1e-10
            )
            assert purified_distance(rho, smoothed.mat) == pytest.approx(
                dist, abs=1e-9
            )

    def test_normalization_is_preserved(self):
        rng = np.random.default_rng(3)
        p = diag(0.0, 0.0, 1.0)
        normalized = random_state(rng, 3)
        out, _ = gentle_projection(normalized, p)
        assert out.normalization == "normalized"
        sub = 0.6 * random_state(rng, 3)
        out, _ = gentle_projection(sub, p)
        assert out.normalization == "subnormalized"
        assert out.trace < 1.0

    def test_degenerate_projection(self):
        with pytest.raises(DegenerateProjection):
            gentle_projection(diag(1.0, 0.0), diag(1.0, 0.0))

    def test_rejects_non_projector(self):
        with pytest.raises(DomainError):
            gentle_projection(MIXED2, diag(0.5, 0.5))
        with pytest.raises(DomainError):
            gentle_projection(MIXED2, np.zeros((3, 3)))


class TestRenyiSmoother:
    def test_two_atom_threshold_example(self):
        rho, sigma = diag(0.5, 0.5), diag(0.25, 0.75)
        cert = renyi_smoother(rho, sigma, eps=0.5, alpha=2.0, m=diag(2.0, 0.0))
        assert np.allclose(cert.projector.mat, 0.0, atol=1e-12)
        assert np.allclose(cert.smoothed_state.mat, rho, atol=1e-12)
        assert cert.distance == 0.0
        assert cert.witness_value == pytest.approx(0.0, abs=1e-12)
        want = math.log2(4.0 / 3.0) + 2.0 + math.log2(4.0 / 3.0)
        assert cert.claimed_bound.bits == pytest.approx(want, abs=1e-12)

    def test_identity_witness_keeps_state(self):
        rho, sigma = diag(0.5, 0.5), diag(0.25, 0.75)
        cert = renyi_smoother(rho, sigma, eps=0.5, alpha=2.0, m=np.eye(2))
        assert np.allclose(cert.smoothed_state.mat, rho, atol=1e-12)

    def test_random_certificates(self):
        rng = np.random.default_rng(4)
        for trial in range(30):
            d = int(rng.integers(2, 5))
            rho = random_state(rng, d)
            sigma = random_positive(rng, d, scale=2.0 ** rng.uniform(-1, 1))
            alpha = float(rng.choice([1.5, 2.0, 5.0]))
            eps = float(rng.choice([0.1, 0.5]))
            m = normalized_witness(rng, d, sigma)
            cert = renyi_smoother(rho, sigma, eps=eps, alpha=alpha, m=m)
            assert cert.distance <= eps + 1e-9
            discarded = float(np.trace(cert.projector.mat @ rho).real)
            assert discarded <= eps**2 + 1e-9
            redone = float(np.trace(m @ cert.smoothed_state.mat).real)
            if redone > 0:
                assert math.log2(redone) <= cert.claimed_bound.bits + 1e-9
            assert cert.witness_value <= cert.claimed_bound.bits + 1e-9
            # near zero the distance is sqrt-sensitive to fidelity roundoff,
            # so allow sqrt(machine-eps) there; the fidelity check is tight
            assert purified_distance(rho, cert.smoothed_state.mat) == pytest.approx(
                cert.distance, abs=1e-7
            )
            assert generalized_fidelity(rho, cert.smoothed_state.mat) == pytest.approx(
                1.0 - cert.distance**2, abs=1e-10
            )

    def test_validation(self):
        rho, sigma = diag(0.5, 0.5), diag(0.25, 0.75)
        with pytest.raises(DomainError):
            renyi_smoother(rho, sigma, eps=0.5, alpha=1.0, m=np.eye(2))
        with pytest.raises(DomainError):
            renyi_smoother(rho, sigma, eps=0.0, alpha=2.0, m=np.eye(2))
        with pytest.raises(DomainError):
            renyi_smoother(rho, sigma, eps=0.5, alpha=2.0, m=diag(1.0, -1.0))
        with pytest.raises(DomainError):
            renyi_smoother(rho, sigma, eps=0.5, alpha=2.0, m=diag(5.0, 0.0))
        with pytest.raises(DomainError):
            renyi_smoother(diag(1.0, 0.0), diag(0.0, 1.0), eps=0.5, alpha=2.0, m=np.eye(2))

    def test_json_round_trip(self):
        cert = renyi_smoother(
            diag(0.5, 0.5), diag(0.25, 0.75), eps=0.5, alpha=2.0, m=np.eye(2)
        )
        blob = json.dumps(cert.to_json())
        assert "claimed_bound_bits" in blob


class TestHypothesisSmoother:
    def test_self_pair_keeps_everything(self):
        rng = np.random.default_rng(5)
        rho = random_state(rng, 3)
        cert = hypothesis_smoother(rho, rho, eps=0.3, m=np.eye(3) / 3.0)
        assert np.allclose(cert.smoothed_state.mat, rho, atol=1e-12)
        assert cert.distance == 0.0

    def test_two_atom_discard(self):
        rho, sigma = diag(0.5, 0.5), diag(0.9, 0.1)
        eta = 1e-6
        cert = hypothesis_smoother(rho, sigma, eps=0.6, m=np.eye(2), eta=eta)
        assert np.allclose(cert.smoothed_state.mat, diag(1.0, 0.0), atol=1e-12)
        assert cert.distance == pytest.approx(math.sqrt(0.5), abs=1e-12)
        want = math.log2(5.0 / 9.0) + eta - math.log2(0.4)
        assert cert.claimed_bound.bits == pytest.approx(want, abs=1e-12)
        assert cert.witness_value == pytest.approx(0.0, abs=1e-12)

    def test_random_certificates(self):
        rng = np.random.default_rng(6)
        for trial in range(30):
            d = int(rng.integers(2, 5))
            rho = random_state(rng, d)
            sigma = random_positive(rng, d, scale=2.0 ** rng.uniform(-1, 1))
            eps = float(rng.choice([0.1, 0.3, 0.5]))
            m = normalized_witness(rng, d, sigma)
            cert = hypothesis_smoother(rho, sigma, eps=eps, m=m)
            kept = 1.0 - float(np.trace(cert.projector.mat @ rho).real)
            assert kept > 1.0 - eps - 1e-9
            assert cert.distance <= math.sqrt(eps) + 1e-9
            redone = float(np.trace(m @ cert.smoothed_state.mat).real)
            assert redone <= 2.0**cert.claimed_bound.bits * (1.0 + 1e-9) + 1e-12
            assert cert.witness_value <= cert.claimed_bound.bits + 1e-9

    def test_validation(self):
        with pytest.raises(DomainError):
            hypothesis_smoother(MIXED2, MIXED2, eps=0.0, m=np.eye(2))
        with pytest.raises(DomainError):
            hypothesis_smoother(MIXED2, MIXED2, eps=0.3, m=np.eye(2), eta=0.0)
        with pytest.raises(DomainError):
            hypothesis_smoother(0.5 * MIXED2, MIXED2, eps=0.3, m=np.eye(2))


class TestLowerBoundVerifier:
    def test_maximally_mixed_self_pair(self):
        check = verify_dmax_lower_bound(MIXED2, MIXED2, eps=0.25, delta=0.25)
        assert check.holds
        assert check.chain_holds
        # optimal smoother shrinks uniformly to trace 1 - eps, so the middle
        # term is log2(1 - eps) twice: once from t, once from the 1-eps factor
        assert check.middle_bits == pytest.approx(
            math.log2(0.75) + math.log2(0.75), abs=1e-6
        )
        assert check.right_bits == pytest.approx(1.0 - 6.0, abs=1e-9)
        assert check.slack_bits == pytest.approx(
            check.middle_bits - check.right_bits, abs=1e-12
        )

    def test_pure_state_saturates_ball(self):
        check = verify_dmax_lower_bound(diag(1.0, 0.0), MIXED2, eps=0.25, delta=0.25)
        assert check.holds
        assert check.chain_holds
        assert check.ball_saturated
        assert check.middle_bits == pytest.approx(
            math.log2(2 * 0.75) + math.log2(0.75), abs=1e-6
        )

    def test_random_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            d = int(rng.integers(2, 4))
            rho = random_state(rng, d)
            sigma = random_positive(rng, d, scale=2.0 ** rng.uniform(-1, 1))
            check = verify_dmax_lower_bound(rho, sigma, eps=0.25, delta=0.25)
            assert check.holds
            assert check.chain_holds

    def test_validation(self):
        with pytest.raises(DomainError):
            verify_dmax_lower_bound(MIXED2, MIXED2, eps=0.5, delta=0.5)
        with pytest.raises(DomainError):
            verify_dmax_lower_bound(MIXED2, MIXED2, eps=0.3, delta=0.0)


class TestJointResponse:
    def test_product_self_pair(self):
        rng = np.random.default_rng(8)
        sa = random_state(rng, 2)
        sb = random_state(rng, 2)
        rho = np.kron(sa, sb)
        cert = joint_smoother_response(
            rho, sa, sb, eps=0.2, eps2=0.2, m_a=np.eye(2), m_b=np.eye(2)
        )
        assert np.allclose(cert.smoothed_state.mat, rho, atol=1e-12)
        assert cert.distance == 0.0

    def test_diagonal_truncation_oracle(self):
        eta = 1e-6
        rho = diag(0.4, 0.1, 0.3, 0.2)
        sigma_a = diag(0.25, 0.75)
        sigma_b = diag(0.9, 0.1)
        cert = joint_smoother_response(
            rho, sigma_a, sigma_b, eps=0.3, eps2=0.35,
            m_a=np.eye(2), m_b=np.eye(2), eta=eta,
        )
        want = diag(0.4 / 0.7, 0.0, 0.3 / 0.7, 0.0)
        assert np.allclose(cert.smoothed_state.mat, want, atol=1e-12)
        assert cert.distance == pytest.approx(math.sqrt(0.3), abs=1e-12)
        delta = -math.log2(1.0 - 0.3 - 0.35)
        lam_a = 1.0 + eta + delta
        assert cert.claimed_bound.bits == pytest.approx(lam_a, abs=1e-12)

    def test_random_certificates(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            da, db = 2, int(rng.integers(2, 4))
            rho = random_state(rng, da * db)
            sigma_a = random_positive(rng, da)
            sigma_b = random_positive(rng, db)
            ma = random_projector(rng, da, 1) * rng.uniform(0.3, 1.0)
            mb = random_projector(rng, db, 1) * rng.uniform(0.3, 1.0)
            cert = joint_smoother_response(
                rho, sigma_a, sigma_b, eps=0.2, eps2=0.2, m_a=ma, m_b=mb
            )
            assert cert.distance <= math.sqrt(0.4) + 1e-9
            assert cert.witness_value <= cert.claimed_bound.bits + 1e-9
            assert purified_distance(rho, cert.smoothed_state.mat) == pytest.approx(
                cert.distance, abs=1e-7
            )

    def test_marginal_domination_inequality(self):
        rng = np.random.default_rng(10)
        for _ in range(100):
            da, db = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            g = rng.standard_normal((da * db, da * db)) + 1j * rng.standard_normal(
                (da * db, da * db)
            )
            x = g @ g.conj().T
            p = random_projector(rng, da, int(rng.integers(1, da + 1)))
            cut = np.kron(p, np.eye(db)) @ x
            lhs = partial_trace(cut, da, db, keep="b")
            rhs = partial_trace(x, da, db, keep="b")
            scale = max(float(np.linalg.eigvalsh(rhs)[-1]), 1.0)
            assert operator_leq(lhs, rhs, tol=1e-9 * scale)

    def test_validation(self):
        rho = np.eye(4) / 4
        with pytest.raises(DomainError):
            joint_smoother_response(
                rho, MIXED2, MIXED2, eps=0.6, eps2=0.5, m_a=np.eye(2), m_b=np.eye(2)
            )
        with pytest.raises(DomainError):
            joint_smoother_response(
                rho, MIXED2, MIXED2, eps=0.2, eps2=0.2,
                m_a=2.0 * np.eye(2), m_b=np.eye(2),
            )
        with pytest.raises(DomainError):
            joint_smoother_response(
                rho, MIXED2, np.eye(3) / 3, eps=0.2, eps2=0.2,
                m_a=np.eye(2), m_b=np.eye(3),
            )


class TestJointFeasibility:
    def test_product_of_targets_is_near_fixed_point(self):
        rng = np.random.default_rng(11)
        sa = random_state(rng, 2)
        sb = random_state(rng, 2)
        rho = np.kron(sa, sb)
        res = joint_smoother_feasibility(rho, sa, sb, eps=0.2, eps2=0.2)
        assert purified_distance(rho, res.smoothed_joint_state.mat) <= 0.02
        assert res.delta == pytest.approx(-math.log2(0.6), abs=1e-12)

    def test_result_invariants(self):
        rng = np.random.default_rng(12)
        for db in (2, 3):
            rho = random_state(rng, 2 * db)
            sigma_a = random_positive(rng, 2)
            sigma_b = random_positive(rng, db)
            res = joint_smoother_feasibility(rho, sigma_a, sigma_b, eps=0.2, eps2=0.2)
            mat = res.smoothed_joint_state.mat
            assert float(np.trace(mat).real) == pytest.approx(1.0, abs=1e-9)
            assert purified_distance(rho, mat) <= math.sqrt(0.4) + 1e-6
            assert np.allclose(
                res.margin_a.mat, partial_trace(mat, 2, db, keep="a"), atol=1e-10
            )
            for margin, lam, sigma in (
                (res.margin_a.mat, res.lambda_a, sigma_a),
                (res.margin_b.mat, res.lambda_b, sigma_b),
            ):
                scale = 2.0**lam * max(float(np.linalg.eigvalsh(sigma)[-1]), 1.0)
                assert operator_leq(margin, 2.0**lam * sigma, tol=1e-6 * scale)

    def test_bell_state(self):
        bell = np.zeros((4, 4))
        for i in (0, 3):
            for j in (0, 3):
                bell[i, j] = 0.5
        res = joint_smoother_feasibility(bell, MIXED2, MIXED2, eps=0.2, eps2=0.2)
        assert purified_distance(bell, res.smoothed_joint_state.mat) <= math.sqrt(0.4) + 1e-6

    def test_corollary_mode(self):
        rng = np.random.default_rng(13)
        rho = random_state(rng, 4)
        sigma_a = random_positive(rng, 2)
        sigma_b = random_positive(rng, 2)
        res = joint_smoother_feasibility(
            rho, sigma_a, sigma_b, eps=0.2, eps2=0.2, corollary_delta=0.1
        )
        radius = math.sqrt(0.2 + 0.2 + 0.2)
        assert purified_distance(rho, res.smoothed_joint_state.mat) <= radius + 1e-6
        want = 2.0 - 2.0 * math.log2(0.1) - math.log2(1.0 - 0.6)
        assert res.delta == pytest.approx(want, abs=1e-12)

    def test_corollary_delta_validation(self):
        rho = np.eye(4) / 4
        with pytest.raises(DomainError):
            joint_smoother_feasibility(
                rho, MIXED2, MIXED2, eps=0.3, eps2=0.3, corollary_delta=0.2
            )

    def test_json_round_trip(self):
        rng = np.random.default_rng(14)
        rho = random_state(rng, 4)
        res = joint_smoother_feasibility(rho, MIXED2, MIXED2, eps=0.2, eps2=0.2)
        blob = json.dumps(res.to_json())
        assert "lambda_a_bits" in blob
