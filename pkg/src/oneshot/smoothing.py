"""Constructive smoothing procedures and the bound verifiers built on them.

Each smoother returns a certificate whose inequalities are re-checked
numerically on the way out; a certificate that fails its own arithmetic
raises CertificateViolation rather than returning quietly.  The feasibility
routine realizes the joint-smoothing existence claim as an explicit SDP and
hands back the feasible point it found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .classical import classical_ds
from .divergences import (
    PURIFIED,
    DivergenceValue,
    SmoothingBall,
    dh,
    dmax_smooth,
    hypothesis_test,
    renyi,
)
from .errors import (
    CertificateViolation,
    DegenerateProjection,
    DomainError,
    NumericalFailure,
)
from .linalg import (
    NORMALIZED,
    RANK_TOL,
    HermitianOperator,
    QuantumState,
    _as_matrix,
    as_positive,
    as_state,
    matrix_to_json,
    operator_leq,
    partial_trace,
    purified_distance,
    state_to_json,
)
from .sdp import (
    SdpBuilder,
    adj_embed_a,
    adj_embed_b,
    adj_identity,
    fidelity_ball_constraints,
    solve,
)

ETA_DEFAULT = 1e-6
_CERT_SLACK = 1e-9


@dataclass
class SmoothingCertificate:
    """A smoothed state plus the checked inequalities that justify it.

    ``projector`` is the discarded-subspace projector handed to the gentle
    projection; ``witness_value`` and ``claimed_bound`` are in bits, with
    witness_value <= claimed_bound re-verified at construction time.
    """

    smoothed_state: QuantumState
    projector: HermitianOperator
    distance: float
    claimed_bound: DivergenceValue
    witness_value: float

    def to_json(self) -> dict:
        return {
            "smoothed_state": state_to_json(self.smoothed_state),
            "projector": matrix_to_json(self.projector.mat),
            "distance": self.distance,
            "claimed_bound_bits": self.claimed_bound.bits,
            "claimed_bound_capped": self.claimed_bound.capped,
            "witness_value_bits": self.witness_value,
        }


@dataclass
class JointSmoothingResult:
    """Feasible point of the joint-smoothing SDP with its rate targets."""

    smoothed_joint_state: QuantumState
    margin_a: QuantumState
    margin_b: QuantumState
    lambda_a: float
    lambda_b: float
    delta: float

    def to_json(self) -> dict:
        return {
            "smoothed_joint_state": state_to_json(self.smoothed_joint_state),
            "margin_a": state_to_json(self.margin_a),
            "margin_b": state_to_json(self.margin_b),
            "lambda_a_bits": self.lambda_a,
            "lambda_b_bits": self.lambda_b,
            "delta_bits": self.delta,
        }


def _checked_projector(p) -> np.ndarray:
    mat = HermitianOperator(_as_matrix(p)).mat
    if float(np.abs(mat @ mat - mat).max()) > 1e-10:
        raise DomainError("operator is not a projector (P^2 differs from P)")
    return mat


def gentle_projection(rho, projector) -> tuple[QuantumState, float]:
    """Remove a subspace from a state, paying exactly the square-root mass.

    Returns (smoothed, distance) with smoothed = (1-P) rho (1-P) / (1 - tr P rho)
    and distance = sqrt(tr P rho), which equals the purified distance to the
    input for normalized states.
    """
    st = as_state(rho)
    p = _checked_projector(projector)
    if p.shape[0] != st.dim:
        raise DomainError(f"projector dimension {p.shape[0]} does not match {st.dim}")
    discarded = float(np.trace(p @ st.mat).real)
    if discarded >= 1.0 - 1e-12:
        raise DegenerateProjection(
            f"projection removes essentially all mass ({discarded} discarded)"
        )
    kept = np.eye(st.dim) - p
    mat = kept @ st.mat @ kept
    mat = (mat + mat.conj().T) / 2 / (1.0 - discarded)
    smoothed = QuantumState(mat, normalization=st.normalization)
    return smoothed, math.sqrt(max(discarded, 0.0))


def _admissible_witness(m, sigma_mat, *, bounded: bool) -> np.ndarray:
    mat = HermitianOperator(_as_matrix(m)).mat
    w = np.linalg.eigvalsh(mat)
    if w[0] < -1e-9:
        raise DomainError("witness operator must be PSD")
    if bounded:
        if w[-1] > 1.0 + 1e-9:
            raise DomainError("witness operator must satisfy M <= 1")
    elif float(np.trace(mat @ sigma_mat).real) > 1.0 + 1e-9:
        raise DomainError("witness operator must satisfy tr(M sigma) <= 1")
    return mat


def _measured_pair(basis: np.ndarray, rho_mat, sigma_mat):
    p = np.einsum("ji,jk,ki->i", basis.conj(), rho_mat, basis).real
    q = np.einsum("ji,jk,ki->i", basis.conj(), sigma_mat, basis).real
    return np.clip(p, 0.0, None), np.clip(q, 0.0, None)


def _basis_projector(basis: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if not mask.any():
        return np.zeros((basis.shape[0], basis.shape[0]), dtype=basis.dtype)
    sub = basis[:, mask]
    p = sub @ sub.conj().T
    return (p + p.conj().T) / 2


def renyi_smoother(rho, sigma, eps: float, alpha: float, m) -> SmoothingCertificate:
    """Threshold smoothing that trades Renyi-alpha knowledge for a max bound.

    Measures rho and sigma in the eigenbasis of the admissible witness M,
    discards the directions whose likelihood ratio exceeds
    2^renyi(rho,sigma,alpha) * (1/eps^2)^(1/(alpha-1)), and certifies both
    the discarded mass (at most eps^2) and the witness bound on the gently
    projected state.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if alpha <= 1.0:
        raise DomainError(f"alpha must exceed 1, got {alpha}")
    st = as_state(rho)
    op = as_positive(sigma)
    if st.dim != op.dim:
        raise DomainError(f"dimension mismatch: {st.dim} vs {op.dim}")
    m_mat = _admissible_witness(m, op.mat, bounded=False)
    d_alpha = renyi(st, op, alpha)
    if not d_alpha.is_finite:
        raise DomainError("the Renyi divergence of the pair must be finite")

    log_tau = d_alpha.bits + math.log2(1.0 / eps**2) / (alpha - 1.0)
    _, basis = np.linalg.eigh(m_mat)
    p, q = _measured_pair(basis, st.mat, op.mat)
    q_floor = RANK_TOL * max(float(q.max()), 1e-300)
    supported = q > q_floor
    discard = np.where(supported, False, p > RANK_TOL)
    ratio_known = supported & (p > 0.0)
    discard[ratio_known] = (
        np.log2(p[ratio_known]) - np.log2(q[ratio_known]) > log_tau
    )

    pi_mat = _basis_projector(basis, discard)
    discarded = float(np.trace(pi_mat @ st.mat).real)
    if discarded > eps**2 * (1.0 + _CERT_SLACK) + 1e-12:
        raise CertificateViolation(
            f"discarded mass {discarded} exceeds the eps^2 budget {eps**2}"
        )
    smoothed, distance = gentle_projection(st, pi_mat)

    m_val = float(np.trace(m_mat @ smoothed.mat).real)
    scaled = max(m_val, 0.0) * (1.0 - discarded)
    if scaled > 0.0 and math.log2(scaled) > log_tau + _CERT_SLACK:
        raise CertificateViolation(
            f"witness bound fails: log2 {math.log2(scaled)} vs threshold {log_tau}"
        )
    witness_value = math.log2(m_val) if m_val > 0.0 else -math.inf
    claimed = DivergenceValue(
        d_alpha.bits
        + math.log2(1.0 / eps**2) / (alpha - 1.0)
        + math.log2(1.0 / (1.0 - eps**2))
    )
    if witness_value > claimed.bits + _CERT_SLACK:
        raise CertificateViolation("witness value exceeds the claimed bound")
    return SmoothingCertificate(
        smoothed, HermitianOperator(pi_mat), distance, claimed, witness_value
    )


def hypothesis_smoother(
    rho, sigma, eps: float, m, eta: float = ETA_DEFAULT
) -> SmoothingCertificate:
    """Quantile smoothing in the witness eigenbasis.

    Measures the pair in eig(M), takes the classical spectrum quantile K of
    the measured distributions at parameter 1-eps, keeps the directions with
    likelihood ratio at most 2^(K+eta), and certifies that the kept mass
    stays above 1-eps while the witness expectation on the smoothed state is
    at most 2^(K+eta)/(1-eps).
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if eta <= 0.0:
        raise DomainError(f"eta must be positive, got {eta}")
    st = as_state(rho, require_normalized=True)
    op = as_positive(sigma)
    if st.dim != op.dim:
        raise DomainError(f"dimension mismatch: {st.dim} vs {op.dim}")
    m_mat = _admissible_witness(m, op.mat, bounded=False)

    _, basis = np.linalg.eigh(m_mat)
    p, q = _measured_pair(basis, st.mat, op.mat)
    quantile = classical_ds(p, q, 1.0 - eps)
    keep = p <= 2.0 ** (quantile.value + eta) * q
    pi_mat = _basis_projector(basis, ~keep)

    discarded = float(np.trace(pi_mat @ st.mat).real)
    if 1.0 - discarded <= 1.0 - eps - _CERT_SLACK:
        raise CertificateViolation(
            f"kept mass {1.0 - discarded} does not clear the 1-eps floor"
        )
    smoothed, distance = gentle_projection(st, pi_mat)
    if distance > math.sqrt(eps) + _CERT_SLACK:
        raise CertificateViolation("smoothing moved farther than sqrt(eps)")

    m_val = float(np.trace(m_mat @ smoothed.mat).real)
    bound = 2.0 ** (quantile.value + eta) / (1.0 - eps)
    if m_val > bound * (1.0 + _CERT_SLACK) + 1e-12:
        raise CertificateViolation(f"witness expectation {m_val} exceeds {bound}")
    witness_value = math.log2(m_val) if m_val > 0.0 else -math.inf
    claimed = DivergenceValue(
        quantile.value + eta - math.log2(1.0 - eps), capped=quantile.capped
    )
    return SmoothingCertificate(
        smoothed, HermitianOperator(pi_mat), distance, claimed, witness_value
    )


@dataclass
class LowerBoundCheck:
    """Outcome of the two-sided check around the smoothed max-divergence."""

    holds: bool
    slack_bits: float
    middle_bits: float
    right_bits: float
    chain_holds: bool
    chain_slack: float
    ball_saturated: bool


def verify_dmax_lower_bound(rho, sigma, eps: float, delta: float) -> LowerBoundCheck:
    """Check D_max over the sqrt(eps) ball against the hypothesis-test floor.

    Verifies middle = dmax_smooth(sqrt(eps)) + log2(1-eps) dominates
    right = dh(1-eps-delta) - log2(4/delta^2), and re-derives the fidelity
    chain sqrt(1-eps) <= sqrt(2^lam tr(Q sigma)) + sqrt(1-eps-delta) with the
    optimal test Q.  The saturation flag marks instances where the smoother
    used the whole ball radius, which is when the chain's first step is tight.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if not (0.0 < delta and eps + delta < 1.0):
        raise DomainError(f"delta must lie in (0, 1-eps), got {delta}")
    st = as_state(rho, require_normalized=True)
    op = as_positive(sigma)

    smooth = dmax_smooth(st, op, SmoothingBall(PURIFIED, math.sqrt(eps)))
    lam = smooth.value.bits
    middle = lam + math.log2(1.0 - eps)
    ht = hypothesis_test(st, op, 1.0 - eps - delta)
    right = ht.value.bits - math.log2(4.0 / delta**2)

    if math.isinf(middle) and math.isinf(right):
        holds, slack = True, 0.0
    else:
        slack = middle - right
        holds = slack >= -1e-6

    if math.isinf(lam):
        chain_holds, chain_slack = True, math.inf
    else:
        rhs = math.sqrt(max(2.0**lam * ht.beta, 0.0)) + math.sqrt(1.0 - eps - delta)
        chain_slack = rhs - math.sqrt(1.0 - eps)
        chain_holds = chain_slack >= -1e-6

    saturated = False
    if smooth.smoothed_state is not None:
        moved = purified_distance(st.mat, smooth.smoothed_state.mat)
        saturated = abs(moved - math.sqrt(eps)) <= 1e-6

    return LowerBoundCheck(
        holds, slack, middle, right, chain_holds, chain_slack, saturated
    )


# ---------------------------------------------------------------------------
# joint smoothing on a bipartite system
# ---------------------------------------------------------------------------


def _joint_setup(rho_ab, sigma_a, sigma_b, eps, eps2):
    st = as_state(rho_ab, require_normalized=True)
    oa = as_positive(sigma_a)
    ob = as_positive(sigma_b)
    if oa.dim * ob.dim != st.dim:
        raise DomainError(
            f"marginal dimensions {oa.dim}x{ob.dim} do not factor {st.dim}"
        )
    if not (0.0 < eps and 0.0 < eps2 and eps + eps2 < 1.0):
        raise DomainError(f"need eps, eps' > 0 with eps + eps' < 1, got {eps}, {eps2}")
    return st, oa, ob


def joint_smoother_response(
    rho_ab,
    sigma_a,
    sigma_b,
    eps: float,
    eps2: float,
    m_a,
    m_b,
    eta: float = ETA_DEFAULT,
) -> SmoothingCertificate:
    """Product-projector smoothing answering a pair of bounded witnesses.

    For each side, measures the marginal pair in the witness eigenbasis,
    keeps the ratio-bounded directions exactly as the single-system quantile
    smoother does, and gently projects onto the product of the kept
    subspaces.  Certifies the per-side kept masses, the joint discarded mass
    (at most eps + eps'), and the marginal witness bounds at rate
    K + eta + delta with delta = -log2(1 - eps - eps').
    """
    st, oa, ob = _joint_setup(rho_ab, sigma_a, sigma_b, eps, eps2)
    if eta <= 0.0:
        raise DomainError(f"eta must be positive, got {eta}")
    ma = _admissible_witness(m_a, oa.mat, bounded=True)
    mb = _admissible_witness(m_b, ob.mat, bounded=True)
    da, db = oa.dim, ob.dim
    rho_a = partial_trace(st.mat, da, db, keep="a")
    rho_b = partial_trace(st.mat, da, db, keep="b")

    def side(m_mat, rho_m, sigma_m, budget):
        _, basis = np.linalg.eigh(m_mat)
        p, q = _measured_pair(basis, rho_m, sigma_m)
        quantile = classical_ds(p, q, 1.0 - budget)
        keep = p <= 2.0 ** (quantile.value + eta) * q
        kept_proj = _basis_projector(basis, keep)
        kept_mass = float(np.trace(kept_proj @ rho_m).real)
        if kept_mass < 1.0 - budget - _CERT_SLACK:
            raise CertificateViolation(
                f"kept marginal mass {kept_mass} fell below {1.0 - budget}"
            )
        return quantile, kept_proj

    qa, kept_a = side(ma, rho_a, oa.mat, eps)
    qb, kept_b = side(mb, rho_b, ob.mat, eps2)

    joint_kept = np.kron(kept_a, kept_b)
    pi_mat = np.eye(st.dim) - joint_kept
    discarded = float(np.trace(pi_mat @ st.mat).real)
    if discarded > eps + eps2 + _CERT_SLACK:
        raise CertificateViolation(
            f"joint discarded mass {discarded} exceeds eps + eps' = {eps + eps2}"
        )
    smoothed, distance = gentle_projection(st, pi_mat)

    delta_bits = -math.log2(1.0 - eps - eps2)
    lam_a = qa.value + eta + delta_bits
    lam_b = qb.value + eta + delta_bits

    def margin_check(m_mat, sigma_m, lam, keep: str):
        margin = partial_trace(smoothed.mat, da, db, keep=keep)
        lhs = float(np.trace(m_mat @ margin).real)
        rhs = 2.0**lam * float(np.trace(m_mat @ sigma_m).real)
        if lhs > rhs * (1.0 + _CERT_SLACK) + 1e-12:
            raise CertificateViolation(
                f"marginal witness bound fails on side {keep}: {lhs} vs {rhs}"
            )
        base = float(np.trace(m_mat @ sigma_m).real)
        if lhs <= 0.0 or base <= 0.0:
            return -math.inf
        return math.log2(lhs) - math.log2(base)

    ratio_a = margin_check(ma, oa.mat, lam_a, "a")
    ratio_b = margin_check(mb, ob.mat, lam_b, "b")
    witness_value = max(ratio_a, ratio_b)
    claimed = DivergenceValue(max(lam_a, lam_b), capped=(qa.capped or qb.capped))
    if witness_value > claimed.bits + _CERT_SLACK:
        raise CertificateViolation("joint witness value exceeds the claimed rate")
    return SmoothingCertificate(
        smoothed, HermitianOperator(pi_mat), distance, claimed, witness_value
    )


def joint_smoother_feasibility(
    rho_ab,
    sigma_a,
    sigma_b,
    eps: float,
    eps2: float,
    eta: float = ETA_DEFAULT,
    corollary_delta: float | None = None,
) -> JointSmoothingResult:
    """Find a jointly smoothed state meeting both marginal rate targets.

    Solves: maximize the fidelity root to rho_AB subject to rho_tilde being a
    normalized state in the sqrt(eps+eps') purified ball whose A-marginal is
    dominated by 2^lambda_A sigma_A and symmetrically for B.  The rates come
    from the per-marginal hypothesis-testing divergences at 1-eps and 1-eps'
    plus delta = -log2(1-eps-eps') and the eta cushion; feasibility is
    guaranteed, so an infeasible status is reported as CertificateViolation.

    With ``corollary_delta`` set, the rates are built from the smoothed
    max-divergences of the marginals over sqrt(eps)- and sqrt(eps')-balls
    plus 2 - 2 log2(delta) - log2(1-eps-eps'-2 delta), and the ball radius
    grows to sqrt(eps+eps'+2 delta).
    """
    st, oa, ob = _joint_setup(rho_ab, sigma_a, sigma_b, eps, eps2)
    if eta <= 0.0:
        raise DomainError(f"eta must be positive, got {eta}")
    da, db = oa.dim, ob.dim
    rho_a = partial_trace(st.mat, da, db, keep="a")
    rho_b = partial_trace(st.mat, da, db, keep="b")

    if corollary_delta is None:
        delta_bits = -math.log2(1.0 - eps - eps2)
        lam_a = dh(rho_a, oa, 1.0 - eps).bits + delta_bits + eta
        lam_b = dh(rho_b, ob, 1.0 - eps2).bits + delta_bits + eta
        radius = math.sqrt(eps + eps2)
    else:
        dlt = float(corollary_delta)
        if not (0.0 < dlt and eps + eps2 + 2.0 * dlt < 1.0):
            raise DomainError(
                f"corollary delta must satisfy eps + eps' + 2 delta < 1, got {dlt}"
            )
        delta_bits = 2.0 - 2.0 * math.log2(dlt) - math.log2(1.0 - eps - eps2 - 2.0 * dlt)
        ball_a = SmoothingBall(PURIFIED, math.sqrt(eps))
        ball_b = SmoothingBall(PURIFIED, math.sqrt(eps2))
        lam_a = dmax_smooth(rho_a, oa, ball_a).value.bits + delta_bits + eta
        lam_b = dmax_smooth(rho_b, ob, ball_b).value.bits + delta_bits + eta
        radius = math.sqrt(eps + eps2 + 2.0 * dlt)

    builder = SdpBuilder()
    rt = builder.add_block(da * db)
    frag = fidelity_ball_constraints(builder, rt, st.mat, radius)
    builder.add_scalar_constraint({rt: np.eye(da * db)}, 1.0, "=")
    if math.isfinite(lam_a):
        sa = builder.add_block(da)
        builder.add_matrix_equality(
            [(sa, adj_identity), (rt, adj_embed_a(db))], 2.0**lam_a * oa.mat
        )
    if math.isfinite(lam_b):
        sb = builder.add_block(db)
        builder.add_matrix_equality(
            [(sb, adj_identity), (rt, adj_embed_b(da))], 2.0**lam_b * ob.mat
        )
    for block, coeff in frag.root_coeffs.items():
        builder.set_objective(block, -coeff)
    problem = builder.build()
    sol = solve(problem)

    if sol.status == "infeasible":
        raise CertificateViolation(
            "the joint smoothing SDP reported infeasible, but feasibility is "
            "guaranteed at these rates; this indicates numerics or a bug"
        )
    if not sol.optimal:
        err = NumericalFailure(
            f"joint smoothing SDP ended with status {sol.status}; "
            "the problem dump is attached as .problem_dump"
        )
        err.problem_dump = problem.to_json()
        raise err

    mat = sol.primal_blocks[rt]
    tr = float(mat.trace().real)
    if abs(tr - 1.0) > 1e-6:
        raise NumericalFailure(f"feasible point trace {tr} is not 1")
    mat = (mat + mat.conj().T) / 2 / tr
    moved = purified_distance(st.mat, mat)
    if moved > radius + 1e-6:
        raise NumericalFailure(f"feasible point left the ball: distance {moved}")
    margin_a = partial_trace(mat, da, db, keep="a")
    margin_b = partial_trace(mat, da, db, keep="b")
    for margin, lam, op in ((margin_a, lam_a, oa), (margin_b, lam_b, ob)):
        if not math.isfinite(lam):
            continue
        scale = 2.0**lam * max(float(np.linalg.eigvalsh(op.mat)[-1]), 1.0)
        if not operator_leq(margin, 2.0**lam * op.mat, tol=1e-6 * max(scale, 1.0)):
            raise NumericalFailure("feasible point violates a marginal domination")

    joint = QuantumState(mat, normalization=NORMALIZED)
    return JointSmoothingResult(
        joint,
        QuantumState(margin_a, normalization=NORMALIZED),
        QuantumState(margin_b, normalization=NORMALIZED),
        lam_a,
        lam_b,
        delta_bits,
    )
