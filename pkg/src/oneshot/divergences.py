"""Entropic divergence evaluators, closed-form or optimization-backed.

All values are base-2 (bits).  Infinite values signal a support failure and
are represented as ``math.inf`` inside ``DivergenceValue``, never as a large
finite float.  The quantile evaluator additionally reports when its scan cap
was the binding value.

Evaluators accept the validated containers from ``oneshot.linalg`` or bare
ndarrays, which are validated on entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .classical import LAMBDA_CAP
from .errors import DomainError, NumericalFailure
from .linalg import (
    EIG_POS_TOL,
    NORMALIZED,
    RANK_TOL,
    SUBNORMALIZED,
    PositiveOperator,
    QuantumState,
    _as_matrix,
    as_positive,
    as_state,
    mp_power,
    operator_leq,
    purified_distance,
    support_projector,
    trace_distance,
)
from .sdp import (
    SdpBuilder,
    adj_identity,
    adj_negate,
    adj_scale,
    adj_trace_against,
    fidelity_ball_constraints,
    solve,
    trace_ball_constraints,
)

PURIFIED = "purified"
TRACE = "trace"

_TINY = 1e-300


@dataclass(frozen=True)
class DivergenceValue:
    """An extended-real divergence in bits; ``capped`` marks a scan-cap hit."""

    bits: float
    capped: bool = False

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.bits)

    def __float__(self) -> float:
        return self.bits


@dataclass(frozen=True)
class SmoothingBall:
    """A neighborhood spec: purified-distance or trace-distance ball."""

    kind: str
    radius: float

    def __post_init__(self):
        if self.kind not in (PURIFIED, TRACE):
            raise DomainError(f"ball kind must be purified or trace, got {self.kind!r}")
        if not 0.0 <= self.radius < 1.0:
            raise DomainError(f"ball radius must lie in [0, 1), got {self.radius}")


@dataclass
class HypothesisTestResult:
    """Optimal test data behind a hypothesis-testing divergence value."""

    value: DivergenceValue
    test: np.ndarray
    type1: float
    beta: float
    method: str


@dataclass
class SmoothedDivergence:
    """Smoothed max-divergence value with its optimizer and dual witness."""

    value: DivergenceValue
    smoothed_state: QuantumState | None
    witness: np.ndarray | None
    ball: SmoothingBall
    solution: object


def _matched(rho, sigma, *, require_normalized: bool = False):
    st = as_state(rho, require_normalized=require_normalized)
    op = as_positive(sigma)
    if st.dim != op.dim:
        raise DomainError(f"dimension mismatch: {st.dim} vs {op.dim}")
    return st, op


def _unsupported_mass(rho_mat: np.ndarray, sigma_mat: np.ndarray) -> float:
    kernel = np.eye(sigma_mat.shape[0]) - support_projector(sigma_mat)
    return float(np.trace(kernel @ rho_mat).real)


def dmax(rho, sigma) -> DivergenceValue:
    """Max-divergence log2 of the largest eigenvalue of s^-1/2 r s^-1/2.

    Infinite exactly when rho has mass outside the support of sigma (support
    decided at the rank tolerance).  The finite value satisfies
    rho <= 2^value sigma in the Loewner order.
    """
    st, op = _matched(rho, sigma)
    if _unsupported_mass(st.mat, op.mat) > RANK_TOL * max(1.0, st.trace):
        return DivergenceValue(math.inf)
    inv_half = mp_power(op.mat, -0.5)
    y = inv_half @ st.mat @ inv_half
    top = float(np.linalg.eigvalsh((y + y.conj().T) / 2)[-1])
    return DivergenceValue(math.log2(max(top, _TINY)))


def renyi(rho, sigma, alpha: float) -> DivergenceValue:
    """Sandwiched Renyi divergence of order alpha in [1/2, 1) or (1, inf)."""
    if not (math.isfinite(alpha) and alpha >= 0.5 and alpha != 1.0):
        raise DomainError(f"alpha must lie in [1/2, 1) or (1, inf), got {alpha}")
    st, op = _matched(rho, sigma)
    if alpha > 1.0 and _unsupported_mass(st.mat, op.mat) > RANK_TOL * max(1.0, st.trace):
        return DivergenceValue(math.inf)
    exponent = (1.0 - alpha) / (2.0 * alpha)
    pinch = mp_power(op.mat, exponent)
    x = pinch @ st.mat @ pinch
    w = np.clip(np.linalg.eigvalsh((x + x.conj().T) / 2), 0.0, None)
    q = float(np.sum(w**alpha))
    if q <= 0.0:
        return DivergenceValue(math.inf)
    return DivergenceValue((math.log2(q) - math.log2(st.trace)) / (alpha - 1.0))


def rel_entropy(rho, sigma) -> DivergenceValue:
    """Relative entropy tr rho (log2 rho - log2 sigma) / tr rho."""
    st, op = _matched(rho, sigma)
    if _unsupported_mass(st.mat, op.mat) > RANK_TOL * max(1.0, st.trace):
        return DivergenceValue(math.inf)
    wr, vr = np.linalg.eigh(st.mat)
    ws, vs = np.linalg.eigh(op.mat)
    keep_r = wr > RANK_TOL * max(float(wr[-1]), _TINY)
    keep_s = ws > RANK_TOL * max(float(ws[-1]), _TINY)
    overlap = np.abs(vr[:, keep_r].conj().T @ vs[:, keep_s]) ** 2
    pr = wr[keep_r]
    term1 = float(np.sum(pr * np.log2(pr)))
    term2 = float(pr @ overlap @ np.log2(ws[keep_s]))
    return DivergenceValue((term1 - term2) / st.trace)


# ---------------------------------------------------------------------------
# hypothesis-testing divergence
# ---------------------------------------------------------------------------


def hypothesis_test(rho, sigma, eps: float, method: str = "bisect") -> HypothesisTestResult:
    """Optimal test for min tr(L sigma) s.t. tr(L rho) >= 1 - eps, 0 <= L <= 1.

    The default method exploits the quantum Neyman-Pearson structure: the
    optimizer is the strictly-positive-part projector of rho - t sigma plus a
    scalar randomization weight on the boundary eigenspace, with t bisected
    until the type-I constraint is met with equality.  ``method="sdp"``
    solves the same program directly through the cone solver.
    """
    if not 0.0 <= eps < 1.0:
        raise DomainError(f"eps must lie in [0, 1), got {eps}")
    st, op = _matched(rho, sigma, require_normalized=True)
    rm, sm = st.mat, op.mat
    d = st.dim
    kernel = np.eye(d) - support_projector(sm)
    free_mass = float(np.trace(kernel @ rm).real)
    if free_mass >= 1.0 - eps - 1e-12:
        return HypothesisTestResult(
            DivergenceValue(math.inf), kernel, free_mass, 0.0, method
        )
    if method == "sdp":
        return _hypothesis_test_sdp(rm, sm, eps)
    if method != "bisect":
        raise DomainError(f"unknown method {method!r}")
    if eps == 0.0:
        test = support_projector(rm)
        beta = float(np.trace(test @ sm).real)
        return HypothesisTestResult(
            DivergenceValue(-math.log2(max(beta, _TINY))),
            test,
            float(np.trace(test @ rm).real),
            beta,
            method,
        )
    return _hypothesis_test_bisect(rm, sm, eps)


def _strict_mass(rm: np.ndarray, sm: np.ndarray, t: float) -> float:
    diff = rm - t * sm
    w, v = np.linalg.eigh(diff)
    scale = float(np.abs(w).max()) if w.size else 0.0
    keep = w > EIG_POS_TOL * scale
    if not keep.any():
        return 0.0
    vk = v[:, keep]
    return float(np.einsum("ji,jk,ki->", vk.conj(), rm, vk).real)


def _hypothesis_test_bisect(rm, sm, eps) -> HypothesisTestResult:
    target = 1.0 - eps
    sigma_norm = float(np.linalg.eigvalsh(sm)[-1])
    lo, hi = 0.0, 1.0
    for _ in range(200):
        if _strict_mass(rm, sm, hi) < target:
            break
        lo = hi
        hi *= 2.0
    else:  # pragma: no cover - excluded by the free-mass check above
        raise NumericalFailure("no upper bracket for the test threshold")
    for _ in range(120):
        if hi - lo <= 1e-10 * max(hi, 1e-30):
            break
        mid = 0.5 * (lo + hi)
        if _strict_mass(rm, sm, mid) >= target:
            lo = mid
        else:
            hi = mid

    diff = rm - hi * sm
    w, v = np.linalg.eigh(diff)
    scale = float(np.abs(w).max()) if w.size else 0.0
    window = max(
        4.0 * sigma_norm * (hi - lo) + 1e-13 * max(scale, 1.0),
        EIG_POS_TOL * scale,
    )
    pv = np.einsum("ji,jk,ki->i", v.conj(), rm, v).real
    pos = w > window
    boundary = np.abs(w) <= window
    strict_mass = float(pv[pos].sum())
    boundary_mass = float(pv[boundary].sum())
    gamma = 0.0
    if boundary_mass > 1e-14:
        gamma = min(max((target - strict_mass) / boundary_mass, 0.0), 1.0)
    test = np.zeros_like(rm)
    if pos.any():
        vk = v[:, pos]
        test = test + vk @ vk.conj().T
    if gamma > 0.0 and boundary.any():
        vb = v[:, boundary]
        test = test + gamma * (vb @ vb.conj().T)
    test = (test + test.conj().T) / 2
    type1 = float(np.trace(test @ rm).real)
    if abs(type1 - target) > 5e-8:
        raise NumericalFailure(
            f"randomized test misses the type-I target: {type1} vs {target}"
        )
    beta = float(np.trace(test @ sm).real)
    value = DivergenceValue(-math.log2(max(beta, _TINY)))
    return HypothesisTestResult(value, test, type1, beta, "bisect")


def _hypothesis_test_sdp(rm, sm, eps) -> HypothesisTestResult:
    d = rm.shape[0]
    builder = SdpBuilder()
    lam = builder.add_block(d)
    slack = builder.add_block(d)
    builder.add_matrix_equality(
        [(lam, adj_identity), (slack, adj_identity)], np.eye(d)
    )
    builder.add_scalar_constraint({lam: -rm}, -(1.0 - eps), "<=")
    builder.set_objective(lam, sm)
    sol = solve(builder.build())
    if not sol.optimal:
        raise NumericalFailure(f"hypothesis-test SDP ended with status {sol.status}")
    test = sol.primal_blocks[lam]
    beta = sol.primal_value
    if beta <= 0.0:
        return HypothesisTestResult(
            DivergenceValue(math.inf), test, float(np.trace(test @ rm).real), 0.0, "sdp"
        )
    return HypothesisTestResult(
        DivergenceValue(-math.log2(beta)),
        test,
        float(np.trace(test @ rm).real),
        beta,
        "sdp",
    )


def dh(rho, sigma, eps: float, method: str = "bisect") -> DivergenceValue:
    """Hypothesis-testing divergence -log2 of the optimal type-II error."""
    return hypothesis_test(rho, sigma, eps, method=method).value


# ---------------------------------------------------------------------------
# information-spectrum divergence
# ---------------------------------------------------------------------------


def _tail_batch(rm: np.ndarray, sm: np.ndarray, lams: np.ndarray) -> np.ndarray:
    """f(lam) = tr rho P_+(2^lam sigma - rho) for an array of lambdas.

    Strict positivity is judged per eigendirection, against the mass the two
    operators themselves put on that direction; a global scale would wash out
    genuinely positive directions when the pair is badly conditioned.
    """
    mats = 2.0 ** lams[:, None, None] * sm[None] - rm[None]
    w, v = np.linalg.eigh(mats)
    pv = np.einsum("nji,jk,nki->ni", v.conj(), rm, v).real
    sv = np.einsum("nji,jk,nki->ni", v.conj(), sm, v).real
    row = 2.0 ** lams[:, None] * np.abs(sv) + np.abs(pv)
    mask = w > EIG_POS_TOL * row
    return (pv * mask).sum(axis=1)


def ds(
    rho,
    sigma,
    eps: float,
    cap: float = LAMBDA_CAP,
    samples_per_interval: int = 33,
) -> DivergenceValue:
    """Information-spectrum divergence via a full breakpoint scan.

    Evaluates the tail f(lam) = tr rho P_+(2^lam sigma - rho) on every
    interval between consecutive generalized eigenvalues of (rho, sigma),
    walking from the top, and returns the supremum of the feasible set
    {f <= eps} within [-cap, cap].  The strict positive part makes f
    left-continuous, so a feasible breakpoint is returned exactly; interior
    crossings are refined by bisection.  Feasibility of the whole scanned
    range is reported with the cap flag set (the true supremum may be
    infinite when rho has sigma-free mass).
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if cap <= 0.0:
        raise DomainError(f"cap must be positive, got {cap}")
    st, op = _matched(rho, sigma, require_normalized=True)
    rm, sm = st.mat, op.mat

    ws, vs = np.linalg.eigh(sm)
    keep = ws > RANK_TOL * float(ws[-1])
    viso = vs[:, keep]
    rho_s = viso.conj().T @ rm @ viso
    rho_s = (rho_s + rho_s.conj().T) / 2
    mu = scipy.linalg.eigh(rho_s, np.diag(ws[keep]), eigvals_only=True)
    breaks = np.log2(mu[mu > 0.0])
    breaks = np.unique(breaks[(breaks > -cap) & (breaks < cap)])
    pts = np.concatenate([[-cap], breaks, [cap]])

    grid = np.linspace(0.0, 1.0, samples_per_interval + 2)[1:-1]
    for i in range(len(pts) - 2, -1, -1):
        a, b = float(pts[i]), float(pts[i + 1])
        xs = a + (b - a) * grid
        vals = _tail_batch(rm, sm, np.append(xs, b))
        if vals[-1] <= eps:
            return DivergenceValue(b, capped=(b == cap))
        feasible = vals[:-1] <= eps
        if feasible.any():
            j = int(np.flatnonzero(feasible)[-1])
            left = float(xs[j])
            right = float(xs[j + 1]) if j + 1 < len(xs) else b
            for _ in range(60):
                if right - left <= 1e-12 * max(1.0, abs(left)):
                    break
                mid = 0.5 * (left + right)
                if _tail_batch(rm, sm, np.array([mid]))[0] <= eps:
                    left = mid
                else:
                    right = mid
            return DivergenceValue(left)
    return DivergenceValue(-cap, capped=True)


# ---------------------------------------------------------------------------
# smoothed max-divergence
# ---------------------------------------------------------------------------


def _ball_constraints(builder, block, center_mat, ball: SmoothingBall):
    if ball.kind == PURIFIED:
        return fidelity_ball_constraints(builder, block, center_mat, ball.radius)
    return trace_ball_constraints(builder, block, center_mat, ball.radius)


def _clean_witness(w: np.ndarray, sm: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((w + w.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    cleaned = (vecs * vals) @ vecs.conj().T
    weight = float(np.trace(cleaned @ sm).real)
    if weight > 1.0:
        cleaned = cleaned / weight
    return (cleaned + cleaned.conj().T) / 2


def _dmax_plain_sdp(st: QuantumState, op: PositiveOperator, ball: SmoothingBall):
    d = st.dim
    builder = SdpBuilder()
    t = builder.add_block(1)
    slack = builder.add_block(d)
    dom = builder.add_matrix_equality(
        [(t, adj_trace_against(op.mat)), (slack, adj_negate)], st.mat
    )
    builder.set_objective(t, np.array([[1.0]]))
    sol = solve(builder.build())
    if sol.status == "infeasible":
        return SmoothedDivergence(DivergenceValue(math.inf), None, None, ball, sol)
    if not sol.optimal:
        raise NumericalFailure(f"max-divergence SDP ended with status {sol.status}")
    t_star = float(sol.primal_blocks[t][0, 0].real)
    witness = _clean_witness(builder.multiplier_matrix(sol, dom), op.mat)
    value = DivergenceValue(math.log2(max(t_star, _TINY)))
    return SmoothedDivergence(value, st, witness, ball, sol)


def _rescale_candidates(st: QuantumState, op: PositiveOperator) -> list[float]:
    """Variable rescales to retry with after the direct program stalls.

    A tiny eigenvalue of sigma can push the optimal t to 2^large, mixing
    O(1) smoothing-ball rows with O(t)-sized domination rows inside one
    cone program; the interior-point iterates then stall or crash.
    Substituting u = t / s with s near the unsmoothed max-divergence level
    and dividing the domination rows by s makes every block O(1) again.
    The estimate occasionally lands in a narrow bad pocket of its own, so
    a few spreads around it are offered as well.
    """
    plain = dmax(st.mat, op.mat)
    if plain.is_finite:
        estimate = 2.0 ** min(max(plain.bits, 0.0), 60.0)
    else:
        eigs = np.linalg.eigvalsh(op.mat)
        positive = eigs[eigs > RANK_TOL * max(float(eigs[-1]), _TINY)]
        estimate = st.trace / float(positive[0]) if positive.size else 1.0
        estimate = min(max(estimate, 1.0), 2.0**60)
    candidates = [estimate, estimate / 16.0, estimate * 16.0, estimate / 256.0]
    return [s for s in candidates if s >= 4.0]


def dmax_smooth(rho, sigma, ball: SmoothingBall) -> SmoothedDivergence:
    """Smallest max-divergence over the smoothing ball, as one SDP.

    Solves min t s.t. rho_tilde <= t sigma, rho_tilde in ball(rho); returns
    log2 of the optimum together with the optimizing state and the dual
    witness M (PSD, tr M sigma <= 1) extracted from the domination
    multipliers.  A radius of zero collapses to the plain max-divergence
    program.  Infeasibility (every ball member carries sigma-free mass) is
    reported as an infinite value.  When the direct program stalls, the
    same program is retried with the objective variable rescaled so the
    optimum is of order one (see _rescale_candidates); the reported value,
    state, and witness are always in original units.
    """
    st, op = _matched(rho, sigma, require_normalized=(ball.kind == TRACE))
    if ball.radius == 0.0:
        return _dmax_plain_sdp(st, op, ball)

    d = st.dim

    def build_program(scale: float):
        # With u = t / scale the domination equality divided by scale reads
        # u sigma - S/scale - rho_tilde/scale = 0; the slack block absorbs
        # the 1/scale factor, and stationarity in u keeps the equality
        # multiplier normalized to tr(W sigma) = 1, so the witness needs no
        # correction.  scale == 1 is the direct program.
        builder = SdpBuilder()
        rt = builder.add_block(d)
        t = builder.add_block(1)
        slack = builder.add_block(d)
        dom = builder.add_matrix_equality(
            [
                (t, adj_trace_against(op.mat)),
                (slack, adj_negate),
                (rt, adj_scale(-1.0 / scale)),
            ],
            np.zeros((d, d)),
        )
        _ball_constraints(builder, rt, st.mat, ball)
        builder.set_objective(t, np.array([[1.0]]))
        return builder, solve(builder.build()), rt, t, dom

    chosen = None
    last_failure = ""
    for scale in (1.0, *_rescale_candidates(st, op)):
        try:
            builder, sol, rt, t, dom = build_program(scale)
        except NumericalFailure as exc:
            last_failure = str(exc)
            continue
        if sol.status == "infeasible":
            return SmoothedDivergence(DivergenceValue(math.inf), None, None, ball, sol)
        if sol.optimal:
            chosen = (builder, sol, rt, t, dom, scale)
            break
        last_failure = f"status {sol.status}"
    if chosen is None:
        raise NumericalFailure(
            f"smoothed max-divergence SDP failed at every rescale: {last_failure}"
        )
    builder, sol, rt, t, dom, scale = chosen

    t_star = scale * float(sol.primal_blocks[t][0, 0].real)
    smoothed_mat = sol.primal_blocks[rt]
    tr = float(smoothed_mat.trace().real)
    if tr > 1.0:
        smoothed_mat = smoothed_mat / tr
    norm = NORMALIZED if abs(tr - 1.0) <= 1e-7 else SUBNORMALIZED
    smoothed = QuantumState(smoothed_mat, normalization=norm)

    if ball.kind == PURIFIED:
        dist = purified_distance(st.mat, smoothed.mat)
    else:
        dist = trace_distance(st.mat, smoothed.mat)
    if dist > ball.radius + 1e-6:
        raise NumericalFailure(f"smoothed state left the ball: distance {dist}")
    bound_tol = 1e-6 * max(1.0, abs(t_star)) * max(1.0, float(np.linalg.eigvalsh(op.mat)[-1]))
    if not operator_leq(smoothed.mat, t_star * op.mat, tol=bound_tol):
        raise NumericalFailure("smoothed state violates the domination constraint")

    witness = _clean_witness(builder.multiplier_matrix(sol, dom), op.mat)
    value = DivergenceValue(math.log2(max(t_star, _TINY)))
    return SmoothedDivergence(value, smoothed, witness, ball, sol)


def dmax_dual_witness(rho, sigma, ball: SmoothingBall, m) -> float:
    """log2 of the smallest tr(M rho_tilde) over the ball, for admissible M.

    Admissible means M >= 0 with tr(M sigma) <= 1.  By duality this never
    exceeds the smoothed max-divergence, with equality at the extracted
    witness; -inf is returned when the infimum is zero.
    """
    st, op = _matched(rho, sigma, require_normalized=(ball.kind == TRACE))
    m_mat = _as_matrix(m)
    if float(np.linalg.eigvalsh((m_mat + m_mat.conj().T) / 2)[0]) < -1e-9:
        raise DomainError("witness operator must be PSD")
    if float(np.trace(m_mat @ op.mat).real) > 1.0 + 1e-9:
        raise DomainError("witness operator must satisfy tr(M sigma) <= 1")
    if ball.radius == 0.0:
        val = float(np.trace(m_mat @ st.mat).real)
        return math.log2(val) if val > 0.0 else -math.inf
    d = st.dim
    builder = SdpBuilder()
    rt = builder.add_block(d)
    _ball_constraints(builder, rt, st.mat, ball)
    builder.set_objective(rt, m_mat)
    sol = solve(builder.build())
    if not sol.optimal:
        raise NumericalFailure(f"dual-witness SDP ended with status {sol.status}")
    val = sol.primal_value
    return math.log2(val) if val > 0.0 else -math.inf
