"""Dense block-structured semidefinite programs with duality certificates.

Standard form: minimize sum_b <C_b, X_b> over PSD blocks X_b subject to
linear trace constraints sum_b <A_jb, X_b> (= | <=) rhs_j, where <A, X> is
the Hilbert-Schmidt inner product tr(A X) for Hermitian A.

Complex Hermitian data is embedded once into real symmetric blocks of twice
the dimension at compile time, and the cone program is handed to cvxopt's
conelp routine (a primal-dual path-following interior-point method with
Nesterov-Todd scaling and Mehrotra predictor-corrector steps) under fixed,
deterministic settings.  The compiled program is conelp's *dual* of the form
above, so our primal block values come back as conelp's cone dual variable
and our constraint multipliers as conelp's primal variable.

``SdpBuilder`` is the ergonomic layer: it tracks blocks, expands matrix
equalities over an explicit Hermitian basis, and can reassemble the dual
multiplier matrix of such an equality family, which is how the witness
operators for the smoothed-divergence duality are extracted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from cvxopt import matrix as cvx_matrix
from cvxopt import solvers as cvx_solvers

from .errors import DomainError, NumericalFailure
from .linalg import HERM_TOL, _as_matrix

FEAS_TOL = 1e-8
GAP_TOL = 1e-7
MAX_ITERATIONS = 200

_SOLVER_OPTIONS = {
    "show_progress": False,
    "abstol": 1e-9,
    "reltol": 1e-9,
    "feastol": 1e-9,
    "refinement": 2,
}

_ZERO_RHS_TOL = 1e-14


@dataclass
class SdpConstraint:
    """One scalar constraint sum_b <coeffs[b], X_b> (sense) rhs."""

    coeffs: dict[int, np.ndarray]
    rhs: float
    sense: str  # "=" or "<="


@dataclass
class SdpProblem:
    block_dims: list[int]
    objective: dict[int, np.ndarray]
    constraints: list[SdpConstraint]

    def validate(self) -> None:
        if not self.block_dims or any(d < 1 for d in self.block_dims):
            raise DomainError("block dimensions must all be at least 1")
        if not self.constraints and not self.objective:
            raise DomainError("problem needs at least one constraint or an objective")
        for block, coeff in self.objective.items():
            self._check_coeff(block, coeff, "objective")
        for j, con in enumerate(self.constraints):
            if con.sense not in ("=", "<="):
                raise DomainError(f"constraint {j}: unknown sense {con.sense!r}")
            if not con.coeffs:
                raise DomainError(f"constraint {j}: no coefficients")
            for block, coeff in con.coeffs.items():
                self._check_coeff(block, coeff, f"constraint {j}")

    def _check_coeff(self, block: int, coeff: np.ndarray, where: str) -> None:
        if not 0 <= block < len(self.block_dims):
            raise DomainError(f"{where}: unknown block {block}")
        d = self.block_dims[block]
        if coeff.shape != (d, d):
            raise DomainError(f"{where}: coefficient shape {coeff.shape} != ({d},{d})")
        dev = float(np.linalg.norm(coeff - coeff.conj().T))
        if dev > HERM_TOL * max(1.0, float(np.linalg.norm(coeff))):
            raise DomainError(f"{where}: coefficient on block {block} is not Hermitian")

    def to_json(self) -> dict:
        from .linalg import matrix_to_json

        def dense(coeffs: dict[int, np.ndarray]) -> list[dict]:
            return [
                matrix_to_json(coeffs.get(b, np.zeros((d, d))))
                for b, d in enumerate(self.block_dims)
            ]

        return {
            "blocks": list(self.block_dims),
            "sense": "minimize",
            "objective": dense(self.objective),
            "constraints": [
                {"coeffs": dense(c.coeffs), "rhs": c.rhs, "sense": c.sense}
                for c in self.constraints
            ],
        }


@dataclass
class SdpSolution:
    """Solve outcome.

    ``multipliers`` are Lagrange multipliers in the convention
    dual_value = sum_j multipliers[j] * rhs_j with dual slack
    C_b - sum_j multipliers[j] A_jb >= 0 on every block; they are
    nonpositive on "<=" constraints.
    """

    status: str  # optimal | infeasible | unbounded | maxIterations
    primal_blocks: list[np.ndarray] | None
    primal_value: float
    dual_value: float
    gap: float
    multipliers: np.ndarray | None
    iterations: int
    max_residual: float

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _embed(coeff: np.ndarray) -> np.ndarray:
    """Half the real embedding [[Re, -Im], [Im, Re]], so inner products match."""
    re, im = coeff.real, coeff.imag
    return 0.5 * np.block([[re, -im], [im, re]])


def _unembed(y: np.ndarray, d: int) -> np.ndarray:
    """Invert the embedding on a (symmetrized) real 2d x 2d PSD matrix."""
    y = (y + y.T) / 2
    a = (y[:d, :d] + y[d:, d:]) / 2
    b = (y[d:, :d] - y[:d, d:]) / 2
    x = a + 1j * b
    return (x + x.conj().T) / 2


def solve(
    problem: SdpProblem,
    *,
    feas_tol: float = FEAS_TOL,
    gap_tol: float = GAP_TOL,
    max_iterations: int = MAX_ITERATIONS,
) -> SdpSolution:
    """Solve the block SDP, returning certified values and multipliers.

    The status is "optimal" only when the returned blocks actually satisfy
    every constraint within ``feas_tol`` and the duality gap is within
    ``gap_tol`` (relative to the value); a solver that stops early or
    reports success without meeting those checks is downgraded to
    "maxIterations".
    """
    problem.validate()
    nblocks = len(problem.block_dims)
    m = len(problem.constraints)
    if m == 0:
        raise DomainError("cannot solve a problem without constraints")

    complex_block = [False] * nblocks
    for coeffs in [problem.objective] + [c.coeffs for c in problem.constraints]:
        for b, coeff in coeffs.items():
            if np.any(coeff.imag):
                complex_block[b] = True

    def hat(block: int, coeff: np.ndarray) -> np.ndarray:
        if complex_block[block]:
            return _embed(coeff)
        return np.ascontiguousarray(coeff.real)

    real_dims = [
        2 * d if complex_block[b] else d for b, d in enumerate(problem.block_dims)
    ]
    ineq_rows = [j for j, c in enumerate(problem.constraints) if c.sense == "<="]
    n_l = len(ineq_rows)
    total_rows = n_l + sum(d * d for d in real_dims)

    g = np.zeros((total_rows, m))
    h = np.zeros(total_rows)
    for r, j in enumerate(ineq_rows):
        g[r, j] = -1.0
    offsets = []
    row = n_l
    for b, d in enumerate(real_dims):
        offsets.append(row)
        c_b = problem.objective.get(b)
        if c_b is not None:
            h[row : row + d * d] = hat(b, c_b).flatten(order="F")
        row += d * d
    for j, con in enumerate(problem.constraints):
        for b, coeff in con.coeffs.items():
            d = real_dims[b]
            g[offsets[b] : offsets[b] + d * d, j] = -hat(b, coeff).flatten(order="F")

    c_vec = np.array([con.rhs for con in problem.constraints], dtype=float)
    dims = {"l": n_l, "q": [], "s": real_dims}

    def postprocess(sol) -> SdpSolution:
        iterations = int(sol.get("iterations", 0))
        raw_status = sol["status"]
        if raw_status == "primal infeasible":
            return SdpSolution(
                "unbounded", None, -math.inf, -math.inf, math.nan, None, iterations, math.nan
            )
        if raw_status == "dual infeasible":
            return SdpSolution(
                "infeasible", None, math.inf, math.inf, math.nan, None, iterations, math.nan
            )
        if sol["x"] is None or sol["z"] is None:
            return SdpSolution(
                "maxIterations", None, math.nan, math.nan, math.nan, None, iterations, math.nan
            )

        multipliers = -np.array(sol["x"]).ravel()
        z = np.array(sol["z"]).ravel()
        blocks: list[np.ndarray] = []
        for b, d_real in enumerate(real_dims):
            start = offsets[b]
            y = z[start : start + d_real * d_real].reshape((d_real, d_real), order="F")
            if complex_block[b]:
                blocks.append(_unembed(y, problem.block_dims[b]))
            else:
                blocks.append(((y + y.T) / 2).astype(complex))

        primal_value = -float(sol["dual objective"])
        dual_value = -float(sol["primal objective"])
        gap = abs(float(sol["gap"]))

        max_residual = 0.0
        for con in problem.constraints:
            val = sum(
                float(np.trace(coeff.conj().T @ blocks[b]).real)
                for b, coeff in con.coeffs.items()
            )
            err = val - con.rhs if con.sense == "<=" else abs(val - con.rhs)
            max_residual = max(max_residual, err)
        for x in blocks:
            low = float(np.linalg.eigvalsh(x)[0])
            max_residual = max(max_residual, -low)

        certified = max_residual <= feas_tol and gap <= gap_tol * (1.0 + abs(primal_value))
        status = "optimal" if certified else "maxIterations"
        return SdpSolution(
            status,
            blocks,
            primal_value,
            dual_value,
            gap,
            multipliers,
            iterations,
            max_residual,
        )

    # Degenerate optimal faces can make the tightest stopping targets
    # unreachable: the iterates converge, fail the stopping test, then drift
    # until the iterate is ruined or the scaling update divides by zero.
    # Retry with a looser target before giving up; the last rung still sits
    # inside the downstream certification budget.
    attempts = (
        {},
        {"abstol": 1e-8, "reltol": 1e-8},
        {"abstol": 1e-7, "reltol": 1e-7, "feastol": 1e-8},
    )
    outcome = None
    last_exc: Exception | None = None
    for extra in attempts:
        try:
            sol = cvx_solvers.conelp(
                cvx_matrix(c_vec),
                cvx_matrix(g),
                cvx_matrix(h),
                dims,
                options={**_SOLVER_OPTIONS, "maxiters": max_iterations, **extra},
            )
        except (ValueError, ArithmeticError) as exc:
            last_exc = exc
            continue
        outcome = postprocess(sol)
        if outcome.status != "maxIterations":
            return outcome
    if outcome is not None:
        return outcome
    raise NumericalFailure(
        f"cone solver rejected the problem: {last_exc}"
    ) from last_exc


# ---------------------------------------------------------------------------
# builder layer
# ---------------------------------------------------------------------------


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """A real-spanning basis of the Hermitian dim x dim matrices.

    Diagonal units, symmetric offdiagonal pairs E_ij + E_ji, and their
    antisymmetric partners i(E_ij - E_ji); pairing against a Hermitian H
    yields H_ii, 2 Re H_ij and 2 Im H_ij respectively.
    """
    basis = []
    for i in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[i, i] = 1.0
        basis.append(e)
    for i in range(dim):
        for j in range(i + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            e[j, i] = 1.0
            basis.append(e)
            f = np.zeros((dim, dim), dtype=complex)
            f[i, j] = 1.0j
            f[j, i] = -1.0j
            basis.append(f)
    return basis


@dataclass
class EqualityHandle:
    """Bookkeeping for one matrix equality family: kept rows and their basis."""

    dim: int
    rows: list[tuple[int, np.ndarray]] = field(default_factory=list)


class SdpBuilder:
    """Incrementally assemble an SdpProblem out of blocks and constraints."""

    def __init__(self) -> None:
        self._dims: list[int] = []
        self._objective: dict[int, np.ndarray] = {}
        self._constraints: list[SdpConstraint] = []

    def add_block(self, dim: int) -> int:
        if dim < 1:
            raise DomainError(f"block dimension must be at least 1, got {dim}")
        self._dims.append(int(dim))
        return len(self._dims) - 1

    def set_objective(self, block: int, coeff) -> None:
        self._objective[block] = _as_matrix(coeff)

    def add_scalar_constraint(
        self, coeffs: dict[int, np.ndarray], rhs: float, sense: str = "="
    ) -> int:
        self._constraints.append(
            SdpConstraint(
                {b: _as_matrix(a) for b, a in coeffs.items()}, float(rhs), sense
            )
        )
        return len(self._constraints) - 1

    def add_matrix_equality(
        self,
        terms: list[tuple[int, Callable[[np.ndarray], np.ndarray]]],
        rhs,
    ) -> EqualityHandle:
        """Add the family <B, sum_terms> = <B, rhs> over a Hermitian basis B.

        Each term is (block, adjoint) where adjoint(B) is the coefficient
        matrix on that block when the equality is paired against the basis
        element B.  The full complex Hermitian basis is used (dim^2 rows);
        rows whose coefficients all vanish are dropped, and a dropped row
        with a nonzero right-hand side means the equality is structurally
        inconsistent and raises.
        """
        rhs_mat = _as_matrix(rhs)
        d = rhs_mat.shape[0]
        handle = EqualityHandle(dim=d)
        for b_elem in hermitian_basis(d):
            coeffs: dict[int, np.ndarray] = {}
            for block, adjoint in terms:
                coeff = np.asarray(adjoint(b_elem), dtype=complex)
                if block in coeffs:
                    coeffs[block] = coeffs[block] + coeff
                else:
                    coeffs[block] = coeff
            rhs_val = float(np.trace(b_elem.conj().T @ rhs_mat).real)
            if all(not np.any(c) for c in coeffs.values()):
                if abs(rhs_val) > _ZERO_RHS_TOL:
                    raise DomainError("matrix equality is structurally inconsistent")
                continue
            idx = self.add_scalar_constraint(coeffs, rhs_val, "=")
            handle.rows.append((idx, b_elem))
        return handle

    def build(self) -> SdpProblem:
        problem = SdpProblem(
            block_dims=list(self._dims),
            objective=dict(self._objective),
            constraints=list(self._constraints),
        )
        problem.validate()
        return problem

    def multiplier_matrix(
        self, solution: SdpSolution, handle: EqualityHandle
    ) -> np.ndarray:
        """Reassemble the dual multiplier matrix of a matrix equality family."""
        if solution.multipliers is None:
            raise NumericalFailure("solution carries no multipliers")
        w = np.zeros((handle.dim, handle.dim), dtype=complex)
        for idx, b_elem in handle.rows:
            w += float(solution.multipliers[idx]) * b_elem
        return (w + w.conj().T) / 2


# ---------------------------------------------------------------------------
# adjoint helpers for add_matrix_equality terms
# ---------------------------------------------------------------------------


def adj_identity(b: np.ndarray) -> np.ndarray:
    return b


def adj_negate(b: np.ndarray) -> np.ndarray:
    return -b


def adj_scale(factor: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda b: factor * b


def adj_conjugate(v: np.ndarray, sign: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Adjoint of X -> V^dagger X V, namely B -> V B V^dagger (optionally signed)."""
    return lambda b: sign * (v @ b @ v.conj().T)


def adj_trace_against(mat: np.ndarray, sign: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Coefficient on a 1 x 1 block for the term t * mat: B -> sign [[<B, mat>]]."""
    m = _as_matrix(mat)
    return lambda b: sign * np.array([[np.trace(b.conj().T @ m)]])


def adj_embed_a(dim_b: int, sign: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Adjoint of the A-marginal X -> tr_B X, namely B -> B (x) I_B."""
    eye = np.eye(dim_b)
    return lambda b: sign * np.kron(b, eye)


def adj_embed_b(dim_a: int, sign: float = 1.0) -> Callable[[np.ndarray], np.ndarray]:
    """Adjoint of the B-marginal X -> tr_A X, namely B -> I_A (x) B."""
    eye = np.eye(dim_a)
    return lambda b: sign * np.kron(eye, b)


# ---------------------------------------------------------------------------
# smoothing-ball constraint fragments
# ---------------------------------------------------------------------------


@dataclass
class BallFragment:
    """What a ball emitter added to a builder.

    ``root_coeffs`` is the linear functional whose value at a feasible point
    lower-bounds the generalized fidelity root between the ball center and
    the state block (empty for the trace ball / pinned cases), and ``target``
    is the fidelity-root threshold the ball requires.
    """

    kind: str
    state_block: int
    root_coeffs: dict[int, np.ndarray]
    target: float
    constraint_index: int | None


def fidelity_ball_constraints(
    builder: SdpBuilder, state_block: int, rho, radius: float
) -> BallFragment:
    """Constrain the state block to the purified-distance ball around rho.

    Emits the Schur-complement block [[rho_r, X], [X^dagger, Z]] >= 0 on the
    support of rho (with Z linked to the compression of the state block), the
    rank-one slack block for the subnormalization term when tr rho < 1, the
    fidelity-root threshold row, and tr <= 1.  Radius zero pins the block to
    rho exactly.
    """
    if not 0.0 <= radius < 1.0:
        raise DomainError(f"ball radius must lie in [0, 1), got {radius}")
    rho_mat = _as_matrix(rho)
    d = rho_mat.shape[0]
    eye = np.eye(d)
    if radius == 0.0:
        builder.add_matrix_equality([(state_block, adj_identity)], rho_mat)
        return BallFragment("purified", state_block, {}, 1.0, None)

    w, v = np.linalg.eigh(rho_mat)
    top = float(w.max())
    if top <= 0.0:
        raise DomainError("ball center must have positive trace")
    keep = w > 1e-12 * top
    r = int(keep.sum())
    viso = v[:, keep]
    rho_r = np.diag(w[keep]).astype(complex)

    z = builder.add_block(2 * r)
    e1 = np.zeros((2 * r, r))
    e1[:r] = np.eye(r)
    e2 = np.zeros((2 * r, r))
    e2[r:] = np.eye(r)

    builder.add_matrix_equality([(z, adj_conjugate(e1))], rho_r)
    builder.add_matrix_equality(
        [(z, adj_conjugate(e2)), (state_block, adj_conjugate(viso, sign=-1.0))],
        np.zeros((r, r)),
    )
    builder.add_scalar_constraint({state_block: eye}, 1.0, "<=")

    root_coeffs: dict[int, np.ndarray] = {z: (e1 @ e2.T + e2 @ e1.T) / 2}
    tr_rho = float(rho_mat.trace().real)
    if tr_rho < 1.0 - 1e-12:
        u = builder.add_block(2)
        c = 1.0 - tr_rho
        e00 = np.array([[1.0, 0.0], [0.0, 0.0]])
        e11 = np.array([[0.0, 0.0], [0.0, 1.0]])
        builder.add_scalar_constraint({u: e00, state_block: c * eye}, c, "=")
        builder.add_scalar_constraint({u: e11}, 1.0, "=")
        root_coeffs[u] = np.array([[0.0, 0.5], [0.5, 0.0]])

    target = math.sqrt(max(0.0, 1.0 - radius * radius))
    idx = builder.add_scalar_constraint(
        {b: -a for b, a in root_coeffs.items()}, -target, "<="
    )
    return BallFragment("purified", state_block, root_coeffs, target, idx)


def trace_ball_constraints(
    builder: SdpBuilder, state_block: int, rho, radius: float
) -> BallFragment:
    """Constrain the state block to the trace-distance ball around rho.

    The difference to the (normalized) center is split into PSD parts P - N
    with tr(P + N) <= 2 radius, which bounds the trace norm of the
    difference by 2 radius.  Radius zero pins the block to rho exactly.
    """
    if not 0.0 <= radius < 1.0:
        raise DomainError(f"ball radius must lie in [0, 1), got {radius}")
    rho_mat = _as_matrix(rho)
    d = rho_mat.shape[0]
    if radius == 0.0:
        builder.add_matrix_equality([(state_block, adj_identity)], rho_mat)
        return BallFragment("trace", state_block, {}, 1.0, None)
    pos = builder.add_block(d)
    neg = builder.add_block(d)
    builder.add_matrix_equality(
        [(state_block, adj_identity), (pos, adj_negate), (neg, adj_identity)],
        rho_mat,
    )
    eye = np.eye(d)
    builder.add_scalar_constraint({pos: eye, neg: eye}, 2.0 * radius, "<=")
    builder.add_scalar_constraint({state_block: eye}, 1.0, "=")
    return BallFragment("trace", state_block, {}, 1.0, None)
