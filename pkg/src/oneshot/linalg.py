"""Dense Hermitian matrix machinery.

Everything downstream (divergence evaluators, SDP encodings, smoothing
constructions) is built on the primitives here: validated Hermitian
containers, spectral functions through eigendecompositions, the two
distance measures, and the repo-wide JSON matrix schema.

Tolerance conventions:

* hermiticity is checked in relative Frobenius norm (``HERM_TOL``),
* positivity is an absolute eigenvalue bound (``PSD_TOL``),
* the strict positive part uses a threshold relative to the largest
  eigenvalue magnitude (``EIG_POS_TOL``),
* rank / support decisions are relative to the top eigenvalue
  (``RANK_TOL``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import numpy.linalg as npl

from .errors import DomainError, NumericalFailure

HERM_TOL = 1e-10
PSD_TOL = 1e-9
EIG_POS_TOL = 1e-10
RANK_TOL = 1e-12

NORMALIZED = "normalized"
SUBNORMALIZED = "subnormalized"

_TRACE_TOL = 1e-9


def _as_matrix(x) -> np.ndarray:
    """Accept a bare ndarray or any wrapper exposing ``.mat``."""
    m = getattr(x, "mat", x)
    return np.asarray(m, dtype=complex)


@dataclass(frozen=True)
class HermitianOperator:
    """A square complex matrix within ``HERM_TOL`` of Hermitian, symmetrized."""

    mat: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.mat, dtype=complex))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"expected a square matrix, got shape {m.shape}")
        dev = npl.norm(m - m.conj().T)
        scale = max(npl.norm(m), 1.0)
        if dev > HERM_TOL * scale:
            raise DomainError(
                f"matrix is not Hermitian: relative deviation {dev / scale:.3e}"
            )
        sym = (m + m.conj().T) / 2
        sym.setflags(write=False)
        object.__setattr__(self, "mat", sym)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


def _clip_negative_eigenvalues(mat: np.ndarray, floor: float) -> np.ndarray:
    """Zero out eigenvalues in [-floor, 0); reject anything below -floor."""
    w, v = _eigh(mat)
    if w[0] < -floor:
        raise DomainError(f"matrix is not PSD: min eigenvalue {w[0]:.3e}")
    if w[0] >= 0:
        return mat
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.conj().T
    return (out + out.conj().T) / 2


@dataclass(frozen=True)
class QuantumState:
    """A PSD operator with unit (or at most unit) trace.

    ``normalization`` is either ``"normalized"`` (trace within 1e-9 of 1)
    or ``"subnormalized"`` (trace in (0, 1 + 1e-9]). Eigenvalues in
    [-PSD_TOL, 0) coming from roundoff are clipped to zero on construction.
    """

    mat: np.ndarray
    normalization: str = NORMALIZED

    def __post_init__(self):
        op = HermitianOperator(self.mat)
        m = _clip_negative_eigenvalues(op.mat, PSD_TOL)
        tr = float(m.trace().real)
        if self.normalization == NORMALIZED:
            if abs(tr - 1.0) > _TRACE_TOL:
                raise DomainError(f"normalized state must have trace 1, got {tr}")
        elif self.normalization == SUBNORMALIZED:
            if not 0.0 < tr <= 1.0 + _TRACE_TOL:
                raise DomainError(f"subnormalized state needs trace in (0,1], got {tr}")
        else:
            raise DomainError(f"unknown normalization {self.normalization!r}")
        m = np.asarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    @property
    def trace(self) -> float:
        return float(self.mat.trace().real)


@dataclass(frozen=True)
class PositiveOperator:
    """A PSD operator with strictly positive trace (not necessarily a state)."""

    mat: np.ndarray

    def __post_init__(self):
        op = HermitianOperator(self.mat)
        m = _clip_negative_eigenvalues(op.mat, PSD_TOL)
        if m.trace().real <= 0:
            raise DomainError("positive operator must have trace > 0")
        m = np.asarray(m)
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and matching orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T

    def max_abs(self) -> float:
        return float(np.abs(self.values).max()) if self.values.size else 0.0


def _eigh(mat: np.ndarray):
    try:
        return npl.eigh(mat)
    except npl.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
        raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc


def eig(a) -> EigenDecomposition:
    """Hermitian eigendecomposition (ascending), wrapping solver failures."""
    w, v = _eigh(_as_matrix(a))
    return EigenDecomposition(values=w, vectors=v)


def positive_part_projector(a) -> np.ndarray:
    """Projector onto the strictly positive eigenspace of a Hermitian matrix.

    "Strictly positive" means eigenvalues above ``EIG_POS_TOL`` times the
    largest eigenvalue magnitude, so a zero matrix maps to the zero projector
    and eigenvalues within roundoff of zero are excluded (this is what makes
    the information-spectrum scan left-continuous at its breakpoints).
    """
    m = _as_matrix(a)
    w, v = _eigh(m)
    scale = float(np.abs(w).max()) if w.size else 0.0
    keep = w > EIG_POS_TOL * scale
    if not keep.any():
        return np.zeros_like(m)
    vk = v[:, keep]
    p = vk @ vk.conj().T
    return (p + p.conj().T) / 2


def support_projector(a, rel_tol: float = RANK_TOL) -> np.ndarray:
    """Projector onto the support of a PSD matrix (rank set by ``rel_tol``)."""
    m = _as_matrix(a)
    w, v = _eigh(m)
    scale = float(w.max()) if w.size else 0.0
    keep = w > rel_tol * scale if scale > 0 else np.zeros_like(w, dtype=bool)
    if not keep.any():
        return np.zeros_like(m)
    vk = v[:, keep]
    p = vk @ vk.conj().T
    return (p + p.conj().T) / 2


def mp_power(a, t: float) -> np.ndarray:
    """Moore-Penrose fractional power of a PSD matrix.

    Eigenvalues at or below ``RANK_TOL`` times the largest one are treated
    as exact zeros: they map to zero for any ``t`` (the pseudo-inverse
    convention) rather than blowing up for negative ``t``.
    """
    m = _as_matrix(a)
    w, v = _eigh(m)
    if w.size and w[0] < -PSD_TOL * max(1.0, float(np.abs(w).max())):
        raise DomainError(f"mp_power needs a PSD matrix, min eigenvalue {w[0]:.3e}")
    scale = float(w.max()) if w.size else 0.0
    if scale <= 0:
        if t < 0:
            raise DomainError("negative power of the zero operator")
        return np.zeros_like(m)
    support = w > RANK_TOL * scale
    powered = np.zeros_like(w)
    powered[support] = w[support] ** t
    out = (v * powered) @ v.conj().T
    return (out + out.conj().T) / 2


def trace_norm(a) -> float:
    """Trace norm of a Hermitian matrix (sum of absolute eigenvalues)."""
    return float(np.abs(npl.eigvalsh(_as_matrix(a))).sum())


def trace_distance(a, b) -> float:
    """T(a, b) = half the trace norm of the difference."""
    ma, mb = _as_matrix(a), _as_matrix(b)
    if ma.shape != mb.shape:
        raise DomainError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    return 0.5 * trace_norm(ma - mb)


def _root_fidelity(ma: np.ndarray, mb: np.ndarray) -> float:
    """Nuclear norm of sqrt(a) sqrt(b)."""
    sa = mp_power(ma, 0.5)
    sb = mp_power(mb, 0.5)
    return float(npl.svd(sa @ sb, compute_uv=False).sum())


def generalized_fidelity(rho, sigma) -> float:
    """Fidelity extended to subnormalized states.

    F(a, b) = (||sqrt(a) sqrt(b)||_1 + sqrt((1 - tr a)(1 - tr b)))^2,
    clamped into [0, 1]; negative radicands from roundoff are clamped to 0.
    Both arguments must have trace at most 1 (+1e-9 slack).
    """
    ma, mb = _as_matrix(rho), _as_matrix(sigma)
    if ma.shape != mb.shape:
        raise DomainError(f"dimension mismatch: {ma.shape} vs {mb.shape}")
    ta, tb = float(ma.trace().real), float(mb.trace().real)
    if ta > 1.0 + _TRACE_TOL or tb > 1.0 + _TRACE_TOL:
        raise DomainError(f"generalized fidelity needs traces <= 1, got {ta}, {tb}")
    sub = np.sqrt(max(0.0, 1.0 - ta) * max(0.0, 1.0 - tb))
    root = _root_fidelity(ma, mb) + sub
    return float(min(root * root, 1.0))


def purified_distance(rho, sigma) -> float:
    """P(a, b) = sqrt(1 - F(a, b)) with the generalized fidelity."""
    return float(np.sqrt(max(0.0, 1.0 - generalized_fidelity(rho, sigma))))


def operator_leq(a, b, tol: float = 1e-9) -> bool:
    """Whether a <= b in the Loewner order, up to an absolute slack ``tol``."""
    diff = _as_matrix(b) - _as_matrix(a)
    return float(npl.eigvalsh(diff)[0]) >= -tol


def partial_trace(m, dim_a: int, dim_b: int, keep: str) -> np.ndarray:
    """Partial trace of a (dim_a * dim_b)-dimensional operator.

    ``keep`` is ``"a"`` (trace out B) or ``"b"`` (trace out A); the tensor
    order is A (x) B throughout the package.
    """
    mat = _as_matrix(m)
    if mat.shape != (dim_a * dim_b, dim_a * dim_b):
        raise DomainError(f"operator shape {mat.shape} does not match {dim_a}x{dim_b}")
    t = mat.reshape(dim_a, dim_b, dim_a, dim_b)
    if keep == "a":
        return np.trace(t, axis1=1, axis2=3)
    if keep == "b":
        return np.trace(t, axis1=0, axis2=2)
    raise DomainError(f"keep must be 'a' or 'b', got {keep!r}")


def as_state(x, require_normalized: bool = False) -> QuantumState:
    """Coerce an ndarray or QuantumState, inferring the normalization kind."""
    if isinstance(x, QuantumState):
        st = x
    else:
        m = _as_matrix(x)
        tr = float(m.trace().real)
        norm = NORMALIZED if abs(tr - 1.0) <= 1e-9 else SUBNORMALIZED
        st = QuantumState(m, normalization=norm)
    if require_normalized and abs(st.trace - 1.0) > 1e-9:
        raise DomainError(f"a normalized state is required, got trace {st.trace}")
    return st


def as_positive(x) -> PositiveOperator:
    if isinstance(x, PositiveOperator):
        return x
    return PositiveOperator(_as_matrix(x))


# ---------------------------------------------------------------------------
# repo-wide JSON matrix schema:
#   {"dim": d, "entries": [[[re, im], ...], ...]}   (row-major)
# states additionally carry "normalization".
# ---------------------------------------------------------------------------


def matrix_to_json(m) -> dict:
    mat = _as_matrix(m)
    d = mat.shape[0]
    entries = [
        [[float(mat[i, j].real), float(mat[i, j].imag)] for j in range(d)]
        for i in range(d)
    ]
    return {"dim": d, "entries": entries}


def matrix_from_json(obj: dict) -> np.ndarray:
    d = int(obj["dim"])
    entries = obj["entries"]
    if len(entries) != d or any(len(row) != d for row in entries):
        raise DomainError("entries do not form a dim x dim matrix")
    mat = np.empty((d, d), dtype=complex)
    for i, row in enumerate(entries):
        for j, (re, im) in enumerate(row):
            mat[i, j] = complex(re, im)
    return mat


def state_to_json(state: QuantumState) -> dict:
    obj = matrix_to_json(state.mat)
    obj["normalization"] = state.normalization
    return obj


def state_from_json(obj: dict) -> QuantumState:
    norm = obj.get("normalization", NORMALIZED)
    return QuantumState(matrix_from_json(obj), normalization=norm)


def load_matrix(path) -> np.ndarray:
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def save_matrix(path, m) -> None:
    with open(path, "w") as fh:
        json.dump(matrix_to_json(m), fh, indent=2, sort_keys=True)


def load_state(path) -> QuantumState:
    with open(path) as fh:
        return state_from_json(json.load(fh))
