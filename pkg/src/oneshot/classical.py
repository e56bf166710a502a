"""Scalar oracles on probability weight vectors.

Every operator divergence in this package collapses to ordinary arithmetic
on eigenvalue distributions when the inputs commute.  The evaluators here do
that arithmetic directly, by enumeration or scanning, with no linear algebra
beyond sorting, so they double as independent cross-checks for the operator
code paths.

All values are in bits.  The quantile evaluator uses the same boundary
convention as the operator one: the tail weight at level ``lam`` counts atoms
with log-ratio strictly below ``lam``, making the tail function
left-continuous, and the supremum of a feasible set that ends at an atom is
reported as the atom itself.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DomainError

LAMBDA_CAP = 60.0

_WEIGHT_TOL = 1e-9


class ClassicalQuantile(NamedTuple):
    value: float
    capped: bool


def _state_weights(w, name: str, *, normalized: bool = False) -> np.ndarray:
    arr = np.asarray(w, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"{name}: empty weight vector")
    low = float(arr.min())
    if low < -_WEIGHT_TOL:
        raise DomainError(f"{name}: negative weight {low}")
    arr = np.clip(arr, 0.0, None)
    total = float(arr.sum())
    if total <= 0.0:
        raise DomainError(f"{name}: zero total weight")
    if total > 1.0 + _WEIGHT_TOL:
        raise DomainError(f"{name}: total weight {total} exceeds 1")
    if normalized and abs(total - 1.0) > _WEIGHT_TOL:
        raise DomainError(f"{name}: expected a normalized vector, total {total}")
    return arr


def _measure_weights(w, name: str) -> np.ndarray:
    arr = np.asarray(w, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"{name}: empty weight vector")
    low = float(arr.min())
    if low < -_WEIGHT_TOL:
        raise DomainError(f"{name}: negative weight {low}")
    arr = np.clip(arr, 0.0, None)
    if arr.sum() <= 0.0:
        raise DomainError(f"{name}: zero total weight")
    return arr


def _pair(p, q, *, normalized: bool = False) -> tuple[np.ndarray, np.ndarray]:
    pa = _state_weights(p, "p", normalized=normalized)
    qa = _measure_weights(q, "q")
    if pa.shape != qa.shape:
        raise DomainError(f"length mismatch: {pa.size} vs {qa.size}")
    return pa, qa


def classical_dmax(p, q) -> float:
    """Largest log-likelihood ratio max_i log2(p_i / q_i) over the p-support."""
    pa, qa = _pair(p, q)
    mask = pa > 0.0
    if np.any(qa[mask] == 0.0):
        return math.inf
    return float(np.max(np.log2(pa[mask]) - np.log2(qa[mask])))


def classical_renyi(p, q, alpha: float) -> float:
    """Power-sum Renyi divergence of order alpha, normalized by the p-mass."""
    if not (alpha >= 0.5 and alpha != 1.0 and math.isfinite(alpha)):
        raise DomainError(f"alpha must lie in [1/2, 1) or (1, inf), got {alpha}")
    pa, qa = _pair(p, q)
    mask = pa > 0.0
    if alpha > 1.0 and np.any(qa[mask] == 0.0):
        return math.inf
    both = mask & (qa > 0.0)
    s = float(np.sum(pa[both] ** alpha * qa[both] ** (1.0 - alpha)))
    if s <= 0.0:
        return math.inf
    return (math.log2(s) - math.log2(float(pa.sum()))) / (alpha - 1.0)


def classical_rel_entropy(p, q) -> float:
    """Relative entropy sum_i p_i log2(p_i / q_i), normalized by the p-mass."""
    pa, qa = _pair(p, q)
    mask = pa > 0.0
    if np.any(qa[mask] == 0.0):
        return math.inf
    s = float(np.sum(pa[mask] * (np.log2(pa[mask]) - np.log2(qa[mask]))))
    return s / float(pa.sum())


def classical_dh(p, q, eps: float) -> float:
    """Hypothesis-testing divergence by threshold-test enumeration.

    Sorts atoms by likelihood ratio and fills type-I weight 1 - eps greedily,
    putting a fractional weight on the marginal atom.  That test is optimal by
    the classical Neyman-Pearson lemma, and the value is -log2 of its q-cost.
    """
    if not 0.0 <= eps < 1.0:
        raise DomainError(f"eps must lie in [0, 1), got {eps}")
    pa, qa = _pair(p, q, normalized=True)
    mask = pa > 0.0
    ps = pa[mask]
    qs = qa[mask]
    ratio = np.where(qs > 0.0, ps / np.where(qs > 0.0, qs, 1.0), math.inf)
    order = np.argsort(-ratio, kind="stable")
    need = 1.0 - eps
    beta = 0.0
    for i in order:
        if need <= 1e-15:
            break
        take = min(float(ps[i]), need)
        beta += take / float(ps[i]) * float(qs[i])
        need -= take
    if beta <= 0.0:
        return math.inf
    return -math.log2(beta)


def classical_ds(p, q, eps: float, cap: float = LAMBDA_CAP) -> ClassicalQuantile:
    """Information-spectrum divergence as a log-likelihood tail quantile.

    Returns the largest ``lam`` in [-cap, cap] such that the p-mass of atoms
    with log2(p_i/q_i) strictly below ``lam`` stays at or under eps, walking
    the atom values from the top.  The flag reports when a cap endpoint is
    the returned value.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    if cap <= 0.0:
        raise DomainError(f"cap must be positive, got {cap}")
    pa, qa = _pair(p, q, normalized=True)
    mask = (pa > 0.0) & (qa > 0.0)
    rs = np.log2(pa[mask]) - np.log2(qa[mask]) if np.any(mask) else np.empty(0)
    ws = pa[mask]
    vals, inv = np.unique(rs, return_inverse=True)
    masses = np.bincount(inv, weights=ws) if vals.size else np.empty(0)
    below = np.concatenate([[0.0], np.cumsum(masses)])
    tail_at_cap = float(below[np.searchsorted(vals, cap, side="left")])
    if tail_at_cap <= eps:
        return ClassicalQuantile(cap, True)
    for k in range(vals.size - 1, -1, -1):
        lam = float(vals[k])
        if lam >= cap or lam < -cap:
            continue
        if float(below[k]) <= eps:
            return ClassicalQuantile(lam, False)
    return ClassicalQuantile(-cap, True)


def binomial_iid_pair(p: float, q: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-fold product of two-atom distributions (p, 1-p) and (q, 1-q).

    Atoms of the product with the same success count share one likelihood
    ratio, so the product pair collapses to binomial vectors of length n + 1
    without affecting any of the evaluators above.
    """
    if not (0.0 < p < 1.0 and 0.0 < q < 1.0):
        raise DomainError("atom probabilities must lie in (0, 1)")
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    k = np.arange(n + 1)
    binom = np.array([math.comb(n, int(i)) for i in k], dtype=float)
    pn = binom * p**k * (1.0 - p) ** (n - k)
    qn = binom * q**k * (1.0 - q) ** (n - k)
    return pn, qn
