"""Instance generation, channels, inequality verifiers, and the battery.

Randomness contract: every instance is drawn from a Philox counter-based
generator keyed by ``(seed << 64) | crc32(stream_label)``, so a (seed, label)
pair regenerates identical bytes on any platform.  Haar unitaries are the QR
factor of a complex standard Gaussian matrix with the R diagonal phase-fixed
onto Q's columns; pure states are normalized complex Gaussian vectors.

Slack convention: every verifier reports slacks in bits, nonnegative when the
inequality holds.  The battery counts a slack in [-tol, 0) as a warning (the
trial still passes) and below -tol as a failure, recording the worst instance
for replay.
"""

from __future__ import annotations

import csv
import json
import math
import time
import zlib
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .divergences import (
    PURIFIED,
    TRACE,
    SmoothingBall,
    dh,
    dmax_smooth,
    ds,
    renyi,
)
from .errors import DomainError
from .linalg import (
    NORMALIZED,
    PositiveOperator,
    QuantumState,
    partial_trace,
    purified_distance,
)
from .smoothing import (
    hypothesis_smoother,
    joint_smoother_feasibility,
    renyi_smoother,
    verify_dmax_lower_bound,
)

STATE_KINDS = (
    "haar-mixed",
    "ginibre",
    "classical-diagonal",
    "pure-bipartite",
    "near-degenerate",
)
CHANNEL_KINDS = ("stinespring", "pinching", "identity")
SUITES = ("eq9", "dataproc", "thm1", "thm2", "thm3", "corollary")


def instance_rng(seed: int, label: str) -> np.random.Generator:
    """The named counter-based stream backing all harness randomness."""
    key = (int(seed) << 64) | zlib.crc32(label.encode("ascii"))
    return np.random.Generator(np.random.Philox(key=key))


def haar_unitary(rng: np.random.Generator, d: int) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r).copy()
    diag = diag / np.abs(diag)
    return q * diag


def _gaussian_pure(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


@dataclass(frozen=True)
class InstanceSpec:
    """A replayable description of one generated instance."""

    kind: str
    dim: int
    rank: int | None = None
    dim_b: int | None = None
    seed: int = 0
    stream: str = ""

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise DomainError(f"unknown instance kind {self.kind!r}")
        if self.dim < 1:
            raise DomainError(f"dimension must be positive, got {self.dim}")
        rank = self.dim if self.rank is None else self.rank
        if not 1 <= rank <= self.dim:
            raise DomainError(f"rank must lie in [1, {self.dim}], got {self.rank}")
        if self.kind == "pure-bipartite" and not self.dim_b:
            raise DomainError("pure-bipartite instances need dim_b")

    @property
    def effective_rank(self) -> int:
        return self.dim if self.rank is None else self.rank


def _spec_rng(spec: InstanceSpec, role: str) -> np.random.Generator:
    label = (
        f"{role}|{spec.kind}|{spec.dim}x{spec.dim_b or 1}"
        f"r{spec.effective_rank}|{spec.stream}"
    )
    return instance_rng(spec.seed, label)


def gen_state(spec: InstanceSpec) -> QuantumState:
    """Deterministically generate the normalized state a spec describes."""
    rng = _spec_rng(spec, "state")
    d, r = spec.dim, spec.effective_rank
    if spec.kind == "haar-mixed":
        psi = _gaussian_pure(rng, d * r).reshape(d, r)
        mat = psi @ psi.conj().T
    elif spec.kind == "ginibre":
        g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
        mat = g @ g.conj().T
        mat = mat / float(np.trace(mat).real)
    elif spec.kind == "classical-diagonal":
        p = rng.dirichlet(np.ones(r))
        mat = np.zeros((d, d), dtype=complex)
        mat[np.arange(r), np.arange(r)] = p
    elif spec.kind == "pure-bipartite":
        total = d * spec.dim_b
        psi = _gaussian_pure(rng, total)
        mat = np.outer(psi, psi.conj())
    else:  # near-degenerate
        w = (1.0 + 1e-7 * rng.uniform(-1.0, 1.0, size=r)) / r
        w = w / w.sum()
        full = np.concatenate([w, np.zeros(d - r)])
        u = haar_unitary(rng, d)
        mat = (u * full) @ u.conj().T
    mat = (mat + mat.conj().T) / 2
    return QuantumState(mat, normalization=NORMALIZED)


def gen_positive(spec: InstanceSpec) -> PositiveOperator:
    """Deterministically generate a positive comparison operator.

    Ginibre-style kinds give a full-support operator with trace 2^u,
    u ~ U(-1, 1); classical-diagonal gives a diagonal one for commuting
    test cells.
    """
    rng = _spec_rng(spec, "positive")
    d, r = spec.dim, spec.effective_rank
    scale = 2.0 ** rng.uniform(-1.0, 1.0)
    if spec.kind == "classical-diagonal":
        p = rng.dirichlet(np.ones(r))
        mat = np.zeros((d, d), dtype=complex)
        mat[np.arange(r), np.arange(r)] = p * scale
    else:
        g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
        mat = g @ g.conj().T
        mat = mat / float(np.trace(mat).real) * scale
    return PositiveOperator((mat + mat.conj().T) / 2)


@dataclass
class Channel:
    """A completely positive trace-preserving map as an explicit closure."""

    name: str
    dim_in: int
    dim_out: int
    apply: Callable[[np.ndarray], np.ndarray]


def _verify_trace_preserving(ch: Channel) -> None:
    d = ch.dim_in
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[i, j] = 1.0
            got = complex(np.trace(ch.apply(e)))
            want = 1.0 if i == j else 0.0
            if abs(got - want) > 1e-10:
                raise DomainError(
                    f"channel {ch.name} is not trace preserving at basis ({i},{j})"
                )


def gen_channel(dim_in: int, dim_env: int, seed: int, kind: str = "stinespring") -> Channel:
    """A deterministic CPTP map: random isometry, random pinching, or identity."""
    if kind not in CHANNEL_KINDS:
        raise DomainError(f"unknown channel kind {kind!r}")
    if dim_in < 1 or dim_env < 1:
        raise DomainError("channel dimensions must be positive")
    if kind == "identity":
        ch = Channel("identity", dim_in, dim_in, lambda m: np.array(m, dtype=complex))
    elif kind == "pinching":
        rng = instance_rng(seed, f"channel|pinching|{dim_in}")
        u = haar_unitary(rng, dim_in)

        def pinch(m):
            w = u.conj().T @ np.asarray(m, dtype=complex) @ u
            return u @ np.diag(np.diagonal(w)) @ u.conj().T

        ch = Channel("pinching", dim_in, dim_in, pinch)
    else:
        rng = instance_rng(seed, f"channel|stinespring|{dim_in}x{dim_env}")
        u = haar_unitary(rng, dim_in * dim_env)
        viso = u[:, :dim_in]
        if float(np.abs(viso.conj().T @ viso - np.eye(dim_in)).max()) > 1e-10:
            raise DomainError("isometry construction failed the V^dagger V check")

        def stinespring(m):
            big = viso @ np.asarray(m, dtype=complex) @ viso.conj().T
            return partial_trace(big, dim_in, dim_env, keep="a")

        ch = Channel("stinespring", dim_in, dim_in, stinespring)
    _verify_trace_preserving(ch)
    return ch


def pinching_in_basis(basis: np.ndarray) -> Channel:
    """The dephasing channel in an explicitly given orthonormal basis."""
    d = basis.shape[0]

    def pinch(m):
        w = basis.conj().T @ np.asarray(m, dtype=complex) @ basis
        return basis @ np.diag(np.diagonal(w)) @ basis.conj().T

    ch = Channel("pinching-fixed", d, d, pinch)
    _verify_trace_preserving(ch)
    return ch


# ---------------------------------------------------------------------------
# inequality verifiers
# ---------------------------------------------------------------------------


def _gap(upper: float, lower: float) -> float:
    """upper - lower, treating two equal infinities as a zero gap."""
    if math.isinf(upper) and math.isinf(lower) and upper == lower:
        return 0.0
    return upper - lower


def verify_eq9(rho, sigma, eps: float, delta: float) -> tuple[float, float]:
    """Slacks of the spectrum/hypothesis-testing sandwich at (eps, delta)."""
    if not (0.0 < eps and 0.0 < delta and eps + delta < 1.0):
        raise DomainError(f"need eps, delta > 0 with eps + delta < 1, got {eps}, {delta}")
    lower = ds(rho, sigma, eps).bits
    middle = dh(rho, sigma, eps).bits
    upper = ds(rho, sigma, eps + delta).bits + math.log2(1.0 / delta)
    return _gap(middle, lower), _gap(upper, middle)


def verify_data_processing(
    rho, sigma, channel: Channel, eps: float, alpha: float
) -> tuple[float, float, float]:
    """Slacks (before - after) for dh, renyi, and the smoothed max-divergence."""
    out_rho = channel.apply(np.asarray(rho, dtype=complex) if not hasattr(rho, "mat") else rho.mat)
    out_sigma = channel.apply(np.asarray(sigma, dtype=complex) if not hasattr(sigma, "mat") else sigma.mat)
    ball = SmoothingBall(PURIFIED, eps)
    s_dh = _gap(dh(rho, sigma, eps).bits, dh(out_rho, out_sigma, eps).bits)
    s_renyi = _gap(renyi(rho, sigma, alpha).bits, renyi(out_rho, out_sigma, alpha).bits)
    s_dmax = _gap(
        dmax_smooth(rho, sigma, ball).value.bits,
        dmax_smooth(out_rho, out_sigma, ball).value.bits,
    )
    return s_dh, s_renyi, s_dmax


def _theorem1_rhs(rho, sigma, eps: float, alpha: float) -> float:
    r = renyi(rho, sigma, alpha).bits
    return r + math.log2(1.0 / eps**2) / (alpha - 1.0) + math.log2(1.0 / (1.0 - eps**2))


def verify_theorem1(rho, sigma, eps: float, alpha: float) -> float:
    """Worst slack of the Renyi upper bound over both ball flavors."""
    rhs = _theorem1_rhs(rho, sigma, eps, alpha)
    slack = _gap(rhs, dmax_smooth(rho, sigma, SmoothingBall(PURIFIED, eps)).value.bits)
    rho_mat = rho.mat if hasattr(rho, "mat") else np.asarray(rho, dtype=complex)
    if abs(float(np.trace(rho_mat).real) - 1.0) <= 1e-9:
        trace_slack = _gap(
            rhs, dmax_smooth(rho, sigma, SmoothingBall(TRACE, eps)).value.bits
        )
        slack = min(slack, trace_slack)
    return slack


def verify_theorem2(rho, sigma, eps: float, delta: float) -> tuple[float, float]:
    """Slacks of both inequalities around the smoothed max-divergence."""
    check = verify_dmax_lower_bound(rho, sigma, eps, delta)
    upper = dh(rho, sigma, 1.0 - eps).bits
    first = _gap(upper, check.middle_bits)
    return first, check.slack_bits


def verify_theorem3(
    rho_ab, sigma_a, sigma_b, eps: float, eps2: float, corollary_delta: float | None = None
) -> dict[str, float]:
    """Run the joint feasibility SDP and re-verify its claims independently.

    Returns named slacks, all expected nonnegative: ball (radius minus the
    distance actually used), trace (deviation from normalization, negated),
    and the two marginal dominations as scaled minimum eigenvalues.
    """
    res = joint_smoother_feasibility(
        rho_ab, sigma_a, sigma_b, eps, eps2, corollary_delta=corollary_delta
    )
    rho_mat = rho_ab.mat if hasattr(rho_ab, "mat") else np.asarray(rho_ab, dtype=complex)
    mat = res.smoothed_joint_state.mat
    if corollary_delta is None:
        radius = math.sqrt(eps + eps2)
    else:
        radius = math.sqrt(eps + eps2 + 2.0 * corollary_delta)
    slacks = {
        "ball": radius - purified_distance(rho_mat, mat),
        "trace": -abs(float(np.trace(mat).real) - 1.0),
    }
    da = sigma_a.mat.shape[0] if hasattr(sigma_a, "mat") else np.asarray(sigma_a).shape[0]
    db = mat.shape[0] // da
    for name, lam, sigma, keep in (
        ("margin_a", res.lambda_a, sigma_a, "a"),
        ("margin_b", res.lambda_b, sigma_b, "b"),
    ):
        sig_mat = sigma.mat if hasattr(sigma, "mat") else np.asarray(sigma, dtype=complex)
        margin = partial_trace(mat, da, db, keep=keep)
        gap_op = 2.0**lam * sig_mat - margin
        scale = max(2.0**lam * float(np.linalg.eigvalsh(sig_mat)[-1]), 1.0)
        slacks[name] = float(np.linalg.eigvalsh((gap_op + gap_op.conj().T) / 2)[0]) / scale
    return slacks


def verify_corollary(rho_ab, sigma_a, sigma_b, eps: float, eps2: float, delta: float) -> dict[str, float]:
    return verify_theorem3(rho_ab, sigma_a, sigma_b, eps, eps2, corollary_delta=delta)


# ---------------------------------------------------------------------------
# the battery
# ---------------------------------------------------------------------------


@dataclass
class BatteryConfig:
    suites: tuple[str, ...] = SUITES
    seed: int = 1
    trials: int = 50
    dims: tuple[int, ...] = (2, 3, 4, 6)
    bipartite: tuple[tuple[int, int], ...] = ((2, 2), (2, 3))
    eps_grid: tuple[float, ...] = (0.1, 0.25, 0.4)
    alpha_grid: tuple[float, ...] = (1.5, 2.0, 5.0)
    delta: float = 0.1
    thm2_pairs: tuple[tuple[float, float], ...] = ((0.25, 0.25),)
    joint_pairs: tuple[tuple[float, float], ...] = ((0.2, 0.2), (0.1, 0.3))
    corollary_delta: float = 0.1
    tol: float = 1e-6

    def validate(self) -> None:
        if not self.suites:
            raise DomainError("the suite list is empty")
        for s in self.suites:
            if s not in SUITES:
                raise DomainError(f"unknown suite {s!r}; known: {', '.join(SUITES)}")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if self.tol <= 0:
            raise DomainError("tolerance must be positive")


@dataclass
class CheckStat:
    suite: str
    check: str
    trials: int = 0
    passes: int = 0
    warns: int = 0
    fails: int = 0
    worst_slack: float = math.inf
    worst_instance: dict | None = None
    samples: list[float] = field(default_factory=list)

    def record(self, slack: float, tol: float, instance: dict) -> None:
        self.trials += 1
        self.samples.append(slack)
        if slack < self.worst_slack:
            self.worst_slack = slack
            self.worst_instance = instance
        if slack >= 0.0:
            self.passes += 1
        elif slack >= -tol:
            self.passes += 1
            self.warns += 1
        else:
            self.fails += 1


@dataclass
class BatteryReport:
    seed: int
    tol: float
    trials_per_cell: int
    suites: tuple[str, ...]
    checks: list[CheckStat]
    runtime_seconds: float

    @property
    def passed(self) -> bool:
        return all(c.fails == 0 for c in self.checks)

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "tolerance_bits": self.tol,
            "trials_per_cell": self.trials_per_cell,
            "suites": list(self.suites),
            "passed": self.passed,
            "checks": [
                {
                    "suite": c.suite,
                    "check": c.check,
                    "trials": c.trials,
                    "passes": c.passes,
                    "warns": c.warns,
                    "fails": c.fails,
                    "worst_slack_bits": c.worst_slack,
                    "worst_instance": c.worst_instance,
                }
                for c in self.checks
            ],
            "runtime_seconds": self.runtime_seconds,
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["suite", "check", "trials", "passes", "warns", "fails",
                 "worst_slack_bits", "worst_instance"]
            )
            for c in self.checks:
                writer.writerow(
                    [c.suite, c.check, c.trials, c.passes, c.warns, c.fails,
                     repr(c.worst_slack),
                     json.dumps(c.worst_instance, sort_keys=True) if c.worst_instance else ""]
                )


_PAIR_KINDS = ("haar-mixed", "ginibre", "classical-diagonal", "near-degenerate")


def _pair_specs(config: BatteryConfig, d: int, stream: str, trial: int):
    kind = _PAIR_KINDS[trial % len(_PAIR_KINDS)]
    rng = instance_rng(config.seed, f"rank|{stream}")
    rank = int(rng.integers(1, d + 1)) if kind in ("haar-mixed", "ginibre") else d
    rho_spec = InstanceSpec(kind, d, rank, seed=config.seed, stream=f"{stream}|rho")
    sigma_kind = "classical-diagonal" if kind == "classical-diagonal" else "ginibre"
    sigma_spec = InstanceSpec(sigma_kind, d, None, seed=config.seed, stream=f"{stream}|sigma")
    return rho_spec, sigma_spec


def _admissible_m(rng, d: int, sigma_mat: np.ndarray) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    m = g @ g.conj().T
    weight = float(np.trace(m @ sigma_mat).real)
    return m / max(weight, 1e-12) * rng.uniform(0.2, 1.0)


def _run_eq9(config: BatteryConfig, record) -> None:
    for d in config.dims:
        for eps in config.eps_grid:
            cell = f"d{d}|eps{eps}"
            for trial in range(config.trials):
                stream = f"eq9|{cell}|{trial}"
                rho_spec, sigma_spec = _pair_specs(config, d, stream, trial)
                rho, sigma = gen_state(rho_spec), gen_positive(sigma_spec)
                info = {"rho": asdict(rho_spec), "sigma": asdict(sigma_spec),
                        "eps": eps, "delta": config.delta}
                low, high = verify_eq9(rho, sigma, eps, config.delta)
                record("eq9", "lower", low, info)
                record("eq9", "upper", high, info)


def _run_dataproc(config: BatteryConfig, record) -> None:
    for d in config.dims:
        cell = f"d{d}"
        for trial in range(config.trials):
            stream = f"dataproc|{cell}|{trial}"
            rho_spec, sigma_spec = _pair_specs(config, d, stream, trial)
            rho, sigma = gen_state(rho_spec), gen_positive(sigma_spec)
            kind = CHANNEL_KINDS[trial % 2]
            env = 2 if kind == "stinespring" else 1
            channel = gen_channel(d, env, config.seed, kind=kind)
            info = {"rho": asdict(rho_spec), "sigma": asdict(sigma_spec),
                    "channel": {"kind": kind, "dim_env": env, "seed": config.seed}}
            s_dh, s_renyi, s_dmax = verify_data_processing(rho, sigma, channel, 0.2, 2.0)
            record("dataproc", "dh", s_dh, info)
            record("dataproc", "renyi", s_renyi, info)
            record("dataproc", "dmax_smooth", s_dmax, info)


def _run_thm1(config: BatteryConfig, record) -> None:
    for d in config.dims:
        for eps in config.eps_grid:
            cell = f"d{d}|eps{eps}"
            for trial in range(config.trials):
                stream = f"thm1|{cell}|{trial}"
                alpha = config.alpha_grid[trial % len(config.alpha_grid)]
                rho_spec, sigma_spec = _pair_specs(config, d, stream, trial)
                rho, sigma = gen_state(rho_spec), gen_positive(sigma_spec)
                info = {"rho": asdict(rho_spec), "sigma": asdict(sigma_spec),
                        "eps": eps, "alpha": alpha}
                record("thm1", "bound", verify_theorem1(rho, sigma, eps, alpha), info)
                rng = instance_rng(config.seed, f"witness|{stream}")
                m = _admissible_m(rng, d, sigma.mat)
                cert = renyi_smoother(rho, sigma, eps=eps, alpha=alpha, m=m)
                discarded = float(np.trace(cert.projector.mat @ rho.mat).real)
                record("thm1", "proj_mass", eps**2 - discarded, info)
                record(
                    "thm1", "witness",
                    cert.claimed_bound.bits - cert.witness_value, info,
                )


def _run_thm2(config: BatteryConfig, record) -> None:
    for d in config.dims:
        for eps, delta in config.thm2_pairs:
            cell = f"d{d}|eps{eps}|delta{delta}"
            for trial in range(config.trials):
                stream = f"thm2|{cell}|{trial}"
                rho_spec, sigma_spec = _pair_specs(config, d, stream, trial)
                rho, sigma = gen_state(rho_spec), gen_positive(sigma_spec)
                info = {"rho": asdict(rho_spec), "sigma": asdict(sigma_spec),
                        "eps": eps, "delta": delta}
                first, second = verify_theorem2(rho, sigma, eps, delta)
                record("thm2", "upper", first, info)
                record("thm2", "lower", second, info)
                rng = instance_rng(config.seed, f"witness|{stream}")
                m = _admissible_m(rng, d, sigma.mat)
                cert = hypothesis_smoother(rho, sigma, eps=eps, m=m)
                kept = 1.0 - float(np.trace(cert.projector.mat @ rho.mat).real)
                record("thm2", "kept_mass", kept - (1.0 - eps), info)
                record(
                    "thm2", "witness",
                    cert.claimed_bound.bits - cert.witness_value, info,
                )


def _joint_instance(config: BatteryConfig, da: int, db: int, stream: str, trial: int):
    kind = ("haar-mixed", "ginibre", "pure-bipartite", "classical-diagonal")[trial % 4]
    d = da * db
    if kind == "pure-bipartite":
        rho_spec = InstanceSpec(kind, da, 1, dim_b=db, seed=config.seed, stream=f"{stream}|rho")
    else:
        rho_spec = InstanceSpec(kind, d, None, seed=config.seed, stream=f"{stream}|rho")
    sig_kind = "classical-diagonal" if kind == "classical-diagonal" else "ginibre"
    sa_spec = InstanceSpec(sig_kind, da, None, seed=config.seed, stream=f"{stream}|sa")
    sb_spec = InstanceSpec(sig_kind, db, None, seed=config.seed, stream=f"{stream}|sb")
    return rho_spec, sa_spec, sb_spec


def _run_joint(config: BatteryConfig, record, suite: str) -> None:
    delta = config.corollary_delta if suite == "corollary" else None
    for da, db in config.bipartite:
        for eps, eps2 in config.joint_pairs:
            cell = f"{da}x{db}|eps{eps}|eps2{eps2}"
            for trial in range(config.trials):
                stream = f"{suite}|{cell}|{trial}"
                rho_spec, sa_spec, sb_spec = _joint_instance(config, da, db, stream, trial)
                rho = gen_state(rho_spec)
                sigma_a, sigma_b = gen_positive(sa_spec), gen_positive(sb_spec)
                info = {"rho": asdict(rho_spec), "sigma_a": asdict(sa_spec),
                        "sigma_b": asdict(sb_spec), "eps": eps, "eps2": eps2,
                        "corollary_delta": delta}
                slacks = verify_theorem3(rho, sigma_a, sigma_b, eps, eps2, corollary_delta=delta)
                for name, slack in slacks.items():
                    record(suite, name, slack, info)


_RUNNERS = {
    "eq9": _run_eq9,
    "dataproc": _run_dataproc,
    "thm1": _run_thm1,
    "thm2": _run_thm2,
    "thm3": lambda config, record: _run_joint(config, record, "thm3"),
    "corollary": lambda config, record: _run_joint(config, record, "corollary"),
}


def battery(config: BatteryConfig) -> BatteryReport:
    """Run the configured verifier suites and aggregate a replayable report."""
    config.validate()
    start = time.monotonic()
    stats: dict[tuple[str, str], CheckStat] = {}

    def record(suite: str, check: str, slack: float, info: dict) -> None:
        key = (suite, check)
        if key not in stats:
            stats[key] = CheckStat(suite=suite, check=check)
        stats[key].record(float(slack), config.tol, info)

    for suite in config.suites:
        _RUNNERS[suite](config, record)

    checks = [stats[k] for k in sorted(stats)]
    return BatteryReport(
        seed=config.seed,
        tol=config.tol,
        trials_per_cell=config.trials,
        suites=tuple(config.suites),
        checks=checks,
        runtime_seconds=time.monotonic() - start,
    )
