"""One-shot divergence evaluators with verifiable smoothing certificates.

The package computes max-, Renyi-, hypothesis-testing-, and spectrum-based
divergences between positive operators, constructs smoothed states with
machine-checkable certificates, and ships a randomized verification battery
over the inequalities connecting them.
"""

from .classical import (
    classical_dh,
    classical_dmax,
    classical_ds,
    classical_rel_entropy,
    classical_renyi,
)
from .divergences import (
    DivergenceValue,
    HypothesisTestResult,
    PURIFIED,
    SmoothedDivergence,
    SmoothingBall,
    TRACE,
    dh,
    dmax,
    dmax_dual_witness,
    dmax_smooth,
    ds,
    hypothesis_test,
    rel_entropy,
    renyi,
)
from .errors import (
    CertificateViolation,
    DegenerateProjection,
    DomainError,
    NumericalFailure,
)
from .harness import (
    BatteryConfig,
    BatteryReport,
    Channel,
    InstanceSpec,
    battery,
    gen_channel,
    gen_positive,
    gen_state,
    verify_corollary,
    verify_data_processing,
    verify_eq9,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
)
from .linalg import (
    HermitianOperator,
    PositiveOperator,
    QuantumState,
    generalized_fidelity,
    load_matrix,
    load_state,
    partial_trace,
    purified_distance,
    save_matrix,
    trace_distance,
)
from .smoothing import (
    JointSmoothingResult,
    LowerBoundCheck,
    SmoothingCertificate,
    gentle_projection,
    hypothesis_smoother,
    joint_smoother_feasibility,
    joint_smoother_response,
    renyi_smoother,
    verify_dmax_lower_bound,
)
