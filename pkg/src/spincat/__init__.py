"""Collective-spin cat-state engineering and time-reversal interferometry."""

from spincat.spin_core import (
    CatSpec,
    DegenerateCatError,
    DickeState,
    Moments,
    SpinOperator,
    StationarityReport,
    closed_form_comparison,
    css_overlap,
    make_cat,
    make_css,
    moments_bruteforce,
    moments_closed_form,
    qfi_quadratic_model,
    qfi_symmetric_closed_form,
    qfi_z,
    rotate_xy,
    sx_operator,
    sy_operator,
    sz2_operator,
    sz_operator,
    verify_qfi_stationarity,
)
from spincat.dynamics import (
    PulseSequence,
    SymmetricState,
    from_symmetric,
    propagate_oat,
    propagate_rotation,
    propagate_sequence,
    to_symmetric,
    transition_spectrum,
)
from spincat.pulse_optimizer import (
    FixedBudget,
    OptimizationProblem,
    OptimizationResult,
    gradient_fd,
    infidelity,
    optimize,
)
from spincat.interferometer import (
    ProtocolConfig,
    ProtocolResult,
    loss_db,
    run_protocol,
    sensitivity,
)

__all__ = [
    "CatSpec",
    "DegenerateCatError",
    "DickeState",
    "FixedBudget",
    "Moments",
    "OptimizationProblem",
    "OptimizationResult",
    "ProtocolConfig",
    "ProtocolResult",
    "PulseSequence",
    "SpinOperator",
    "StationarityReport",
    "SymmetricState",
    "closed_form_comparison",
    "css_overlap",
    "from_symmetric",
    "gradient_fd",
    "infidelity",
    "loss_db",
    "make_cat",
    "make_css",
    "moments_bruteforce",
    "moments_closed_form",
    "optimize",
    "propagate_oat",
    "propagate_rotation",
    "propagate_sequence",
    "qfi_quadratic_model",
    "qfi_symmetric_closed_form",
    "qfi_z",
    "rotate_xy",
    "run_protocol",
    "sensitivity",
    "sx_operator",
    "sy_operator",
    "sz2_operator",
    "sz_operator",
    "to_symmetric",
    "transition_spectrum",
    "verify_qfi_stationarity",
]

__version__ = "0.1.0"
