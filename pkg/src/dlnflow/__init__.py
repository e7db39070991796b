"""Gradient dynamics of the generalized Rayleigh quotient on deep diagonal
linear networks, with machine-checked conservation laws."""

from .scatter import (
    ScatterPair,
    pair_from_json,
    pair_to_json,
    synthesize_scatter,
    validate_spd,
)
from .objective import (
    homogeneity_residual,
    orthogonality_residual,
    rayleigh_gradient,
    rayleigh_loss,
)
from .network import (
    BalanceReport,
    LayerStack,
    balance_residual,
    balanced_init,
    effective_weights,
    layer_gradients,
)
from .dynamics import (
    ConservationReport,
    FlowConfig,
    GdResult,
    NonFiniteStateError,
    PositivityBreachError,
    TrajectorySnapshot,
    conservation_report,
    effective_flow_rhs,
    gd_run,
    integrate_flow,
    integrate_stack_flow,
    quasi_norm,
)
from .oracle import GeneralizedEigenResult, fd_gradient, generalized_eig_min
from .harness import (
    ExperimentConfig,
    RunArtifact,
    emit_table,
    load_config,
    parse_table,
    run_experiment,
    verify_suite,
)

__version__ = "0.1.0"

__all__ = [
    "BalanceReport",
    "ConservationReport",
    "ExperimentConfig",
    "FlowConfig",
    "GdResult",
    "GeneralizedEigenResult",
    "LayerStack",
    "NonFiniteStateError",
    "PositivityBreachError",
    "RunArtifact",
    "ScatterPair",
    "TrajectorySnapshot",
    "balance_residual",
    "balanced_init",
    "conservation_report",
    "effective_flow_rhs",
    "effective_weights",
    "emit_table",
    "fd_gradient",
    "gd_run",
    "generalized_eig_min",
    "homogeneity_residual",
    "integrate_flow",
    "integrate_stack_flow",
    "layer_gradients",
    "load_config",
    "orthogonality_residual",
    "pair_from_json",
    "pair_to_json",
    "parse_table",
    "quasi_norm",
    "rayleigh_gradient",
    "rayleigh_loss",
    "run_experiment",
    "synthesize_scatter",
    "validate_spd",
    "verify_suite",
]
