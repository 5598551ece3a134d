"""Exact entanglement sharing between two atoms and a cavity mode.

Block-diagonal propagation of the two-atom/one-mode interaction, a family
of bipartite tangle measures valid for arbitrary factor dimensions, the
rescaled tripartite residual tangle, a large-field approximation to the
field-ensemble tangle, and Haar-sampling positivity sweeps.
"""

from .dynamics import (
    ATOMIC_STATES,
    BlockPropagator,
    ModelParams,
    TcmPropagator,
    TruncationError,
    atomic_inversion,
    atomic_state,
    block_basis,
    build_block,
    coherent_state,
    energy_expectation,
    evolve,
    excitation_distribution,
    fock_state,
    initial_state,
)
from .markoff import (
    JxCoefficients,
    approx_tau_F_AA,
    constant_c,
    h_of_t,
    jx_coefficients,
    scaled_time,
)
from .random_states import (
    SweepResult,
    haar_pure,
    haar_pure_batch,
    merge_sweep_results,
    positivity_sweep,
    product_haar_batch,
    shard_seeds,
)
from .scenarios import (
    CompareResult,
    ConfigError,
    PRESETS,
    ScalingResult,
    ScenarioConfig,
    ScenarioResult,
    compare_exact_vs_approx,
    load_config,
    preset_config,
    revival_peak_time,
    run_scenario,
    scaling_study,
)
from .tangles import (
    RoofOptions,
    RoofResult,
    TangleReport,
    bipartite_tangles_all,
    convex_roof_decomposition,
    convex_roof_itangle,
    i_residual_tangle,
    inversion_overlap,
    pure_itangle,
    rank2_itangle,
    residual_tangle_batch,
    tangle_report,
    universal_inversion,
    wootters_tangle,
)
from .tensor import (
    Cut,
    DensityMatrix,
    PureState,
    SystemShape,
    effective_rank,
    partial_trace,
    purity,
    tensor_product,
)

__version__ = "0.1.0"

__all__ = [
    "ATOMIC_STATES",
    "BlockPropagator",
    "CompareResult",
    "ConfigError",
    "Cut",
    "DensityMatrix",
    "JxCoefficients",
    "ModelParams",
    "PRESETS",
    "PureState",
    "RoofOptions",
    "RoofResult",
    "ScalingResult",
    "ScenarioConfig",
    "ScenarioResult",
    "SweepResult",
    "SystemShape",
    "TangleReport",
    "TcmPropagator",
    "TruncationError",
    "approx_tau_F_AA",
    "atomic_inversion",
    "atomic_state",
    "bipartite_tangles_all",
    "block_basis",
    "build_block",
    "coherent_state",
    "compare_exact_vs_approx",
    "constant_c",
    "convex_roof_decomposition",
    "convex_roof_itangle",
    "effective_rank",
    "energy_expectation",
    "evolve",
    "excitation_distribution",
    "fock_state",
    "h_of_t",
    "haar_pure",
    "haar_pure_batch",
    "i_residual_tangle",
    "initial_state",
    "inversion_overlap",
    "jx_coefficients",
    "load_config",
    "merge_sweep_results",
    "partial_trace",
    "positivity_sweep",
    "preset_config",
    "product_haar_batch",
    "pure_itangle",
    "purity",
    "rank2_itangle",
    "residual_tangle_batch",
    "revival_peak_time",
    "run_scenario",
    "scaled_time",
    "scaling_study",
    "shard_seeds",
    "tangle_report",
    "tensor_product",
    "universal_inversion",
    "wootters_tangle",
]
