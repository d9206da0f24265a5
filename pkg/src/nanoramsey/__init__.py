"""Free-flight spin-force Ramsey interferometry of a released nano-object.

Closed-form spin-conditioned wavepacket dynamics, a split-operator grid
oracle that certifies every analytic formula, a momentum-kick decoherence
model, collective (multi-NV) sector dynamics, and feasibility budgets, all
behind a deterministic CLI.
"""

__version__ = "0.1.0"

from .constants import CODATA, DEFAULT_G_NV, PhysicalConstants
from .params import (
    ConfigError,
    ExperimentParams,
    SpinBranch,
    SpinForce,
    branch_force,
    build_params,
    load_config,
    parse_config_text,
    sphere_mass,
)
from .dynamics import (
    BranchTrajectory,
    CompositeState,
    GaussianBranchState,
    JitterPoint,
    PulseSequence,
    ThermalInvarianceReport,
    branch_overlap,
    classical_trajectory,
    evolve_sequence,
    gravitational_phase,
    gravitational_phase_action,
    gravitational_phase_propagator,
    initial_state,
    jitter_visibility_scan,
    max_separation,
    peak_arm_displacement,
    ramsey_probability,
    separation_at,
    separation_time_integral,
    temperature_for_occupation,
    thermal_occupation,
    thermal_phase_invariance,
    trajectory_table,
    wavepacket_width,
)
from .grid import (
    ClosureError,
    GridBoundaryError,
    GridSpec,
    GridWavefunction,
    OracleReport,
    ScaledUnits,
    ScaleError,
    auto_grid,
    desk_scale_params,
    evolve_branch_on_grid,
    gaussian_packet,
    oracle_compare,
    oracle_phase,
    scale_params,
    snapshot_frames,
    split_step_evolve,
)
from .decoherence import (
    BlackbodyChannel,
    CollisionChannel,
    QuadratureError,
    SpectralRateModel,
    TabulatedChannel,
    VisibilitySurface,
    angular_factor,
    csl_dephasing_rate,
    default_model,
    default_model_family,
    dephasing_exposures,
    load_response_table,
    localization_rate,
    localization_rate_adaptive,
    localization_rate_profile,
    surface_to_csv,
    surface_to_json,
    visibility,
    visibility_surface,
)
from .dicke import (
    CollectiveFinalState,
    DickeDecomposition,
    DickeSector,
    collective_final_state,
    collective_ramsey_signal,
    collective_trajectory,
    dicke_state_vector,
    product_state_vector,
    product_to_dicke,
    reconstruct_spin_state,
    refactorization_fidelity,
    sector_action_phases,
    sector_phase_quadratic_coefficient,
    sector_table,
)
from .budget import (
    BudgetReport,
    ZeemanResolvability,
    budget_report,
    csl_bound,
    doppler_linewidth,
    thermal_velocity,
    zeeman_resolvability,
)
