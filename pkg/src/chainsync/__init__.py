"""chainsync: exact Gaussian-state simulator for the synchronization of
two detuned oscillators plugged into a finite harmonic chain."""

__version__ = "0.1.0"

from .dynamics import (
    GaussianState,
    SymplecticMap,
    chain_ground_state,
    evolve,
    initial_composite_state,
    mean_energy,
    propagator,
    reduce,
    rk4_reference,
    squeezed_vacuum_local,
    symplectic_defect,
    symplectic_form,
    uncertainty_defect,
)
from .errors import (
    ChainSyncError,
    ConfigError,
    DegenerateWindow,
    InstabilityError,
    NoCrossings,
    NonPhysical,
    ParseError,
    RangeError,
    StepTooLarge,
    UncertaintyViolation,
    UnknownKey,
    ZeroModeError,
)
from .lattice import (
    NetworkConfig,
    ProbePair,
    QuadraticForm,
    assemble_full_potential,
    build_chain_potential,
    chain_dispersion,
    chain_normal_modes,
    check_stability,
    max_group_velocity,
    revival_time,
)
from .measures import (
    CorrelationReport,
    SyncSeries,
    correlation_report,
    dominant_frequency,
    log_negativity,
    mutual_information,
    pearson,
    scan_delayed_sync,
    symplectic_spectrum,
    sync_series,
    vn_entropy,
)
from .modes import (
    Kernels,
    RayleighReport,
    ResonantModes,
    SystemModes,
    chain_rayleigh_report,
    coupling_coefficients,
    damping_kernels,
    ohmic_gap_ratio,
    rayleigh_reduction,
    resonant_mode_indices,
    solve_gqle_means,
    system_eigenfrequencies,
    system_mode_angle,
    system_modes,
)
from .scenarios import (
    PRESETS,
    RunRecord,
    ScenarioSpec,
    format_config,
    parse_config,
    resolve_spec,
    run_scenario,
    simulate,
    sweep_plug_site,
)
from .trajectory import NormalModeTrajectory
