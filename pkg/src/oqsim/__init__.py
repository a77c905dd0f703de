"""Numerical workbench for analogue simulation of open quantum systems."""

from oqsim.analogue import (
    EncodingError,
    ExcitationBoundViolation,
    InsufficientSampling,
    NoiseModel,
    NoiseTerm,
    SimulatorGenerator,
    Trajectory,
    add_noise,
    amplitude_damping_noise,
    ancilla_excitation_norms,
    coherent_noise,
    custom_noise,
    dephasing_noise,
    depolarizing_noise,
    encode,
    remainder_diagnostics,
    run_simulator,
    simulate_trajectory,
)
from oqsim.bounds import (
    BoundIngredients,
    BudgetResult,
    Lattice,
    RapidMixingSpec,
    SupportFamily,
    geometric_power_sum,
    lattice_sum_xi,
    lr_bound,
    lr_bound_two,
    nu_bound,
    partial_power_sum,
    prop1_budget,
    prop_budget_local,
    xi_upper_bound,
)
from oqsim.encoder import (
    CircuitRound,
    CircuitStep,
    ClockEncoding,
    RoundCircuit,
    circuit_statevector,
    clock_convergence_constants,
    encode_clock,
    reference_output_z,
    tridiagonal_spectrum,
    tridiagonal_walk_matrix,
)
from oqsim.gaussian import (
    CovarianceState,
    FermionObservableReport,
    NonContractive,
    QuadraticModel,
    add_chemical,
    add_depolarizing,
    add_gain_loss,
    add_hopping,
    add_pairing,
    annihilation_coeffs,
    build_boundary_chain,
    build_simulator_chain,
    build_target_chain,
    correlation_decay_fit,
    covariance_eom,
    creation_coeffs,
    drift_and_drive,
    evolve_covariance,
    observables,
    steady_state_covariance,
)
from oqsim.grid import (
    EncodingClosureError,
    GridEncoding,
    GridFixedPoint,
    GridJump,
    configuration_index,
    encode_grid,
    initial_configuration,
    jump_matrix,
    validate_configuration,
)
from oqsim.harness import (
    ExperimentConfig,
    SweepResult,
    default_config_dict,
    loglog_fit,
    random_round_circuit,
    run,
    run_bounds_table,
    run_encoding_check,
    run_noiseless_sweep,
    run_noisy_sweep,
    run_phase_map,
    run_remainder_check,
)
from oqsim.lindblad import (
    DegenerateFixedPoint,
    DensityMatrix,
    DimensionMismatch,
    EvolutionFailure,
    HilbertSpec,
    LindbladGenerator,
    LocalOperator,
    VectorizedSuperoperator,
    adjoint_generator,
    dissipator,
    embed,
    evolve,
    fixed_point,
    heisenberg_evolve,
    partial_trace,
    trace_norm_distance,
    vectorize,
)

__all__ = [
    "BoundIngredients",
    "BudgetResult",
    "CircuitRound",
    "CircuitStep",
    "ClockEncoding",
    "CovarianceState",
    "DegenerateFixedPoint",
    "DensityMatrix",
    "DimensionMismatch",
    "EncodingClosureError",
    "EncodingError",
    "EvolutionFailure",
    "ExcitationBoundViolation",
    "ExperimentConfig",
    "FermionObservableReport",
    "GridEncoding",
    "GridFixedPoint",
    "GridJump",
    "HilbertSpec",
    "InsufficientSampling",
    "Lattice",
    "LindbladGenerator",
    "LocalOperator",
    "NoiseModel",
    "NoiseTerm",
    "NonContractive",
    "QuadraticModel",
    "RapidMixingSpec",
    "RoundCircuit",
    "SimulatorGenerator",
    "SupportFamily",
    "SweepResult",
    "Trajectory",
    "VectorizedSuperoperator",
    "add_chemical",
    "add_depolarizing",
    "add_gain_loss",
    "add_hopping",
    "add_noise",
    "add_pairing",
    "adjoint_generator",
    "amplitude_damping_noise",
    "ancilla_excitation_norms",
    "annihilation_coeffs",
    "build_boundary_chain",
    "build_simulator_chain",
    "build_target_chain",
    "circuit_statevector",
    "clock_convergence_constants",
    "coherent_noise",
    "configuration_index",
    "correlation_decay_fit",
    "covariance_eom",
    "creation_coeffs",
    "custom_noise",
    "default_config_dict",
    "dephasing_noise",
    "depolarizing_noise",
    "dissipator",
    "drift_and_drive",
    "embed",
    "encode",
    "encode_clock",
    "encode_grid",
    "evolve",
    "evolve_covariance",
    "fixed_point",
    "geometric_power_sum",
    "heisenberg_evolve",
    "initial_configuration",
    "jump_matrix",
    "lattice_sum_xi",
    "loglog_fit",
    "lr_bound",
    "lr_bound_two",
    "nu_bound",
    "observables",
    "partial_power_sum",
    "partial_trace",
    "prop1_budget",
    "prop_budget_local",
    "random_round_circuit",
    "reference_output_z",
    "remainder_diagnostics",
    "run",
    "run_bounds_table",
    "run_encoding_check",
    "run_noiseless_sweep",
    "run_noisy_sweep",
    "run_phase_map",
    "run_remainder_check",
    "run_simulator",
    "simulate_trajectory",
    "steady_state_covariance",
    "trace_norm_distance",
    "tridiagonal_spectrum",
    "tridiagonal_walk_matrix",
    "validate_configuration",
    "vectorize",
    "xi_upper_bound",
]
