"""Simulator and optimizer for directional transport of excitations and
entangled pairs in a chain of two-level atoms with alternating spacings,
driven by detuned pi-pulse trains, with dissipation and thermal position
disorder.
"""

__version__ = "0.1.0"

from .hilbert import (
    DensityMatrix,
    PureState,
    ReducedTwoAtomState,
    basis_index,
    basis_state,
    bell_psi_plus,
    make_pure,
    partial_trace,
    pattern_of,
    site_populations,
    state_fidelity,
    trace_distance,
)
from .model import (
    ChainGeometry,
    HermitianOperator,
    HierarchyDiagnostics,
    ModelParams,
    PhysicalUnits,
    PulseSchedule,
    PulseToken,
    build_pulse_hamiltonian,
    effective_rabi,
    frame_switch_phase,
    hierarchy_diagnostics,
    interaction_strength,
    plan_route,
)
from .dynamics import Trajectory, evolve_lindblad, evolve_unitary, run_schedule
from .observables import (
    FidelityReport,
    all_ground_state,
    bell_fidelity_sequence,
    bell_pair_state,
    single_excitation_state,
    transfer_population,
    truth_table_fidelity,
)
from .disorder import (
    DisorderEnsembleResult,
    DisorderSpec,
    disorder_average,
    disordered_couplings,
    interaction_deviation_estimate,
    sample_displacements,
    thermal_sigma,
)
from .optimize import OptimumReport, ScanAxis, ScanGrid, refine, scan

__all__ = [
    "__version__",
    # hilbert
    "DensityMatrix",
    "PureState",
    "ReducedTwoAtomState",
    "basis_index",
    "basis_state",
    "bell_psi_plus",
    "make_pure",
    "partial_trace",
    "pattern_of",
    "site_populations",
    "state_fidelity",
    "trace_distance",
    # model
    "ChainGeometry",
    "HermitianOperator",
    "HierarchyDiagnostics",
    "ModelParams",
    "PhysicalUnits",
    "PulseSchedule",
    "PulseToken",
    "build_pulse_hamiltonian",
    "effective_rabi",
    "frame_switch_phase",
    "hierarchy_diagnostics",
    "interaction_strength",
    "plan_route",
    # dynamics
    "Trajectory",
    "evolve_lindblad",
    "evolve_unitary",
    "run_schedule",
    # observables
    "FidelityReport",
    "all_ground_state",
    "bell_fidelity_sequence",
    "bell_pair_state",
    "single_excitation_state",
    "transfer_population",
    "truth_table_fidelity",
    # disorder
    "DisorderEnsembleResult",
    "DisorderSpec",
    "disorder_average",
    "disordered_couplings",
    "interaction_deviation_estimate",
    "sample_displacements",
    "thermal_sigma",
    # optimize
    "OptimumReport",
    "ScanAxis",
    "ScanGrid",
    "refine",
    "scan",
]
