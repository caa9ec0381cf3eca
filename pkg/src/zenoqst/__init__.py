"""Atomic state transfer and swapping between fiber-coupled cavities via Zeno dynamics."""

from .dynamics import (
    IntegrationError,
    IntegratorSettings,
    LindbladResult,
    PositivityError,
    evolve_lindblad,
    evolve_unitary,
    fidelity,
    lindblad_trajectory,
    populations,
    qubit_fidelity,
    reduced_atom_state,
    unitary_trajectory,
)
from .hamiltonian import (
    CouplingConfig,
    NoiseConfig,
    ZenoRatioWarning,
    cavity_hamiltonian,
    collapse_operators,
    fiber_hamiltonian,
    laser_hamiltonian,
    qst_chain,
    strong_hamiltonian,
    total_hamiltonian,
)
from .hilbert import (
    Basis,
    BasisState,
    DensityMatrix,
    FiberSpec,
    Level,
    Operator,
    StateVector,
    SystemSpec,
    atomic_transition_operator,
    build_basis,
    filter_excitation,
    mode_annihilation_operator,
    mode_creation_operator,
)
from .protocol import (
    AtomStateSpec,
    PulseSchedule,
    PulseSegment,
    ScheduleResult,
    network_swap_schedule,
    qss_schedule,
    qst_schedule,
    run_qst,
    run_schedule,
)
from .zeno import (
    ZenoDecomposition,
    analytic_dark_state,
    analytic_eigenvalues,
    analytic_effective_hamiltonian,
    analytic_qst_evolution,
    effective_coupling,
    effective_hamiltonian,
    transfer_time,
    zeno_decompose,
)

__version__ = "0.1.0"
