"""Mixed quantum-classical dynamics of a two-level system coupled to a classical spin."""
from .config import ConfigError, RunConfig, parse_config
from .diagnostics import DriftReport, StiffnessFailure, convergence_order, drift_report, reference_integrate
from .ensemble import ObservableSeries, ensemble_average
from .model import (
    BranchViolation,
    DegenerateGap,
    ModelParams,
    SpinBathError,
    SpinVector,
    Surface,
    adiabatic_frame,
    adiabatic_scalars,
    berry_connection,
    hamiltonian_matrix,
    split_coeffs,
    surface_gradient,
    surface_hamiltonian,
)
from .phases import PhaseSeries, accumulate_phases, bohr_frequency, pauli_adiabatic
from .sampling import rho_adiabatic, rho_subsystem, sample_initial_spin
from .splitting import (
    IntegrationAborted,
    Scheme,
    Trajectory,
    Variant,
    VariantPolicy,
    integrate_trajectory,
    trotter_step,
    yoshida_step,
)

__version__ = "0.1.0"
