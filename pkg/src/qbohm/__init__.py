"""qbohm: variational quantum-potential toolkit.

Uniform-grid fields, power-law quantum-potential candidates and their
admissibility condition, constrained energy minimization with an
independent eigensolver oracle, polar-variable dynamics cross-checked
against wavefunction evolution, and pilot-wave trajectories.
"""

from .condition import (
    ConditionResidual,
    ScanReport,
    condition_residual,
    exponent_scan,
    hj_residual,
    stationary_continuity_residual,
)
from .config import ScenarioConfig, validate_config
from .dynamics import (
    ComplexFieldState,
    PolarState,
    evolve_oracle,
    evolve_polar,
    polar_decompose,
    step_polar,
)
from .eigensolve import (
    EnergyReport,
    OracleSpectrum,
    SolverOptions,
    minimize_energy,
    rayleigh_lambda,
    schrodinger_oracle,
)
from .fields import (
    Grid,
    ScalarField,
    VectorField,
    field_from_csv,
    field_to_csv,
    gradient,
    grid_1d,
    grid_2d,
    integrate,
    laplacian,
    normalize_density,
)
from .qpotential import (
    AnsatzExponents,
    QEvaluation,
    ansatz_partials,
    bohmian_ansatz,
    constant_ansatz,
    eval_ansatz,
    eval_bohmian,
)
from .runner import RunSummary, run_scenario
from .trajectories import (
    LoopResult,
    TrajectoryBundle,
    endpoint_histogram,
    integrate_trajectories,
    loop_integral,
    sample_from_density,
    velocity_at,
)
from .units import Units

__version__ = "0.1.0"

__all__ = [
    "AnsatzExponents",
    "ComplexFieldState",
    "ConditionResidual",
    "EnergyReport",
    "Grid",
    "LoopResult",
    "OracleSpectrum",
    "PolarState",
    "QEvaluation",
    "RunSummary",
    "ScalarField",
    "ScanReport",
    "ScenarioConfig",
    "SolverOptions",
    "TrajectoryBundle",
    "Units",
    "VectorField",
    "ansatz_partials",
    "bohmian_ansatz",
    "condition_residual",
    "constant_ansatz",
    "endpoint_histogram",
    "eval_ansatz",
    "eval_bohmian",
    "evolve_oracle",
    "evolve_polar",
    "exponent_scan",
    "field_from_csv",
    "field_to_csv",
    "gradient",
    "grid_1d",
    "grid_2d",
    "hj_residual",
    "integrate",
    "integrate_trajectories",
    "laplacian",
    "loop_integral",
    "minimize_energy",
    "normalize_density",
    "polar_decompose",
    "rayleigh_lambda",
    "run_scenario",
    "sample_from_density",
    "schrodinger_oracle",
    "stationary_continuity_residual",
    "step_polar",
    "validate_config",
    "velocity_at",
]
