"""Spectral simulator and diagnostics for Voigt-regularized incompressible
flow whose viscosity acts entirely through a fading-memory kernel, with
generalized bottom-friction damping."""

from .energy import EnergyReport, balance_residual, dtu_budget, fit_decay, report
from .history import (
    GridHistory,
    PronyHistory,
    SGrid,
    advance,
    history_norm,
    init_history,
    memory_force,
    pi_functional,
    prony_advance,
    representation_oracle,
)
from .integrator import (
    BlowUpError,
    ModelConfig,
    State,
    Trajectory,
    solve,
    solve_instantaneous,
    solve_pair,
    solve_split,
    step,
)
from .kernels import ExponentialSum, Kernel, KernelValidationError, Tabulated
from .runfile import RunFile, RunFileError, default_runfile, load_runfile, parse_runfile
from .scenarios import ReportBundle, run_ensemble, run_refinement, run_scenario
from .spectral import (
    Grid,
    SpectralField,
    bilinear_B,
    check_interpolation,
    dealias,
    forcing_from_modes,
    leray_project,
    random_divfree_field,
    resample,
    single_mode_field,
    trilinear_b,
)

__version__ = "0.1.0"
