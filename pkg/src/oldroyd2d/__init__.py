"""Pseudo-spectral simulator and diagnostics for generalized Oldroyd-B flows
on the 2D periodic torus.

The package couples a shear-dependent velocity equation to an objectively
transported extra-stress equation, discretized by Fourier-Galerkin truncation
with 2/3-rule dealiasing and advanced by an adaptive embedded Runge-Kutta
pair.  Alongside the solver it ships executable counterparts of the
analytical machinery: the dissipation-inequality ledger, the psi + H stress
decomposition with its decay certificates, the L2 tail (equi-integrability)
functional, and sampling verifiers for the structural hypotheses on the
stress law.
"""

from .constitutive import (
    ConstitutiveModel,
    PhysicalParams,
    f_of_D,
    g_of_D,
    mu,
    verify_coercivity,
    verify_growth,
    verify_monotonicity,
    verify_potential,
)
from .config import (
    ConfigError,
    SimulationConfig,
    build_initial,
    load_config,
    parse_config,
)
from .diagnostics import (
    EnergyLedgerRow,
    TailProfile,
    check_H_decay,
    check_energy_inequality,
    check_psi_lp_bound,
    check_superposition,
    check_young_majorant,
    decompose_initial,
    evolve_decomposition,
    ledger_row,
    tail_profile,
)
from .galerkin import (
    BlowUp,
    RunResult,
    State,
    StepControl,
    StepFailure,
    momentum_rhs,
    reconstruct_pressure,
    run,
    step,
    stress_rhs,
)
from .snapshots import SnapshotError, read_snapshot, write_snapshot
from .spectral import (
    GridSpec,
    SpectralTensorField,
    SpectralVectorField,
    antisym_grad,
    inner_product_L2,
    l2_norm,
    leray_project,
    lp_norm,
    sym_grad,
    to_physical,
    to_spectral,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # spectral representation
    "GridSpec",
    "SpectralVectorField",
    "SpectralTensorField",
    "to_physical",
    "to_spectral",
    "leray_project",
    "sym_grad",
    "antisym_grad",
    "inner_product_L2",
    "l2_norm",
    "lp_norm",
    # constitutive laws and verifiers
    "ConstitutiveModel",
    "PhysicalParams",
    "mu",
    "f_of_D",
    "g_of_D",
    "verify_growth",
    "verify_monotonicity",
    "verify_coercivity",
    "verify_potential",
    # time integration
    "State",
    "StepControl",
    "RunResult",
    "momentum_rhs",
    "stress_rhs",
    "step",
    "run",
    "reconstruct_pressure",
    "BlowUp",
    "StepFailure",
    # diagnostics
    "EnergyLedgerRow",
    "ledger_row",
    "check_energy_inequality",
    "check_young_majorant",
    "tail_profile",
    "TailProfile",
    "decompose_initial",
    "evolve_decomposition",
    "check_H_decay",
    "check_psi_lp_bound",
    "check_superposition",
    # configuration and persistence
    "SimulationConfig",
    "ConfigError",
    "parse_config",
    "load_config",
    "build_initial",
    "write_snapshot",
    "read_snapshot",
    "SnapshotError",
]
