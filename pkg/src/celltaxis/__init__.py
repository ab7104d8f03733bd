"""1-d cell motility simulations coupling volume filling, cell-cell
adhesion and chemotaxis: discrete random-walk master equation, its
continuum advection-diffusion limit with a quasi-steady chemoattractant,
steady-state and linear-stability analysis, and a multi-phase
moving-boundary continuation for the high-adhesion regime where the
continuum diffusivity turns negative."""

__version__ = "0.1.0"

from .config import RunConfig, config_from_dict, load_config
from .continuum import (
    HitEvent,
    SimResult,
    SimState,
    continuum_rhs,
    count_plateaus,
    detect_plateau_edges,
    measure_growth_rate,
    simulate_continuum,
    stable_dt,
)
from .elliptic import ChemoattractantSolver, solve_chemoattractant
from .grids import Field, Grid1D, uniform_field
from .initial import InitialCondition
from .lattice import (
    LatticeResult,
    LatticeState,
    master_rhs,
    simulate_lattice,
    transition_rates,
)
from .model import (
    DomainError,
    ModelParams,
    NoUnstableModeError,
    UnstableInterval,
    chemotactic_sensitivity,
    classify_region,
    critical_curve_chi0,
    diffusivity,
    dispersion_rate,
    dominant_wavemode,
    primitive_G,
    primitive_K,
    stability_predicates,
    unstable_interval,
)
from .presets import load_preset, preset_description, preset_names
from .steady import (
    CriticalPointSet,
    SteadyProfile,
    WeakSteadyReport,
    construct_smooth_steady,
    critical_points,
    min_domain_length,
    verify_weak_steady,
)
from .stefan import (
    Phase,
    PhaseDecomposition,
    StefanResult,
    assemble_global,
    boundary_speeds,
    insert_spike,
    phase_rhs,
    simulate_stefan,
)
