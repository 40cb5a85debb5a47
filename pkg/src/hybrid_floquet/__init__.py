"""Hybrid dynamical systems near periodic orbits: event-detected execution,
Poincare return maps, Floquet multipliers and rank-of-iterates analysis."""

__version__ = "0.1.0"

from .core import DomainDef, GuardDef, HybridSystemDef, PeriodicOrbitResult, validate
from .errors import (
    EventLocationError,
    HybridError,
    MaxTransitionsError,
    NoConvergence,
    NoConvergenceQR,
    NoImpact,
    NonFiniteState,
    NoReturn,
    NoStabilization,
    RankMonotonicityError,
    SingularNewtonStep,
    Tangency,
    ZenoError,
)
from .executor import Execution, ExecutionArc, Limits, Termination, execute
from .flow import ImpactResult, StepperConfig, flow_for, sample_normalized, step, time_to_impact
from .models import (
    FloquetExampleParams,
    HopperParams,
    floquet_return_matrix,
    floquet_section,
    hopper_aerial_section,
    hopper_section,
    make_floquet_example,
    make_hopper,
    midair_phase,
)
from .poincare import (
    SectionDef,
    cycle_map,
    find_fixed_point,
    jacobian_fd,
    periodic_orbit,
    return_fn,
    return_map,
    solve_fixed_point,
    step_map,
)
from .spectral import (
    ConstantRank,
    FloquetReport,
    NonConstant,
    RankSweep,
    eigenvalues,
    floquet_report,
    numerical_rank,
    rank_profile,
    rank_sweep,
    section_consistency,
)
