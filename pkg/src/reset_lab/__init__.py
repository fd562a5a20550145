"""Reset-lab: simulation and stability analysis of reset control loops.

The package builds closed-loop reset systems from plant/controller/exosystem
blocks (or literal matrices), simulates them as hybrid arcs under a
timer-regularized resetting law, reduces the jump dynamics to a discrete map
on the after-jump sphere, locates and classifies periodic orbits, and checks
dwell-time Lyapunov certificates via a projection-based semidefinite solver.
"""

from .errors import (
    AlignmentError,
    DegenerateImageError,
    DimensionError,
    EventLocalizationError,
    NoCrossingError,
    NumericalError,
    ResetLabError,
    ScenarioError,
    UnsupportedConfigurationError,
)
from .model import (
    ClosedLoopSystem,
    Exosystem,
    LtiPlant,
    ResetController,
    SectorClosedLoop,
    build_closed_loop,
    build_sector_closed_loop,
    closed_loop_from_matrices,
    reset_projector,
    sector_from_matrices,
)
from .hybrid_sim import (
    HybridSolution,
    HybridTimeDomain,
    Jump,
    Leg,
    ResetIntervalSequence,
    TimerPolicy,
    Traces,
    error_and_output_traces,
    reset_intervals,
    simulate,
    simulate_sector,
    solution_to_csv,
    solution_to_json_dict,
)
from .poincare import (
    CircleParam,
    PoincareMap,
    SegmentParam,
    angle_map,
    angle_map_1d,
    default_search_cap,
    g_map,
    interval_and_image,
    interval_map,
    map_1d_many,
    map_graph,
    orbit,
)
from .stability import (
    INCONCLUSIVE,
    STABLE,
    UNSTABLE,
    Infeasible,
    LyapunovCertificate,
    PeriodicOrbit,
    StabilityVerdict,
    basin_coverage,
    classify,
    default_tau_grid,
    dwell_lmi_constant_P,
    eigen_stability_verdict,
    find_periodic_points,
    lmi_stability_verdict,
    monodromy_matrix,
    prepare_initial,
    ranged_dwell_verdict,
    verify_certificate_margin,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "ResetLabError",
    "DimensionError",
    "NumericalError",
    "NoCrossingError",
    "DegenerateImageError",
    "AlignmentError",
    "UnsupportedConfigurationError",
    "ScenarioError",
    "EventLocalizationError",
    # model
    "LtiPlant",
    "ResetController",
    "Exosystem",
    "ClosedLoopSystem",
    "SectorClosedLoop",
    "build_closed_loop",
    "build_sector_closed_loop",
    "closed_loop_from_matrices",
    "sector_from_matrices",
    "reset_projector",
    # simulation
    "TimerPolicy",
    "Leg",
    "Jump",
    "HybridTimeDomain",
    "HybridSolution",
    "ResetIntervalSequence",
    "Traces",
    "simulate",
    "simulate_sector",
    "reset_intervals",
    "error_and_output_traces",
    "solution_to_csv",
    "solution_to_json_dict",
    # discrete reduction
    "PoincareMap",
    "CircleParam",
    "SegmentParam",
    "interval_map",
    "interval_and_image",
    "g_map",
    "angle_map",
    "angle_map_1d",
    "map_1d_many",
    "map_graph",
    "orbit",
    "default_search_cap",
    # stability
    "STABLE",
    "UNSTABLE",
    "INCONCLUSIVE",
    "PeriodicOrbit",
    "StabilityVerdict",
    "LyapunovCertificate",
    "Infeasible",
    "classify",
    "monodromy_matrix",
    "find_periodic_points",
    "basin_coverage",
    "eigen_stability_verdict",
    "default_tau_grid",
    "dwell_lmi_constant_P",
    "verify_certificate_margin",
    "lmi_stability_verdict",
    "ranged_dwell_verdict",
    "prepare_initial",
]
