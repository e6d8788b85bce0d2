"""Consensus gradient flows and multistability on Riemannian manifolds.

The package couples a catalog of embedded manifolds (circle, spheres, flat
torus, SO(n), realified U(n)) with two consensus-seeking gradient flows,
splay-state machinery on closed geodesics, homotopy-invariant winding
diagnostics, and the potential thresholds that certify when a network
cannot synchronize.
"""

from .dynamics import (
    Algorithm,
    FlowSpec,
    SmoothingProfile,
    SystemState,
    consensus_state,
    finite_difference_gradient,
    grad_chordal,
    grad_geodesic,
    kuramoto_polar,
    lohe_complex,
    perturb_state,
    potential_chordal,
    potential_geodesic,
    random_state,
    smoothing_f,
)
from .graphs import (
    NetworkGraph,
    circulant_graph,
    cycle_graph,
    graph_from_edges,
    graph_from_json,
    is_connected,
    neighbors,
)
from .integrators import (
    IntegrationError,
    Outcome,
    OutcomeReport,
    Trajectory,
    classify_outcome,
    integrate,
)
from .manifolds import (
    Circle,
    FlatTorus,
    GeodesicDomainError,
    Manifold,
    ManifoldPoint,
    SpecialOrthogonal,
    Sphere,
    TangentVector,
    UnitaryRealified,
    chordal_distance,
    derealify,
    exp_map,
    geodesic_distance,
    injectivity_radius,
    log_map,
    manifold_from_json,
    metric_inner,
    project_tangent,
    random_point,
    random_tangent,
    realify,
)
from .splay import (
    ClosedGeodesicSpec,
    ProbeReport,
    SplayConfig,
    circle_loop,
    construct_splay,
    great_circle_loop,
    is_equilibrium,
    kuramoto_jacobian,
    phase_loop,
    rotation_plane_loop,
    solve_partition_qp,
    splay_set_distance,
    stability_probe,
    torus_generator_loop,
)
from .topology import (
    PiecewiseGeodesic,
    ThresholdReport,
    chordal_radius,
    closed_broken_geodesic,
    threshold_check,
    winding_invariant,
)

__version__ = "0.1.0"

__all__ = [
    "Algorithm",
    "Circle",
    "ClosedGeodesicSpec",
    "FlatTorus",
    "FlowSpec",
    "GeodesicDomainError",
    "IntegrationError",
    "Manifold",
    "ManifoldPoint",
    "NetworkGraph",
    "Outcome",
    "OutcomeReport",
    "PiecewiseGeodesic",
    "ProbeReport",
    "SmoothingProfile",
    "SpecialOrthogonal",
    "Sphere",
    "SplayConfig",
    "SystemState",
    "TangentVector",
    "ThresholdReport",
    "Trajectory",
    "UnitaryRealified",
    "chordal_distance",
    "chordal_radius",
    "circle_loop",
    "circulant_graph",
    "classify_outcome",
    "closed_broken_geodesic",
    "consensus_state",
    "construct_splay",
    "cycle_graph",
    "derealify",
    "exp_map",
    "finite_difference_gradient",
    "geodesic_distance",
    "grad_chordal",
    "grad_geodesic",
    "graph_from_edges",
    "graph_from_json",
    "great_circle_loop",
    "injectivity_radius",
    "integrate",
    "is_connected",
    "is_equilibrium",
    "kuramoto_jacobian",
    "kuramoto_polar",
    "log_map",
    "lohe_complex",
    "manifold_from_json",
    "metric_inner",
    "neighbors",
    "perturb_state",
    "phase_loop",
    "potential_chordal",
    "potential_geodesic",
    "project_tangent",
    "random_point",
    "random_state",
    "random_tangent",
    "realify",
    "rotation_plane_loop",
    "smoothing_f",
    "solve_partition_qp",
    "splay_set_distance",
    "stability_probe",
    "threshold_check",
    "torus_generator_loop",
    "winding_invariant",
]
