"""Closed broken geodesics, winding invariants, and multistability thresholds.

The winding invariant is the homotopy class of the closed broken geodesic
through the agents in a designated cycle order.  It is an integer on the
circle, an integer pair on the flat torus, and the winding of the phase of
the determinant on realified U(n).  Spheres (n >= 2) and SO(n) report no
invariant: the former is simply connected and the latter's two-element
fundamental group is out of scope here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .dynamics import Algorithm, SmoothingProfile, SystemState, potential_chordal, potential_geodesic
from .graphs import NetworkGraph
from .manifolds import (
    Circle,
    FlatTorus,
    GeodesicDomainError,
    Manifold,
    ManifoldPoint,
    SpecialOrthogonal,
    Sphere,
    UnitaryRealified,
    derealify,
    _principal_angles,
)

__all__ = [
    "PiecewiseGeodesic",
    "closed_broken_geodesic",
    "winding_invariant",
    "chordal_radius",
    "threshold_check",
    "ThresholdReport",
]


@dataclass(frozen=True)
class PiecewiseGeodesic:
    """Closed piecewise-geodesic curve through a cyclically ordered vertex list."""

    manifold: Manifold
    vertices: np.ndarray  # (K, rows, cols), read-only
    segment_lengths: np.ndarray  # (K,), segment i connects vertex i to i+1 (wrap)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.segment_lengths))

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def vertex(self, i: int) -> ManifoldPoint:
        return ManifoldPoint(self.manifold, self.vertices[i])


def _ordered_coords(state: SystemState, cycle_order) -> np.ndarray:
    order = list(cycle_order)
    n = state.n_agents
    if sorted(order) != list(range(1, n + 1)):
        raise ValueError("cycle_order must be a permutation of 1..N")
    idx = np.asarray(order, dtype=int) - 1
    return state.coords[idx]


def closed_broken_geodesic(state: SystemState, cycle_order) -> PiecewiseGeodesic:
    """Connect consecutive agents (wrapping) by their unique geodesics.

    Raises :class:`GeodesicDomainError` when any consecutive pair sits at or
    beyond the injectivity radius, where the connecting geodesic stops being
    unique.
    """
    m = state.manifold
    verts = _ordered_coords(state, cycle_order)
    nxt = np.roll(verts, -1, axis=0)
    # the log map performs the uniqueness check near the cut locus
    logs = m.log(verts, nxt)
    seg = np.sqrt(np.einsum("kij,kij->k", logs, logs))
    if np.max(seg) >= m.injectivity_radius:
        raise GeodesicDomainError("broken geodesic not unique: segment at injectivity radius")
    verts = verts.copy()
    verts.setflags(write=False)
    seg.setflags(write=False)
    return PiecewiseGeodesic(manifold=m, vertices=verts, segment_lengths=seg)


def _winding_from_increments(increments: np.ndarray) -> int:
    total = float(np.sum(increments)) / (2.0 * np.pi)
    q = int(np.round(total))
    if abs(total - q) > 1e-6:
        raise AssertionError(f"winding sum {total} is not close to an integer")
    return q


def winding_invariant(state: SystemState, cycle_order):
    """Homotopy descriptor of the closed broken geodesic.

    Returns an int (Circle, UnitaryRealified), an (int, int) pair
    (FlatTorus), or None for simply connected members and SO(n).
    """
    closed_broken_geodesic(state, cycle_order)  # uniqueness / domain check
    m = state.manifold
    verts = _ordered_coords(state, cycle_order)
    nxt = np.roll(verts, -1, axis=0)

    def wrap(a):
        return np.mod(a + np.pi, 2.0 * np.pi) - np.pi

    if isinstance(m, Circle):
        inc = wrap(Circle.angle_of(nxt) - Circle.angle_of(verts))
        return _winding_from_increments(inc)
    if isinstance(m, FlatTorus):
        t0, p0 = m.angles_of(verts)
        t1, p1 = m.angles_of(nxt)
        return (
            _winding_from_increments(wrap(t1 - t0)),
            _winding_from_increments(wrap(p1 - p0)),
        )
    if isinstance(m, UnitaryRealified):
        u = derealify(verts)
        rel = np.conj(np.swapaxes(u, -1, -2)) @ derealify(nxt)
        inc = np.sum(_principal_angles(rel), axis=-1)
        return _winding_from_increments(inc)
    return None


# ---------------------------------------------------------------------------
# chordal radius (largest chordal ball inside every injectivity ball)


def _min_chord_on_angle_sphere(radii: np.ndarray, injectivity: float,
                               chord_sq, grad_bound: float,
                               n_grid: int = 4096) -> float:
    """Certified lower bound for the chordal distance over a geodesic sphere.

    The geodesic sphere of radius R is the set of wrapped angle offsets with
    ``sum (radii_k * ang_k)^2 = R^2`` and ``0 <= ang_k <= pi``; the chordal
    distance depends only on those offsets through ``chord_sq``.  Dense
    sampling plus local refinement locates the minimum; a Lipschitz margin
    (``grad_bound`` bounds the gradient of chord_sq) makes the result a sound
    underestimate of the true infimum.
    """
    m = len(radii)

    def on_sphere(directions):
        # direction vectors in the positive orthant of angle space, rescaled
        # onto the sphere {||radii * ang|| = R}
        nrm = np.linalg.norm(directions * radii, axis=-1, keepdims=True)
        return injectivity * directions / nrm

    if m == 1:
        # zero-dimensional sphere: the single angle is R / radii exactly
        return float(np.sqrt(chord_sq(np.array([[injectivity / radii[0]]]))[0]))

    if m == 2:
        t = np.linspace(0.0, np.pi / 2.0, n_grid)
        dirs = np.stack([np.cos(t), np.sin(t)], axis=-1)
    else:
        rng = np.random.default_rng(12345)
        dirs = np.abs(rng.standard_normal((8 * n_grid, m)))
        dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
        dirs = np.concatenate([dirs, np.eye(m)], axis=0)
    ang = on_sphere(dirs)
    valid = np.all(ang <= np.pi + 1e-12, axis=-1)
    ang = ang[valid]
    vals = chord_sq(ang)
    order = np.argsort(vals)

    def objective(direction):
        direction = np.abs(direction)
        nrm = np.linalg.norm(direction)
        if nrm < 1e-12:
            return np.inf
        a = on_sphere(direction[None, :])[0]
        if np.any(a > np.pi):
            return np.inf
        return float(chord_sq(a[None, :])[0])

    best = float(vals[order[0]])
    for k in order[:8]:
        res = scipy.optimize.minimize(
            objective, ang[k] / np.linalg.norm(ang[k]), method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000},
        )
        if np.isfinite(res.fun) and res.fun < best:
            best = float(res.fun)

    if m == 2:
        # consecutive grid points are ordered, so the covering radius is half
        # the largest gap; grad_bound * gap bounds the value between samples
        gap = float(np.max(np.linalg.norm(np.diff(ang, axis=0), axis=-1)))
        margin = grad_bound * gap / 2.0
    else:
        margin = 1e-3  # documented certification slack for random sampling
    return float(np.sqrt(max(best - margin, 0.0)))


def chordal_radius(m: Manifold) -> float:
    """Radius A of the largest chordal ball inside every geodesic R-ball.

    Any pair with ambient distance at most A is guaranteed to sit within
    geodesic distance R.  Exactly 2 for the unit circle and spheres; a
    certified numeric lower bound elsewhere.
    """
    if isinstance(m, (Circle, Sphere)):
        return 2.0
    r = m.injectivity_radius
    if isinstance(m, FlatTorus):
        radii = np.array([m.r1, m.r2])

        def chord_sq(ang):
            return (
                4.0 * m.r1**2 * np.sin(ang[..., 0] / 2.0) ** 2
                + 4.0 * m.r2**2 * np.sin(ang[..., 1] / 2.0) ** 2
            )

        grad_bound = 2.0 * max(m.r1, m.r2) ** 2 * np.sqrt(2.0)
        return _min_chord_on_angle_sphere(radii, r, chord_sq, grad_bound)
    if isinstance(m, (SpecialOrthogonal, UnitaryRealified)):
        # both distances see a relative rotation only through its principal
        # angles, so the geodesic sphere reduces to an angle sphere
        n_angles = m.n // 2 if isinstance(m, SpecialOrthogonal) else m.n
        n_angles = max(n_angles, 1)
        radii = np.full(n_angles, np.sqrt(2.0))

        def chord_sq(ang):
            return 8.0 * np.sum(np.sin(ang / 2.0) ** 2, axis=-1)

        grad_bound = 4.0 * np.sqrt(float(n_angles))
        return _min_chord_on_angle_sphere(radii, r, chord_sq, grad_bound)
    raise ValueError(f"no chordal radius rule for {m.kind}")


# ---------------------------------------------------------------------------
# multistability threshold


@dataclass(frozen=True)
class ThresholdReport:
    """Potential-versus-bound check for the no-consensus guarantee."""

    potential: float
    bound: float
    passed: bool
    winding: object
    margin: float

    @property
    def winding_nonzero(self) -> bool:
        if self.winding is None:
            return False
        if isinstance(self.winding, tuple):
            return any(w != 0 for w in self.winding)
        return self.winding != 0

    @property
    def applies(self) -> bool:
        """True when both the energy bound and the topology hypothesis hold."""
        return self.passed and self.winding_nonzero

    def to_json(self) -> dict:
        winding = list(self.winding) if isinstance(self.winding, tuple) else self.winding
        return {
            "potential": self.potential,
            "bound": self.bound,
            "pass": self.passed,
            "winding": winding,
            "margin": self.margin,
        }


def threshold_check(state: SystemState, graph: NetworkGraph, algorithm: Algorithm,
                    profile: SmoothingProfile | None = None,
                    cycle_order=None) -> ThresholdReport:
    """Evaluate the energy threshold under which consensus is topologically blocked.

    For the geodesic flow the bound is half the minimum edge weight times
    ``(R - epsilon)^2``; for chordal-type flows it is half the minimum edge
    weight times the squared chordal radius.  The report also carries the
    winding invariant of the designated cycle, whose nonvanishing is the
    other hypothesis of the no-consensus guarantee.
    """
    m = state.manifold
    algorithm = Algorithm(algorithm)
    min_w = min(graph.edge_weights)
    if algorithm == Algorithm.GEODESIC_CONSENSUS:
        profile = profile or SmoothingProfile.for_manifold(m)
        potential = potential_geodesic(state, graph, profile)
        bound = 0.5 * min_w * (profile.radius - profile.epsilon) ** 2
    else:
        potential = potential_chordal(state, graph)
        bound = 0.5 * min_w * chordal_radius(m) ** 2
    if cycle_order is None:
        cycle_order = tuple(range(1, state.n_agents + 1))
    try:
        winding = winding_invariant(state, cycle_order)
    except GeodesicDomainError:
        winding = None
    return ThresholdReport(
        potential=float(potential),
        bound=float(bound),
        passed=bool(potential < bound),
        winding=winding,
        margin=float(bound - potential),
    )
