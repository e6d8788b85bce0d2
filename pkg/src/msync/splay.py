"""Closed geodesics, splay-state construction, and stability probing.

A splay state distributes the agents of a cycle network along a closed
geodesic so that consecutive gaps are proportional to the inverses of the
connecting edge weights.  Such configurations are equilibria of the
geodesic consensus flow; whether they attract depends on the flow and on
whether the geodesic locally minimizes length, which the probing utilities
here measure empirically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Algorithm, FlowSpec, SystemState, kuramoto_polar
from .graphs import NetworkGraph
from .integrators import Outcome, Trajectory, integrate
from .manifolds import (
    Circle,
    FlatTorus,
    Manifold,
    ManifoldPoint,
    SpecialOrthogonal,
    Sphere,
    TangentVector,
    UnitaryRealified,
    _as_rng,
    _fro_norm,
    realify,
)

__all__ = [
    "ClosedGeodesicSpec",
    "SplayConfig",
    "circle_loop",
    "great_circle_loop",
    "torus_generator_loop",
    "rotation_plane_loop",
    "phase_loop",
    "solve_partition_qp",
    "construct_splay",
    "is_equilibrium",
    "splay_set_distance",
    "stability_probe",
    "ProbeReport",
    "kuramoto_jacobian",
]


@dataclass(frozen=True)
class ClosedGeodesicSpec:
    """A closed geodesic given by base point, unit direction, and length.

    ``winding`` records the loop's homotopy data (loop counts per generator)
    and ``is_local_min_length`` whether the curve locally minimizes length
    among closed curves, which governs splay-state stability.
    """

    manifold: Manifold
    base: ManifoldPoint
    direction: TangentVector
    length: float
    winding: tuple[int, ...]
    label: str
    is_local_min_length: bool

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("geodesic length must be positive")
        if abs(self.direction.norm - 1.0) > 1e-9:
            raise ValueError("direction must be a unit tangent vector")
        end = self.manifold.exp(self.base.coords, self.length * self.direction.coords)
        closure = float(_fro_norm(end - self.base.coords))
        if closure > 1e-9:
            raise ValueError(f"curve does not close (gap {closure:.2e})")

    def point_at(self, s: float) -> ManifoldPoint:
        """Point at arc length s along the curve from the base point."""
        return ManifoldPoint(
            self.manifold, self.manifold.exp(self.base.coords, s * self.direction.coords)
        )

    def points_at(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        v = s[:, None, None] * self.direction.coords[None, :, :]
        base = np.broadcast_to(self.base.coords, v.shape)
        return self.manifold.exp(base, v)


def circle_loop(manifold: Circle, loops: int = 1, base_angle: float = 0.0) -> ClosedGeodesicSpec:
    """The unit circle traversed ``loops`` times (q-fold loop)."""
    if loops == 0:
        raise ValueError("loop count must be nonzero")
    base = ManifoldPoint(manifold, Circle.from_angle(base_angle))
    sign = 1.0 if loops > 0 else -1.0
    direction = TangentVector(
        base, sign * np.array([[-np.sin(base_angle)], [np.cos(base_angle)]])
    )
    return ClosedGeodesicSpec(
        manifold=manifold,
        base=base,
        direction=direction,
        length=2.0 * np.pi * abs(loops),
        winding=(loops,),
        label=f"circle loop q={loops}",
        is_local_min_length=True,
    )


def great_circle_loop(manifold: Sphere, loops: int = 1, base: ManifoldPoint | None = None,
                      direction: TangentVector | None = None) -> ClosedGeodesicSpec:
    """A great circle on the unit sphere (not a local length minimizer)."""
    if loops == 0:
        raise ValueError("loop count must be nonzero")
    if base is None:
        e1 = np.zeros(manifold.ambient_shape)
        e1[0, 0] = 1.0
        base = ManifoldPoint(manifold, e1)
    if direction is None:
        e2 = np.zeros(manifold.ambient_shape)
        e2[1, 0] = 1.0
        direction = TangentVector(base, e2)
    return ClosedGeodesicSpec(
        manifold=manifold,
        base=base,
        direction=direction,
        length=2.0 * np.pi * abs(loops),
        winding=(),
        label=f"great circle, {loops} loop(s)",
        is_local_min_length=False,
    )


def torus_generator_loop(manifold: FlatTorus, p: int = 1, q: int = 0,
                         base_angles: tuple[float, float] = (0.0, 0.0)) -> ClosedGeodesicSpec:
    """Closed torus geodesic winding (p, q) times around the two generators."""
    if p == 0 and q == 0:
        raise ValueError("windings (0, 0) give no closed loop")
    length = 2.0 * np.pi * np.hypot(p * manifold.r1, q * manifold.r2)
    base = ManifoldPoint(manifold, manifold.from_angles(*base_angles))
    u1, u2 = manifold._frames(base.coords)
    dir_coords = (2.0 * np.pi / length) * (p * manifold.r1 * u1 + q * manifold.r2 * u2)
    direction = TangentVector(base, dir_coords)
    return ClosedGeodesicSpec(
        manifold=manifold,
        base=base,
        direction=direction,
        length=length,
        winding=(p, q),
        label=f"torus generator ({p},{q})",
        is_local_min_length=True,
    )


def rotation_plane_loop(manifold: SpecialOrthogonal, plane: tuple[int, int] = (0, 1),
                        loops: int = 1) -> ClosedGeodesicSpec:
    """One-parameter subgroup of rotations in a coordinate plane of SO(n).

    The loop closes after a full turn and is the shortest noncontractible
    loop of the group, hence flagged as a local length minimizer.
    """
    if loops == 0:
        raise ValueError("loop count must be nonzero")
    a, b = plane
    n = manifold.n
    if not (0 <= a < b < n):
        raise ValueError(f"plane axes must satisfy 0 <= a < b < {n}")
    base = ManifoldPoint(manifold, np.eye(n))
    gen = np.zeros((n, n))
    gen[a, b] = -1.0
    gen[b, a] = 1.0
    sign = 1.0 if loops > 0 else -1.0
    direction = TangentVector(base, sign * gen / np.sqrt(2.0))
    return ClosedGeodesicSpec(
        manifold=manifold,
        base=base,
        direction=direction,
        length=2.0 * np.pi * np.sqrt(2.0) * abs(loops),
        winding=(loops,),
        label=f"rotation plane {plane}, {loops} loop(s)",
        is_local_min_length=True,
    )


def phase_loop(manifold: UnitaryRealified, loops: int = 1) -> ClosedGeodesicSpec:
    """Single-phase loop exp(i t e_1 e_1^H) on realified U(n).

    Generates the fundamental group through the winding of the determinant's
    phase; it is the shortest noncontractible loop of the realified group.
    """
    if loops == 0:
        raise ValueError("loop count must be nonzero")
    n = manifold.n
    base = ManifoldPoint(manifold, realify(np.eye(n, dtype=complex)))
    gen = np.zeros((n, n), dtype=complex)
    gen[0, 0] = 1j
    sign = 1.0 if loops > 0 else -1.0
    direction = TangentVector(base, sign * realify(gen) / np.sqrt(2.0))
    return ClosedGeodesicSpec(
        manifold=manifold,
        base=base,
        direction=direction,
        length=2.0 * np.pi * np.sqrt(2.0) * abs(loops),
        winding=(loops,),
        label=f"phase loop, {loops} loop(s)",
        is_local_min_length=True,
    )


# ---------------------------------------------------------------------------
# partition quadratic program


def solve_partition_qp(weights, length: float) -> tuple[np.ndarray, float]:
    """Minimize the weighted sum of squared segments that must total ``length``.

    Closed form: segment i is proportional to the inverse of weight i, and
    the optimal value is ``length^2 / sum(1/w)``.  Positivity of the closed
    form is validated a posteriori, which justifies dropping the sign
    constraints of the original program.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a nonempty vector")
    if np.any(w <= 0):
        raise ValueError("weights must be strictly positive")
    if not length > 0:
        raise ValueError("length must be positive")
    inv = 1.0 / w
    d = length * inv / np.sum(inv)
    if np.any(d <= 0):
        raise AssertionError("partition lost positivity")
    value = float(length**2 / np.sum(inv))
    return d, value


# ---------------------------------------------------------------------------
# splay construction


@dataclass(frozen=True)
class SplayConfig:
    """A closed geodesic together with the cycle network partitioning it.

    ``epsilon`` is the smoothing margin the spacing must respect; it
    defaults to a tenth of the injectivity radius.
    """

    geodesic: ClosedGeodesicSpec
    graph: NetworkGraph
    epsilon: float | None = None

    def __post_init__(self):
        if not self.graph.is_cycle_graph():
            raise ValueError("splay states are defined over the cycle graph")
        spacing, _ = self.spacings()
        r = self.geodesic.manifold.injectivity_radius
        eps = 0.1 * r if self.epsilon is None else self.epsilon
        if np.max(spacing) >= r - eps:
            raise ValueError(
                f"max spacing {np.max(spacing):.6g} reaches R - epsilon = {r - eps:.6g}"
            )

    def cycle_order(self) -> tuple[int, ...]:
        return tuple(range(1, self.graph.n_agents + 1))

    def spacings(self) -> tuple[np.ndarray, float]:
        """Weight-inverse partition of the loop length, and its QP value."""
        w = self.graph.cycle_weights(self.cycle_order())
        return solve_partition_qp(w, self.geodesic.length)


def construct_splay(config: SplayConfig) -> SystemState:
    """Place agents along the geodesic at the weight-inverse arc positions."""
    spacing, _ = config.spacings()
    offsets = np.concatenate([[0.0], np.cumsum(spacing)[:-1]])
    coords = config.geodesic.points_at(offsets)
    return SystemState(config.geodesic.manifold, coords)


def is_equilibrium(state: SystemState, flow: FlowSpec, tol: float = 1e-8
                   ) -> tuple[bool, float]:
    """Check whether the flow's velocity vanishes at ``state`` (max norm vs tol)."""
    from .integrators import _make_chart

    chart, z = _make_chart(state, flow)
    speed = chart.max_speed(chart.velocity(z))
    return speed < tol, speed


def splay_set_distance(state: SystemState, config: SplayConfig) -> float:
    """Distance from ``state`` to the set of splay states on the geodesic.

    The splay set is a continuum: shifting every agent by a common arc
    offset gives another splay state.  The distance is the max per-agent
    geodesic distance to the shifted reference, minimized over the shift by
    a coarse scan plus golden-section refinement.
    """
    spacing, _ = config.spacings()
    offsets = np.concatenate([[0.0], np.cumsum(spacing)[:-1]])
    m = config.geodesic.manifold
    length = config.geodesic.length

    def dist_at(shift: float) -> float:
        ref = config.geodesic.points_at(offsets + shift)
        return float(np.max(m.dist(state.coords, ref)))

    shifts = np.linspace(0.0, length, 256, endpoint=False)
    values = [dist_at(s) for s in shifts]
    k = int(np.argmin(values))
    lo = shifts[k] - length / 256.0
    hi = shifts[k] + length / 256.0

    golden = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - golden * (b - a)
    d = a + golden * (b - a)
    fc, fd = dist_at(c), dist_at(d)
    while b - a > 1e-10:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - golden * (b - a)
            fc = dist_at(c)
        else:
            a, c, fc = c, d, fd
            d = a + golden * (b - a)
            fd = dist_at(d)
    return min(fc, fd, values[k])


@dataclass(frozen=True)
class ProbeReport:
    """Outcome statistics of repeated perturb-and-integrate trials."""

    return_fraction: float
    outcomes: dict
    trials: int
    magnitude: float
    seed: int
    distances: tuple[float, ...]

    def to_json(self) -> dict:
        return {
            "return_fraction": self.return_fraction,
            "outcomes": dict(self.outcomes),
            "trials": self.trials,
            "magnitude": self.magnitude,
            "seed": self.seed,
        }


def stability_probe(state: SystemState, flow: FlowSpec, magnitude: float,
                    trials: int, seed: int, splay: SplayConfig,
                    return_tol: float = 1e-4) -> ProbeReport:
    """Perturb an equilibrium and record how often the flow returns to the set.

    Each trial moves every agent along a random tangent whose basis
    coefficients are N(0, magnitude^2), integrates the flow, and measures
    the distance to the splay set (up to the arc-shift symmetry).  Gaussian
    noise is used rather than exact-norm tangents so the perturbation almost
    surely leaves the splay set even on one-dimensional manifolds, where
    exact-norm tangents can only flip signs.  A trial counts as returned
    when the final distance falls below ``return_tol``.
    """
    ok, speed = is_equilibrium(state, flow, tol=1e-8)
    if not ok:
        raise ValueError(f"probe requires an equilibrium (velocity norm {speed:.2e})")
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = _as_rng(seed)
    m = state.manifold
    returned = 0
    outcomes: dict[str, int] = {}
    distances = []
    for _ in range(trials):
        moved = np.empty_like(state.coords)
        for i in range(state.n_agents):
            basis = m.tangent_basis(state.coords[i])
            coeff = rng.standard_normal(len(basis)) * magnitude
            moved[i] = m.exp(state.coords[i], np.tensordot(coeff, basis, axes=1))
        traj = integrate(SystemState(m, moved), flow)
        d = splay_set_distance(traj.final_state, splay)
        distances.append(d)
        if d < return_tol:
            returned += 1
        name = traj.outcome.outcome.value
        outcomes[name] = outcomes.get(name, 0) + 1
    return ProbeReport(
        return_fraction=returned / trials,
        outcomes=outcomes,
        trials=trials,
        magnitude=magnitude,
        seed=seed,
        distances=tuple(distances),
    )


# ---------------------------------------------------------------------------
# analytic linearization of the polar Kuramoto flow (circle oracle)


def kuramoto_jacobian(thetas, graph: NetworkGraph) -> np.ndarray:
    """Jacobian of the polar Kuramoto right-hand side at the given phases."""
    thetas = np.asarray(thetas, dtype=float)
    rhs0 = kuramoto_polar(thetas, graph)  # validates graph and shapes
    del rhs0
    n = graph.n_agents
    jac = np.zeros((n, n))
    src, dst, w = graph.edge_arrays
    for i, j, wij in zip(src, dst, w):
        c = wij * np.cos(thetas[j] - thetas[i])
        jac[i, j] += c
        jac[i, i] -= c
        jac[j, i] += c
        jac[j, j] -= c
    return jac
