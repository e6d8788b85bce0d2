"""Disagreement potentials, their Riemannian gradients, and reference models.

Two families of consensus dynamics are implemented as velocity fields on
tuples of agents: the geodesic flow, whose potential sums smoothed squared
geodesic distances over graph edges, and the chordal flow, whose potential
sums squared ambient (Frobenius) distances.  The polar Kuramoto model and
the complex Lohe model are provided as coordinate-level references.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .graphs import NetworkGraph
from .manifolds import (
    Manifold,
    ManifoldPoint,
    TangentVector,
    UnitaryRealified,
    _as_rng,
    _fro_norm,
    derealify,
    realify,
)

__all__ = [
    "Algorithm",
    "FlowSpec",
    "SystemState",
    "SmoothingProfile",
    "smoothing_f",
    "potential_geodesic",
    "potential_chordal",
    "grad_geodesic",
    "grad_chordal",
    "kuramoto_polar",
    "lohe_complex",
    "realify",
    "finite_difference_gradient",
    "random_state",
    "consensus_state",
    "perturb_state",
]

# Edges this close to the injectivity radius are treated as fully cut off.
# The smoothing function is below 1e-12 there, so dropping them changes the
# velocity by far less than any tolerance used in this package.
_EDGE_CUTOFF_FRACTION = 1.0 - 1e-5

STATE_TOL = 1e-8


class SystemState:
    """Positions of N agents on one manifold, stored as a stacked array."""

    __slots__ = ("manifold", "coords")

    def __init__(self, manifold: Manifold, coords: np.ndarray, validate: bool = True):
        coords = manifold.check_ambient(coords)
        if coords.ndim != 3:
            raise ValueError("SystemState coords must have shape (N, rows, cols)")
        coords = coords.copy()
        if validate:
            d = float(np.max(manifold.defect(coords)))
            if d > STATE_TOL:
                raise ValueError(f"state off manifold by {d:.2e}")
        coords.setflags(write=False)
        object.__setattr__(self, "manifold", manifold)
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("SystemState is immutable")

    @classmethod
    def from_points(cls, points) -> "SystemState":
        points = list(points)
        if not points:
            raise ValueError("state needs at least one agent")
        manifold = points[0].manifold
        if any(p.manifold != manifold for p in points):
            raise ValueError("all agents must share one manifold")
        return cls(manifold, np.stack([p.coords for p in points]))

    @property
    def n_agents(self) -> int:
        return self.coords.shape[0]

    @property
    def points(self) -> tuple[ManifoldPoint, ...]:
        return tuple(ManifoldPoint(self.manifold, c) for c in self.coords)

    def point(self, i: int) -> ManifoldPoint:
        return ManifoldPoint(self.manifold, self.coords[i])

    def __repr__(self):
        return f"SystemState({self.manifold!r}, n_agents={self.n_agents})"


def random_state(manifold: Manifold, n: int, seed) -> SystemState:
    """N agents sampled independently and uniformly."""
    return SystemState(manifold, manifold.random_point(_as_rng(seed), size=n))


def consensus_state(manifold: Manifold, n: int, base: np.ndarray | None = None, seed=0) -> SystemState:
    """All agents at one point (``base`` or a random one)."""
    if base is None:
        base = manifold.random_point(_as_rng(seed))
    return SystemState(manifold, np.broadcast_to(base, (n,) + manifold.ambient_shape).copy())


def perturb_state(state: SystemState, sigma: float, seed, fixed_norm: bool = False) -> SystemState:
    """Move each agent along a random tangent direction.

    With ``fixed_norm`` the tangent has norm exactly ``sigma``; otherwise its
    coefficients in an orthonormal tangent basis are i.i.d. N(0, sigma^2).
    """
    rng = _as_rng(seed)
    m = state.manifold
    moved = np.empty_like(state.coords)
    for i in range(state.n_agents):
        x = state.coords[i]
        if fixed_norm:
            v = m.random_tangent(rng, x, sigma)
        else:
            basis = m.tangent_basis(x)
            coeff = rng.standard_normal(len(basis)) * sigma
            v = np.tensordot(coeff, basis, axes=1)
        moved[i] = m.exp(x, v)
    return SystemState(m, moved)


# ---------------------------------------------------------------------------
# smoothing profile


@dataclass(frozen=True)
class SmoothingProfile:
    """C^2 cutoff applied to squared geodesic distances.

    The cutoff equals 1 below ``(R - epsilon)^2``, 0 above ``R^2``, and in
    between follows the quintic smoothstep, which is twice continuously
    differentiable at both junctions and integrates in closed form.
    """

    radius: float
    epsilon: float

    def __post_init__(self):
        if not 0 < self.epsilon < self.radius:
            raise ValueError("need 0 < epsilon < radius")

    @classmethod
    def for_manifold(cls, manifold: Manifold, epsilon: float | None = None) -> "SmoothingProfile":
        r = manifold.injectivity_radius
        return cls(radius=r, epsilon=0.1 * r if epsilon is None else epsilon)

    @property
    def band(self) -> tuple[float, float]:
        """(lower, upper) of the transition band in squared-distance units."""
        return ((self.radius - self.epsilon) ** 2, self.radius**2)

    def value(self, s) -> np.ndarray:
        """Cutoff value f(s) for squared distance s."""
        s = np.asarray(s, dtype=float)
        lo, hi = self.band
        u = np.clip((s - lo) / (hi - lo), 0.0, 1.0)
        return 1.0 - u**3 * (10.0 - 15.0 * u + 6.0 * u**2)

    def antiderivative(self, s) -> np.ndarray:
        """Closed form of the running integral of f from 0 to s."""
        s = np.asarray(s, dtype=float)
        lo, hi = self.band
        u = np.clip((s - lo) / (hi - lo), 0.0, 1.0)
        inner = u - u**4 * (2.5 - 3.0 * u + u**2)
        return np.minimum(s, lo) + (hi - lo) * inner


def smoothing_f(profile: SmoothingProfile, s: float) -> float:
    """Cutoff value for a single squared distance."""
    if s < 0:
        raise ValueError("squared distance must be nonnegative")
    return float(profile.value(s))


# ---------------------------------------------------------------------------
# flow specification


class Algorithm(str, enum.Enum):
    """Which velocity field drives the multi-agent system."""

    GEODESIC_CONSENSUS = "GeodesicConsensus"
    CHORDAL_CONSENSUS = "ChordalConsensus"
    LOHE_COMPLEX = "LoheComplex"
    KURAMOTO_POLAR = "KuramotoPolar"


@dataclass(frozen=True)
class FlowSpec:
    """Algorithm choice plus integration parameters.

    ``profile`` only matters for the geodesic flow; when omitted it defaults
    to the manifold's injectivity radius with epsilon = 0.1 R.
    """

    algorithm: Algorithm
    graph: NetworkGraph
    profile: SmoothingProfile | None = None
    dt: float = 1e-3
    t_end: float = 10.0
    sample_every: int = 1
    grad_tol: float = 1e-9

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least dt")
        if self.sample_every < 1:
            raise ValueError("sample_every must be a positive integer")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")

    def profile_for(self, manifold: Manifold) -> SmoothingProfile:
        if self.profile is not None:
            return self.profile
        return SmoothingProfile.for_manifold(manifold)


# ---------------------------------------------------------------------------
# potentials and velocity fields (batched internals on raw coords)


def _geodesic_potential_raw(m: Manifold, x: np.ndarray, graph: NetworkGraph,
                            profile: SmoothingProfile) -> float:
    src, dst, w = graph.edge_arrays
    if len(src) == 0:
        return 0.0
    d = m.dist(x[src], x[dst])
    return float(0.5 * np.sum(w * profile.antiderivative(d**2)))


def _chordal_potential_raw(m: Manifold, x: np.ndarray, graph: NetworkGraph) -> float:
    src, dst, w = graph.edge_arrays
    if len(src) == 0:
        return 0.0
    diff = x[src] - x[dst]
    return float(0.5 * np.sum(w * np.einsum("eij,eij->e", diff, diff)))


def _geodesic_velocity_raw(m: Manifold, x: np.ndarray, graph: NetworkGraph,
                           profile: SmoothingProfile) -> np.ndarray:
    """Velocity of the geodesic flow: the negated potential gradient."""
    src, dst, w = graph.edge_arrays
    vel = np.zeros_like(x)
    if len(src) == 0:
        return vel
    d = m.dist(x[src], x[dst])
    f = profile.value(d**2)
    active = (f > 0.0) & (d <= m.injectivity_radius * _EDGE_CUTOFF_FRACTION)
    if not np.any(active):
        return vel
    a_src = np.concatenate([src[active], dst[active]])
    a_dst = np.concatenate([dst[active], src[active]])
    coeff = np.concatenate([(w * f)[active]] * 2)
    logs = m.log(x[a_src], x[a_dst])
    np.add.at(vel, a_src, coeff[:, None, None] * logs)
    return vel


def _chordal_velocity_raw(m: Manifold, x: np.ndarray, graph: NetworkGraph) -> np.ndarray:
    """Velocity of the chordal flow: minus the projected ambient gradient."""
    n = x.shape[0]
    flat = x.reshape(n, -1)
    wmat = graph.weight_matrix
    degree = wmat.sum(axis=1)
    ambient = (wmat @ flat - degree[:, None] * flat).reshape(x.shape)
    return m.proj(x, ambient)


def potential_geodesic(state: SystemState, graph: NetworkGraph,
                       profile: SmoothingProfile) -> float:
    """Smoothed geodesic disagreement over graph edges.

    Equals half the weighted sum of squared geodesic distances whenever every
    edge distance sits below the transition band.
    """
    return _geodesic_potential_raw(state.manifold, state.coords, graph, profile)


def potential_chordal(state: SystemState, graph: NetworkGraph) -> float:
    """Half the weighted sum of squared ambient distances over graph edges."""
    return _chordal_potential_raw(state.manifold, state.coords, graph)


def grad_geodesic(state: SystemState, graph: NetworkGraph,
                  profile: SmoothingProfile) -> tuple[TangentVector, ...]:
    """Per-agent velocity of the geodesic consensus flow."""
    vel = _geodesic_velocity_raw(state.manifold, state.coords, graph, profile)
    return tuple(TangentVector(state.point(i), vel[i]) for i in range(state.n_agents))


def grad_chordal(state: SystemState, graph: NetworkGraph) -> tuple[TangentVector, ...]:
    """Per-agent velocity of the chordal consensus flow."""
    vel = _chordal_velocity_raw(state.manifold, state.coords, graph)
    return tuple(TangentVector(state.point(i), vel[i]) for i in range(state.n_agents))


# ---------------------------------------------------------------------------
# reference models


def kuramoto_polar(thetas, graph: NetworkGraph, omegas=None) -> np.ndarray:
    """Phase rates of the Kuramoto model on a cycle graph.

    Each phase is pulled by the sines of the differences to its two cycle
    neighbors, scaled by the edge weights, plus its natural frequency.
    """
    if not graph.is_cycle_graph():
        raise ValueError("kuramoto_polar requires the cycle graph on N >= 3 nodes")
    thetas = np.asarray(thetas, dtype=float)
    n = graph.n_agents
    if thetas.shape != (n,):
        raise ValueError(f"expected {n} phases, got shape {thetas.shape}")
    if omegas is None:
        omegas = np.zeros(n)
    omegas = np.asarray(omegas, dtype=float)
    src, dst, w = graph.edge_arrays
    rates = omegas.copy()
    np.add.at(rates, src, w * np.sin(thetas[dst] - thetas[src]))
    np.add.at(rates, dst, w * np.sin(thetas[src] - thetas[dst]))
    return rates


def lohe_complex(units: np.ndarray, graph: NetworkGraph) -> np.ndarray:
    """Velocities of the driftless Lohe model on U(n), in complex coordinates.

    ``units`` has shape (N, n, n) with unitary entries; edge weights come
    from the graph.  The drift (Hermitian) terms are taken to be zero, the
    case every common-drift model reduces to by a change of variables.
    """
    units = np.asarray(units, dtype=complex)
    if units.ndim != 3 or units.shape[1] != units.shape[2]:
        raise ValueError("units must have shape (N, n, n)")
    if units.shape[0] != graph.n_agents:
        raise ValueError("number of units must match the graph")
    eye = np.eye(units.shape[1])
    uhu = np.conj(np.swapaxes(units, -1, -2)) @ units
    if np.max(np.abs(uhu - eye)) > 1e-8:
        raise ValueError("units must be unitary to 1e-8")
    n = units.shape[0]
    wmat = graph.weight_matrix
    s = (wmat @ units.reshape(n, -1)).reshape(units.shape)
    return 0.5 * (s - units @ np.conj(np.swapaxes(s, -1, -2)) @ units)


# ---------------------------------------------------------------------------
# finite differences


def finite_difference_gradient(state: SystemState, potential_fn, h: float = 1e-5
                               ) -> tuple[TangentVector, ...]:
    """Central-difference Riemannian gradient of a scalar state function.

    For each agent the potential is probed along every orthonormal tangent
    basis direction through the exponential map; the O(h^2) stencil is
    assembled back into a tangent vector.
    """
    if h <= 0:
        raise ValueError("step size h must be positive")
    m = state.manifold
    out = []
    coords = state.coords
    for i in range(state.n_agents):
        basis = m.tangent_basis(coords[i])
        grad = np.zeros_like(coords[i])
        for e in basis:
            plus = coords.copy()
            plus[i] = m.exp(coords[i], h * e)
            minus = coords.copy()
            minus[i] = m.exp(coords[i], -h * e)
            df = potential_fn(SystemState(m, plus)) - potential_fn(SystemState(m, minus))
            grad = grad + (df / (2.0 * h)) * e
        out.append(TangentVector(state.point(i), m.proj(coords[i], grad)))
    return tuple(out)


def max_velocity_norm(vectors) -> float:
    """Largest tangent norm among per-agent velocities (arrays or wrappers)."""
    if isinstance(vectors, np.ndarray):
        return float(np.max(_fro_norm(vectors))) if vectors.size else 0.0
    return max(v.norm for v in vectors)


# complex <-> realified state helpers used by the Lohe integration path


def state_to_complex(state: SystemState) -> np.ndarray:
    if not isinstance(state.manifold, UnitaryRealified):
        raise ValueError("complex coordinates only exist for UnitaryRealified states")
    return derealify(state.coords)


def state_from_complex(manifold: UnitaryRealified, units: np.ndarray) -> SystemState:
    return SystemState(manifold, realify(units))
