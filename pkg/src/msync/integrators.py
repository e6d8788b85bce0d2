"""Manifold-respecting ODE integration and trajectory classification.

The stepper is classical fourth-order Runge-Kutta adapted to the manifold:
stage points are reached through the exponential map of the projected
update, and stage velocities are parallel-transported back to the base
tangent space before combining.  On the circle this reproduces flat RK4 in
angle coordinates exactly, which is what the coordinate-equivalence checks
in the test suite rely on.

Two model-specific charts integrate the polar Kuramoto system (flat phase
coordinates) and the complex Lohe system (complex unitary coordinates);
both store samples as ordinary realified states so trajectories from
different charts can be compared sample by sample.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    Algorithm,
    FlowSpec,
    SmoothingProfile,
    SystemState,
    _chordal_potential_raw,
    _chordal_velocity_raw,
    _geodesic_potential_raw,
    _geodesic_velocity_raw,
    lohe_complex,
)
from .graphs import NetworkGraph
from .manifolds import (
    Circle,
    GeodesicDomainError,
    Manifold,
    UnitaryRealified,
    _expm_skew_hermitian,
    _fro_norm,
    derealify,
    realify,
)
from .topology import closed_broken_geodesic, winding_invariant

__all__ = [
    "IntegrationError",
    "Outcome",
    "OutcomeReport",
    "Trajectory",
    "integrate",
    "classify_outcome",
]

# Per-step tolerance for the monotone-descent runtime check.
DESCENT_TOL = 1e-9

# Allowed on-manifold drift after retraction before the run is aborted.
DRIFT_TOL = 1e-6

# Geodesic distance below which agents count as coincident for consensus.
CONSENSUS_TOL = 1e-6

# Tolerance on the equal-partition spacing test for splay-like outcomes.
SPACING_TOL = 1e-4


class IntegrationError(RuntimeError):
    """Raised when a trajectory leaves the manifold or violates descent."""


class Outcome(str, enum.Enum):
    CONSENSUS = "Consensus"
    SPLAY_LIKE = "SplayLike"
    OTHER_EQUILIBRIUM = "OtherEquilibrium"
    NOT_CONVERGED = "NotConverged"


@dataclass(frozen=True)
class OutcomeReport:
    """Classification of a converged (or timed-out) trajectory endpoint."""

    outcome: Outcome
    final_grad_norm: float
    consensus_distance: float | None = None
    winding: object = None
    spacing_error: float | None = None

    def to_json(self) -> dict:
        winding = list(self.winding) if isinstance(self.winding, tuple) else self.winding
        return {
            "outcome": self.outcome.value,
            "final_grad_norm": self.final_grad_norm,
            "consensus_distance": self.consensus_distance,
            "winding": winding,
            "spacing_error": self.spacing_error,
        }


@dataclass
class Trajectory:
    """Sampled states, potentials, and diagnostics of one integration run."""

    times: np.ndarray
    states: list[SystemState]
    potentials: np.ndarray
    grad_norms: np.ndarray
    converged: bool
    outcome: OutcomeReport
    step_bound_violations: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def final_state(self) -> SystemState:
        return self.states[-1]

    @property
    def n_samples(self) -> int:
        return len(self.times)


# ---------------------------------------------------------------------------
# charts: coordinate systems the stepper operates in


class _ManifoldChart:
    """Integrates directly in ambient coordinates of the manifold."""

    def __init__(self, manifold: Manifold, velocity_fn, potential_fn):
        self.manifold = manifold
        self._velocity = velocity_fn
        self._potential = potential_fn

    def velocity(self, z):
        return self._velocity(z)

    def exp(self, z, w):
        return self.manifold.exp(z, w)

    def transport_back(self, z, w_stage, vel):
        return self.manifold.transport_to_base(z, w_stage, vel)

    def potential(self, z) -> float:
        return self._potential(z)

    def max_speed(self, vel) -> float:
        return float(np.max(_fro_norm(vel)))

    def to_coords(self, z) -> np.ndarray:
        return z

    def drift(self, z) -> float:
        return float(np.max(self.manifold.defect(z)))


class _PolarChart:
    """Flat phase coordinates for the Kuramoto model on the circle."""

    def __init__(self, manifold: Circle, graph: NetworkGraph):
        from .dynamics import kuramoto_polar

        if not isinstance(manifold, Circle):
            raise ValueError("the polar Kuramoto flow lives on the circle")
        self.manifold = manifold
        self.graph = graph
        self._rhs = kuramoto_polar

    def velocity(self, z):
        return self._rhs(z, self.graph)

    def exp(self, z, w):
        return z + w

    def transport_back(self, z, w_stage, vel):
        return vel

    def potential(self, z) -> float:
        return _chordal_potential_raw(self.manifold, Circle.from_angle(z), self.graph)

    def max_speed(self, vel) -> float:
        return float(np.max(np.abs(vel)))

    def to_coords(self, z) -> np.ndarray:
        return Circle.from_angle(z)

    def drift(self, z) -> float:
        return 0.0


class _LoheChart:
    """Complex unitary coordinates for the driftless Lohe model."""

    def __init__(self, manifold: UnitaryRealified, graph: NetworkGraph):
        if not isinstance(manifold, UnitaryRealified):
            raise ValueError("the complex Lohe flow lives on realified U(n)")
        self.manifold = manifold
        self.graph = graph

    def velocity(self, z):
        return lohe_complex(z, self.graph)

    @staticmethod
    def _rel_skew(z, w):
        s = np.conj(np.swapaxes(z, -1, -2)) @ w
        return 0.5 * (s - np.conj(np.swapaxes(s, -1, -2)))

    def exp(self, z, w):
        return z @ _expm_skew_hermitian(self._rel_skew(z, w))

    def transport_back(self, z, w_stage, vel):
        s = self._rel_skew(z, w_stage)
        e = _expm_skew_hermitian(-0.5 * s)
        zh = np.conj(np.swapaxes(z, -1, -2))
        return z @ (e @ (zh @ vel) @ e)

    def potential(self, z) -> float:
        # realified chordal potential: each complex entry appears twice
        src, dst, w = self.graph.edge_arrays
        diff = z[src] - z[dst]
        return float(np.sum(w * np.einsum("eij,eij->e", diff, diff.conj()).real))

    def max_speed(self, vel) -> float:
        # realified Frobenius norm is sqrt(2) times the complex norm
        return float(np.max(np.sqrt(2.0 * np.einsum("kij,kij->k", vel, vel.conj()).real)))

    def to_coords(self, z) -> np.ndarray:
        return realify(z)

    def drift(self, z) -> float:
        eye = np.eye(z.shape[-1])
        return float(np.max(np.abs(np.conj(np.swapaxes(z, -1, -2)) @ z - eye)))


def _make_chart(initial: SystemState, spec: FlowSpec):
    m = initial.manifold
    algorithm = spec.algorithm
    if algorithm == Algorithm.GEODESIC_CONSENSUS:
        profile = spec.profile_for(m)

        def vel(z):
            try:
                return _geodesic_velocity_raw(m, z, spec.graph, profile)
            except GeodesicDomainError as err:
                raise IntegrationError(f"log map failed during geodesic flow: {err}") from err

        return _ManifoldChart(
            m, vel, lambda z: _geodesic_potential_raw(m, z, spec.graph, profile)
        ), initial.coords
    if algorithm == Algorithm.CHORDAL_CONSENSUS:
        return _ManifoldChart(
            m,
            lambda z: _chordal_velocity_raw(m, z, spec.graph),
            lambda z: _chordal_potential_raw(m, z, spec.graph),
        ), initial.coords
    if algorithm == Algorithm.KURAMOTO_POLAR:
        chart = _PolarChart(m, spec.graph)
        return chart, Circle.angle_of(initial.coords)
    if algorithm == Algorithm.LOHE_COMPLEX:
        chart = _LoheChart(m, spec.graph)
        return chart, derealify(initial.coords)
    raise ValueError(f"unknown algorithm {algorithm!r}")


# ---------------------------------------------------------------------------
# integration driver


def integrate(initial: SystemState, spec: FlowSpec, cycle_order=None) -> Trajectory:
    """Run the flow from ``initial`` until convergence or ``t_end``.

    Samples are recorded every ``spec.sample_every`` steps (plus the final
    state).  The run stops early once the largest per-agent velocity norm
    falls below ``spec.grad_tol``.  Monotone descent of the potential is
    enforced at sampling resolution; violations beyond the per-step
    tolerance abort with :class:`IntegrationError`, as does on-manifold
    drift beyond the retraction tolerance.
    """
    if initial.n_agents != spec.graph.n_agents:
        raise ValueError("state and graph disagree on the number of agents")
    chart, z = _make_chart(initial, spec)
    m = initial.manifold
    dt = spec.dt
    n_steps = int(math.ceil(spec.t_end / dt - 1e-12))
    step_cap = m.injectivity_radius / 10.0

    times = [0.0]
    states = [initial]
    vel = chart.velocity(z)
    speed = chart.max_speed(vel)
    potentials = [chart.potential(z)]
    grad_norms = [speed]
    step_bound_violations = 0
    converged = speed < spec.grad_tol

    step = 0
    while not converged and step < n_steps:
        if dt * speed > step_cap:
            step_bound_violations += 1
        k1 = vel
        y2 = chart.exp(z, (0.5 * dt) * k1)
        k2 = chart.transport_back(z, (0.5 * dt) * k1, chart.velocity(y2))
        y3 = chart.exp(z, (0.5 * dt) * k2)
        k3 = chart.transport_back(z, (0.5 * dt) * k2, chart.velocity(y3))
        y4 = chart.exp(z, dt * k3)
        k4 = chart.transport_back(z, dt * k3, chart.velocity(y4))
        z = chart.exp(z, (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        step += 1

        vel = chart.velocity(z)
        speed = chart.max_speed(vel)
        converged = speed < spec.grad_tol
        if step % spec.sample_every == 0 or converged or step == n_steps:
            if chart.drift(z) > DRIFT_TOL:
                raise IntegrationError("state drifted off the manifold beyond tolerance")
            value = chart.potential(z)
            if value > potentials[-1] + DESCENT_TOL:
                raise IntegrationError(
                    f"potential increased by {value - potentials[-1]:.3e} at t={step * dt:.6g}"
                )
            times.append(step * dt)
            states.append(SystemState(m, chart.to_coords(z), validate=False))
            potentials.append(value)
            grad_norms.append(speed)

    traj = Trajectory(
        times=np.asarray(times),
        states=states,
        potentials=np.asarray(potentials),
        grad_norms=np.asarray(grad_norms),
        converged=converged,
        outcome=OutcomeReport(Outcome.NOT_CONVERGED, final_grad_norm=speed),
        step_bound_violations=step_bound_violations,
        meta={"algorithm": spec.algorithm.value, "dt": dt, "steps": step},
    )
    traj.outcome = classify_outcome(traj, m, spec.graph, cycle_order)
    return traj


# ---------------------------------------------------------------------------
# outcome classification


def _default_cycle_order(graph: NetworkGraph):
    order = tuple(range(1, graph.n_agents + 1))
    return order if graph.has_cycle(order) else None


def classify_outcome(traj: Trajectory, manifold: Manifold, graph: NetworkGraph,
                     cycle_order=None) -> OutcomeReport:
    """Label the trajectory endpoint.

    Consensus means every agent sits within a common tolerance of a single
    point; splay-like means the designated cycle carries a nonzero winding
    invariant and consecutive distances match the weight-inverse partition
    of the broken geodesic's length.  Anything else that converged is some
    other equilibrium.
    """
    final = traj.final_state
    if final.manifold != manifold:
        raise ValueError("trajectory manifold mismatch")
    grad_norm = float(traj.grad_norms[-1])
    if not traj.converged:
        return OutcomeReport(Outcome.NOT_CONVERGED, final_grad_norm=grad_norm)

    # distance to the consensus set, measured against any single agent
    dists = manifold.dist(final.coords, final.coords[0][None, ...])
    consensus_distance = float(np.max(dists))
    if consensus_distance < CONSENSUS_TOL:
        return OutcomeReport(
            Outcome.CONSENSUS,
            final_grad_norm=grad_norm,
            consensus_distance=consensus_distance,
        )

    if cycle_order is None:
        cycle_order = _default_cycle_order(graph)
    winding = None
    spacing_error = None
    if cycle_order is not None:
        try:
            winding = winding_invariant(final, cycle_order)
            broken = closed_broken_geodesic(final, cycle_order)
            inv_w = 1.0 / graph.cycle_weights(cycle_order)
            target = broken.total_length * inv_w / np.sum(inv_w)
            spacing_error = float(np.max(np.abs(broken.segment_lengths - target)))
        except GeodesicDomainError:
            winding = None
    nonzero = (
        winding is not None
        and (any(w != 0 for w in winding) if isinstance(winding, tuple) else winding != 0)
    )
    if nonzero and spacing_error is not None and spacing_error < SPACING_TOL:
        return OutcomeReport(
            Outcome.SPLAY_LIKE,
            final_grad_norm=grad_norm,
            consensus_distance=consensus_distance,
            winding=winding,
            spacing_error=spacing_error,
        )
    return OutcomeReport(
        Outcome.OTHER_EQUILIBRIUM,
        final_grad_norm=grad_norm,
        consensus_distance=consensus_distance,
        winding=winding,
        spacing_error=spacing_error,
    )
