"""Broken geodesics, winding invariants, chordal radii, and threshold checks."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msync import (
    Algorithm,
    Circle,
    FlatTorus,
    FlowSpec,
    GeodesicDomainError,
    Outcome,
    SpecialOrthogonal,
    Sphere,
    SplayConfig,
    SystemState,
    UnitaryRealified,
    chordal_radius,
    circle_loop,
    circulant_graph,
    closed_broken_geodesic,
    consensus_state,
    construct_splay,
    cycle_graph,
    integrate,
    perturb_state,
    phase_loop,
    potential_chordal,
    random_state,
    threshold_check,
    torus_generator_loop,
    winding_invariant,
)


def circle_state(*angles):
    return SystemState(Circle(), Circle.from_angle(np.array(angles, dtype=float)))


def full_order(n):
    return tuple(range(1, n + 1))


class TestClosedBrokenGeodesic:
    def test_splay_total_length_is_loop_length(self):
        state = construct_splay(SplayConfig(circle_loop(Circle()), cycle_graph(4)))
        broken = closed_broken_geodesic(state, full_order(4))
        assert broken.total_length == pytest.approx(2 * np.pi)
        np.testing.assert_allclose(broken.segment_lengths, np.pi / 2)

    def test_consensus_has_zero_length(self):
        state = consensus_state(Sphere(2), 5, seed=1)
        broken = closed_broken_geodesic(state, full_order(5))
        assert broken.total_length == pytest.approx(0.0, abs=1e-7)

    def test_antipodal_pair_rejected(self):
        m = Sphere(2)
        coords = np.array([
            [[1.0], [0.0], [0.0]],
            [[-1.0], [0.0], [0.0]],
            [[0.0], [1.0], [0.0]],
        ])
        state = SystemState(m, coords)
        with pytest.raises(GeodesicDomainError):
            closed_broken_geodesic(state, full_order(3))

    def test_bad_cycle_order_rejected(self):
        state = circle_state(0.0, 1.0, 2.0)
        with pytest.raises(ValueError):
            closed_broken_geodesic(state, (1, 2, 2))


class TestWindingInvariant:
    @given(st.integers(min_value=5, max_value=40), st.integers(min_value=-2, max_value=2))
    @settings(max_examples=40, deadline=None)
    def test_circle_twists(self, n, q):
        if abs(2 * np.pi * q / n) >= np.pi - 1e-3:
            return  # consecutive gap would reach the half turn
        theta = 2 * np.pi * q * np.arange(n) / n
        state = circle_state(*theta)
        assert winding_invariant(state, full_order(n)) == q

    def test_two_loops_explicit(self):
        n = 5
        theta = 4 * np.pi * np.arange(n) / n
        assert winding_invariant(circle_state(*theta), full_order(n)) == 2

    def test_consensus_on_torus(self):
        state = consensus_state(FlatTorus(1, 1), 6, seed=2)
        assert winding_invariant(state, full_order(6)) == (0, 0)

    def test_torus_generator_windings(self):
        t = FlatTorus(1.0, 1.0)
        for p, q in [(1, 0), (0, 1), (1, 1)]:
            state = construct_splay(
                SplayConfig(torus_generator_loop(t, p, q), cycle_graph(12))
            )
            assert winding_invariant(state, full_order(12)) == (p, q)

    def test_unitary_phase_winding(self):
        u = UnitaryRealified(1)
        state = construct_splay(SplayConfig(phase_loop(u), cycle_graph(8)))
        assert winding_invariant(state, full_order(8)) == 1

    def test_unitary_consensus_winding_zero(self):
        state = consensus_state(UnitaryRealified(2), 5, seed=3)
        assert winding_invariant(state, full_order(5)) == 0

    def test_sphere_and_rotations_unsupported(self):
        s_state = consensus_state(Sphere(2), 4, seed=4)
        assert winding_invariant(s_state, full_order(4)) is None
        so_state = consensus_state(SpecialOrthogonal(3), 4, seed=5)
        assert winding_invariant(so_state, full_order(4)) is None


class TestChordalRadius:
    def test_circle_and_sphere_exact(self):
        assert chordal_radius(Circle()) == 2.0
        assert chordal_radius(Sphere(2)) == 2.0
        assert chordal_radius(Sphere(4)) == 2.0

    def test_square_torus_near_two(self):
        a = chordal_radius(FlatTorus(1.0, 1.0))
        assert 1.99 < a <= 2.0

    def test_groups_near_two_sqrt_two(self):
        for m in (SpecialOrthogonal(3), SpecialOrthogonal(4), UnitaryRealified(1), UnitaryRealified(2)):
            a = chordal_radius(m)
            assert 2 * np.sqrt(2) - 5e-3 < a <= 2 * np.sqrt(2) + 1e-12

    def test_skinny_torus(self):
        # R = pi/2; the geodesic sphere stays within one factor's quarter
        # turn, so the chord is smallest straight along the thin factor
        t = FlatTorus(2.0, 0.5)
        a = chordal_radius(t)
        expected = 2 * 0.5 * np.sin(np.pi / 2)  # angle pi on the thin circle
        assert a == pytest.approx(expected, abs=2e-2)
        assert a <= expected

    def test_containment_property(self, manifold):
        # chordal ball of radius A sits inside the geodesic R-ball
        rng = np.random.default_rng(6)
        a = chordal_radius(manifold)
        r = manifold.injectivity_radius
        kept = 0
        while kept < 1000:
            x = manifold.random_point(rng, size=256)
            y = manifold.random_point(rng, size=256)
            chord = manifold.chordal(x, y)
            mask = chord <= a
            if not np.any(mask):
                continue
            assert np.all(manifold.dist(x[mask], y[mask]) <= r + 1e-9)
            kept += int(np.sum(mask))


class TestThresholdCheck:
    def test_twist_passes_chordal_threshold(self):
        state = construct_splay(SplayConfig(circle_loop(Circle()), cycle_graph(20)))
        report = threshold_check(state, cycle_graph(20), Algorithm.CHORDAL_CONSENSUS)
        assert report.potential == pytest.approx(10 * (2 * np.sin(np.pi / 20)) ** 2, rel=1e-12)
        assert report.bound == pytest.approx(2.0)
        assert report.passed and report.winding == 1 and report.applies

    def test_small_twist_fails_threshold(self):
        state = construct_splay(SplayConfig(circle_loop(Circle()), cycle_graph(3)))
        report = threshold_check(state, cycle_graph(3), Algorithm.CHORDAL_CONSENSUS)
        assert report.potential == pytest.approx(4.5)
        assert not report.passed
        assert report.margin < 0

    def test_consensus_passes_but_does_not_apply(self):
        state = consensus_state(Circle(), 6, seed=7)
        report = threshold_check(state, cycle_graph(6), Algorithm.CHORDAL_CONSENSUS)
        assert report.passed
        assert report.winding == 0
        assert not report.applies

    def test_geodesic_bound_uses_smoothing_margin(self):
        state = construct_splay(SplayConfig(circle_loop(Circle()), cycle_graph(20)))
        report = threshold_check(state, cycle_graph(20), Algorithm.GEODESIC_CONSENSUS)
        assert report.bound == pytest.approx(0.5 * (0.9 * np.pi) ** 2)
        assert report.passed

    def test_json_fields(self):
        state = consensus_state(Circle(), 5, seed=8)
        report = threshold_check(state, cycle_graph(5), Algorithm.CHORDAL_CONSENSUS)
        data = report.to_json()
        assert set(data) == {"potential", "bound", "pass", "winding", "margin"}


class TestWindingConservation:
    def test_conserved_along_threshold_passing_runs(self):
        g = cycle_graph(16)
        base = construct_splay(SplayConfig(circle_loop(Circle()), g))
        for seed in range(3):
            init = perturb_state(base, 0.05, seed)
            report = threshold_check(init, g, Algorithm.CHORDAL_CONSENSUS)
            assert report.applies
            spec = FlowSpec(Algorithm.CHORDAL_CONSENSUS, g, dt=0.05, t_end=200.0,
                            sample_every=100, grad_tol=1e-6)
            traj = integrate(init, spec)
            windings = [winding_invariant(s, full_order(16)) for s in traj.states]
            assert all(w == 1 for w in windings)
            assert traj.outcome.outcome != Outcome.CONSENSUS


class TestCirculantScaling:
    def test_twist_potential_halves_with_doubling(self):
        values = {}
        for n in (20, 40, 80):
            graph = circulant_graph(n, 2)
            state = construct_splay(SplayConfig(circle_loop(Circle()), cycle_graph(n)))
            values[n] = potential_chordal(state, graph)
        assert values[20] / values[40] == pytest.approx(2.0, abs=0.2)
        assert values[40] / values[80] == pytest.approx(2.0, abs=0.2)
