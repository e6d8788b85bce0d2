"""Geometry of the manifold catalog: exp/log, distances, projections, sampling."""

import numpy as np
import pytest

from msync import (
    Circle,
    FlatTorus,
    GeodesicDomainError,
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

from oracles import lstsq_tangent_projection, torus_mesh_distance


def col(*vals):
    return np.array(vals, dtype=float).reshape(-1, 1)


class TestExpLogExamples:
    def test_circle_quarter_turn(self):
        c = Circle()
        x = ManifoldPoint(c, col(1, 0))
        v = TangentVector(x, col(0, np.pi / 2))
        y = exp_map(x, v)
        np.testing.assert_allclose(y.coords, col(0, 1), atol=1e-12)
        back = log_map(x, y)
        np.testing.assert_allclose(back.coords, v.coords, atol=1e-12)

    def test_sphere_half_great_circle(self):
        s = Sphere(2)
        x = ManifoldPoint(s, col(1, 0, 0))
        v = TangentVector(x, col(0, np.pi, 0))
        y = exp_map(x, v)
        np.testing.assert_allclose(y.coords, col(-1, 0, 0), atol=1e-12)

    def test_so2_half_turn(self):
        so = SpecialOrthogonal(2)
        x = ManifoldPoint(so, np.eye(2))
        v = TangentVector(x, np.array([[0.0, -np.pi], [np.pi, 0.0]]))
        y = exp_map(x, v)
        np.testing.assert_allclose(y.coords, -np.eye(2), atol=1e-12)

    def test_log_identity_is_zero(self):
        s = Sphere(2)
        x = ManifoldPoint(s, col(1, 0, 0))
        v = log_map(x, x)
        assert v.norm < 1e-12

    def test_log_at_antipode_raises(self):
        s = Sphere(2)
        x = ManifoldPoint(s, col(1, 0, 0))
        y = ManifoldPoint(s, col(-1, 0, 0))
        with pytest.raises(GeodesicDomainError):
            log_map(x, y)

    def test_shape_mismatch_rejected(self):
        s = Sphere(2)
        with pytest.raises(ValueError):
            ManifoldPoint(s, col(1, 0))


class TestDistances:
    def test_sphere_quarter(self):
        s = Sphere(2)
        e1 = ManifoldPoint(s, col(1, 0, 0))
        e2 = ManifoldPoint(s, col(0, 1, 0))
        assert geodesic_distance(e1, e2) == pytest.approx(np.pi / 2)
        assert chordal_distance(e1, e2) == pytest.approx(np.sqrt(2))

    def test_circle_antipodal(self):
        c = Circle()
        a = ManifoldPoint(c, col(1, 0))
        b = ManifoldPoint(c, col(-1, 0))
        assert geodesic_distance(a, b) == pytest.approx(np.pi)

    def test_circle_chord_identity(self):
        c = Circle()
        a = ManifoldPoint(c, Circle.from_angle(0.0))
        b = ManifoldPoint(c, Circle.from_angle(np.pi / 3))
        assert chordal_distance(a, b) == pytest.approx(2 * np.sin(np.pi / 6))

    def test_torus_axis_distance(self):
        t = FlatTorus(1.0, 1.0)
        a = ManifoldPoint(t, t.from_angles(0.0, 0.0))
        b = ManifoldPoint(t, t.from_angles(np.pi / 2, 0.0))
        assert geodesic_distance(a, b) == pytest.approx(np.pi / 2)

    def test_torus_distance_against_mesh_search(self):
        t = FlatTorus(1.0, 0.5)
        h = 2 * np.pi / 96  # endpoints on the mesh grid so snapping is exact
        cases = [
            ((0.0, 0.0), (24 * h, 0.0)),
            ((0.0, 0.0), (15 * h, 31 * h)),
            ((5 * h, 90 * h), (37 * h, 17 * h)),
            ((0.0, 0.0), (43 * h, 43 * h)),
        ]
        for aa, bb in cases:
            a = ManifoldPoint(t, t.from_angles(*aa))
            b = ManifoldPoint(t, t.from_angles(*bb))
            exact = geodesic_distance(a, b)
            mesh = torus_mesh_distance(1.0, 0.5, aa, bb)
            assert mesh == pytest.approx(exact, rel=0.02, abs=0.02)
            assert mesh >= exact - 1e-9  # graph paths cannot undercut the metric

    def test_chordal_zero_at_identity(self, manifold):
        x = random_point(manifold, 0)
        assert chordal_distance(x, x) == 0.0


class TestProjection:
    def test_sphere_radial_removed(self):
        s = Sphere(2)
        x = ManifoldPoint(s, col(1, 0, 0))
        v = project_tangent(x, col(1, 1, 0))
        np.testing.assert_allclose(v.coords, col(0, 1, 0), atol=1e-12)

    def test_so2_skew_part(self):
        so = SpecialOrthogonal(2)
        x = ManifoldPoint(so, np.eye(2))
        v = project_tangent(x, np.array([[1.0, 1.0], [-1.0, 1.0]]))
        np.testing.assert_allclose(v.coords, np.array([[0.0, 1.0], [-1.0, 0.0]]), atol=1e-12)

    def test_idempotent_and_matches_lstsq(self, manifold):
        rng = np.random.default_rng(5)
        for _ in range(5):
            x = manifold.random_point(rng)
            ambient = rng.standard_normal(manifold.ambient_shape)
            once = manifold.proj(x, ambient)
            twice = manifold.proj(x, once)
            np.testing.assert_allclose(twice, once, atol=1e-12)
            oracle = lstsq_tangent_projection(manifold, x, ambient)
            np.testing.assert_allclose(once, oracle, atol=1e-9)

    def test_self_adjoint(self, manifold):
        rng = np.random.default_rng(6)
        x = manifold.random_point(rng)
        a = rng.standard_normal(manifold.ambient_shape)
        b = rng.standard_normal(manifold.ambient_shape)
        pa = manifold.proj(x, a)
        pb = manifold.proj(x, b)
        assert np.sum(pa * b) == pytest.approx(np.sum(a * pb), abs=1e-10)

    def test_tangent_already(self, manifold):
        rng = np.random.default_rng(7)
        x = manifold.random_point(rng)
        v = manifold.random_tangent(rng, x, 0.7)
        np.testing.assert_allclose(manifold.proj(x, v), v, atol=1e-12)


class TestMetricInner:
    def test_unit_tangent(self):
        c = Circle()
        x = ManifoldPoint(c, col(1, 0))
        u = TangentVector(x, col(0, 1))
        assert metric_inner(x, u, u) == pytest.approx(1.0)

    def test_bilinear_sign(self):
        c = Circle()
        x = ManifoldPoint(c, col(1, 0))
        u = TangentVector(x, col(0, 1))
        v = TangentVector(x, col(0, -1))
        assert metric_inner(x, u, v) == pytest.approx(-1.0)

    def test_zero_vector(self, manifold):
        x = random_point(manifold, 1)
        z = random_tangent(x, 0.0, 2)
        u = random_tangent(x, 1.0, 3)
        assert metric_inner(x, z, u) == 0.0

    def test_base_mismatch_rejected(self):
        c = Circle()
        x = ManifoldPoint(c, col(1, 0))
        y = ManifoldPoint(c, col(0, 1))
        u = TangentVector(x, col(0, 1))
        w = TangentVector(y, col(1, 0))
        with pytest.raises(ValueError):
            metric_inner(x, u, w)


class TestInjectivityRadius:
    def test_catalog_values(self):
        assert injectivity_radius(Sphere(2)) == pytest.approx(np.pi)
        assert injectivity_radius(Circle()) == pytest.approx(np.pi)
        assert injectivity_radius(FlatTorus(1.0, 0.5)) == pytest.approx(np.pi / 2)
        assert injectivity_radius(SpecialOrthogonal(3)) == pytest.approx(np.pi * np.sqrt(2))
        assert injectivity_radius(UnitaryRealified(2)) == pytest.approx(np.pi * np.sqrt(2))

    def test_exp_log_inverts_inside_radius(self, manifold):
        rng = np.random.default_rng(11)
        r = manifold.injectivity_radius
        n = 1000
        x = manifold.random_point(rng, size=n)
        v = manifold.random_tangent(rng, x, 1.0)
        scales = rng.uniform(0.0, 0.9 * r, size=n)
        v = v * scales[:, None, None]
        y = manifold.exp(x, v)
        back = manifold.log(x, y)
        assert np.max(np.abs(back - v)) < 1e-9

    def test_torus_log_wraps_beyond_radius(self):
        t = FlatTorus(1.0, 0.5)
        rng = np.random.default_rng(3)
        x = t.random_point(rng)
        u2 = t.tangent_basis(x)[1]
        v = 1.1 * t.injectivity_radius * u2  # past the short factor's half turn
        y = t.exp(x, v)
        back = t.log(x, y)
        assert np.max(np.abs(back - v)) > 0.1

    def test_so3_log_fails_near_half_turn(self):
        so = SpecialOrthogonal(3)
        x = np.eye(3)
        gen = np.zeros((3, 3))
        gen[0, 1], gen[1, 0] = -1.0, 1.0

        def rot(angle):
            return so.exp(x, angle * gen)

        ok = so.log(x, rot(np.pi - 1e-4))
        assert np.isfinite(ok).all()
        with pytest.raises(GeodesicDomainError):
            so.log(x, rot(np.pi - 1e-8))
        # distance at the failure point is the injectivity radius
        assert so.dist(x, rot(np.pi)) == pytest.approx(np.pi * np.sqrt(2), abs=1e-9)


class TestGradientIdentity:
    def test_squared_distance_gradient_is_minus_two_log(self, manifold):
        # directional derivatives of d(., y)^2 through exp against -2 log_x(y)
        rng = np.random.default_rng(13)
        h = 1e-5
        for _ in range(10):
            x = manifold.random_point(rng)
            v = manifold.random_tangent(rng, x, rng.uniform(0.1, 0.8) * manifold.injectivity_radius)
            y = manifold.exp(x, v)
            analytic = -2.0 * manifold.log(x, y)
            basis = manifold.tangent_basis(x)
            fd = np.zeros_like(x)
            for e in basis:
                plus = manifold.dist(manifold.exp(x, h * e), y) ** 2
                minus = manifold.dist(manifold.exp(x, -h * e), y) ** 2
                fd = fd + ((plus - minus) / (2 * h)) * e
            scale = max(np.max(np.abs(analytic)), 1.0)
            assert np.max(np.abs(fd - analytic)) / scale < 1e-6


class TestChordalVsGeodesic:
    def test_chordal_below_geodesic(self, manifold):
        rng = np.random.default_rng(17)
        x = manifold.random_point(rng, size=300)
        y = manifold.random_point(rng, size=300)
        chord = manifold.chordal(x, y)
        geo = manifold.dist(x, y)
        assert np.all(chord <= geo + 1e-12)
        apart = geo > 1e-3
        assert np.all(chord[apart] < geo[apart])


class TestRandomSampling:
    def test_on_manifold_and_deterministic(self, manifold):
        a = manifold.random_point(np.random.default_rng(21), size=50)
        b = manifold.random_point(np.random.default_rng(21), size=50)
        assert np.max(manifold.defect(a)) < 1e-10
        np.testing.assert_array_equal(a, b)

    def test_zero_scale_tangent(self, manifold):
        rng = np.random.default_rng(22)
        x = manifold.random_point(rng)
        v = manifold.random_tangent(rng, x, 0.0)
        assert np.all(v == 0.0)

    def test_tangent_norm_matches_scale(self, manifold):
        rng = np.random.default_rng(23)
        x = manifold.random_point(rng)
        v = manifold.random_tangent(rng, x, 0.37)
        assert np.linalg.norm(v) == pytest.approx(0.37, abs=1e-12)

    def test_tangent_basis_orthonormal(self, manifold):
        rng = np.random.default_rng(24)
        x = manifold.random_point(rng)
        basis = manifold.tangent_basis(x)
        assert len(basis) == manifold.dim
        gram = np.einsum("aij,bij->ab", basis, basis)
        np.testing.assert_allclose(gram, np.eye(manifold.dim), atol=1e-10)


class TestRealified:
    def test_realify_identity_and_imaginary_unit(self):
        np.testing.assert_array_equal(realify(np.eye(2, dtype=complex)), np.eye(4))
        np.testing.assert_array_equal(
            realify(np.array([[1j]])), np.array([[0.0, -1.0], [1.0, 0.0]])
        )

    def test_realify_homomorphism(self):
        rng = np.random.default_rng(31)
        z1 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        z2 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        np.testing.assert_allclose(realify(z1 @ z2), realify(z1) @ realify(z2), atol=1e-12)
        np.testing.assert_allclose(
            realify(2.0 * z1 - 0.5 * z2), 2.0 * realify(z1) - 0.5 * realify(z2), atol=1e-12
        )

    def test_realified_unitary_is_special_orthogonal(self):
        u = UnitaryRealified(3)
        rng = np.random.default_rng(32)
        x = u.random_point(rng, size=20)
        eye = np.eye(6)
        assert np.max(np.abs(np.swapaxes(x, -1, -2) @ x - eye)) < 1e-12
        np.testing.assert_allclose(np.linalg.det(x), 1.0, atol=1e-10)

    def test_products_and_exponentials_stay_in_block_structure(self):
        u = UnitaryRealified(2)
        rng = np.random.default_rng(33)
        x = u.random_point(rng)
        y = u.random_point(rng)
        prod = x @ y
        assert np.max(np.abs(realify(derealify(prod)) - prod)) < 1e-12
        v = u.random_tangent(rng, x, 1.3)
        z = u.exp(x, v)
        assert np.max(np.abs(realify(derealify(z)) - z)) < 1e-12


class TestSerialization:
    def test_round_trip(self, manifold):
        again = manifold_from_json(manifold.to_json())
        assert again == manifold

    def test_bad_kind_rejected(self):
        with pytest.raises(ValueError):
            manifold_from_json({"kind": "MoebiusStrip", "params": []})

    def test_extra_keys_rejected(self):
        with pytest.raises(ValueError):
            manifold_from_json({"kind": "Circle", "params": [], "extra": 1})
