"""Catalog of embedded Riemannian manifolds and their geometric primitives.

Every manifold is represented extrinsically: points are real matrices in an
ambient space ``R^{rows x cols}`` and tangent vectors live in the same space.
All operations accept arbitrary leading batch dimensions, i.e. arrays of
shape ``(..., rows, cols)``.

The catalog covers the unit circle, the unit n-sphere, the flat torus
(Clifford embedding in R^4), the rotation group SO(n), and U(n) realified
into R^{2n x 2n}.  Each member is closed, geodesically complete, and has a
strictly positive global injectivity radius.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from functools import cached_property

import numpy as np
import scipy.linalg

__all__ = [
    "GeodesicDomainError",
    "Manifold",
    "Circle",
    "Sphere",
    "FlatTorus",
    "SpecialOrthogonal",
    "UnitaryRealified",
    "ManifoldPoint",
    "TangentVector",
    "exp_map",
    "log_map",
    "geodesic_distance",
    "chordal_distance",
    "project_tangent",
    "metric_inner",
    "injectivity_radius",
    "random_point",
    "random_tangent",
    "realify",
    "derealify",
    "manifold_from_json",
]

# Margin (in principal-angle units) at which the logarithm map is considered
# too close to the cut locus to be trusted.
CUT_LOCUS_MARGIN = 1e-6

# Tolerance for the on-manifold invariant of validated points.
POINT_TOL = 1e-10


class GeodesicDomainError(ValueError):
    """Raised when a logarithm map or broken geodesic is not uniquely defined."""


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _fro_inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Frobenius inner product over the trailing two axes."""
    return np.einsum("...ij,...ij->...", a, b)


def _fro_norm(a: np.ndarray) -> np.ndarray:
    return np.sqrt(_fro_inner(a, a))


# ---------------------------------------------------------------------------
# realification of complex matrices


def realify(z: np.ndarray) -> np.ndarray:
    """Embed a complex (..., n, n) matrix as a real (..., 2n, 2n) block matrix.

    ``X + iY`` maps to ``[[X, -Y], [Y, X]]``.  The map is a linear algebra
    homomorphism, so products and exponentials commute with it.
    """
    z = np.asarray(z, dtype=complex)
    x, y = z.real, z.imag
    top = np.concatenate([x, -y], axis=-1)
    bot = np.concatenate([y, x], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def derealify(r: np.ndarray) -> np.ndarray:
    """Inverse of :func:`realify` for matrices in the block structure."""
    r = np.asarray(r, dtype=float)
    n = r.shape[-1] // 2
    return r[..., :n, :n] + 1j * r[..., n:, :n]


# ---------------------------------------------------------------------------
# small dense linear algebra helpers (batched, for normal matrices)


def _expm_skew_hermitian(s: np.ndarray) -> np.ndarray:
    """Matrix exponential of a skew-Hermitian (..., n, n) matrix via eigh."""
    w, q = np.linalg.eigh(-1j * s)
    phase = np.exp(1j * w)
    return np.einsum("...ik,...k,...jk->...ij", q, phase, q.conj())


def _principal_angles(m: np.ndarray) -> np.ndarray:
    """Eigenvalue phase angles of a unitary/orthogonal matrix, in (-pi, pi]."""
    lam = np.linalg.eigvals(m)
    lam = lam / np.abs(lam)
    return np.angle(lam)


def _logm_normal_unitary(m: np.ndarray, margin: float = CUT_LOCUS_MARGIN) -> np.ndarray:
    """Principal logarithm of a batch of unitary (or orthogonal) matrices.

    Raises :class:`GeodesicDomainError` when any rotation angle is within
    ``margin`` of pi, where the principal branch stops being unique.
    """
    m = np.asarray(m, dtype=complex)
    lam, v = np.linalg.eig(m)
    lam = lam / np.abs(lam)
    theta = np.angle(lam)
    if np.max(np.abs(theta)) > np.pi - margin:
        raise GeodesicDomainError(
            "log undefined: rotation angle within %.1e of the cut locus" % margin
        )
    d = v * (1j * theta)[..., None, :]
    # solve s @ v = d  =>  v^T s^T = d^T
    s = np.linalg.solve(np.swapaxes(v, -1, -2), np.swapaxes(d, -1, -2))
    s = np.swapaxes(s, -1, -2)
    s = 0.5 * (s - np.conj(np.swapaxes(s, -1, -2)))
    # eig of a normal matrix can return an ill-conditioned basis near
    # degenerate spectra; fall back to scipy's Schur-based logm there.
    resid = _fro_norm(_expm_skew_hermitian(s) - m)
    bad = np.atleast_1d(resid > 1e-10 * max(1.0, float(m.shape[-1])))
    if np.any(bad):
        flat_m = m.reshape((-1,) + m.shape[-2:])
        flat_s = s.reshape((-1,) + s.shape[-2:])
        for idx in np.flatnonzero(bad.ravel()):
            sl = scipy.linalg.logm(flat_m[idx])
            flat_s[idx] = 0.5 * (sl - sl.conj().T)
        s = flat_s.reshape(s.shape)
    return s


# ---------------------------------------------------------------------------
# shared sphere formulas (used by Circle and Sphere)


def _sph_exp(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    theta = _fro_norm(v)[..., None, None]
    y = x * np.cos(theta) + v * np.sinc(theta / np.pi)
    return y / _fro_norm(y)[..., None, None]


def _sph_log(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    dot = np.clip(_fro_inner(x, y), -1.0, 1.0)
    theta = np.arccos(dot)
    if np.max(theta) > np.pi - CUT_LOCUS_MARGIN:
        raise GeodesicDomainError("log undefined: points at or beyond the antipode")
    factor = np.where(theta < 1e-12, 1.0, theta / np.sin(np.where(theta < 1e-12, 1.0, theta)))
    return (y - x * dot[..., None, None]) * factor[..., None, None]


def _sph_dist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(_fro_inner(x, y), -1.0, 1.0))


def _sph_proj(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    return m - x * _fro_inner(x, m)[..., None, None]


def _sph_transport_to_base(x: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Transport ``w`` (tangent at exp_x(v)) back to x along the geodesic."""
    theta = _fro_norm(v)
    safe = np.where(theta < 1e-14, 1.0, theta)[..., None, None]
    e = v / safe
    t_hat = e * np.cos(theta)[..., None, None] - x * np.sin(theta)[..., None, None]
    c = _fro_inner(w, t_hat)[..., None, None]
    out = w - c * t_hat + c * e
    return np.where(theta[..., None, None] < 1e-14, w, out)


# ---------------------------------------------------------------------------
# manifold classes


class Manifold(ABC):
    """An embedded Riemannian manifold with closed-form geometry.

    Subclasses implement the exponential and logarithm maps, geodesic
    distance, tangent projection, parallel transport along stored geodesics,
    and uniform random sampling.  The metric is the Frobenius inner product
    induced by the ambient embedding.
    """

    kind: str

    @property
    @abstractmethod
    def ambient_shape(self) -> tuple[int, int]:
        """(rows, cols) of the ambient real matrix space."""

    @property
    @abstractmethod
    def dim(self) -> int:
        """Intrinsic dimension."""

    @property
    @abstractmethod
    def injectivity_radius(self) -> float:
        """Global injectivity radius R."""

    @abstractmethod
    def params(self) -> list:
        """JSON-serializable constructor parameters."""

    @abstractmethod
    def defect(self, x: np.ndarray) -> np.ndarray:
        """Max-abs violation of the manifold constraints, batched."""

    @abstractmethod
    def proj(self, x: np.ndarray, m: np.ndarray) -> np.ndarray:
        """Orthogonal projection of an ambient matrix onto the tangent space."""

    @abstractmethod
    def exp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Exponential map."""

    @abstractmethod
    def log(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Logarithm map; raises GeodesicDomainError near the cut locus."""

    @abstractmethod
    def dist(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Geodesic distance, batched."""

    @abstractmethod
    def transport_to_base(self, x: np.ndarray, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Parallel transport of ``w``, tangent at ``exp_x(v)``, back to x."""

    @abstractmethod
    def random_point(self, rng, size: int | None = None) -> np.ndarray:
        """Uniform sample; shape (rows, cols) or (size, rows, cols)."""

    @abstractmethod
    def tangent_basis(self, x: np.ndarray) -> np.ndarray:
        """Orthonormal tangent basis at a single point, shape (dim, rows, cols)."""

    def on_manifold(self, x: np.ndarray, tol: float = POINT_TOL) -> bool:
        return bool(np.max(self.defect(x)) <= tol)

    def chordal(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Euclidean (Frobenius) distance in the ambient space."""
        return _fro_norm(x - y)

    def inner(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Riemannian inner product (ambient Frobenius)."""
        return _fro_inner(u, v)

    def random_tangent(self, rng, x: np.ndarray, scale: float) -> np.ndarray:
        """Random tangent vector at x with norm exactly ``scale``."""
        rng = _as_rng(rng)
        if scale == 0.0:
            return np.zeros_like(x)
        g = rng.standard_normal(x.shape)
        t = self.proj(x, g)
        nrm = _fro_norm(t)
        nrm = np.where(nrm < 1e-300, 1.0, nrm)
        return t * (scale / nrm)[..., None, None]

    def check_ambient(self, arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=float)
        if arr.shape[-2:] != self.ambient_shape:
            raise ValueError(
                f"expected trailing shape {self.ambient_shape} for {self.kind}, "
                f"got {arr.shape}"
            )
        return arr

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params()}

    def __eq__(self, other) -> bool:
        return isinstance(other, Manifold) and self.to_json() == other.to_json()

    def __hash__(self) -> int:
        return hash((self.kind, tuple(self.params())))

    def __repr__(self) -> str:
        args = ", ".join(repr(p) for p in self.params())
        return f"{type(self).__name__}({args})"


class Circle(Manifold):
    """Unit circle S^1 embedded in R^2 (column vectors)."""

    kind = "Circle"

    @property
    def ambient_shape(self):
        return (2, 1)

    @property
    def dim(self):
        return 1

    @property
    def injectivity_radius(self):
        return np.pi

    def params(self):
        return []

    def defect(self, x):
        return np.abs(_fro_norm(x) - 1.0)

    def proj(self, x, m):
        return _sph_proj(x, m)

    def exp(self, x, v):
        return _sph_exp(x, v)

    def log(self, x, y):
        return _sph_log(x, y)

    def dist(self, x, y):
        return _sph_dist(x, y)

    def transport_to_base(self, x, v, w):
        return _sph_transport_to_base(x, v, w)

    def random_point(self, rng, size=None):
        rng = _as_rng(rng)
        ang = rng.uniform(0.0, 2.0 * np.pi, size=() if size is None else (size,))
        return self.from_angle(ang)

    def tangent_basis(self, x):
        return np.stack([self.proj(x, np.array([[-x[1, 0]], [x[0, 0]]]))])

    @staticmethod
    def from_angle(theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)[..., None]

    @staticmethod
    def angle_of(x: np.ndarray) -> np.ndarray:
        return np.arctan2(x[..., 1, 0], x[..., 0, 0])


class Sphere(Manifold):
    """Unit n-sphere S^n embedded in R^{n+1}."""

    kind = "Sphere"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("Sphere requires n >= 1")
        self.n = int(n)

    @property
    def ambient_shape(self):
        return (self.n + 1, 1)

    @property
    def dim(self):
        return self.n

    @property
    def injectivity_radius(self):
        return np.pi

    def params(self):
        return [self.n]

    def defect(self, x):
        return np.abs(_fro_norm(x) - 1.0)

    def proj(self, x, m):
        return _sph_proj(x, m)

    def exp(self, x, v):
        return _sph_exp(x, v)

    def log(self, x, y):
        return _sph_log(x, y)

    def dist(self, x, y):
        return _sph_dist(x, y)

    def transport_to_base(self, x, v, w):
        return _sph_transport_to_base(x, v, w)

    def random_point(self, rng, size=None):
        rng = _as_rng(rng)
        shape = (self.n + 1, 1) if size is None else (size, self.n + 1, 1)
        g = rng.standard_normal(shape)
        return g / _fro_norm(g)[..., None, None]

    def tangent_basis(self, x):
        # rows of V orthogonal to x span the tangent space
        _, _, vt = np.linalg.svd(x.reshape(1, -1))
        return vt[1:].reshape(self.n, self.n + 1, 1)


class FlatTorus(Manifold):
    """Flat torus: product of two circles of radii r1, r2, embedded in R^4."""

    kind = "FlatTorus"

    def __init__(self, r1: float, r2: float):
        if r1 <= 0 or r2 <= 0:
            raise ValueError("FlatTorus radii must be positive")
        self.r1 = float(r1)
        self.r2 = float(r2)

    @property
    def ambient_shape(self):
        return (4, 1)

    @property
    def dim(self):
        return 2

    @property
    def injectivity_radius(self):
        return np.pi * min(self.r1, self.r2)

    def params(self):
        return [self.r1, self.r2]

    def defect(self, x):
        n1 = np.sqrt(np.sum(x[..., 0:2, 0] ** 2, axis=-1))
        n2 = np.sqrt(np.sum(x[..., 2:4, 0] ** 2, axis=-1))
        return np.maximum(np.abs(n1 - self.r1), np.abs(n2 - self.r2))

    def angles_of(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return (
            np.arctan2(x[..., 1, 0], x[..., 0, 0]),
            np.arctan2(x[..., 3, 0], x[..., 2, 0]),
        )

    def from_angles(self, theta, phi) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        phi = np.asarray(phi, dtype=float)
        parts = [
            self.r1 * np.cos(theta),
            self.r1 * np.sin(theta),
            self.r2 * np.cos(phi),
            self.r2 * np.sin(phi),
        ]
        return np.stack(parts, axis=-1)[..., None]

    def _frames(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Unit tangent vectors of the two circle factors at x."""
        theta, phi = self.angles_of(x)
        zero = np.zeros_like(theta)
        u1 = np.stack([-np.sin(theta), np.cos(theta), zero, zero], axis=-1)[..., None]
        u2 = np.stack([zero, zero, -np.sin(phi), np.cos(phi)], axis=-1)[..., None]
        return u1, u2

    def proj(self, x, m):
        u1, u2 = self._frames(x)
        a = _fro_inner(m, u1)[..., None, None]
        b = _fro_inner(m, u2)[..., None, None]
        return a * u1 + b * u2

    def exp(self, x, v):
        theta, phi = self.angles_of(x)
        u1, u2 = self._frames(x)
        a = _fro_inner(v, u1)
        b = _fro_inner(v, u2)
        return self.from_angles(theta + a / self.r1, phi + b / self.r2)

    def _wrapped_deltas(self, x, y):
        tx, px = self.angles_of(x)
        ty, py = self.angles_of(y)
        dt = np.mod(ty - tx + np.pi, 2.0 * np.pi) - np.pi
        dp = np.mod(py - px + np.pi, 2.0 * np.pi) - np.pi
        return dt, dp

    def log(self, x, y):
        dt, dp = self._wrapped_deltas(x, y)
        if max(np.max(np.abs(dt)), np.max(np.abs(dp))) > np.pi - CUT_LOCUS_MARGIN:
            raise GeodesicDomainError(
                "log undefined: a circle factor is at or beyond the half turn"
            )
        u1, u2 = self._frames(x)
        return (self.r1 * dt)[..., None, None] * u1 + (self.r2 * dp)[..., None, None] * u2

    def dist(self, x, y):
        dt, dp = self._wrapped_deltas(x, y)
        return np.sqrt((self.r1 * dt) ** 2 + (self.r2 * dp) ** 2)

    def transport_to_base(self, x, v, w):
        y = self.exp(x, v)
        u1y, u2y = self._frames(y)
        u1x, u2x = self._frames(x)
        a = _fro_inner(w, u1y)[..., None, None]
        b = _fro_inner(w, u2y)[..., None, None]
        return a * u1x + b * u2x

    def random_point(self, rng, size=None):
        rng = _as_rng(rng)
        shape = () if size is None else (size,)
        theta = rng.uniform(0.0, 2.0 * np.pi, size=shape)
        phi = rng.uniform(0.0, 2.0 * np.pi, size=shape)
        return self.from_angles(theta, phi)

    def tangent_basis(self, x):
        u1, u2 = self._frames(x)
        return np.stack([u1, u2])


class SpecialOrthogonal(Manifold):
    """Rotation group SO(n) with the Frobenius-induced bi-invariant metric."""

    kind = "SpecialOrthogonal"

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("SpecialOrthogonal requires n >= 2")
        self.n = int(n)

    @property
    def ambient_shape(self):
        return (self.n, self.n)

    @property
    def dim(self):
        return self.n * (self.n - 1) // 2

    @property
    def injectivity_radius(self):
        # a single principal angle reaching pi costs Frobenius length pi*sqrt(2)
        return np.pi * np.sqrt(2.0)

    def params(self):
        return [self.n]

    def defect(self, x):
        eye = np.eye(self.n)
        ortho = np.max(np.abs(np.swapaxes(x, -1, -2) @ x - eye), axis=(-1, -2))
        det = np.abs(np.linalg.det(x) - 1.0)
        return np.maximum(ortho, det)

    @staticmethod
    def _skew(a):
        return 0.5 * (a - np.swapaxes(a, -1, -2))

    def proj(self, x, m):
        return x @ self._skew(np.swapaxes(x, -1, -2) @ m)

    def exp(self, x, v):
        a = self._skew(np.swapaxes(x, -1, -2) @ v)
        return x @ _expm_skew_hermitian(a.astype(complex)).real

    def log(self, x, y):
        m = np.swapaxes(x, -1, -2) @ y
        s = _logm_normal_unitary(m)
        a = s.real
        return x @ (0.5 * (a - np.swapaxes(a, -1, -2)))

    def dist(self, x, y):
        theta = _principal_angles(np.swapaxes(x, -1, -2) @ y)
        return np.sqrt(np.sum(theta**2, axis=-1))

    def transport_to_base(self, x, v, w):
        a = self._skew(np.swapaxes(x, -1, -2) @ v)
        e = _expm_skew_hermitian((-0.5 * a).astype(complex)).real
        return x @ (e @ (np.swapaxes(x, -1, -2) @ w) @ e)

    def random_point(self, rng, size=None):
        rng = _as_rng(rng)
        shape = (self.n, self.n) if size is None else (size, self.n, self.n)
        g = rng.standard_normal(shape)
        q, r = np.linalg.qr(g)
        q = q * np.sign(np.diagonal(r, axis1=-2, axis2=-1))[..., None, :]
        det = np.linalg.det(q)
        q[..., :, -1] *= np.where(det < 0, -1.0, 1.0)[..., None]
        return q

    def tangent_basis(self, x):
        basis = []
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for a in range(self.n):
            for b in range(a + 1, self.n):
                e = np.zeros((self.n, self.n))
                e[a, b] = -inv_sqrt2
                e[b, a] = inv_sqrt2
                basis.append(x @ e)
        return np.stack(basis)


class UnitaryRealified(Manifold):
    """U(n) embedded in R^{2n x 2n} through the realification map.

    Internally the exponential and logarithm are computed in the complex
    n x n representation and converted back, which keeps the principal
    matrix logarithm numerically stable.
    """

    kind = "UnitaryRealified"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("UnitaryRealified requires n >= 1")
        self.n = int(n)

    @property
    def ambient_shape(self):
        return (2 * self.n, 2 * self.n)

    @property
    def dim(self):
        return self.n * self.n

    @property
    def injectivity_radius(self):
        return np.pi * np.sqrt(2.0)

    def params(self):
        return [self.n]

    @cached_property
    def _j(self) -> np.ndarray:
        n = self.n
        j = np.zeros((2 * n, 2 * n))
        j[:n, n:] = -np.eye(n)
        j[n:, :n] = np.eye(n)
        return j

    def defect(self, x):
        eye = np.eye(2 * self.n)
        ortho = np.max(np.abs(np.swapaxes(x, -1, -2) @ x - eye), axis=(-1, -2))
        block = np.max(np.abs(realify(derealify(x)) - x), axis=(-1, -2))
        return np.maximum(ortho, block)

    def proj(self, x, m):
        s = 0.5 * (np.swapaxes(x, -1, -2) @ m)
        s = s - np.swapaxes(s, -1, -2)
        # restrict the skew part to the realified-complex subalgebra
        s = 0.5 * (s - self._j @ s @ self._j)
        return x @ s

    def exp(self, x, v):
        u = derealify(x)
        s = np.conj(np.swapaxes(u, -1, -2)) @ derealify(v)
        s = 0.5 * (s - np.conj(np.swapaxes(s, -1, -2)))
        return realify(u @ _expm_skew_hermitian(s))

    def log(self, x, y):
        u = derealify(x)
        w = derealify(y)
        s = _logm_normal_unitary(np.conj(np.swapaxes(u, -1, -2)) @ w)
        return realify(u @ s)

    def dist(self, x, y):
        u = derealify(x)
        w = derealify(y)
        theta = _principal_angles(np.conj(np.swapaxes(u, -1, -2)) @ w)
        return np.sqrt(2.0 * np.sum(theta**2, axis=-1))

    def transport_to_base(self, x, v, w):
        u = derealify(x)
        uh = np.conj(np.swapaxes(u, -1, -2))
        s = uh @ derealify(v)
        s = 0.5 * (s - np.conj(np.swapaxes(s, -1, -2)))
        e = _expm_skew_hermitian(-0.5 * s)
        return realify(u @ (e @ (uh @ derealify(w)) @ e))

    def random_point(self, rng, size=None):
        rng = _as_rng(rng)
        shape = (self.n, self.n) if size is None else (size, self.n, self.n)
        g = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        q, r = np.linalg.qr(g)
        d = np.diagonal(r, axis1=-2, axis2=-1)
        q = q * (d / np.abs(d)).conj()[..., None, :]
        return realify(q)

    def tangent_basis(self, x):
        u = derealify(x)
        basis = []
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for k in range(self.n):
            s = np.zeros((self.n, self.n), dtype=complex)
            s[k, k] = 1j * inv_sqrt2
            basis.append(realify(u @ s))
        for a in range(self.n):
            for b in range(a + 1, self.n):
                s = np.zeros((self.n, self.n), dtype=complex)
                s[a, b] = 0.5
                s[b, a] = -0.5
                basis.append(realify(u @ s))
                s = np.zeros((self.n, self.n), dtype=complex)
                s[a, b] = 0.5j
                s[b, a] = 0.5j
                basis.append(realify(u @ s))
        return np.stack(basis)


_KINDS = {
    "Circle": Circle,
    "Sphere": Sphere,
    "FlatTorus": FlatTorus,
    "SpecialOrthogonal": SpecialOrthogonal,
    "UnitaryRealified": UnitaryRealified,
}


def manifold_from_json(obj: dict) -> Manifold:
    """Build a catalog manifold from ``{"kind": ..., "params": [...]}``."""
    if not isinstance(obj, dict) or set(obj) != {"kind", "params"}:
        raise ValueError(f"manifold JSON must have exactly 'kind' and 'params': {obj!r}")
    kind = obj["kind"]
    if kind not in _KINDS:
        raise ValueError(f"unknown manifold kind {kind!r}")
    return _KINDS[kind](*obj["params"])


# ---------------------------------------------------------------------------
# validated value types


class ManifoldPoint:
    """A validated point on a catalog manifold (immutable)."""

    __slots__ = ("manifold", "coords")

    def __init__(self, manifold: Manifold, coords: np.ndarray):
        coords = manifold.check_ambient(coords).copy()
        if coords.ndim != 2:
            raise ValueError("ManifoldPoint holds a single ambient matrix")
        d = float(manifold.defect(coords))
        if d > POINT_TOL:
            raise ValueError(f"coords violate {manifold.kind} constraints by {d:.2e}")
        coords.setflags(write=False)
        object.__setattr__(self, "manifold", manifold)
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("ManifoldPoint is immutable")

    def __repr__(self):
        return f"ManifoldPoint({self.manifold!r}, {self.coords.tolist()!r})"

    def allclose(self, other: "ManifoldPoint", tol: float = 1e-12) -> bool:
        return self.manifold == other.manifold and bool(
            np.max(np.abs(self.coords - other.coords)) <= tol
        )


class TangentVector:
    """A validated tangent vector at a base point (immutable)."""

    __slots__ = ("base", "coords")

    def __init__(self, base: ManifoldPoint, coords: np.ndarray):
        coords = base.manifold.check_ambient(coords).copy()
        if coords.ndim != 2:
            raise ValueError("TangentVector holds a single ambient matrix")
        resid = float(_fro_norm(base.manifold.proj(base.coords, coords) - coords))
        if resid > POINT_TOL:
            raise ValueError(f"coords are not tangent at base (residual {resid:.2e})")
        coords.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "coords", coords)

    def __setattr__(self, name, value):
        raise AttributeError("TangentVector is immutable")

    @property
    def norm(self) -> float:
        return float(_fro_norm(self.coords))

    def __repr__(self):
        return f"TangentVector(base={self.base!r}, coords={self.coords.tolist()!r})"


def _require_same_manifold(x: ManifoldPoint, y: ManifoldPoint) -> Manifold:
    if x.manifold != y.manifold:
        raise ValueError("points live on different manifolds")
    return x.manifold


def exp_map(x: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    """Point at geodesic distance ``|v|`` from x along the geodesic with tangent v."""
    if not v.base.allclose(x):
        raise ValueError("tangent vector is not based at x")
    return ManifoldPoint(x.manifold, x.manifold.exp(x.coords, v.coords))


def log_map(x: ManifoldPoint, y: ManifoldPoint) -> TangentVector:
    """Inverse of :func:`exp_map`; defined strictly inside the injectivity radius."""
    m = _require_same_manifold(x, y)
    return TangentVector(x, m.log(x.coords, y.coords))


def geodesic_distance(x: ManifoldPoint, y: ManifoldPoint) -> float:
    m = _require_same_manifold(x, y)
    return float(m.dist(x.coords, y.coords))


def chordal_distance(x: ManifoldPoint, y: ManifoldPoint) -> float:
    m = _require_same_manifold(x, y)
    return float(m.chordal(x.coords, y.coords))


def project_tangent(x: ManifoldPoint, m: np.ndarray) -> TangentVector:
    return TangentVector(x, x.manifold.proj(x.coords, x.manifold.check_ambient(m)))


def metric_inner(x: ManifoldPoint, u: TangentVector, v: TangentVector) -> float:
    if not (u.base.allclose(x) and v.base.allclose(x)):
        raise ValueError("tangent vectors are not based at x")
    return float(_fro_inner(u.coords, v.coords))


def injectivity_radius(m: Manifold) -> float:
    return float(m.injectivity_radius)


def random_point(m: Manifold, seed) -> ManifoldPoint:
    return ManifoldPoint(m, m.random_point(_as_rng(seed)))


def random_tangent(x: ManifoldPoint, scale: float, seed) -> TangentVector:
    return TangentVector(x, x.manifold.random_tangent(_as_rng(seed), x.coords, scale))
