"""Independent numerical oracles used by the test suite.

Everything here deliberately avoids the code paths it is used to check:
the partition program is solved through the raw Lagrange system and through
projected gradient descent, torus distances through a graph search on a
sampled mesh, and tangent projections through least squares on an explicit
basis.
"""

from __future__ import annotations

import numpy as np
import scipy.integrate
import scipy.sparse
import scipy.sparse.csgraph


def lagrange_qp_solve(weights, length: float) -> np.ndarray:
    """Solve the equality-constrained partition program via its KKT system.

    Variables d minimize sum(w_i d_i^2) subject to sum(d_i) = length; the
    stationarity system is linear with one multiplier.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    kkt = np.zeros((n + 1, n + 1))
    kkt[:n, :n] = np.diag(2.0 * w)
    kkt[:n, n] = 1.0
    kkt[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[n] = length
    sol = np.linalg.solve(kkt, rhs)
    return sol[:n]


def projected_gradient_qp(weights, length: float, tol: float = 1e-15,
                          max_iter: int = 200) -> np.ndarray:
    """Iterative first-order solve of the partition program.

    Gradients are projected onto the sum-preserving subspace and combined
    into conjugate directions; plain steepest descent stalls at the usual
    sqrt(machine-eps) forward-error floor, while conjugate updates reach
    full precision in at most N steps.
    """
    w = np.asarray(weights, dtype=float)
    n = w.size
    d = np.full(n, length / n)

    def projected_residual(vec):
        grad = 2.0 * w * vec
        g = grad - np.mean(grad)
        return -g

    r = projected_residual(d)
    p = r.copy()
    rr = float(r @ r)
    for _ in range(max_iter):
        if np.sqrt(rr) <= tol * max(1.0, float(np.linalg.norm(2.0 * w * d))):
            break
        hp = 2.0 * w * p
        hp = hp - np.mean(hp)
        alpha = rr / float(p @ hp)
        d = d + alpha * p
        r = r - alpha * hp
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return d


def torus_mesh_distance(r1: float, r2: float, a_angles, b_angles,
                        n_grid: int = 96) -> float:
    """Shortest-path distance on a dense sampled mesh of the flat torus.

    Nodes are a wrapped angle grid; edges connect a 16-neighborhood (axis,
    diagonal, and knight moves) weighted by the flat product metric.  The
    knight moves keep the anisotropy error of the graph metric below about
    1.5 percent.
    """
    n = n_grid
    steps = [
        (1, 0), (0, 1), (1, 1), (1, -1),
        (2, 1), (1, 2), (2, -1), (1, -2),
    ]
    h1 = 2.0 * np.pi / n
    h2 = 2.0 * np.pi / n

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    base = (ii * n + jj).ravel()
    rows, cols, vals = [], [], []
    for di, dj in steps:
        ni = (ii + di) % n
        nj = (jj + dj) % n
        rows.append(base)
        cols.append((ni * n + nj).ravel())
        length = np.hypot(r1 * di * h1, r2 * dj * h2)
        vals.append(np.full(n * n, length))
    graph = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n * n, n * n),
    )

    def node_of(angles):
        i = int(round((angles[0] % (2.0 * np.pi)) / h1)) % n
        j = int(round((angles[1] % (2.0 * np.pi)) / h2)) % n
        return i * n + j

    src = node_of(a_angles)
    dist = scipy.sparse.csgraph.dijkstra(graph, directed=False, indices=src)
    return float(dist[node_of(b_angles)])


def lstsq_tangent_projection(manifold, x: np.ndarray, ambient: np.ndarray) -> np.ndarray:
    """Closest tangent vector to ``ambient`` via least squares on a basis."""
    basis = manifold.tangent_basis(x)
    b_flat = basis.reshape(len(basis), -1).T
    coeff, *_ = np.linalg.lstsq(b_flat, ambient.ravel(), rcond=None)
    return np.tensordot(coeff, basis, axes=1)


def quad_smoothing_integral(profile, s: float) -> float:
    """Adaptive quadrature of the smoothing cutoff from 0 to s."""
    lo, hi = profile.band
    breakpoints = [b for b in (lo, hi) if 0.0 < b < s]
    value, err = scipy.integrate.quad(
        lambda t: float(profile.value(t)), 0.0, s, points=breakpoints or None, limit=200
    )
    assert err < 1e-9
    return value


def feasible_perturbations(rng, d: np.ndarray, n_samples: int) -> np.ndarray:
    """Random feasible competitors: same sum, strictly positive entries."""
    n = d.size
    out = np.empty((n_samples, n))
    for k in range(n_samples):
        delta = rng.standard_normal(n)
        delta -= delta.mean()
        nrm = np.max(np.abs(delta))
        if nrm < 1e-12:
            delta[:] = 0.0
        else:
            # scale so the perturbed vector keeps a positive margin
            delta *= rng.uniform(0.05, 0.9) * np.min(d) / nrm
        out[k] = d + delta
    assert np.all(out > 0)
    assert np.allclose(out.sum(axis=1), d.sum(), atol=1e-9 * max(1.0, abs(d.sum())))
    return out
