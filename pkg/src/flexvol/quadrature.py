"""Deterministic adaptive cubature of hyperbolic and spherical volume over geodesic simplices.

Geodesic simplices are straight in the Klein chart of ``H^n`` and in the
gnomonic chart of a hemisphere of ``S^n``, so the volume is the integral of
the chart density over a Euclidean simplex:

* Klein:     ``(1 - |u|^2) ** (-(n+1)/2)``
* gnomonic:  ``(1 + |u|^2) ** (-(n+1)/2)``

The Euclidean simplex is integrated with conical-product Gauss-Jacobi rules
and refined by longest-edge bisection until the summed error estimate is
below the target.
"""

from __future__ import annotations

import heapq
import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import NumericError
from .gram import Space


@lru_cache(maxsize=None)
def conical_rule(dim: int, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (barycentric-free coordinates) and weights on the unit simplex.

    Exact for polynomials of total degree ``2q - 1``; the weights sum to
    ``1 / dim!``.
    """
    axes = []
    for i in range(dim):
        alpha = dim - 1 - i  # Jacobian factor (1 - u_i)^(dim-1-i)
        x, w = roots_jacobi(q, alpha, 0.0)
        u = 0.5 * (1.0 + x)
        w = w * 0.5 ** (alpha + 1)
        axes.append((u, w))
    grids = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wgrids = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    u = np.stack([g.ravel() for g in grids], axis=1)
    w = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    lam = np.empty_like(u)
    rest = np.ones(u.shape[0])
    for i in range(dim):
        lam[:, i] = rest * u[:, i]
        rest = rest * (1.0 - u[:, i])
    return lam, w


_ORDERS = {1: (10, 16), 2: (8, 12), 3: (7, 11), 4: (5, 8)}


def _density(u: np.ndarray, space: Space) -> np.ndarray:
    r2 = np.sum(u * u, axis=-1)
    p = -(u.shape[-1] + 1) / 2.0
    if space is Space.HYPERBOLIC:
        return (1.0 - r2) ** p
    return (1.0 + r2) ** p


def _rule_pair(simplex: np.ndarray, space: Space, orders) -> tuple[float, float]:
    dim = simplex.shape[1]
    edges = simplex[1:] - simplex[0]
    jac = abs(np.linalg.det(edges)) if dim > 0 else 1.0
    if jac == 0.0:
        return 0.0, 0.0
    out = []
    for q in orders:
        lam, w = conical_rule(dim, q)
        pts = simplex[0] + lam @ edges
        out.append(jac * float(w @ _density(pts, space)))
    return out[1], abs(out[1] - out[0])


def _bisect(simplex: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = simplex.shape[0]
    best, bi, bj = -1.0, 0, 1
    for i in range(m):
        for j in range(i + 1, m):
            d = float(np.sum((simplex[i] - simplex[j]) ** 2))
            if d > best:
                best, bi, bj = d, i, j
    mid = 0.5 * (simplex[bi] + simplex[bj])
    a = simplex.copy()
    b = simplex.copy()
    a[bj] = mid
    b[bi] = mid
    return a, b


def integrate_chart_simplex(simplex: np.ndarray, space: Space, target_err: float,
                            max_pieces: int = 20000) -> tuple[float, float]:
    """Adaptive integral of the chart density over a Euclidean simplex.

    Returns ``(value, error_estimate)``. Raises :class:`NumericError` carrying
    the best estimate when ``max_pieces`` is exhausted.
    """
    simplex = np.asarray(simplex, dtype=float)
    dim = simplex.shape[1]
    orders = _ORDERS.get(dim, (4, 6))
    val, err = _rule_pair(simplex, space, orders)
    heap = [(-err, 0, simplex, val)]
    total_val, total_err = val, err
    counter = 1
    while total_err > target_err:
        if counter >= max_pieces:
            raise NumericError(
                f"cubature did not reach {target_err:.1e} with {max_pieces} pieces "
                f"(estimate {total_val!r} +- {total_err:.2e})",
                best=(total_val, total_err))
        neg_err, _, s, v = heapq.heappop(heap)
        total_val -= v
        total_err += neg_err
        for child in _bisect(s):
            cv, ce = _rule_pair(child, space, orders)
            total_val += cv
            total_err += ce
            heapq.heappush(heap, (-ce, counter, child, cv))
            counter += 1
    # re-sum to avoid drift from incremental updates
    total_val = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return total_val, total_err


def _minkowski_frame(f: np.ndarray) -> np.ndarray:
    """Columns: a Minkowski-orthonormal basis with ``f`` (unit timelike) first."""
    dim = f.shape[0]
    eta = Space.HYPERBOLIC.form(dim)
    basis = [f]
    for i in range(1, dim):
        v = np.zeros(dim)
        v[i] = 1.0
        for b in basis:
            nb = b @ (eta * b)
            v = v - (v @ (eta * b)) / nb * b
        nv = v @ (eta * v)
        basis.append(v / math.sqrt(-nv))
    return np.stack(basis, axis=1)


def _euclid_frame(f: np.ndarray) -> np.ndarray:
    dim = f.shape[0]
    m = np.eye(dim)
    m[:, 0] = f
    q, r = np.linalg.qr(m)
    if q[:, 0] @ f < 0:
        q = -q
    return q


def chart_simplex(points, space: Space) -> np.ndarray:
    """Euclidean chart image of a geodesic simplex, centred to keep the density mild."""
    x = np.asarray(points, dtype=float)
    dim = x.shape[1]
    if space is Space.HYPERBOLIC:
        eta = space.form(dim)
        f = x.sum(axis=0)
        f = f / math.sqrt(f @ (eta * f))
        frame = _minkowski_frame(f)
        y = (x * eta) @ frame  # <x, b_i> for each basis vector
        y[:, 1:] *= -1.0
    else:
        try:
            dual = np.linalg.inv(x).T if x.shape[0] == dim else None
        except np.linalg.LinAlgError:
            dual = None
        f = dual.sum(axis=0) if dual is not None else x.sum(axis=0)
        f = f / np.linalg.norm(f)
        frame = _euclid_frame(f)
        y = x @ frame
    if np.any(y[:, 0] <= 0):
        raise NumericError("simplex does not fit in a single chart")
    return y[:, 1:] / y[:, :1]


def integrate_geodesic_simplex(points, space: Space, target_err: float,
                               max_pieces: int = 20000) -> tuple[float, float]:
    return integrate_chart_simplex(chart_simplex(points, space), space, target_err, max_pieces)
