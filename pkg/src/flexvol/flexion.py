"""Edge-length constraint varieties and predictor-corrector tracing of flexions.

Unknowns are the coordinates ``x_{v,j}`` of every vertex, stacked vertex by
vertex. The constraints are ``<x_v, x_v> = 1`` and
``<x_u, x_v> = cosh l_uv`` for every edge, all quadratic, so the Jacobian is
available in closed form. Isometries of ``H^n`` act on every configuration
and span an ``n(n+1)/2``-dimensional subspace of the Jacobian kernel; a flex
is a kernel direction outside it.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DomainError, FlexvolError, NumericError
from .polyhedra import (Configuration, EdgeLengthSet, PseudoManifold, dihedral_angles,
                        generalized_volume, total_mean_curvature)


def _eta(n: int) -> np.ndarray:
    return np.concatenate([[1.0], -np.ones(n)])


@dataclass(frozen=True)
class ConstraintSystem:
    """The polynomial system cutting out the configuration space of ``complex``."""

    complex: PseudoManifold
    lengths: EdgeLengthSet
    order: tuple = field(init=False)
    edge_index: np.ndarray = field(init=False, repr=False)
    targets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        k = self.complex
        missing = [e for e in k.edges() if e not in self.lengths.lengths]
        if missing:
            raise ArgumentError("edges without a length: "
                                + ", ".join("-".join(sorted(map(str, e))) for e in missing))
        order = tuple(k.vertices)
        pos = {v: i for i, v in enumerate(order)}
        edges = k.edges()
        idx = np.array([sorted(pos[v] for v in e) for e in edges], dtype=int).reshape(-1, 2)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "edge_index", idx)
        object.__setattr__(self, "targets", np.array([self.lengths.cosh(e) for e in edges]))

    @classmethod
    def from_configuration(cls, k: PseudoManifold, p: Configuration) -> "ConstraintSystem":
        return cls(k, EdgeLengthSet.from_configuration(k, p))

    @property
    def n(self) -> int:
        return self.complex.n

    @property
    def shape(self) -> tuple[int, int]:
        """(number of equations, number of unknowns)"""
        m = len(self.order)
        return m + len(self.edge_index), m * (self.n + 1)

    def pack(self, p: Configuration) -> np.ndarray:
        return np.concatenate([np.asarray(p[v], dtype=float) for v in self.order])

    def unpack(self, x: np.ndarray, tol: float = 1e-10) -> Configuration:
        pts = np.asarray(x, dtype=float).reshape(len(self.order), self.n + 1)
        return Configuration({v: pts[i].copy() for i, v in enumerate(self.order)}, tol)

    def _points(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(len(self.order), self.n + 1)

    def residual_vector(self, x: np.ndarray) -> np.ndarray:
        pts = self._points(x)
        eta = _eta(self.n)
        norms = np.einsum("ij,ij->i", pts * eta, pts) - 1.0
        i, j = self.edge_index.T
        cross = np.einsum("ij,ij->i", pts[i] * eta, pts[j]) - self.targets
        return np.concatenate([norms, cross])

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        pts = self._points(x)
        eta = _eta(self.n)
        m, d = len(self.order), self.n + 1
        jac = np.zeros(self.shape)
        for v in range(m):
            jac[v, v * d:(v + 1) * d] = 2.0 * eta * pts[v]
        for r, (u, v) in enumerate(self.edge_index, start=m):
            jac[r, u * d:(u + 1) * d] = eta * pts[v]
            jac[r, v * d:(v + 1) * d] = eta * pts[u]
        return jac

    def trivial_motions(self, x: np.ndarray) -> np.ndarray:
        """Columns: the isometry algebra ``so(1, n)`` applied to every vertex."""
        pts = self._points(x)
        d = self.n + 1
        gens = []
        for a, b in itertools.combinations(range(d), 2):
            g = np.zeros((d, d))
            if a == 0:  # boost
                g[0, b] = g[b, 0] = 1.0
            else:
                g[a, b], g[b, a] = 1.0, -1.0
            gens.append((pts @ g.T).ravel())
        return np.stack(gens, axis=1)

    def edge_length_error(self, x: np.ndarray) -> float:
        """Largest ``|d(x_u, x_v) - l_uv|`` over edges, with the distance from ``2 asinh(|x_u - x_v| / 2)``."""
        pts = self._points(x)
        i, j = self.edge_index.T
        diff = pts[i] - pts[j]
        q = -np.einsum("ij,ij->i", diff * _eta(self.n), diff)
        dist = 2.0 * np.arcsinh(np.sqrt(np.maximum(q, 0.0)) / 2.0)
        return float(np.max(np.abs(dist - np.arccosh(self.targets)))) if len(dist) else 0.0


def residuals(system: ConstraintSystem, p: Configuration) -> np.ndarray:
    """Norm residuals for every vertex followed by edge residuals ``<x_u, x_v> - cosh l``."""
    return system.residual_vector(system.pack(p))


def _gauss_newton(system: ConstraintSystem, x: np.ndarray, tol: float, max_iter: int):
    history = [float(np.max(np.abs(system.residual_vector(x))))]
    if history[0] <= tol:
        return x, history
    stall = 0
    for _ in range(max_iter):
        r = system.residual_vector(x)
        step = np.linalg.lstsq(system.jacobian(x), -r, rcond=None)[0]
        x = x + step
        history.append(float(np.max(np.abs(system.residual_vector(x)))))
        if history[-1] <= tol:
            return x, history
        if not np.isfinite(history[-1]) or history[-1] > 1e6 * max(history[0], 1.0):
            break
        stall = stall + 1 if history[-1] > 0.5 * history[-2] else 0
        if stall >= 4:
            break
    raise NumericError(f"Gauss-Newton stalled at residual {history[-1]:.3e} (target {tol:.1e})",
                       best=x, history=history)


def solve_configuration(system: ConstraintSystem, initial: Configuration | np.ndarray,
                        tol: float = 1e-12, max_iter: int = 40) -> Configuration:
    """Project onto the constraint variety by minimum-norm Gauss-Newton steps.

    A configuration that already satisfies the system to ``tol`` comes back
    unchanged. Stalling, divergence, or landing off the upper sheet raise
    :class:`NumericError` with the residual history attached.
    """
    x0 = system.pack(initial) if isinstance(initial, Configuration) else np.asarray(initial, float)
    x, history = _gauss_newton(system, x0, tol, max_iter)
    if len(history) == 1 and isinstance(initial, Configuration):
        return initial
    pts = system._points(x)
    if np.any(pts[:, 0] <= 0):
        raise NumericError("solution left the upper sheet", best=x, history=history)
    return system.unpack(x)


@dataclass(frozen=True)
class FlexReport:
    kernel_dim: int
    trivial_dim: int
    flex_dim: int
    singular_values: np.ndarray
    rank_tol: float

    def to_json(self) -> dict:
        return {"kernel_dim": self.kernel_dim, "trivial_dim": self.trivial_dim,
                "flex_dim": self.flex_dim, "rank_tol": self.rank_tol,
                "singular_values": [float(s) for s in self.singular_values]}


def _orthonormal(cols: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if cols.size == 0:
        return cols
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    return u[:, s > tol * max(s[0], 1.0)]


def _flex_space(system: ConstraintSystem, x: np.ndarray, rank_tol: float | None):
    jac = system.jacobian(x)
    _, s, vt = np.linalg.svd(jac)
    rank_tol = 1e-7 * s[0] if rank_tol is None else rank_tol
    rank = int(np.sum(s > rank_tol))
    kernel = vt[rank:].T
    triv = system.trivial_motions(x)
    leak = np.linalg.norm(jac @ triv) / max(1.0, np.linalg.norm(triv))
    if leak > 1e-8 * max(1.0, s[0]):
        raise FlexvolError(f"isometries are not infinitesimal motions here (|J T| = {leak:.2e}); "
                           "is the configuration on the variety?")
    triv = _orthonormal(triv)
    rest = kernel - triv @ (triv.T @ kernel)
    flex = _orthonormal(rest, 1e-6)
    return s, rank_tol, kernel.shape[1], triv.shape[1], flex


def flex_analysis(system: ConstraintSystem, p: Configuration,
                  rank_tol: float | None = None) -> FlexReport:
    """Kernel dimension of the constraint Jacobian and how much of it is not an isometry.

    ``rank_tol`` defaults to ``1e-7`` times the largest singular value.
    """
    s, tol, kdim, tdim, _ = _flex_space(system, system.pack(p), rank_tol)
    return FlexReport(kdim, tdim, kdim - tdim, s, tol)


def flex_directions(system: ConstraintSystem, p: Configuration,
                    rank_tol: float | None = None) -> np.ndarray:
    """Orthonormal columns spanning the kernel modulo isometries."""
    return _flex_space(system, system.pack(p), rank_tol)[4]


@dataclass
class FlexionTrace:
    """Accepted samples of a traced flexion."""

    complex: PseudoManifold
    t: list[float]
    configurations: list[Configuration]
    residuals: list[float]
    volumes: list[float]
    tmc: list[float]
    angles: list[dict]
    stopped: str | None = None

    @property
    def steps(self) -> int:
        return len(self.t) - 1

    @staticmethod
    def _drift(vals) -> float:
        vals = np.asarray(vals)
        return float(np.max(np.abs(vals - vals[0]))) if len(vals) else 0.0

    def volume_drift(self) -> float:
        return self._drift(self.volumes)

    def tmc_drift(self) -> float:
        return self._drift(self.tmc)

    def combined_drift(self) -> float:
        """Drift of ``(n-1) V - TMC``."""
        n = self.complex.n
        return self._drift([(n - 1) * v - c for v, c in zip(self.volumes, self.tmc)])

    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    def angle_variation(self) -> float:
        """Largest range of a single unwrapped dihedral angle."""
        if not self.angles:
            return 0.0
        return max(max(a[r] for a in self.angles) - min(a[r] for a in self.angles)
                   for r in self.angles[0])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "max_residual", "volume", "tmc"])
        for row in zip(self.t, self.residuals, self.volumes, self.tmc):
            w.writerow([repr(float(x)) for x in row])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "steps": self.steps,
            "stopped": self.stopped,
            "t": self.t,
            "volume_drift": self.volume_drift(),
            "tmc_drift": self.tmc_drift(),
            "max_residual": self.max_residual(),
            "angle_variation": self.angle_variation(),
            "configurations": [{str(v): p[v].tolist() for v in self.complex.vertices}
                               for p in self.configurations],
        }


def _record(trace: FlexionTrace, system: ConstraintSystem, p: Configuration, t: float,
            res: float, vol_tol: float):
    prev = trace.angles[-1] if trace.angles else None
    ang = dihedral_angles(system.complex, p, prev)
    trace.t.append(t)
    trace.configurations.append(p)
    trace.residuals.append(res)
    trace.volumes.append(generalized_volume(system.complex, p, tol=vol_tol))
    trace.tmc.append(total_mean_curvature(system.complex, p, ang))
    trace.angles.append(ang)


def trace_flexion(system: ConstraintSystem, p0: Configuration, steps: int = 200,
                  step_length: float = 0.01, tol: float = 1e-11, direction: np.ndarray | None = None,
                  max_turn: float = math.radians(30), max_halvings: int = 10,
                  volume_tol: float = 1e-12) -> FlexionTrace:
    """Follow a one-parameter flex of ``p0`` for ``steps`` accepted steps.

    Each step moves ``h <= step_length`` along the unit flex direction (the
    kernel modulo isometries, sign-matched with the previous step) and
    projects back with :func:`solve_configuration`. A step is retried with
    half the length when the corrector fails or the tangent turns by more
    than ``max_turn``. The trace stops early, with ``stopped`` set, if the
    flex space vanishes or the step length underflows.
    """
    if steps < 1 or not step_length > 0 or not tol > 0:
        raise ArgumentError("steps, step_length and tol must be positive")
    x = system.pack(p0)
    if np.max(np.abs(system.residual_vector(x))) > tol:
        raise DomainError("initial configuration does not satisfy the edge lengths")
    flex = flex_directions(system, p0)
    if flex.shape[1] == 0:
        raise DomainError("the configuration has no infinitesimal flex")
    if direction is not None:
        tangent = flex @ (flex.T @ np.asarray(direction, float))
    else:
        tangent = flex[:, 0]
    tangent = tangent / np.linalg.norm(tangent)

    trace = FlexionTrace(system.complex, [], [], [], [], [], [])
    _record(trace, system, p0, 0.0, max(float(np.max(np.abs(system.residual_vector(x)))),
                                        system.edge_length_error(x)), volume_tol)
    solve_tol = min(tol, 1e-13)
    h = step_length
    t = 0.0
    while trace.steps < steps:
        if h < step_length * 0.5 ** max_halvings:
            trace.stopped = f"step length underflow at t = {t:.6g}"
            break
        try:
            p = solve_configuration(system, x + h * tangent, solve_tol)
        except NumericError:
            h *= 0.5
            continue
        y = system.pack(p)
        new_flex = flex_directions(system, p)
        if new_flex.shape[1] == 0:
            trace.stopped = f"flex space vanished at t = {t + h:.6g}"
            break
        nt = new_flex @ (new_flex.T @ tangent)
        norm = np.linalg.norm(nt)
        if norm == 0.0:
            h *= 0.5
            continue
        nt /= norm
        if math.acos(min(1.0, float(nt @ tangent))) > max_turn:
            h *= 0.5
            continue
        res = max(float(np.max(np.abs(system.residual_vector(y)))), system.edge_length_error(y))
        if res > tol:
            h *= 0.5
            continue
        t += float(np.linalg.norm(y - x))
        x, tangent = y, nt
        _record(trace, system, p, t, res, volume_tol)
        h = min(step_length, 2 * h)
    return trace


# ---------------------------------------------------------------------------
# seeds


def octahedron_complex(labels=("A", "B", "C", "A'", "B'", "C'")) -> PseudoManifold:
    """Boundary of the cross-polytope, coherently oriented; ``labels[i+3]`` is opposite ``labels[i]``."""
    pairs = [(labels[i], labels[i + 3]) for i in range(3)]
    facets = []
    for signs in itertools.product((0, 1), repeat=3):
        a, b, c = (pairs[i][s] for i, s in enumerate(signs))
        facets.append((a, b, c) if sum(signs) % 2 == 0 else (a, c, b))
    return PseudoManifold(3, tuple(labels), tuple(facets))


def hyperboloid_point(y) -> np.ndarray:
    """Lift spatial coordinates ``y`` to the upper sheet."""
    y = np.asarray(y, dtype=float)
    return np.concatenate([[math.sqrt(1.0 + y @ y)], y])


def bricard_octahedron(seed: int = 0, spread: float = 0.7) -> tuple[PseudoManifold, Configuration]:
    """A line-symmetric flexible octahedron in ``H^3``.

    Three random vertices and their images under the half-turn about the
    geodesic through the origin along the third axis. Any such placement is
    flexible: the symmetric configurations form a family with one degree of
    freedom beyond the two isometries commuting with the half-turn.
    """
    rng = np.random.default_rng(seed)
    k = octahedron_complex()
    half_turn = np.diag([1.0, -1.0, -1.0, 1.0])
    pts = {}
    for name in k.vertices[:3]:
        pts[name] = hyperboloid_point(rng.normal(size=3) * spread)
    for name, img in zip(k.vertices[:3], k.vertices[3:]):
        pts[img] = half_turn @ pts[name]
    return k, Configuration(pts)


def quadrilateral(lengths=(1.0, 1.2, 0.9, 1.1), angle: float = 1.6) -> tuple[PseudoManifold, Configuration]:
    """A hyperbolic quadrilateral (a closed polygon in ``H^2``) with given side lengths.

    The first side lies along the x-axis from the origin and the second
    leaves at interior angle ``angle``; the last vertex closes the polygon,
    which therefore requires the triangle inequalities for the diagonal.
    """
    a, b, c, d = lengths
    k = PseudoManifold(2, (0, 1, 2, 3), ((0, 1), (1, 2), (2, 3), (3, 0)))
    p0 = np.array([1.0, 0.0, 0.0])
    p1 = np.array([math.cosh(a), math.sinh(a), 0.0])
    # walk from p1 back toward p0, turned by the interior angle
    boost = np.array([[math.cosh(a), math.sinh(a), 0], [math.sinh(a), math.cosh(a), 0], [0, 0, 1]])
    local = np.array([math.cosh(b), -math.sinh(b) * math.cos(angle), math.sinh(b) * math.sin(angle)])
    p2 = boost @ local
    eta = _eta(2)
    dd = math.acosh(max(float(p0 @ (eta * p2)), 1.0))  # diagonal p0-p2
    # third vertex: on the far side of the diagonal, at distances c from p2 and d from p0
    ca, cb = math.cosh(d), math.cosh(c)
    # solve <p3, p0> = cosh d, <p3, p2> = cosh c, <p3, p3> = 1 for p3
    m = np.stack([p0 * eta, p2 * eta])
    base = np.linalg.lstsq(m, np.array([ca, cb]), rcond=None)[0]
    normal = np.cross(p0 * eta, p2 * eta)  # Minkowski-orthogonal to both
    qa = normal @ (eta * normal)
    qb = 2 * base @ (eta * normal)
    qc = base @ (eta * base) - 1.0
    disc = qb * qb - 4 * qa * qc
    if disc < 0 or dd <= 0:
        raise DomainError("side lengths do not close up a quadrilateral at this angle")
    roots = [(-qb + s * math.sqrt(disc)) / (2 * qa) for s in (1, -1)]
    cands = [base + r * normal for r in roots]
    cands = [q if q[0] > 0 else -q for q in cands]
    # keep the one on the opposite side of the diagonal from p1
    side = np.linalg.det(np.stack([p0, p2, p1]))
    p3 = next(q for q in cands if np.linalg.det(np.stack([p0, p2, q])) * side < 0)
    return k, Configuration({0: p0, 1: p1, 2: p2, 3: p3})
