"""Analytic continuation of simplex volume along paths of complex Gram matrices.

The continued volume is carried as the solution of the Schlafli system

    dV_J = eps / (|J| - 2) * sum_I V_I * dalpha_I,
    dalpha_I = eps^|J| / (R_J R_I) * (N dP / (2P) - dN),

over the faces ``J`` whose size has the parity of ``n + 1``, with ``N`` the
mixed minor of the ridge ``I`` inside ``J`` and ``P`` the product of the two
adjacent principal minors. Every square root ``R_J = sqrt(eps^(|J|+1) D_J)``
is followed by continuity (nearest root to a linear prediction), and edge
lengths ``Arcosh`` / ``Arccos`` are followed as logarithms with ``2 pi i k``
unwrapping. The ODE is integrated with a Dormand-Prince 5(4) pair whose step
is shrunk whenever a root choice or a log jump looks ambiguous.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import RK45

from ._segment import MinorPlan, SegmentMinors, plan
from .errors import ArgumentError, DomainError, NumericError
from .gram import (GramMatrix, HypersurfaceId, Space, as_array, components,
                   require_chamber)
from .volume import volume

# Dormand-Prince coefficients as published by scipy
_A = RK45.A
_B = RK45.B
_C = RK45.C
_E = RK45.E

_MIN_STEP = 1e-9


@dataclass(frozen=True)
class ComplexPath:
    """Piecewise-linear path through complex Gram matrices."""

    waypoints: tuple[GramMatrix, ...]
    samples_per_segment: int = 8

    def __post_init__(self):
        pts = tuple(p if isinstance(p, GramMatrix) else GramMatrix(np.asarray(p, dtype=complex))
                    for p in self.waypoints)
        if not pts:
            raise ArgumentError("a path needs at least one waypoint")
        if len({p.n for p in pts}) != 1:
            raise ArgumentError("all waypoints must have the same size")
        if self.samples_per_segment < 2:
            raise ArgumentError("samples_per_segment must be at least 2")
        object.__setattr__(self, "waypoints", pts)

    @property
    def n(self) -> int:
        return self.waypoints[0].n

    @property
    def start(self) -> GramMatrix:
        return self.waypoints[0]

    @property
    def end(self) -> GramMatrix:
        return self.waypoints[-1]

    def arrays(self) -> np.ndarray:
        return np.stack([np.asarray(p.entries, dtype=complex) for p in self.waypoints])

    @property
    def is_closed(self) -> bool:
        a = self.arrays()
        return bool(np.allclose(a[0], a[-1], rtol=0, atol=1e-12))

    def segments(self):
        a = self.arrays()
        return list(zip(a[:-1], a[1:]))

    def samples(self, per_segment: int | None = None) -> np.ndarray:
        m = per_segment or self.samples_per_segment
        a = self.arrays()
        if len(a) == 1:
            return a
        t = np.linspace(0.0, 1.0, m + 1)[:-1]
        out = [p + t[:, None, None] * (q - p) for p, q in zip(a[:-1], a[1:])]
        out.append(a[-1:])
        return np.concatenate(out)

    def reversed(self) -> "ComplexPath":
        return ComplexPath(self.waypoints[::-1], self.samples_per_segment)

    def __add__(self, other: "ComplexPath") -> "ComplexPath":
        if not np.allclose(self.end.entries, other.start.entries, atol=1e-12):
            raise ArgumentError("paths do not join")
        return ComplexPath(self.waypoints + other.waypoints[1:],
                           max(self.samples_per_segment, other.samples_per_segment))

    def repeated(self, times: int) -> "ComplexPath":
        if times < 1:
            raise ArgumentError("times must be positive")
        out = self
        for _ in range(times - 1):
            out = out + self
        return out

    def refined(self, factor: int = 2) -> "ComplexPath":
        return ComplexPath(self.waypoints, self.samples_per_segment * factor)


def _as_path(path) -> ComplexPath:
    return path if isinstance(path, ComplexPath) else ComplexPath(tuple(path))


def _component_values(mats: np.ndarray, comp: HypersurfaceId) -> np.ndarray:
    idx = list(comp.index_set)
    if comp.sign is not None:
        j, k = idx
        return 1 + comp.sign * mats[:, j, k]
    return np.linalg.det(mats[:, idx][:, :, idx])


def path_clearance(path) -> float:
    """Smallest ``|D_I|`` (``|I| >= 2``) over the sample points of the path."""
    path = _as_path(path)
    mats = path.samples()
    n = path.n
    if n < 1:
        return math.inf
    mp = plan(n)
    vals = mp.evaluate_minors(mats)[:, :len(mp.sets)]
    return float(np.min(np.abs(vals)))


def default_clearance(path) -> float:
    scale = max(1.0, float(np.max(np.abs(_as_path(path).arrays()))))
    return 1e-6 * scale


def _winding(path: ComplexPath, func: Callable[[np.ndarray], np.ndarray],
             floor: float, max_rounds: int = 30) -> int:
    total = 0.0
    for a, b in path.segments():
        t = np.linspace(0.0, 1.0, path.samples_per_segment + 1)
        for _ in range(max_rounds):
            v = func(a[None] + t[:, None, None] * (b - a)[None])
            if np.min(np.abs(v)) <= floor:
                raise DomainError("loop passes through the hypersurface (clearance failure)")
            jumps = np.angle(v[1:] / v[:-1])
            bad = np.abs(jumps) > math.pi / 4
            if not bad.any():
                break
            mids = 0.5 * (t[:-1][bad] + t[1:][bad])
            t = np.sort(np.concatenate([t, mids]))
        else:
            raise DomainError("could not resolve the argument of a component along the loop")
        total += float(np.sum(jumps))
    w = total / (2 * math.pi)
    k = round(w)
    if abs(w - k) > 1e-6:
        raise DomainError(f"loop is not closed for this component (winding {w:.6f})")
    return int(k)


def linking_number(loop, component: HypersurfaceId, clearance: float | None = None) -> int:
    """Winding number of the component's defining polynomial along a closed loop."""
    loop = _as_path(loop)
    if not loop.is_closed:
        raise ArgumentError("linking numbers need a closed loop")
    floor = default_clearance(loop) if clearance is None else clearance
    if max(component.index_set) > loop.n:
        raise ArgumentError(f"component {component} does not fit n = {loop.n}")
    return _winding(loop, lambda m: _component_values(m, component), floor)


def determinant_linking(loop, clearance: float | None = None) -> int:
    """Linking number with the full-determinant locus (for ``n = 1`` both points ``c = +-1``)."""
    loop = _as_path(loop)
    floor = default_clearance(loop) if clearance is None else clearance
    return _winding(loop, np.linalg.det, floor)


def linking_table(loop, clearance: float | None = None) -> dict[HypersurfaceId, int]:
    loop = _as_path(loop)
    return {c: linking_number(loop, c, clearance) for c in components(loop.n)}


# ---------------------------------------------------------------------------
# continuation state and the Schlafli system


class _System:
    """Vectorized index tables for the continued volume system in dimension ``n``."""

    def __init__(self, n: int, space: Space):
        self.n = n
        self.space = space
        self.plan: MinorPlan = plan(n)
        mp = self.plan
        eps = space.epsilon
        self.nsets = len(mp.sets)
        self.sizes = np.array([len(s) for s in mp.sets])
        self.sign = np.array([float(eps ** (s + 1)) for s in self.sizes])
        self.pairs = [i for i, s in enumerate(mp.sets) if len(s) == 2]
        self.pair_idx = np.array([mp.sets[i] for i in self.pairs]).reshape(-1, 2)
        parity = (n + 1) % 2
        self.integrated = [i for i, s in enumerate(mp.sets) if len(s) >= 3 and len(s) % 2 == parity]
        self.int_pos = {row: p for p, row in enumerate(self.integrated)}
        owner, face_row, i1, i2, mixed, coef = [], [], [], [], [], []
        for p, row in enumerate(self.integrated):
            whole = mp.sets[row]
            m = len(whole)
            for r in mp.ridges[whole]:
                owner.append(p)
                face_row.append(mp.set_row[r.face] if len(r.face) >= 2 else -1)
                i1.append(mp.set_row[tuple(sorted(r.face + (r.j,)))])
                i2.append(mp.set_row[tuple(sorted(r.face + (r.k,)))])
                mixed.append(mp.mixed_row[r])
                coef.append(eps / (m - 2) * eps ** (m - 2))
        self.owner = np.array(owner, dtype=int)
        self.face_row = np.array(face_row, dtype=int)
        self.i1 = np.array(i1, dtype=int)
        self.i2 = np.array(i2, dtype=int)
        self.mixed = np.array(mixed, dtype=int)
        self.coef = np.array(coef, dtype=complex)
        self.whole_row = np.array([self.integrated[p] for p in owner], dtype=int)

    # logs: Arcosh c = Log(c + R), Arccos c = -i Log(c + i R)
    def log_argument(self, c: np.ndarray, r_pairs: np.ndarray) -> np.ndarray:
        vals = c[self.pair_idx[:, 0], self.pair_idx[:, 1]]
        if self.space is Space.HYPERBOLIC:
            return vals + r_pairs
        return vals + 1j * r_pairs

    def pair_volume(self, logs: np.ndarray) -> np.ndarray:
        return logs if self.space is Space.HYPERBOLIC else -1j * logs

    def face_volumes(self, y: np.ndarray, pair_vols: np.ndarray) -> np.ndarray:
        out = np.ones(self.nsets + 1, dtype=complex)  # last slot: empty/point faces
        if len(self.pairs):
            out[self.pairs] = pair_vols
        if len(self.integrated):
            out[self.integrated] = y
        return out

    def rates(self, vals, ders, r, y, pair_vols, only=None):
        """Right-hand side: derivative of every integrated volume."""
        if not len(self.integrated):
            return np.zeros(0, dtype=complex)
        fv = self.face_volumes(y, pair_vols)
        r_face = np.where(self.face_row >= 0, r[np.maximum(self.face_row, 0)], 1.0)
        v_face = fv[np.where(self.face_row >= 0, self.face_row, self.nsets)]
        d1 = vals[self.i1]
        d2 = vals[self.i2]
        p = d1 * d2
        dp = ders[self.i1] * d2 + d1 * ders[self.i2]
        nn = vals[self.mixed]
        dn = ders[self.mixed]
        dalpha = (nn * dp / (2 * p) - dn) / (r[self.whole_row] * r_face)
        contrib = self.coef * v_face * dalpha
        out = np.zeros(len(self.integrated), dtype=complex)
        np.add.at(out, self.owner, contrib)
        return out


@dataclass
class ContinuationState:
    """Branch record at one point of a path.

    ``sqrt_branch[I]`` is the current value of ``R_I`` and ``face_volumes[I]``
    the continued volume of the face ``I`` (edges, and faces whose size has
    the parity of ``n + 1``). ``volume`` is the entry of the full index set.
    """

    position: GramMatrix
    space: Space
    sqrt_branch: dict[tuple[int, ...], complex]
    face_volumes: dict[tuple[int, ...], complex]
    logs: dict[tuple[int, ...], complex] = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return self.position.n

    @property
    def volume(self) -> complex:
        return self.face_volumes[tuple(range(self.n + 1))]

    def branch_residual(self) -> float:
        """``max |R_I^2 - eps^(|I|+1) D_I|`` at the current position."""
        mp = plan(self.n)
        vals = mp.evaluate_minors(np.asarray(self.position.entries, dtype=complex))
        eps = self.space.epsilon
        worst = 0.0
        for i, s in enumerate(mp.sets):
            worst = max(worst, abs(self.sqrt_branch[s] ** 2 - eps ** (len(s) + 1) * vals[i]))
        return worst

    def copy(self) -> "ContinuationState":
        return ContinuationState(self.position, self.space, dict(self.sqrt_branch),
                                 dict(self.face_volumes), dict(self.logs))

    def to_json(self) -> dict:
        def key(s):
            return ",".join(map(str, s))

        def cx(z):
            return [float(z.real), float(z.imag)]

        return {"n": self.n, "space": self.space.value,
                "volume": cx(self.volume),
                "sqrt_branch": {key(s): cx(v) for s, v in self.sqrt_branch.items()},
                "face_volumes": {key(s): cx(v) for s, v in self.face_volumes.items()}}


def init_state(c, space: Space | str) -> ContinuationState:
    """Principal branch at a point of the real chamber: positive roots, real volumes."""
    space = Space.parse(space)
    a = np.asarray(as_array(c))
    if np.iscomplexobj(a):
        if np.any(a.imag != 0):
            raise DomainError("the starting point must be real")
        a = a.real
    n = a.shape[0] - 1
    if n < 1:
        raise ArgumentError("continuation needs n >= 1")
    require_chamber(a, space)
    sysm = _System(n, space)
    mp = sysm.plan
    vals = mp.evaluate_minors(a)[:sysm.nsets]
    r = np.sqrt(sysm.sign * vals.real)
    sqrt_branch = {s: complex(r[i]) for i, s in enumerate(mp.sets)}
    logs = {}
    fvol = {}
    if sysm.pairs:
        w = sysm.log_argument(a.astype(complex), r[sysm.pairs].astype(complex))
        lg = np.log(w)
        for i, row in enumerate(sysm.pairs):
            s = mp.sets[row]
            logs[s] = complex(lg[i])
            fvol[s] = complex(sysm.pair_volume(lg[i:i + 1])[0])
    for row in sysm.integrated:
        s = mp.sets[row]
        fvol[s] = complex(volume(a[np.ix_(s, s)], space).value)
    return ContinuationState(GramMatrix(a.astype(complex)), space, sqrt_branch, fvol, logs)


class _Reject(Exception):
    pass


class _Tracker:
    """Root and log selection relative to the last accepted point."""

    def __init__(self, sysm: _System, r: np.ndarray, logs: np.ndarray):
        self.sysm = sysm
        self.r = r
        self.logs = logs
        self.rdot = None

    def set_rate(self, ders: np.ndarray):
        self.rdot = self.sysm.sign * ders[:self.sysm.nsets] / (2 * self.r)

    def select(self, dt: float, vals: np.ndarray, prev: np.ndarray) -> np.ndarray:
        target = self.sysm.sign * vals[:self.sysm.nsets]
        root = np.sqrt(target)
        pred = self.r + dt * self.rdot
        choose = np.abs(root - pred) <= np.abs(-root - pred)
        r = np.where(choose, root, -root)
        drift = np.abs(r - pred)
        if np.any(2 * np.abs(root) < 10 * drift):
            raise _Reject("ambiguous square root")
        if np.any(np.abs(np.angle(r / prev)) > math.pi / 4):
            raise _Reject("square root turns too fast")
        return r

    def unwrap(self, w: np.ndarray, prev_logs: np.ndarray) -> np.ndarray:
        raw = np.log(w)
        k = np.round((prev_logs.imag - raw.imag) / (2 * math.pi))
        out = raw + 2j * math.pi * k
        if np.any(np.abs(out.imag - prev_logs.imag) > math.pi / 2):
            raise _Reject("logarithm jumps")
        return out


def _advance_segment(sysm: _System, seg: SegmentMinors, tracker: _Tracker, y: np.ndarray,
                     tol_unit: float, h_max: float, h0: float):
    t = 0.0
    h = min(h0, h_max)
    vals, ders = seg.both(0.0)
    tracker.set_rate(ders)
    pair_vols = sysm.pair_volume(tracker.logs)
    k_first = sysm.rates(vals, ders, tracker.r, y, pair_vols)
    steps = 0
    while t < 1.0:
        h = min(h, 1.0 - t)
        if h < _MIN_STEP:
            raise NumericError(
                f"step size underflow at segment parameter t={t:.6g}; the path passes too "
                "close to the discriminant locus, refine it or move it away",
                best=y)
        try:
            ks = [k_first]
            logs_prev = tracker.logs
            stage_r = [tracker.r]
            for i in range(1, 6):
                ti = t + _C[i] * h
                yi = y + h * (np.asarray(ks).T @ _A[i, :i])
                v, d = seg.both(ti)
                ri = tracker.select(ti - t, v, stage_r[-1])
                stage_r.append(ri)
                li = tracker.unwrap(sysm.log_argument(seg.matrix(ti), ri[sysm.pairs]), logs_prev)
                ks.append(sysm.rates(v, d, ri, yi, sysm.pair_volume(li)))
            y_new = y + h * (np.asarray(ks).T @ _B)
            v_end, d_end = v, d  # the last stage sits at t + h
            r_end = stage_r[-1]
            l_end = li
            k_last = sysm.rates(v_end, d_end, r_end, y_new, sysm.pair_volume(l_end))
            ks.append(k_last)
            err = float(np.max(np.abs(h * (np.asarray(ks).T @ _E)))) if len(y) else 0.0
        except _Reject:
            h *= 0.5
            continue
        # below the rounding floor of the stage derivatives no step can do better
        floor = 64 * np.finfo(float).eps * h * max(1.0, float(np.max(np.abs(ks)))) if len(y) else 0.0
        if err <= max(tol_unit * h, floor):
            t += h
            y = y_new
            tracker.r = r_end
            tracker.logs = l_end
            tracker.set_rate(d_end)
            k_first = k_last
            steps += 1
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * (tol_unit * h / err) ** 0.2))
            h = min(h * fac, h_max)
        else:
            h *= max(0.2, 0.9 * (tol_unit * h / err) ** 0.25)
    return y, h, steps


def continue_volume(state: ContinuationState, path, space: Space | str | None = None,
                    tol: float = 1e-10, clearance: float | None = None) -> ContinuationState:
    """Advance ``state`` along ``path`` and return the new state (the input is untouched)."""
    path = _as_path(path)
    space = state.space if space is None else Space.parse(space)
    if space is not state.space:
        raise ArgumentError("space does not match the state")
    if path.n != state.n:
        raise ArgumentError("path and state have different sizes")
    if not np.allclose(path.start.entries, state.position.entries, rtol=0, atol=1e-10):
        raise ArgumentError("path does not start at the state's position")
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    floor = default_clearance(path) if clearance is None else clearance
    clr = path_clearance(path)
    if clr <= floor:
        raise DomainError(f"path clearance {clr:.3e} is below the threshold {floor:.3e}")
    sysm = _System(state.n, space)
    mp = sysm.plan
    r = np.array([state.sqrt_branch[s] for s in mp.sets], dtype=complex)
    logs = np.array([state.logs[mp.sets[i]] for i in sysm.pairs], dtype=complex)
    y = np.array([state.face_volumes[mp.sets[i]] for i in sysm.integrated], dtype=complex)
    tracker = _Tracker(sysm, r, logs)
    segs = path.segments()
    lengths = np.array([np.max(np.abs(b - a)) for a, b in segs])
    total = float(lengths.sum()) or 1.0
    h_max = 1.0 / path.samples_per_segment
    h = h_max
    for (a, b), length in zip(segs, lengths):
        if length == 0:
            continue
        seg = SegmentMinors(a, b, mp)
        # the error budget is shared out in proportion to segment length
        y, h, _ = _advance_segment(sysm, seg, tracker, y, tol * length / total, h_max, h)
        h = max(h, h_max / 8)
    out_r = {s: complex(tracker.r[i]) for i, s in enumerate(mp.sets)}
    out_logs = {mp.sets[row]: complex(tracker.logs[i]) for i, row in enumerate(sysm.pairs)}
    fvol = {}
    pv = sysm.pair_volume(tracker.logs)
    for i, row in enumerate(sysm.pairs):
        fvol[mp.sets[row]] = complex(pv[i])
    for p, row in enumerate(sysm.integrated):
        fvol[mp.sets[row]] = complex(y[p])
    return ContinuationState(path.end, space, out_r, fvol, out_logs)


def angle_form(state: ContinuationState, index_set: Sequence[int], direction) -> complex:
    """Value of the continued 1-form ``d alpha_I`` on a tangent direction at the state's position."""
    n = state.n
    idx = tuple(sorted(index_set))
    if len(idx) != n - 1:
        raise ArgumentError(f"|I| must be n-1 = {n - 1}")
    mp = plan(n)
    a = np.asarray(state.position.entries, dtype=complex)
    seg = SegmentMinors(a, a + np.asarray(direction, dtype=complex), mp)
    vals, ders = seg.both(0.0)
    whole = tuple(range(n + 1))
    (r_obj,) = [r for r in mp.ridges[whole] if r.face == idx]
    i1 = mp.set_row[tuple(sorted(idx + (r_obj.j,)))]
    i2 = mp.set_row[tuple(sorted(idx + (r_obj.k,)))]
    nn, dn = vals[mp.mixed_row[r_obj]], ders[mp.mixed_row[r_obj]]
    p = vals[i1] * vals[i2]
    dp = ders[i1] * vals[i2] + vals[i1] * ders[i2]
    r_face = state.sqrt_branch[idx] if len(idx) >= 2 else 1.0
    eps = state.space.epsilon
    return complex(eps ** (n - 1) / (state.sqrt_branch[whole] * r_face) * (nn * dp / (2 * p) - dn))


# ---------------------------------------------------------------------------
# monodromy checks


@dataclass(frozen=True)
class MonodromyReport:
    loop: ComplexPath
    space: Space
    lk_H: int
    lk_per_component: dict[HypersurfaceId, int]
    v_start: complex
    v_end: complex
    defect: complex
    quantity: float
    threshold: float
    holds: bool
    start_state: ContinuationState | None = field(default=None, repr=False)
    end_state: ContinuationState | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        def cx(z):
            return [float(z.real), float(z.imag)]

        return {"space": self.space.value, "n": self.loop.n, "lk_H": self.lk_H,
                "lk": {c.label(): v for c, v in self.lk_per_component.items()},
                "v_start": cx(self.v_start), "v_end": cx(self.v_end),
                "defect": cx(self.defect), "checked_quantity": self.quantity,
                "threshold": self.threshold, "holds": self.holds}


def _run_loop(loop, space: Space, tol: float):
    loop = _as_path(loop)
    if not loop.is_closed:
        raise ArgumentError("monodromy needs a closed loop")
    start = init_state(loop.start.entries.real if loop.start.is_complex else loop.start, space)
    end = continue_volume(start, loop, space, tol)
    table = linking_table(loop)
    lk_h = determinant_linking(loop)
    return loop, start, end, table, lk_h


def verify_theorem_key(loop, space: Space | str = Space.HYPERBOLIC, tol: float = 1e-6,
                       continuation_tol: float = 1e-10) -> MonodromyReport:
    """Continue around a loop based in the hyperbolic chamber (odd ``n``) and test that
    ``V_end - (-1)^lk(loop, H) V_start`` is purely imaginary.

    The real part is compared with ``tol * (1 + |V_start|)``.
    """
    space = Space.parse(space)
    if space is not Space.HYPERBOLIC:
        raise ArgumentError("this check is for hyperbolic simplices")
    loop = _as_path(loop)
    if loop.n % 2 == 0:
        raise ArgumentError("this check needs odd n")
    loop, start, end, table, lk_h = _run_loop(loop, space, continuation_tol)
    v1, v2 = start.volume, end.volume
    defect = v2 - (-1) ** lk_h * v1
    q = abs(defect.real)
    thr = tol * (1 + abs(v1))
    return MonodromyReport(loop, space, lk_h, table, v1, v2, defect, q, thr, q <= thr, start, end)


def verify_theorem_key2(loop, space: Space | str, tol: float = 1e-6,
                        continuation_tol: float = 1e-10) -> MonodromyReport:
    """Continue around a loop and test that the returned branch is real at the basepoint.

    Applies to spheres of any dimension and to the hyperbolic plane.
    """
    space = Space.parse(space)
    loop = _as_path(loop)
    if space is Space.HYPERBOLIC and loop.n % 2 == 1:
        raise ArgumentError("for hyperbolic space this check needs even n")
    loop, start, end, table, lk_h = _run_loop(loop, space, continuation_tol)
    v1, v2 = start.volume, end.volume
    defect = v2 - (-1) ** lk_h * v1
    q = abs(v2.imag)
    thr = tol * (1 + abs(v1))
    return MonodromyReport(loop, space, lk_h, table, v1, v2, defect, q, thr, q <= thr, start, end)
