"""Minors along straight segments of Gram space as exact polynomials in the parameter.

On ``C(t) = A + t (B - A)`` every ``s x s`` minor is a polynomial of degree at
most ``s`` in ``t``. Coefficients are recovered from values on a circle via
the FFT, after which values and derivatives at any ``t`` cost one small
matrix product. Coefficients are stored in the variable ``s = 2t - 1`` so that
the segment maps to ``[-1, 1]``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Ridge:
    """A codimension-2 face ``I`` of the simplex ``J`` with ``J \\ I = {j < k}``."""

    whole: tuple[int, ...]
    face: tuple[int, ...]
    j: int
    k: int


class MinorPlan:
    """Index bookkeeping for all minors the volume 1-forms need in dimension ``n``.

    ``sets`` lists every principal index set with ``|J| >= 2``; ``ridges[J]``
    lists the ridges of ``J`` for ``|J| >= 3``. Each principal set and each
    ridge's mixed minor ``D_{(j,I),(k,I)}`` has a row in the coefficient table.
    """

    def __init__(self, n: int):
        self.n = n
        self.sets: list[tuple[int, ...]] = [
            s for size in range(2, n + 2) for s in itertools.combinations(range(n + 1), size)]
        self.set_row = {s: i for i, s in enumerate(self.sets)}
        self.ridges: dict[tuple[int, ...], list[Ridge]] = {}
        mixed_rows: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
        self.mixed_row: dict[Ridge, int] = {}
        for whole in self.sets:
            if len(whole) < 3:
                continue
            lst = []
            for j, k in itertools.combinations(whole, 2):
                face = tuple(i for i in whole if i not in (j, k))
                r = Ridge(whole, face, j, k)
                lst.append(r)
                self.mixed_row[r] = len(self.sets) + len(mixed_rows)
                mixed_rows.append(((j, *face), (k, *face)))
            self.ridges[whole] = lst
        self.minors = [(s, s) for s in self.sets] + mixed_rows
        self.degree = n + 1
        self.npts = n + 2
        # group minors by size for batched determinants
        self.groups = []
        for size in sorted({len(r) for r, _ in self.minors}):
            rows = [i for i, (r, _) in enumerate(self.minors) if len(r) == size]
            ri = np.array([self.minors[i][0] for i in rows])
            ci = np.array([self.minors[i][1] for i in rows])
            self.groups.append((np.array(rows), ri, ci))

    def evaluate_minors(self, c: np.ndarray) -> np.ndarray:
        """All planned minors of one matrix (or a stack of matrices, leading axes kept)."""
        c = np.asarray(c)
        lead = c.shape[:-2]
        out = np.empty(lead + (len(self.minors),), dtype=np.result_type(c, float))
        for rows, ri, ci in self.groups:
            subs = c[..., ri[:, :, None], ci[:, None, :]]
            out[..., rows] = np.linalg.det(subs)
        return out

    def set_index(self, index_set) -> int:
        return self.set_row[tuple(index_set)]


@lru_cache(maxsize=None)
def plan(n: int) -> MinorPlan:
    return MinorPlan(n)


class SegmentMinors:
    """Polynomial representation of every planned minor along ``A -> B``."""

    def __init__(self, a: np.ndarray, b: np.ndarray, mplan: MinorPlan | None = None):
        a = np.asarray(a)
        b = np.asarray(b)
        self.plan = mplan or plan(a.shape[0] - 1)
        self.a = a
        self.b = b
        self.is_real = not (np.iscomplexobj(a) or np.iscomplexobj(b))
        m = self.plan.npts
        s = np.exp(2j * np.pi * np.arange(m) / m)
        t = 0.5 + 0.5 * s
        mats = a[None] + t[:, None, None] * (b - a)[None]
        vals = self.plan.evaluate_minors(mats)  # (m, K)
        coef = np.fft.fft(vals, axis=0) / m  # coef[l] multiplies s**l
        coef = coef.T.copy()  # (K, m)
        if self.is_real:
            coef = coef.real.copy()
        self.coef = coef
        self.dcoef = coef[:, 1:] * np.arange(1, m)[None, :] * 2.0  # d/dt = 2 d/ds

    def matrix(self, t: float) -> np.ndarray:
        return self.a + t * (self.b - self.a)

    def values(self, t):
        """Minor values at scalar or array ``t``; shape ``(K,)`` or ``(K, T)``."""
        s = 2.0 * np.asarray(t) - 1.0
        pw = s[..., None] ** np.arange(self.coef.shape[1])
        return self.coef @ pw.T if np.ndim(t) else self.coef @ pw

    def derivatives(self, t):
        s = 2.0 * np.asarray(t) - 1.0
        pw = s[..., None] ** np.arange(self.dcoef.shape[1])
        return self.dcoef @ pw.T if np.ndim(t) else self.dcoef @ pw

    def both(self, t: float):
        s = 2.0 * t - 1.0
        pw = s ** np.arange(self.coef.shape[1])
        return self.coef @ pw, self.dcoef @ pw[:-1]
