"""Gram matrices of simplex vertices: minors, chamber classification, vertex recovery.

A Gram matrix here is a symmetric ``(n+1) x (n+1)`` matrix with ones on the
diagonal. For a simplex in the unit sphere ``S^n`` (Euclidean form) or in the
hyperboloid model of ``H^n`` (Minkowski form ``x0*y0 - x1*y1 - ...``) it holds
the pairwise inner products of the vertices, i.e. ``cos`` / ``cosh`` of the
edge lengths.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, DomainError


class Space(enum.Enum):
    """Ambient space of constant curvature ``epsilon``."""

    SPHERE = "sphere"
    HYPERBOLIC = "hyperbolic"

    @property
    def epsilon(self) -> int:
        return 1 if self is Space.SPHERE else -1

    @property
    def curvature(self) -> int:
        return self.epsilon

    @classmethod
    def parse(cls, value: "Space | str") -> "Space":
        if isinstance(value, Space):
            return value
        key = str(value).strip().lower()
        aliases = {"s": "sphere", "spherical": "sphere", "h": "hyperbolic",
                   "lambda": "hyperbolic", "lobachevsky": "hyperbolic"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ArgumentError(f"unknown space {value!r}") from None

    def form(self, dim: int) -> np.ndarray:
        """Diagonal of the bilinear form on ``R^{dim}``."""
        eta = np.ones(dim)
        if self is Space.HYPERBOLIC:
            eta[1:] = -1.0
        return eta


def inner(x, y, space: Space) -> float:
    x = np.asarray(x)
    y = np.asarray(y)
    return x @ (space.form(x.shape[-1]) * y)


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """Symmetric unit-diagonal matrix, real or complex. Immutable."""

    entries: np.ndarray
    atol: float = field(default=1e-10, repr=False)

    def __post_init__(self):
        a = np.array(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ArgumentError(f"Gram matrix must be square, got shape {a.shape}")
        if np.iscomplexobj(a):
            if np.all(a.imag == 0):
                a = a.real.copy()
        else:
            a = a.astype(float)
        scale = max(1.0, float(np.max(np.abs(a))))
        if np.max(np.abs(np.diag(a) - 1.0)) > self.atol * scale:
            raise ArgumentError("Gram matrix must have unit diagonal")
        if np.max(np.abs(a - a.T)) > self.atol * scale:
            raise ArgumentError("Gram matrix must be symmetric")
        a = 0.5 * (a + a.T)
        np.fill_diagonal(a, 1.0)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0] - 1

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.entries)

    @property
    def field(self) -> str:
        return "complex" if self.is_complex else "real"

    def __getitem__(self, key):
        return self.entries[key]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, GramMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and np.array_equal(
            self.entries, other.entries)

    def __hash__(self):
        return hash(self.entries.tobytes())

    def sub(self, index_set: Iterable[int]) -> "GramMatrix":
        """Principal submatrix ``C_I`` (the Gram matrix of a face)."""
        idx = list(normalize_index_set(index_set, self.n))
        return GramMatrix(self.entries[np.ix_(idx, idx)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.entries))

    @classmethod
    def from_offdiagonal(cls, n: int, values: dict) -> "GramMatrix":
        c = np.eye(n + 1, dtype=complex if any(
            isinstance(v, complex) for v in values.values()) else float)
        for (j, k), v in values.items():
            c[j, k] = c[k, j] = v
        return cls(c)


def as_array(c) -> np.ndarray:
    return c.entries if isinstance(c, GramMatrix) else np.asarray(c)


def normalize_index_set(index_set: Iterable[int], n: int) -> tuple[int, ...]:
    """Sorted tuple of distinct indices in ``0..n``."""
    idx = tuple(sorted(int(i) for i in index_set))
    if len(set(idx)) != len(idx):
        raise ArgumentError(f"repeated index in {idx}")
    if idx and (idx[0] < 0 or idx[-1] > n):
        raise ArgumentError(f"index set {idx} not contained in 0..{n}")
    return idx


def _ordered(index_seq, n: int) -> tuple[int, ...]:
    if isinstance(index_seq, (set, frozenset)):
        return normalize_index_set(index_seq, n)
    idx = tuple(int(i) for i in index_seq)
    if len(set(idx)) != len(idx):
        raise ArgumentError(f"repeated index in {idx}")
    if any(i < 0 or i > n for i in idx):
        raise ArgumentError(f"index set {idx} not contained in 0..{n}")
    return idx


def minor(c, rows: Iterable[int], cols: Iterable[int]):
    """Determinant of the submatrix with the given rows and columns.

    Sets are taken in increasing order; other sequences in the order given,
    which fixes the sign of non-principal minors.
    """
    a = as_array(c)
    n = a.shape[0] - 1
    r = _ordered(rows, n)
    s = _ordered(cols, n)
    if len(r) != len(s):
        raise ArgumentError(f"minor needs |I| = |J|, got {len(r)} and {len(s)}")
    if not r:
        return 1.0
    # LAPACK getrf: LU with partial pivoting
    return np.linalg.det(a[np.ix_(r, s)])


def principal_minor(c, index_set: Iterable[int]):
    return minor(c, set(index_set), set(index_set))


def dihedral_pair(index_set: Sequence[int], n: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Row and column orders ``(j, *I)``, ``(k, *I)`` for a ridge ``I`` with complement ``{j < k}``.

    With this ordering the cosine of the dihedral angle at the face ``I`` is
    ``eps^(n-1) * D_{rows,cols} / sqrt(D_{I+j} D_{I+k})`` without further sign
    bookkeeping.
    """
    idx = normalize_index_set(index_set, n)
    rest = [i for i in range(n + 1) if i not in idx]
    if len(rest) != 2:
        raise ArgumentError(f"ridge index set must have n-1 = {n - 1} elements, got {idx}")
    j, k = rest
    return (j, *idx), (k, *idx)


def jacobi_residual(c, index_set: Iterable[int]):
    """``D*D_I - (D_I' D_I'' - D_{I',I''}^2)`` for ``|I| = n - 1``; identically zero."""
    a = as_array(c)
    n = a.shape[0] - 1
    idx = normalize_index_set(index_set, n)
    if len(idx) != n - 1:
        raise ArgumentError(f"|I| must be n-1 = {n - 1}")
    j, k = [i for i in range(n + 1) if i not in idx]
    i1 = set(idx) | {j}
    i2 = set(idx) | {k}
    d = minor(a, range(n + 1), range(n + 1))
    d_i = minor(a, set(idx), set(idx)) if idx else 1.0
    return d * d_i - (minor(a, i1, i1) * minor(a, i2, i2) - minor(a, i1, i2) ** 2)


def principal_minors(c, min_size: int = 2) -> dict[tuple[int, ...], complex]:
    """All principal minors ``D_I`` with ``|I| >= min_size``, keyed by sorted index tuple."""
    a = as_array(c)
    n = a.shape[0] - 1
    out: dict[tuple[int, ...], complex] = {}
    for size in range(max(min_size, 1), n + 2):
        sets = list(itertools.combinations(range(n + 1), size))
        idx = np.array(sets)
        subs = a[idx[:, :, None], idx[:, None, :]]
        dets = np.linalg.det(subs)
        out.update(zip(sets, dets.tolist()))
    return out


@dataclass(frozen=True, order=True)
class HypersurfaceId:
    """Irreducible component of the discriminant locus ``X``.

    ``sign`` is ``+1``/``-1`` exactly when ``|I| = 2``, naming the hyperplane
    ``1 + c_jk = 0`` or ``1 - c_jk = 0``; otherwise ``None`` and the component
    is ``D_I = 0``.
    """

    index_set: tuple[int, ...]
    sign: int | None = None

    def __post_init__(self):
        idx = tuple(sorted(self.index_set))
        object.__setattr__(self, "index_set", idx)
        if len(idx) < 2:
            raise ArgumentError("hypersurface index set needs at least two indices")
        if (len(idx) == 2) != (self.sign is not None):
            raise ArgumentError("sign is required iff |I| = 2")
        if self.sign is not None and self.sign not in (1, -1):
            raise ArgumentError("sign must be +1 or -1")

    def value(self, c):
        """The defining polynomial evaluated at ``c``."""
        a = as_array(c)
        if self.sign is not None:
            j, k = self.index_set
            return 1 + self.sign * a[j, k]
        return minor(a, set(self.index_set), set(self.index_set))

    def label(self) -> str:
        body = "H{" + ",".join(map(str, self.index_set)) + "}"
        if self.sign is not None:
            body += "+" if self.sign > 0 else "-"
        return body

    def __str__(self):
        return self.label()

    @classmethod
    def parse(cls, text: str) -> "HypersurfaceId":
        t = text.strip()
        sign = None
        if t.endswith("+"):
            sign, t = 1, t[:-1]
        elif t.endswith("-"):
            sign, t = -1, t[:-1]
        t = t.removeprefix("H").strip("{}")
        return cls(tuple(int(s) for s in t.split(",") if s), sign)


def components(n: int) -> list[HypersurfaceId]:
    """All irreducible components of ``X`` in ``G_(n)``."""
    out = []
    for size in range(2, n + 2):
        for idx in itertools.combinations(range(n + 1), size):
            if size == 2:
                out.append(HypersurfaceId(idx, 1))
                out.append(HypersurfaceId(idx, -1))
            else:
                out.append(HypersurfaceId(idx))
    return out


def full_component(n: int) -> HypersurfaceId:
    """``H``, the component of degenerate matrices (``D = 0``)."""
    if n == 1:
        raise ArgumentError("for n = 1 the determinant 1 - c^2 is reducible; use the two signed hyperplanes")
    return HypersurfaceId(tuple(range(n + 1)))


class DomainKind(enum.Enum):
    SPHERICAL_SIMPLEX = "spherical_simplex"
    HYPERBOLIC_SIMPLEX = "hyperbolic_simplex"
    ON_HYPERSURFACE = "on_hypersurface"
    OTHER_REAL = "other_real"
    NON_REAL = "non_real"


@dataclass(frozen=True)
class DomainClass:
    kind: DomainKind
    hypersurfaces: tuple[HypersurfaceId, ...] = ()

    def __post_init__(self):
        if self.kind is DomainKind.ON_HYPERSURFACE and not self.hypersurfaces:
            raise ArgumentError("ON_HYPERSURFACE needs at least one component")

    def matches(self, space: Space) -> bool:
        want = (DomainKind.SPHERICAL_SIMPLEX if space is Space.SPHERE
                else DomainKind.HYPERBOLIC_SIMPLEX)
        return self.kind is want


def default_tol(c) -> float:
    return 1e-9 * max(1.0, float(np.linalg.norm(as_array(c))))


def classify_domain(c, tol: float | None = None) -> DomainClass:
    """Locate ``c`` relative to the chambers of real Gram matrices.

    Values within ``tol`` of a hypersurface are reported as lying on it; the
    answer inside that band is indeterminate by construction.
    """
    a = as_array(c)
    if np.iscomplexobj(a) and np.any(a.imag != 0):
        return DomainClass(DomainKind.NON_REAL)
    a = np.real(a)
    n = a.shape[0] - 1
    if tol is None:
        tol = default_tol(a)
    minors = principal_minors(a, 2)
    on = []
    for idx, d in minors.items():
        if len(idx) == 2:
            j, k = idx
            for s in (1, -1):
                if abs(1 + s * a[j, k]) <= tol:
                    on.append(HypersurfaceId(idx, s))
        elif abs(d) <= tol:
            on.append(HypersurfaceId(idx))
    if on:
        return DomainClass(DomainKind.ON_HYPERSURFACE, tuple(sorted(on, key=lambda h: (len(h.index_set), h.index_set, h.sign or 0))))
    if n == 0 or all(d > tol for d in minors.values()):
        return DomainClass(DomainKind.SPHERICAL_SIMPLEX)
    off = a[np.triu_indices(n + 1, 1)]
    if np.all(off > 1 + tol) and all((-1) ** len(idx) * d < -tol for idx, d in minors.items()):
        return DomainClass(DomainKind.HYPERBOLIC_SIMPLEX)
    return DomainClass(DomainKind.OTHER_REAL)


def require_chamber(c, space: Space, tol: float | None = None) -> DomainClass:
    cls = classify_domain(c, tol)
    if not cls.matches(space):
        raise DomainError(
            f"matrix is not the Gram matrix of a non-degenerate {space.value} simplex "
            f"(classified as {cls.kind.value}"
            + (": " + ", ".join(map(str, cls.hypersurfaces)) if cls.hypersurfaces else "") + ")")
    return cls


def witness_matrix(n: int, index_set: Iterable[int], sigma: int = 1) -> GramMatrix:
    """Real matrix on ``H`` and one other component ``H_I`` (or ``H_I^sigma``) only.

    Built for ``I = {0..k-1}`` with ``2 <= k < n`` and then relabelled so that
    those rows land on the caller's ``index_set``. ``sigma`` only matters when
    ``|I| = 2``.
    """
    idx = normalize_index_set(index_set, n)
    k = len(idx)
    if k < 2 or k >= n:
        raise ArgumentError(f"witness matrices need 2 <= |I| < n, got |I| = {k}, n = {n}")
    if sigma not in (1, -1):
        raise ArgumentError("sigma must be +1 or -1")
    base = np.eye(n + 1)
    for j in range(1, k):
        base[0, j] = base[j, 0] = -sigma / math.sqrt(k - 1)
    for j in range(k, n):
        base[0, j] = base[j, 0] = 2.0
    base[1, n] = base[n, 1] = (1.0 - 1.0 / (4 * (k - 1) * (n - k))) ** -0.5
    perm = list(idx) + [i for i in range(n + 1) if i not in idx]
    out = np.empty_like(base)
    out[np.ix_(perm, perm)] = base
    return GramMatrix(out)


def gram_from_vertices(points, space: Space | str, tol: float = 1e-9) -> GramMatrix:
    """Gram matrix of points on the unit sphere or the upper hyperboloid sheet."""
    space = Space.parse(space)
    x = np.atleast_2d(np.asarray(points, dtype=float))
    eta = space.form(x.shape[1])
    norms = np.einsum("ij,j,ij->i", x, eta, x)
    scale = np.maximum(1.0, np.sum(x * x, axis=1))
    bad = np.abs(norms - 1.0) > tol * scale
    if np.any(bad):
        raise ArgumentError(f"points {np.flatnonzero(bad).tolist()} do not have unit norm in the {space.value} form")
    if space is Space.HYPERBOLIC and np.any(x[:, 0] <= 0):
        raise ArgumentError("hyperboloid points must lie on the upper sheet (x0 > 0)")
    g = (x * eta) @ x.T
    np.fill_diagonal(g, 1.0)
    return GramMatrix(g)


def triangular_factor(c, eta: np.ndarray) -> np.ndarray:
    """Lower-triangular ``X`` with ``X diag(eta) X^T = c`` and positive diagonal.

    Rows are vertex coordinates. Raises :class:`DomainError` when a pivot
    would need the wrong sign (the matrix is not a Gram matrix of independent
    vectors with that signature).
    """
    a = np.asarray(as_array(c), dtype=float)
    m = a.shape[0]
    x = np.zeros((m, m))
    for j in range(m):
        for i in range(j):
            s = a[j, i] - np.dot(x[j, :i] * eta[:i], x[i, :i])
            x[j, i] = s / (eta[i] * x[i, i])
        rem = (a[j, j] - np.dot(x[j, :j] * eta[:j], x[j, :j])) * eta[j]
        if not rem > 0:
            raise DomainError(f"no real vertex for row {j}: pivot {rem:.3e} <= 0")
        x[j, j] = math.sqrt(rem)
    return x


def vertices_from_gram(c, space: Space | str) -> np.ndarray:
    """Vertices realizing ``c``: first at ``(1, 0, ..., 0)``, the rest in triangular position.

    Returns an ``(n+1) x (n+1)`` array whose rows are the vertices.
    """
    space = Space.parse(space)
    a = as_array(c)
    if np.iscomplexobj(a):
        raise DomainError("complex Gram matrices have no real vertices")
    require_chamber(a, space)
    x = triangular_factor(a, space.form(a.shape[0]))
    return x
