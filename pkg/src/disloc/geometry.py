"""Boxes, oriented simplices and chains in a coordinate patch of R^n.

Chains are stored canonically: each simplex is keyed by its vertices sorted
lexicographically and the parity of the sorting permutation is folded into
its real coefficient.  With this convention shared faces of opposite
orientation cancel exactly in :func:`boundary_chain`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DegreeMismatchError, FormError, GeometryError
from .quadrature import QuadratureRule

__all__ = [
    "Box",
    "Patch",
    "OrientedSimplex",
    "Chain",
    "boundary_chain",
    "restrict_to_interior",
    "triangulate_box",
    "triangulate_grid",
    "triangulate_flat",
    "orientation_from_normal",
    "clip_simplex",
    "integrate_over_chain",
    "integrate_over_box",
    "permutation_parity",
]

DEGENERACY_RTOL = 1e-12


def permutation_parity(seq: Sequence) -> int:
    """Sign (+1/-1) of the permutation that sorts ``seq`` (distinct items)."""
    order = sorted(range(len(seq)), key=lambda i: seq[i])
    sign = 1
    seen = [False] * len(order)
    for i in range(len(order)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``[lo, hi]``; may be empty or flat."""

    lo: tuple
    hi: tuple

    def __init__(self, lo, hi):
        lo = tuple(float(v) for v in lo)
        hi = tuple(float(v) for v in hi)
        if len(lo) != len(hi):
            raise GeometryError("box corners have different dimensions")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_bounds(cls, bounds) -> "Box":
        """Build from ``[[lo_1, hi_1], ..., [lo_n, hi_n]]``."""
        bounds = [tuple(b) for b in bounds]
        return cls([b[0] for b in bounds], [b[1] for b in bounds])

    @classmethod
    def around(cls, center, radii) -> "Box":
        c = np.asarray(center, dtype=float)
        r = np.broadcast_to(np.asarray(radii, dtype=float), c.shape)
        return cls(c - r, c + r)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_array(self) -> np.ndarray:
        return np.array(self.lo)

    @property
    def hi_array(self) -> np.ndarray:
        return np.array(self.hi)

    @property
    def extent(self) -> np.ndarray:
        return self.hi_array - self.lo_array

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo_array + self.hi_array)

    def is_empty(self) -> bool:
        return any(h < l for l, h in zip(self.lo, self.hi))

    def is_solid(self) -> bool:
        return all(h > l for l, h in zip(self.lo, self.hi))

    def volume(self) -> float:
        if self.is_empty():
            return 0.0
        return float(np.prod(self.extent))

    def intersect(self, other: "Box") -> "Box":
        if other.dim != self.dim:
            raise GeometryError("box dimension mismatch")
        return Box(np.maximum(self.lo, other.lo), np.minimum(self.hi, other.hi))

    def contains(self, x, closed: bool = True) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if closed:
            ok = (x >= self.lo_array) & (x <= self.hi_array)
        else:
            ok = (x > self.lo_array) & (x < self.hi_array)
        return np.all(ok, axis=-1)

    def contains_box(self, other: "Box", strict: bool = False) -> bool:
        if strict:
            return all(a > b for a, b in zip(other.lo, self.lo)) and all(
                a < b for a, b in zip(other.hi, self.hi)
            )
        return all(a >= b for a, b in zip(other.lo, self.lo)) and all(
            a <= b for a, b in zip(other.hi, self.hi)
        )

    def bounds(self) -> list:
        return [[l, h] for l, h in zip(self.lo, self.hi)]


class Patch:
    """A coordinate chart: an open axis-aligned box in R^n, n in {2, 3}."""

    def __init__(self, dim: int, bounds):
        if dim not in (2, 3):
            raise GeometryError(f"patch dimension must be 2 or 3, got {dim}")
        box = bounds if isinstance(bounds, Box) else Box.from_bounds(bounds)
        if box.dim != dim:
            raise GeometryError("bounds do not match patch dimension")
        if not box.is_solid():
            raise GeometryError("patch bounds must have positive extent on every axis")
        self.dim = dim
        self.box = box

    @classmethod
    def cube(cls, dim: int, lo: float = -1.0, hi: float = 1.0) -> "Patch":
        return cls(dim, [[lo, hi]] * dim)

    def contains(self, x, closed: bool = True) -> np.ndarray:
        return self.box.contains(x, closed=closed)

    def on_boundary(self, x) -> np.ndarray:
        """Boolean mask per point and per face: shape (..., 2n)."""
        x = np.asarray(x, dtype=float)
        return np.concatenate([x == self.box.lo_array, x == self.box.hi_array], axis=-1)

    def __eq__(self, other):
        return isinstance(other, Patch) and self.box == other.box

    def __hash__(self):
        return hash(self.box)

    def __repr__(self):
        return f"Patch(dim={self.dim}, bounds={self.box.bounds()})"


def _simplex_volume(v: np.ndarray) -> float:
    k = v.shape[0] - 1
    if k == 0:
        return 1.0
    e = v[1:] - v[0]
    g = e @ e.T
    return math.sqrt(max(np.linalg.det(g), 0.0)) / math.factorial(k)


class OrientedSimplex:
    """An ordered list of ``k + 1`` affinely independent points and a sign."""

    def __init__(self, vertices, orientation: int = 1, patch: Patch | None = None):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[0] < 1:
            raise GeometryError("a simplex needs a (k+1, n) vertex array")
        k, n = v.shape[0] - 1, v.shape[1]
        if k > n:
            raise GeometryError(f"{k}-simplex cannot live in R^{n}")
        if orientation not in (1, -1):
            raise GeometryError("orientation must be +1 or -1")
        if k > 0:
            diam = float(np.max(v.max(axis=0) - v.min(axis=0)))
            if diam == 0.0 or _simplex_volume(v) < DEGENERACY_RTOL * diam**k:
                raise GeometryError(f"degenerate {k}-simplex {v.tolist()}")
        if patch is not None:
            if patch.dim != n:
                raise GeometryError("simplex and patch dimensions differ")
            if not np.all(patch.contains(v)):
                raise GeometryError("simplex vertex outside patch bounds")
        self.vertices = v
        self.orientation = orientation
        self.k = k
        self.dim = n

    def key_and_sign(self):
        pts = [tuple(p) for p in self.vertices.tolist()]
        if len(set(pts)) != len(pts):
            raise GeometryError("repeated simplex vertex")
        return tuple(sorted(pts)), permutation_parity(pts) * self.orientation

    def reversed(self) -> "OrientedSimplex":
        return OrientedSimplex(self.vertices, -self.orientation)

    def volume(self) -> float:
        return _simplex_volume(self.vertices)

    def __repr__(self):
        sign = "+" if self.orientation > 0 else "-"
        return f"OrientedSimplex({sign}{self.vertices.tolist()})"


class Chain:
    """Finite formal sum of oriented k-simplices with real coefficients."""

    __slots__ = ("degree", "dim", "_terms")

    def __init__(self, degree: int, dim: int, terms: dict | None = None):
        if degree < 0 or degree > dim:
            raise GeometryError(f"invalid chain degree {degree} in R^{dim}")
        self.degree = degree
        self.dim = dim
        self._terms = {k: c for k, c in (terms or {}).items() if c != 0.0}

    @classmethod
    def empty(cls, degree: int, dim: int) -> "Chain":
        return cls(degree, dim)

    @classmethod
    def from_simplices(cls, simplices: Iterable, dim: int | None = None, patch: Patch | None = None) -> "Chain":
        """Build from ``(vertices, coefficient)`` pairs or :class:`OrientedSimplex` objects."""
        terms: dict = {}
        degree = None
        for item in simplices:
            if isinstance(item, OrientedSimplex):
                s, coef = item, 1.0
            else:
                verts, coef = item
                s = OrientedSimplex(verts, patch=patch)
            if patch is not None and s.dim != patch.dim:
                raise GeometryError("simplex and patch dimensions differ")
            if degree is None:
                degree, dim = s.k, s.dim if dim is None else dim
            elif s.k != degree:
                raise DegreeMismatchError("chain simplices must share one dimension")
            key, sign = s.key_and_sign()
            terms[key] = terms.get(key, 0.0) + sign * float(coef)
        if degree is None:
            raise GeometryError("use Chain.empty for an empty chain")
        return cls(degree, dim, terms)

    @classmethod
    def simplex(cls, vertices, coefficient: float = 1.0, patch: Patch | None = None) -> "Chain":
        return cls.from_simplices([(vertices, coefficient)], patch=patch)

    def items(self) -> Iterator:
        """``(vertex array, coefficient)`` in canonical (sorted) order."""
        for key in sorted(self._terms):
            yield np.array(key, dtype=float), self._terms[key]

    def keys(self):
        return self._terms.keys()

    def coefficient(self, key) -> float:
        return self._terms.get(key, 0.0)

    def __len__(self):
        return len(self._terms)

    def is_empty(self) -> bool:
        return not self._terms

    def _check(self, other: "Chain"):
        if not isinstance(other, Chain):
            return NotImplemented
        if other.degree != self.degree or other.dim != self.dim:
            raise DegreeMismatchError("cannot add chains of different degree")

    def __add__(self, other: "Chain") -> "Chain":
        self._check(other)
        terms = dict(self._terms)
        for k, c in other._terms.items():
            terms[k] = terms.get(k, 0.0) + c
        return Chain(self.degree, self.dim, terms)

    def __neg__(self) -> "Chain":
        return Chain(self.degree, self.dim, {k: -c for k, c in self._terms.items()})

    def __sub__(self, other: "Chain") -> "Chain":
        return self + (-other)

    def __mul__(self, scalar: float) -> "Chain":
        scalar = float(scalar)
        return Chain(self.degree, self.dim, {k: scalar * c for k, c in self._terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return (self.degree, self.dim, self._terms) == (other.degree, other.dim, other._terms)

    def __hash__(self):
        return hash((self.degree, self.dim, frozenset(self._terms.items())))

    def filter(self, keep) -> "Chain":
        return Chain(self.degree, self.dim, {k: c for k, c in self._terms.items() if keep(k)})

    def vertices_bbox(self) -> Box:
        pts = np.array([p for key in self._terms for p in key])
        return Box(pts.min(axis=0), pts.max(axis=0))

    def volume(self) -> float:
        """Total k-volume weighted by coefficients.

        For top-degree chains the orientation of each simplex relative to
        the standard one is included, so a positively oriented
        triangulation of a box returns the box volume.
        """
        total = 0.0
        for v, c in self.items():
            vol = _simplex_volume(v)
            if self.degree == self.dim and self.degree > 0:
                vol *= float(np.sign(np.linalg.det(v[1:] - v[0])))
            total += c * vol
        return total

    def to_list(self) -> list:
        return [{"vertices": v.tolist(), "coefficient": c} for v, c in self.items()]

    def __repr__(self):
        return f"Chain(degree={self.degree}, dim={self.dim}, simplices={len(self)})"


def boundary_chain(c: Chain) -> Chain:
    """Alternating face expansion; shared faces cancel exactly."""
    if c.degree == 0:
        raise GeometryError("no boundary for 0-chains")
    terms: dict = {}
    for key in sorted(c.keys()):
        a = c.coefficient(key)
        for i in range(len(key)):
            face = key[:i] + key[i + 1:]
            terms[face] = terms.get(face, 0.0) + (-1) ** i * a
    return Chain(c.degree - 1, c.dim, terms)


def restrict_to_interior(c: Chain, patch: Patch) -> Chain:
    """Drop simplices lying entirely in one face of the patch boundary.

    Such simplices pair to zero with every form compactly supported in the
    open patch, so this is the chain seen by currents on the open patch.
    """
    lo, hi = patch.box.lo, patch.box.hi

    def keep(key):
        for axis in range(patch.dim):
            if all(p[axis] == lo[axis] for p in key) or all(p[axis] == hi[axis] for p in key):
                return False
        return True

    return c.filter(keep)


def _kuhn_simplices(m: int):
    """Vertex offsets (as 0/1 tuples) of the m! Kuhn simplices of the unit m-cube."""
    out = []
    for perm in itertools.permutations(range(m)):
        verts = [tuple([0] * m)]
        cur = [0] * m
        for axis in perm:
            cur = list(cur)
            cur[axis] = 1
            verts.append(tuple(cur))
        out.append(verts)
    return out


def triangulate_grid(axes: Sequence[np.ndarray], embed=None, dim: int | None = None, orientation: int = 1) -> Chain:
    """Kuhn triangulation of a rectilinear grid given by per-axis breakpoints.

    ``embed`` maps grid points (m-vectors) to R^dim; by default the grid is R^m.
    Simplices are oriented positively with respect to the grid axes, times
    ``orientation``.
    """
    axes = [np.asarray(a, dtype=float) for a in axes]
    m = len(axes)
    if any(len(a) < 2 or np.any(np.diff(a) <= 0) for a in axes):
        raise GeometryError("grid breakpoints must be strictly increasing")
    if embed is None:
        embed = lambda p: p  # noqa: E731
        dim = m
    templates = _kuhn_simplices(m)
    terms: dict = {}
    for cell in itertools.product(*[range(len(a) - 1) for a in axes]):
        for tmpl in templates:
            local = [tuple(axes[i][cell[i] + off[i]] for i in range(m)) for off in tmpl]
            e = np.array(local[1:]) - np.array(local[0])
            sign = 1 if np.linalg.det(e) > 0 else -1
            pts = [tuple(float(v) for v in embed(p)) for p in local]
            key = tuple(sorted(pts))
            terms[key] = terms.get(key, 0.0) + sign * orientation * permutation_parity(pts)
    return Chain(m, dim, terms)


def triangulate_box(region: Box, resolution: int = 1) -> Chain:
    """Positively oriented Kuhn triangulation of a solid box (degree n chain)."""
    if resolution < 1:
        raise GeometryError("resolution must be >= 1")
    if region.is_empty() or not region.is_solid():
        raise GeometryError("cannot triangulate an empty region")
    axes = [np.linspace(l, h, resolution + 1) for l, h in zip(region.lo, region.hi)]
    return triangulate_grid(axes)


def orientation_from_normal(normal) -> tuple:
    """Translate an axis-aligned normal into ``(free_axes, sign)``.

    The orientation of a coordinate hyperplane piece is the contraction of
    the standard volume form with ``normal``:
    ``e_j -| dx^1 ^ ... ^ dx^n = (-1)**j dx^(all but j)`` (0-based j).
    """
    normal = np.asarray(normal, dtype=float)
    nz = np.flatnonzero(normal)
    if len(nz) != 1:
        raise GeometryError("only axis-aligned normals are supported")
    j = int(nz[0])
    sign = (1 if normal[j] > 0 else -1) * (-1) ** j
    free = tuple(i for i in range(len(normal)) if i != j)
    return free, sign


def triangulate_flat(region: Box, resolution: int = 1, orientation: int = 1, normal=None) -> Chain:
    """Triangulate a box that is flat along some axes (a k-dimensional piece).

    The result is oriented by ``dx^{i_1} ^ ... ^ dx^{i_k}`` over the free
    (non-degenerate) axes times ``orientation``; if ``normal`` is given the
    orientation is taken from :func:`orientation_from_normal` instead.
    """
    if region.is_empty():
        raise GeometryError("cannot triangulate an empty region")
    if resolution < 1:
        raise GeometryError("resolution must be >= 1")
    free = [i for i in range(region.dim) if region.hi[i] > region.lo[i]]
    if not free:
        raise GeometryError("flat region has no free axis")
    if normal is not None:
        nfree, orientation = orientation_from_normal(normal)
        if list(nfree) != free:
            raise GeometryError("normal is not transverse to the flat region")
    base = np.array(region.lo)

    def embed(p):
        x = base.copy()
        x[free] = p
        return x

    axes = [np.linspace(region.lo[i], region.hi[i], resolution + 1) for i in free]
    return triangulate_grid(axes, embed=embed, dim=region.dim, orientation=orientation)


def _clip_params(v: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Vertices (in simplex parameters t) of {simplex} intersected with [lo, hi]."""
    k = v.shape[0] - 1
    e = (v[1:] - v[0]).T  # (n, k)
    rows = [-np.eye(k), np.ones((1, k)), e, -e]
    rhs = [np.zeros(k), np.ones(1), hi - v[0], v[0] - lo]
    a = np.vstack(rows)
    b = np.concatenate(rhs)
    combos = np.array(list(itertools.combinations(range(a.shape[0]), k)))
    mats = a[combos]
    dets = np.linalg.det(mats)
    ok = np.abs(dets) > 1e-14
    if not np.any(ok):
        return np.empty((0, k))
    sol = np.linalg.solve(mats[ok], b[combos[ok]][..., None])[..., 0]
    scale = 1e-10 * (1.0 + np.max(np.abs(b)))
    feasible = np.all(sol @ a.T <= b + scale, axis=1)
    pts = sol[feasible]
    if len(pts) == 0:
        return pts
    uniq = []
    for p in pts:
        if not any(np.max(np.abs(p - q)) < 1e-11 for q in uniq):
            uniq.append(p)
    return np.array(uniq)


def clip_simplex(vertices, box: Box) -> list:
    """Split the part of a simplex inside ``box`` into sub-simplices.

    Sub-simplices keep the orientation of the parent.  Measure-zero
    intersections return an empty list.
    """
    v = np.asarray(vertices, dtype=float)
    k = v.shape[0] - 1
    lo, hi = box.lo_array, box.hi_array
    if np.any(v.max(axis=0) < lo) or np.any(v.min(axis=0) > hi):
        return []
    if np.all((v >= lo) & (v <= hi)):
        return [v]
    if k == 0:
        return []
    if k == 1:
        d = v[1] - v[0]
        t0, t1 = 0.0, 1.0
        for i in range(len(d)):
            if d[i] == 0.0:
                if v[0, i] < lo[i] or v[0, i] > hi[i]:
                    return []
                continue
            a = (lo[i] - v[0, i]) / d[i]
            b = (hi[i] - v[0, i]) / d[i]
            if a > b:
                a, b = b, a
            t0, t1 = max(t0, a), min(t1, b)
        if t1 <= t0:
            return []
        return [np.array([v[0] + t0 * d, v[0] + t1 * d])]
    t = _clip_params(v, lo, hi)
    if len(t) < k + 1:
        return []
    c = t.mean(axis=0)
    pieces = []
    if k == 2:
        ang = np.arctan2(t[:, 1] - c[1], t[:, 0] - c[0])
        t = t[np.argsort(ang)]
        for i in range(1, len(t) - 1):
            pieces.append(np.array([t[0], t[i], t[i + 1]]))
    else:
        from scipy.spatial import ConvexHull, QhullError

        try:
            hull = ConvexHull(t)
        except QhullError:
            return []
        for facet in hull.simplices:
            pieces.append(np.vstack([c[None, :], t[facet]]))
    out = []
    e = v[1:] - v[0]
    for p in pieces:
        d = np.linalg.det(p[1:] - p[0])
        if abs(d) < 1e-14:
            continue
        if d < 0:
            p = p[[1, 0] + list(range(2, k + 1))]
        out.append(v[0] + p @ e)
    return out


def _minors(e: np.ndarray, indices) -> np.ndarray:
    """Determinants of the row-subsets ``indices`` of tangent stacks e: (S, n, k)."""
    k = e.shape[2]
    if k == 0:
        return np.ones((e.shape[0], 1))
    cols = []
    for idx in indices:
        cols.append(np.linalg.det(e[:, list(idx), :]))
    return np.stack(cols, axis=1)


def integrate_over_chain(c: Chain, form, q: QuadratureRule | None = None,
                         degree_hint: int | None = None) -> float:
    """Integrate a k-form over a k-chain by simplex quadrature.

    ``form`` must provide ``degree``, ``dim`` and ``integration_pieces()``
    returning ``(box or None, piece)`` pairs; pieces provide
    ``component_values(points)`` (multi-index -> array) and ``poly_degree``.
    Simplices are clipped to the piece boxes so piecewise or compactly
    supported integrands are integrated piece by piece.  Summation follows
    canonical simplex order, then node order.  ``degree_hint`` sets the
    exactness order used for non-polynomial pieces.
    """
    if form.degree != c.degree:
        raise DegreeMismatchError(
            f"cannot integrate a {form.degree}-form over a {c.degree}-chain"
        )
    if form.dim != c.dim:
        raise DegreeMismatchError("form and chain live in different dimensions")
    if c.is_empty():
        return 0.0
    q = q or QuadratureRule()
    k = c.degree
    simplices = list(c.items())
    total = 0.0
    for box, piece in form.integration_pieces():
        subs = []
        for idx, (v, coef) in enumerate(simplices):
            parts = [v] if box is None else clip_simplex(v, box)
            subs.extend((idx, p, coef) for p in parts)
        if not subs:
            continue
        deg = piece.poly_degree
        bary, w = q.rule(k, degree_hint if deg is None else deg)
        verts = np.stack([p for _, p, _ in subs])  # (S, k+1, n)
        coefs = np.array([coef for _, _, coef in subs])
        pts = np.einsum("qj,sjn->sqn", bary, verts)
        s_count, q_count = pts.shape[0], pts.shape[1]
        flat = pts.reshape(-1, c.dim)
        try:
            comps = piece.component_values(flat)
        except FormError as exc:
            for i, part, _ in subs:
                try:
                    piece.component_values(np.einsum("qj,jn->qn", bary, part))
                except FormError:
                    raise FormError(f"form evaluation failed on simplex #{i}: {exc}") from exc
            raise
        indices = list(comps)
        if not indices:
            continue
        tang = np.transpose(verts[:, 1:, :] - verts[:, :1, :], (0, 2, 1))  # (S, n, k)
        minors = _minors(tang, indices)  # (S, M)
        vals = np.zeros((s_count, q_count))
        for m, idx in enumerate(indices):
            vals += comps[idx].reshape(s_count, q_count) * minors[:, m, None]
        per_simplex = vals @ w / math.factorial(k)
        total += float(np.dot(coefs, per_simplex))
    return total


def integrate_over_box(box: Box, form, points_per_axis: Sequence[int], resolution: int = 1) -> float:
    """Integrate a top-degree form over a box, standard orientation.

    Each of the ``resolution**n`` sub-boxes gets a tensor Gauss-Legendre rule
    with ``points_per_axis[j]`` nodes along axis ``j``.
    """
    n = box.dim
    if form.degree != n or form.dim != n:
        raise DegreeMismatchError("box integration needs a top-degree form")
    top = tuple(range(n))
    lo, hi = box.lo_array, box.hi_array
    nodes, weights = [], []
    for j in range(n):
        t, w = np.polynomial.legendre.leggauss(int(points_per_axis[j]))
        edges = np.linspace(lo[j], hi[j], resolution + 1)
        half = np.diff(edges)[:, None] / 2
        mid = (edges[:-1] + edges[1:])[:, None] / 2
        nodes.append((mid + half * t).ravel())
        weights.append((half * w).ravel())
    grid = np.stack(np.meshgrid(*nodes, indexing="ij"), axis=-1).reshape(-1, n)
    w = weights[0]
    for wj in weights[1:]:
        w = np.multiply.outer(w, wj)
    comps = form.component_values(grid)
    if top not in comps:
        return 0.0
    return float(np.dot(comps[top], w.ravel()))
