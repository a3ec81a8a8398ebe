"""Differential forms on a coordinate patch.

A k-form is stored by its components on the strictly increasing
multi-indices ``I = (i_1 < ... < i_k)`` (0-based axes), i.e.
``omega = sum_I c_I dx^I``.  Signs are resolved once, in :func:`wedge` and
:func:`exterior_derivative`.
"""

from __future__ import annotations

import itertools
from math import comb
from typing import Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import DegreeMismatchError, FormError, GeometryError
from .fields import FunctionField, Polynomial, ScalarField, as_field, audit_partials
from .geometry import Box, Patch, permutation_parity

__all__ = [
    "multi_indices",
    "SmoothForm",
    "TestForm",
    "PiecewiseForm",
    "VectorValuedForm",
    "evaluate_form",
    "wedge",
    "exterior_derivative",
    "make_bump_testform",
    "bump_profile",
    "coordinate_form",
    "constant_form",
    "polynomial_form",
    "zero_form",
    "forms_close",
]

AUDIT_POINTS = 16


def multi_indices(dim: int, degree: int) -> list:
    return list(itertools.combinations(range(dim), degree))


def _index_label(idx) -> str:
    if not idx:
        return "1"
    return "^".join(f"dx{i + 1}" for i in idx)


class SmoothForm:
    """A degree-k form with scalar-field components.

    Missing components are zero.  If ``patch`` is given, evaluation outside
    it raises, and components with analytic partials are audited against
    central differences at construction.
    """

    def __init__(self, dim: int, degree: int, components: Mapping | None = None,
                 patch: Patch | None = None, audit: bool = True):
        if degree < 0 or degree > dim:
            raise DegreeMismatchError(f"no {degree}-forms in dimension {dim}")
        if patch is not None and patch.dim != dim:
            raise GeometryError("form and patch dimensions differ")
        self.dim = dim
        self.degree = degree
        self.patch = patch
        comps = {idx: Polynomial.zero(dim) for idx in multi_indices(dim, degree)}
        for idx, field in (components or {}).items():
            idx = tuple(int(i) for i in idx)
            if idx not in comps:
                raise FormError(f"{idx} is not an increasing {degree}-index in dimension {dim}")
            comps[idx] = as_field(field, dim)
        self.components = comps
        if audit and patch is not None:
            self._audit()

    def _audit(self):
        generic = [
            f for f in self.components.values()
            if not isinstance(f, Polynomial) and f.has_analytic_partials
        ]
        if not generic:
            return
        rng = np.random.default_rng(12345)
        lo, hi = self.patch.box.lo_array, self.patch.box.hi_array
        margin = 0.05 * (hi - lo)
        pts = rng.uniform(lo + margin, hi - margin, size=(AUDIT_POINTS, self.dim))
        for f in generic:
            audit_partials(f, pts)

    @property
    def poly_degree(self):
        degs = [f.poly_degree for f in self.components.values()]
        if any(d is None for d in degs):
            return None
        return max(degs, default=0)

    @property
    def is_polynomial(self) -> bool:
        return self.poly_degree is not None

    @property
    def has_analytic_partials(self) -> bool:
        return all(f.has_analytic_partials for f in self.components.values())

    def nonzero_components(self) -> dict:
        return {i: f for i, f in self.components.items() if not f.is_zero()}

    def is_zero(self) -> bool:
        """True only when every component is exactly the zero polynomial."""
        return all(f.is_zero() for f in self.components.values())

    def component_values(self, pts: np.ndarray) -> dict:
        pts = np.asarray(pts, dtype=float)
        if self.patch is not None and not np.all(self.patch.contains(pts)):
            bad = pts[np.argmin(self.patch.contains(pts))]
            raise FormError(f"point {bad.tolist()} outside patch")
        return {i: f.values(pts) for i, f in self.nonzero_components().items()}

    def integration_pieces(self):
        return [(None, self)]

    def _like(self, components) -> "SmoothForm":
        return SmoothForm(self.dim, self.degree, components, self.patch, audit=False)

    def _combine(self, other, sign: float):
        if not isinstance(other, SmoothForm):
            return NotImplemented
        if other.degree != self.degree or other.dim != self.dim:
            raise DegreeMismatchError("cannot add forms of different degree")
        comps = {i: self.components[i] + other.components[i] * sign for i in self.components}
        ts, to = isinstance(self, TestForm), isinstance(other, TestForm)
        if ts and to:
            if self.support != other.support:
                raise FormError("test forms with different supports cannot be summed into one")
            out = self._like(comps)
            out.order = min(self.order, other.order)
            return out
        if ts or to:
            raise FormError("sum of a test form and a smooth form is not compactly supported")
        return self._like(comps)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return self._like({i: f * float(scalar) for i, f in self.components.items()})

    __rmul__ = __mul__

    def __call__(self, x, vectors=()):
        return evaluate_form(self, x, vectors)

    def describe(self) -> dict:
        out = {}
        for idx, f in self.nonzero_components().items():
            label = _index_label(idx)
            if isinstance(f, Polynomial) and f.poly_degree <= 6:
                out[label] = [[list(e), c] for e, c in f.terms()]
            elif isinstance(f, Polynomial):
                out[label] = f"<polynomial of degree {f.poly_degree}>"
            else:
                out[label] = f"<{type(f).__name__}>"
        return {"degree": self.degree, "components": out}

    def __repr__(self):
        parts = [f"{f!r} {_index_label(i)}" for i, f in self.nonzero_components().items()]
        return f"SmoothForm(deg={self.degree}: " + (" + ".join(parts) or "0") + ")"


class TestForm(SmoothForm):
    """A compactly supported form: components vanish outside ``support``.

    ``order`` is how many times the components vanish at the support
    boundary (``m`` for a ``(1 - t**2)**m`` bump).  Each exterior derivative
    lowers it by one; differentiating at order 0 is refused because the
    result would miss the jump at the support boundary.
    """

    __test__ = False  # not a pytest class

    def __init__(self, dim, degree, components, support: Box, order: int,
                 patch: Patch | None = None):
        super().__init__(dim, degree, components, patch=None, audit=False)
        if support.dim != dim:
            raise GeometryError("support box dimension mismatch")
        if patch is not None and not patch.box.contains_box(support, strict=True):
            raise GeometryError("test form support must lie strictly inside the patch")
        self.patch = patch
        self.support = support
        self.order = int(order)

    def _like(self, components) -> "TestForm":
        return TestForm(self.dim, self.degree, components, self.support, self.order, self.patch)

    def component_values(self, pts):
        pts = np.asarray(pts, dtype=float)
        inside = self.support.contains(pts, closed=False)
        out = {}
        for i, f in self.nonzero_components().items():
            v = np.zeros(len(pts))
            if np.any(inside):
                v[inside] = f.values(pts[inside])
            out[i] = v
        return out

    def integration_pieces(self):
        return [(self.support, self)]

    def __repr__(self):
        return f"TestForm(deg={self.degree}, support={self.support.bounds()}, order={self.order})"


class PiecewiseForm:
    """Forms on pairwise interior-disjoint boxes covering the patch.

    Evaluation on a shared boundary uses the first listed piece whose box
    contains the point.
    """

    def __init__(self, pieces: Sequence, patch: Patch | None = None):
        pieces = [(b if isinstance(b, Box) else Box.from_bounds(b), f) for b, f in pieces]
        if not pieces:
            raise FormError("a piecewise form needs at least one piece")
        degrees = {f.degree for _, f in pieces}
        dims = {f.dim for _, f in pieces}
        if len(degrees) != 1 or len(dims) != 1:
            raise DegreeMismatchError("all pieces must share degree and dimension")
        self.pieces = pieces
        self.degree = degrees.pop()
        self.dim = dims.pop()
        self.patch = patch
        for (b1, _), (b2, _) in itertools.combinations(pieces, 2):
            inter = b1.intersect(b2)
            if not inter.is_empty() and inter.is_solid():
                raise GeometryError("piece regions overlap with positive measure")
        if patch is not None:
            total = sum(b.intersect(patch.box).volume() for b, _ in pieces)
            if abs(total - patch.box.volume()) > 1e-12 * patch.box.volume():
                raise GeometryError("pieces do not cover the patch")

    @property
    def poly_degree(self):
        degs = [f.poly_degree for _, f in self.pieces]
        return None if any(d is None for d in degs) else max(degs)

    @property
    def is_polynomial(self):
        return self.poly_degree is not None

    def piece_at(self, x) -> SmoothForm:
        for box, f in self.pieces:
            if box.contains(x):
                return f
        raise FormError(f"no piece contains {np.asarray(x).tolist()}")

    def component_values(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = {i: np.zeros(len(pts)) for i in multi_indices(self.dim, self.degree)}
        claimed = np.zeros(len(pts), dtype=bool)
        for box, f in self.pieces:
            mask = box.contains(pts) & ~claimed
            if np.any(mask):
                for i, v in f.component_values(pts[mask]).items():
                    out[i][mask] = v
            claimed |= mask
        if not np.all(claimed):
            raise FormError("point outside every piece")
        return out

    def integration_pieces(self):
        out = []
        for box, f in self.pieces:
            for sub_box, sub in f.integration_pieces():
                out.append((box if sub_box is None else box.intersect(sub_box), sub))
        return out

    def __call__(self, x, vectors=()):
        return evaluate_form(self.piece_at(x), x, vectors)

    def __repr__(self):
        return f"PiecewiseForm(deg={self.degree}, pieces={len(self.pieces)})"


class VectorValuedForm:
    """An R^n-valued form: ``n`` forms of one degree, indexed by alpha."""

    def __init__(self, entries: Sequence[SmoothForm]):
        entries = list(entries)
        if not entries:
            raise FormError("empty vector-valued form")
        if len({e.degree for e in entries}) != 1 or len({e.dim for e in entries}) != 1:
            raise DegreeMismatchError("entries must share degree and dimension")
        self.entries = entries
        self.degree = entries[0].degree
        self.dim = entries[0].dim

    def __getitem__(self, alpha: int) -> SmoothForm:
        return self.entries[alpha]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def evaluate_form(form, x, vectors=()) -> float:
    """``omega(x)(v_1, ..., v_k) = sum_I c_I(x) det(rows I of [v_1 ... v_k])``."""
    x = np.asarray(x, dtype=float).reshape(-1)
    vectors = [np.asarray(v, dtype=float).reshape(-1) for v in vectors]
    if len(vectors) != form.degree:
        raise DegreeMismatchError(f"a {form.degree}-form needs {form.degree} vectors")
    if isinstance(form, PiecewiseForm):
        form = form.piece_at(x)
    patch = getattr(form, "patch", None)
    if patch is not None and not patch.contains(x):
        raise FormError(f"point {x.tolist()} outside patch")
    comps = form.component_values(x[None, :])
    if form.degree == 0:
        return float(comps.get((), np.zeros(1))[0])
    m = np.column_stack(vectors)
    total = 0.0
    for idx, val in comps.items():
        total += float(val[0]) * float(np.linalg.det(m[list(idx), :]))
    return total


def _merge_sign(i: tuple, j: tuple):
    if set(i) & set(j):
        return None, 0
    cat = i + j
    return tuple(sorted(cat)), permutation_parity(cat)


def wedge(alpha, beta):
    """Exterior product; results carry the compact support of any test factor."""
    if isinstance(alpha, PiecewiseForm) or isinstance(beta, PiecewiseForm):
        return _wedge_piecewise(alpha, beta)
    if alpha.dim != beta.dim:
        raise DegreeMismatchError("forms live in different dimensions")
    deg = alpha.degree + beta.degree
    if deg > alpha.dim:
        raise DegreeMismatchError(f"wedge degree {deg} exceeds dimension {alpha.dim}")
    comps: dict = {}
    for i, a in alpha.nonzero_components().items():
        for j, b in beta.nonzero_components().items():
            k, s = _merge_sign(i, j)
            if k is None:
                continue
            term = a * b if s > 0 else -(a * b)
            comps[k] = term if k not in comps else comps[k] + term
    patch = alpha.patch or beta.patch
    ta, tb = isinstance(alpha, TestForm), isinstance(beta, TestForm)
    if ta or tb:
        if ta and tb:
            support = alpha.support.intersect(beta.support)
            order = min(alpha.order, beta.order)
        else:
            t = alpha if ta else beta
            support, order = t.support, t.order
        return TestForm(alpha.dim, deg, comps, support, order, patch)
    return SmoothForm(alpha.dim, deg, comps, patch, audit=False)


def _wedge_piecewise(alpha, beta):
    if isinstance(alpha, PiecewiseForm) and isinstance(beta, PiecewiseForm):
        raise FormError("wedge of two piecewise forms is not supported")
    if isinstance(alpha, PiecewiseForm):
        return PiecewiseForm([(b, wedge(f, beta)) for b, f in alpha.pieces], alpha.patch)
    return PiecewiseForm([(b, wedge(alpha, f)) for b, f in beta.pieces], beta.patch)


def exterior_derivative(form, fd_step: float | None = None):
    """``d(c_I dx^I) = sum_j dc_I/dx^j dx^j ^ dx^I``.

    Analytic partials are used when available.  Otherwise ``fd_step`` must
    be supplied and central differences are used.  For a 1-form the
    component on ``dx^i ^ dx^j`` (i < j) is ``phi_{j,i} - phi_{i,j}``.
    """
    if isinstance(form, PiecewiseForm):
        return PiecewiseForm([(b, exterior_derivative(f, fd_step)) for b, f in form.pieces], form.patch)
    if form.degree >= form.dim:
        raise DegreeMismatchError(f"d of a top-degree ({form.degree}) form")
    if isinstance(form, TestForm) and form.order < 1:
        raise FormError("test form no longer vanishes at its support boundary")
    comps: dict = {}
    for idx, c in form.nonzero_components().items():
        if not c.has_analytic_partials:
            if fd_step is None:
                raise FormError("component lacks analytic partials and no fd_step was given")
            c = _with_fd(c, fd_step, form.patch)
        for j in range(form.dim):
            if j in idx:
                continue
            k, s = _merge_sign((j,), idx)
            dc = c.partial(j)
            if dc.is_zero():
                continue
            term = dc if s > 0 else -dc
            comps[k] = term if k not in comps else comps[k] + term
    if isinstance(form, TestForm):
        return TestForm(form.dim, form.degree + 1, comps, form.support, form.order - 1, form.patch)
    return SmoothForm(form.dim, form.degree + 1, comps, form.patch, audit=False)


def _with_fd(c: ScalarField, step: float, patch) -> ScalarField:
    return FunctionField(c.dim, c.values, fd_step=step, patch=patch, name=repr(c))


def bump_profile(center: float, radius: float, m: int) -> np.ndarray:
    """Coefficients (in ``x - center``) of ``(1 - ((x - center)/radius)**2)**m``."""
    return P.polypow([1.0, 0.0, -1.0 / radius**2], m)


def make_bump_testform(center, radii, m: int = 4, index=(), amplitude: float = 1.0,
                       patch: Patch | None = None, degree: int | None = None,
                       modulation=None) -> TestForm:
    """Tensor-product polynomial bump ``amplitude * prod (1 - t_i**2)**m`` on one component.

    ``index`` is a single increasing multi-index or a mapping
    ``{index: amplitude}`` for a sum of components.  ``modulation`` is an
    optional polynomial multiplying the bump.
    """
    center = np.asarray(center, dtype=float).reshape(-1)
    dim = len(center)
    radii = np.broadcast_to(np.asarray(radii, dtype=float), center.shape)
    if m < 2:
        raise FormError("bump exponent m must be >= 2")
    if np.any(radii <= 0):
        raise GeometryError("bump radii must be positive")
    support = Box.around(center, radii)
    if patch is not None and not patch.box.contains_box(support, strict=True):
        raise GeometryError("bump support touches or leaves the patch")
    bump = Polynomial.tensor([bump_profile(0.0, r, m) for r in radii], origin=center)
    if modulation is not None:
        bump = bump * modulation
    if isinstance(index, Mapping):
        amps = {tuple(k): float(v) for k, v in index.items()}
    else:
        amps = {tuple(index): float(amplitude)}
    degs = {len(k) for k in amps}
    if len(degs) != 1:
        raise DegreeMismatchError("all components must share one degree")
    deg = degs.pop() if degree is None else degree
    comps = {k: bump * a for k, a in amps.items()}
    return TestForm(dim, deg, comps, support, m, patch)


def coordinate_form(dim: int, index, coefficient: float = 1.0, patch=None) -> SmoothForm:
    """Constant form ``coefficient * dx^index`` (0-based, increasing index)."""
    index = tuple(index)
    return SmoothForm(dim, len(index), {index: Polynomial.constant(dim, coefficient)}, patch)


def constant_form(dim: int, degree: int, values: Mapping, patch=None) -> SmoothForm:
    return SmoothForm(dim, degree, {tuple(k): Polynomial.constant(dim, v) for k, v in values.items()}, patch)


def polynomial_form(dim: int, degree: int, terms: Mapping, patch=None) -> SmoothForm:
    """Components from ``{index: {exponents: coefficient}}`` tables."""
    return SmoothForm(
        dim, degree, {tuple(k): Polynomial.from_terms(dim, v) for k, v in terms.items()}, patch
    )


def zero_form(dim: int, degree: int, patch=None) -> SmoothForm:
    return SmoothForm(dim, degree, {}, patch)


def forms_close(a, b, points, rtol: float = 1e-10, atol: float = 1e-12) -> bool:
    """Componentwise comparison at sample points."""
    va = a.component_values(points)
    vb = b.component_values(points)
    for idx in set(va) | set(vb):
        x = va.get(idx, 0.0)
        y = vb.get(idx, 0.0)
        if not np.allclose(x, y, rtol=rtol, atol=atol):
            return False
    return True


def n_components(dim: int, degree: int) -> int:
    return comb(dim, degree)
