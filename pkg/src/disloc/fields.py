"""Scalar fields on a patch: dense shifted polynomials and generic callables.

Polynomials are stored as dense coefficient arrays in local coordinates
``y = x - origin`` so that sharply localized bumps keep well-scaled
coefficients.  Generic fields carry optional analytic partials and fall back
to central finite differences.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.signal import convolve

from .errors import FormError

__all__ = [
    "ScalarField",
    "Polynomial",
    "FunctionField",
    "as_field",
    "default_fd_step",
]

FD_RELATIVE_STEP = 1e-5


def default_fd_step(x: np.ndarray, step: float = FD_RELATIVE_STEP) -> np.ndarray:
    return step * np.maximum(1.0, np.abs(x))


def _points(x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x[None, :], True
    return x, False


class ScalarField:
    """Base class: a real function on R^n that can be differentiated."""

    dim: int

    def __call__(self, x):
        pts, single = _points(x)
        out = self.values(pts)
        return float(out[0]) if single else out

    def values(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def partial(self, j: int) -> "ScalarField":
        raise NotImplementedError

    @property
    def poly_degree(self):
        """Total degree if the field is a polynomial, else ``None``."""
        return None

    @property
    def has_analytic_partials(self) -> bool:
        return False

    def is_zero(self) -> bool:
        return False

    def constant_value(self):
        """The value if the field is a known constant, else ``None``."""
        return None

    def __add__(self, other):
        other = as_field(other, self.dim)
        if isinstance(other, Polynomial) and other.is_zero():
            return self
        return _Sum(self, other)

    __radd__ = __add__

    def __neg__(self):
        return _Scaled(self, -1.0)

    def __sub__(self, other):
        return self + (-as_field(other, self.dim))

    def __rsub__(self, other):
        return as_field(other, self.dim) + (-self)

    def __mul__(self, other):
        if np.isscalar(other):
            return _Scaled(self, float(other))
        other = as_field(other, self.dim)
        if isinstance(other, Polynomial) and other.constant_value() is not None:
            return _Scaled(self, other.constant_value())
        return _Product(self, other)

    __rmul__ = __mul__


def as_field(value, dim: int) -> ScalarField:
    if isinstance(value, ScalarField):
        if value.dim != dim:
            raise FormError(f"field dimension {value.dim} != {dim}")
        return value
    if np.isscalar(value):
        return Polynomial.constant(dim, float(value))
    raise FormError(f"cannot interpret {value!r} as a scalar field")


def _shift_matrix(size: int, d: float) -> np.ndarray:
    """B[j, i]: coefficient of y**i in (y + d)**j."""
    b = np.zeros((size, size))
    for j in range(size):
        for i in range(j + 1):
            b[j, i] = math.comb(j, i) * d ** (j - i)
    return b


class Polynomial(ScalarField):
    """Dense polynomial ``sum c[e] * prod((x - origin)**e)``."""

    __slots__ = ("coef", "origin", "dim")

    def __init__(self, coef, origin=None):
        c = np.array(coef, dtype=float)
        if c.ndim == 0:
            raise FormError("polynomial coefficient array needs one axis per variable")
        self.dim = c.ndim
        self.origin = (
            np.zeros(self.dim) if origin is None else np.array(origin, dtype=float).reshape(self.dim)
        )
        self.coef = _trim(c)

    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(np.zeros((1,) * dim))

    @classmethod
    def constant(cls, dim: int, value: float) -> "Polynomial":
        return cls(np.full((1,) * dim, float(value)))

    @classmethod
    def coordinate(cls, dim: int, axis: int, origin=None) -> "Polynomial":
        shape = [1] * dim
        shape[axis] = 2
        c = np.zeros(shape)
        idx = [0] * dim
        idx[axis] = 1
        c[tuple(idx)] = 1.0
        p = cls(c)
        return p if origin is None else p.shifted(origin)

    @classmethod
    def from_terms(cls, dim: int, terms, origin=None) -> "Polynomial":
        """From ``{exponent tuple: coefficient}`` or a list of pairs."""
        items = terms.items() if isinstance(terms, dict) else terms
        items = [(tuple(int(a) for a in e), float(c)) for e, c in items]
        for e, _ in items:
            if len(e) != dim or min(e, default=0) < 0:
                raise FormError(f"bad exponent {e} for a {dim}-variable polynomial")
        shape = [1] * dim
        for e, _ in items:
            shape = [max(s, a + 1) for s, a in zip(shape, e)]
        c = np.zeros(shape)
        for e, v in items:
            c[e] += v
        return cls(c, origin)

    @classmethod
    def tensor(cls, factors: Sequence[np.ndarray], origin=None) -> "Polynomial":
        """Product of univariate polynomials (coefficient vectors), one per axis."""
        c = np.array(1.0)
        for f in factors:
            c = np.multiply.outer(c, np.asarray(f, dtype=float))
        return cls(c, origin)

    def values(self, pts: np.ndarray) -> np.ndarray:
        y = pts - self.origin
        if self.dim == 1:
            return P.polyval(y[:, 0], self.coef)
        # contract one axis at a time, last axis first, through matrix products
        powers = [np.vander(y[:, j], self.coef.shape[j], increasing=True) for j in range(self.dim)]
        n = len(y)
        lead = int(np.prod(self.coef.shape[:-1]))
        tmp = powers[-1] @ self.coef.reshape(lead, -1).T  # (n, lead)
        for j in range(self.dim - 2, -1, -1):
            tmp = np.einsum("nab,nb->na", tmp.reshape(n, -1, self.coef.shape[j]), powers[j])
        return tmp.reshape(n)

    @property
    def axis_degrees(self) -> tuple:
        return tuple(s - 1 for s in self.coef.shape)

    def partial(self, j: int) -> "Polynomial":
        c = self.coef
        if c.shape[j] == 1:
            return Polynomial(np.zeros((1,) * self.dim), self.origin)
        c = np.moveaxis(c, j, 0)[1:]
        scale = np.arange(1, c.shape[0] + 1, dtype=float).reshape((-1,) + (1,) * (self.dim - 1))
        return Polynomial(np.moveaxis(c * scale, 0, j), self.origin)

    @property
    def poly_degree(self) -> int:
        nz = np.argwhere(self.coef != 0.0)
        return int(nz.sum(axis=1).max()) if len(nz) else 0

    @property
    def has_analytic_partials(self) -> bool:
        return True

    def is_zero(self) -> bool:
        return not np.any(self.coef)

    def constant_value(self):
        if all(s == 1 for s in self.coef.shape):
            return float(self.coef.flat[0])
        return None

    def shifted(self, new_origin) -> "Polynomial":
        """Re-expand about ``new_origin`` (same function)."""
        new_origin = np.asarray(new_origin, dtype=float)
        d = new_origin - self.origin
        c = self.coef
        for axis in range(self.dim):
            if d[axis] == 0.0 or c.shape[axis] == 1:
                continue
            b = _shift_matrix(c.shape[axis], d[axis])
            c = np.moveaxis(np.tensordot(b, np.moveaxis(c, axis, 0), axes=(0, 0)), 0, axis)
        return Polynomial(c, new_origin)

    def _aligned(self, other: "Polynomial"):
        if np.array_equal(self.origin, other.origin):
            return self, other
        # re-expand the lower degree factor: cheap and well conditioned
        if other.poly_degree <= self.poly_degree:
            return self, other.shifted(self.origin)
        return self.shifted(other.origin), other

    def __add__(self, other):
        if np.isscalar(other):
            other = Polynomial.constant(self.dim, float(other))
        if not isinstance(other, Polynomial):
            return ScalarField.__add__(self, other)
        if other.dim != self.dim:
            raise FormError("polynomial dimension mismatch")
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        a, b = self._aligned(other)
        shape = tuple(max(s, t) for s, t in zip(a.coef.shape, b.coef.shape))
        c = np.zeros(shape)
        c[tuple(slice(0, s) for s in a.coef.shape)] += a.coef
        c[tuple(slice(0, s) for s in b.coef.shape)] += b.coef
        return Polynomial(c, a.origin)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coef, self.origin)

    def __sub__(self, other):
        if np.isscalar(other):
            return self + (-float(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if np.isscalar(other):
            return Polynomial(float(other) * self.coef, self.origin)
        if not isinstance(other, Polynomial):
            return ScalarField.__mul__(self, other)
        if other.dim != self.dim:
            raise FormError("polynomial dimension mismatch")
        if self.is_zero() or other.is_zero():
            return Polynomial.zero(self.dim)
        cv = other.constant_value()
        if cv is not None:
            return Polynomial(cv * self.coef, self.origin)
        cv = self.constant_value()
        if cv is not None:
            return Polynomial(cv * other.coef, other.origin)
        a, b = self._aligned(other)
        return Polynomial(convolve(a.coef, b.coef, method="direct"), a.origin)

    __rmul__ = __mul__

    def terms(self) -> list:
        """``[(exponents, coefficient), ...]`` about the origin ``x = 0``."""
        p = self if not np.any(self.origin) else self.shifted(np.zeros(self.dim))
        return [
            (tuple(int(i) for i in e), float(p.coef[tuple(e)]))
            for e in np.argwhere(p.coef != 0.0)
        ]

    def __repr__(self):
        if self.poly_degree <= 4:
            return f"Polynomial({self.terms()})"
        return f"Polynomial(degree={self.poly_degree}, origin={self.origin.tolist()})"


def _trim(c: np.ndarray) -> np.ndarray:
    for axis in range(c.ndim):
        moved = np.moveaxis(c, axis, 0)
        keep = moved.shape[0]
        while keep > 1 and not np.any(moved[keep - 1]):
            keep -= 1
        c = np.moveaxis(moved[:keep], 0, axis)
    return np.ascontiguousarray(c)


class FunctionField(ScalarField):
    """A field given by a vectorized callable ``f(points) -> values``.

    ``partials`` optionally supplies analytic first partials (callables or
    fields); otherwise :meth:`partial` returns a central-difference field.
    If ``patch`` is given, finite-difference stencils must stay inside it.
    """

    def __init__(self, dim: int, fn: Callable, partials=None, fd_step: float = FD_RELATIVE_STEP,
                 patch=None, name: str = "<function>"):
        self.dim = dim
        self.fn = fn
        self.name = name
        self.fd_step = fd_step
        self.patch = patch
        if partials is not None:
            if len(partials) != dim:
                raise FormError("need one analytic partial per coordinate")
            partials = [
                p if isinstance(p, ScalarField) else FunctionField(dim, p, fd_step=fd_step, patch=patch,
                                                                    name=f"d{j + 1}({name})")
                for j, p in enumerate(partials)
            ]
        self._partials = partials

    def values(self, pts):
        if self.patch is not None and not np.all(self.patch.contains(pts)):
            raise FormError(f"{self.name} evaluated outside its patch")
        return np.asarray(self.fn(pts), dtype=float).reshape(len(pts))

    def partial(self, j: int) -> ScalarField:
        if self._partials is not None:
            return self._partials[j]
        return _FiniteDifference(self, j, self.fd_step, self.patch)

    @property
    def has_analytic_partials(self) -> bool:
        return self._partials is not None

    def __repr__(self):
        return f"FunctionField({self.name})"


class _FiniteDifference(ScalarField):
    def __init__(self, base: ScalarField, axis: int, step: float, patch):
        self.dim = base.dim
        self.base = base
        self.axis = axis
        self.step = step
        self.patch = patch

    def values(self, pts):
        h = default_fd_step(pts[:, self.axis], self.step)
        plus = pts.copy()
        minus = pts.copy()
        plus[:, self.axis] += h
        minus[:, self.axis] -= h
        if self.patch is not None:
            ok = self.patch.contains(plus) & self.patch.contains(minus)
            if not np.all(ok):
                bad = pts[np.argmin(ok)]
                raise FormError(f"finite-difference stencil leaves the patch at {bad.tolist()}")
        return (self.base.values(plus) - self.base.values(minus)) / (2.0 * h)

    def partial(self, j: int) -> ScalarField:
        return _FiniteDifference(self, j, self.step, self.patch)


class _Sum(ScalarField):
    def __init__(self, a: ScalarField, b: ScalarField):
        self.dim = a.dim
        self.a, self.b = a, b

    def values(self, pts):
        return self.a.values(pts) + self.b.values(pts)

    def partial(self, j):
        return self.a.partial(j) + self.b.partial(j)

    @property
    def has_analytic_partials(self):
        return self.a.has_analytic_partials and self.b.has_analytic_partials


class _Scaled(ScalarField):
    def __init__(self, a: ScalarField, s: float):
        self.dim = a.dim
        self.a, self.s = a, s

    def values(self, pts):
        return self.s * self.a.values(pts)

    def partial(self, j):
        return _Scaled(self.a.partial(j), self.s)

    @property
    def has_analytic_partials(self):
        return self.a.has_analytic_partials

    def is_zero(self):
        return self.s == 0.0 or self.a.is_zero()


class _Product(ScalarField):
    def __init__(self, a: ScalarField, b: ScalarField):
        self.dim = a.dim
        self.a, self.b = a, b

    def values(self, pts):
        return self.a.values(pts) * self.b.values(pts)

    def partial(self, j):
        return self.a.partial(j) * self.b + self.a * self.b.partial(j)

    @property
    def has_analytic_partials(self):
        return self.a.has_analytic_partials and self.b.has_analytic_partials


def audit_partials(field: ScalarField, points: np.ndarray, rtol: float = 1e-5) -> float:
    """Worst relative gap between analytic and central-difference partials."""
    worst = 0.0
    for j in range(field.dim):
        analytic = field.partial(j).values(points)
        fd = _FiniteDifference(field, j, FD_RELATIVE_STEP, None).values(points)
        scale = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(fd)))
        worst = max(worst, float(np.max(np.abs(analytic - fd) / scale)))
    if worst > rtol:
        raise FormError(f"analytic partials disagree with finite differences (rel {worst:.2e})")
    return worst
