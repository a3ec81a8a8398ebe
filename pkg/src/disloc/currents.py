"""De Rham currents on a coordinate patch.

A current is a linear functional on compactly supported forms.  The
variants below cover currents induced by (possibly piecewise) forms,
polyhedral chains, chains weighted by a function, Dirac masses, contraction
with a smooth form and finite linear combinations.  The boundary is
available in two independent ways:

* :func:`boundary_weak` returns the lazy current ``omega -> T(d omega)``;
* :func:`boundary_structural` rewrites ``T`` symbolically using Stokes'
  theorem and the product rule, producing chain and contraction terms.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .errors import DegreeMismatchError, GeometryError, NoStructuralRule
from .fields import FD_RELATIVE_STEP, Polynomial, as_field
from .forms import (
    PiecewiseForm,
    SmoothForm,
    TestForm,
    coordinate_form,
    evaluate_form,
    exterior_derivative,
    make_bump_testform,
    multi_indices,
    wedge,
)
from .geometry import (
    Box,
    Chain,
    Patch,
    boundary_chain,
    integrate_over_box,
    integrate_over_chain,
    restrict_to_interior,
    triangulate_box,
    triangulate_grid,
)
from .quadrature import QuadratureRule

__all__ = [
    "Current",
    "FormCurrent",
    "ChainCurrent",
    "WeightedChainCurrent",
    "DiracCurrent",
    "Contraction",
    "Combination",
    "WeakBoundary",
    "evaluate",
    "boundary_weak",
    "boundary_structural",
    "contract",
    "combine",
    "zero_current",
    "probe_family",
    "zero_threshold",
]

DEFAULT_RULE = QuadratureRule()
ZERO_RTOL = 1e-9
SMOOTH_EXTRA_ORDER = 4


def zero_threshold(probe: TestForm, amplitude: float = 1.0) -> float:
    """Scale-aware zero test for probe sweeps: 1e-9 * amplitude * support volume."""
    return ZERO_RTOL * amplitude * probe.support.volume()


class Current:
    """Base class.  ``degree`` is the degree of the forms the current accepts."""

    degree: int
    dim: int
    patch: Patch | None = None

    def evaluate(self, psi, q: QuadratureRule | None = None, hint: int | None = None) -> float:
        """Apply the current to ``psi``.

        ``hint`` is the exactness order used where an integrand has no
        polynomial degree; it defaults to the probe degree plus a margin.
        """
        if psi.degree != self.degree:
            raise DegreeMismatchError(
                f"{type(self).__name__} of degree {self.degree} applied to a {psi.degree}-form"
            )
        if psi.dim != self.dim:
            raise DegreeMismatchError("form and current live in different dimensions")
        if hint is None and psi.poly_degree is not None:
            hint = psi.poly_degree + SMOOTH_EXTRA_ORDER
        return self._evaluate(psi, q or DEFAULT_RULE, hint)

    def _evaluate(self, psi, q, hint) -> float:
        raise NotImplementedError

    def __call__(self, psi, q: QuadratureRule | None = None) -> float:
        return self.evaluate(psi, q)

    def __add__(self, other):
        return combine([(1.0, self), (1.0, other)])

    def __sub__(self, other):
        return combine([(1.0, self), (-1.0, other)])

    def __neg__(self):
        return combine([(-1.0, self)])

    def __mul__(self, scalar):
        return combine([(float(scalar), self)])

    __rmul__ = __mul__

    def describe(self) -> dict:
        raise NotImplementedError


def _region_description(region):
    if region is None:
        return "patch"
    if isinstance(region, Box):
        return {"box": region.bounds()}
    return {"chain": region.to_list()}


def _form_description(form):
    if isinstance(form, PiecewiseForm):
        return {
            "degree": form.degree,
            "pieces": [{"box": b.bounds(), "form": f.describe()} for b, f in form.pieces],
        }
    return form.describe()


class FormCurrent(Current):
    """``T(psi) = integral over region of phi ^ psi``; degree ``n - deg(phi)``.

    ``region`` is ``None`` (the whole patch), a :class:`Box` or an n-chain.
    Non-polynomial integrands on box regions are meshed at ``resolution``.
    """

    def __init__(self, form, patch: Patch, region=None, resolution: int | None = None,
                 fd_step: float = FD_RELATIVE_STEP):
        if form.dim != patch.dim:
            raise DegreeMismatchError("form and patch dimensions differ")
        if isinstance(region, Chain) and region.degree != patch.dim:
            raise DegreeMismatchError("form current regions must be n-chains")
        if isinstance(region, Box):
            region = region.intersect(patch.box)
            if region.is_empty() or not region.is_solid():
                raise GeometryError("form current region does not meet the patch")
        self.form = form
        self.patch = patch
        self.region = region
        self.resolution = resolution
        self.fd_step = fd_step
        self.dim = patch.dim
        self.degree = patch.dim - form.degree

    def _evaluate(self, psi, q, hint):
        integrand = wedge(self.form, psi)
        if isinstance(self.region, Chain):
            return integrate_over_chain(self.region, integrand, q, hint)
        box = self.patch.box if self.region is None else self.region
        total = 0.0
        for piece_box, piece in integrand.integration_pieces():
            sub = box if piece_box is None else box.intersect(piece_box)
            if sub.is_empty() or not sub.is_solid():
                continue
            deg = piece.poly_degree
            if deg is not None and q.order_for(deg) >= deg:
                total += integrate_over_chain(triangulate_box(sub, 1), piece, q, hint)
                continue
            if self.resolution is None:
                raise GeometryError(
                    "non-polynomial integrand on an unmeshed region needs a resolution hint"
                )
            npts = [d // 2 + 1 for d in _axis_orders(psi, self.dim, hint, q)]
            total += integrate_over_box(sub, piece, npts, self.resolution)
        return total

    def describe(self):
        return {
            "variant": "form",
            "degree": self.degree,
            "region": _region_description(self.region),
            "form": _form_description(self.form),
        }


def _axis_orders(psi, dim, hint, q) -> list:
    """Per-axis exactness orders for a smooth factor times the probe ``psi``."""
    comps = getattr(psi, "components", None)
    if comps is None:
        return [q.order_for(hint)] * dim
    degs = [f.axis_degrees for f in comps.values() if isinstance(f, Polynomial)]
    if len(degs) != len(comps):
        return [q.order_for(hint)] * dim
    top = np.max(np.array(degs), axis=0) if degs else np.zeros(dim, dtype=int)
    return [max(q.order, int(d) + SMOOTH_EXTRA_ORDER) for d in top]


class ChainCurrent(Current):
    """``T_A(psi) = sum_p a_p * integral over s_p of psi``."""

    def __init__(self, chain: Chain, patch: Patch | None = None):
        self.chain = chain
        self.patch = patch
        self.dim = chain.dim
        self.degree = chain.degree

    def _evaluate(self, psi, q, hint):
        return integrate_over_chain(self.chain, psi, q, hint)

    def describe(self):
        return {"variant": "chain", "degree": self.degree, "chain": self.chain.to_list()}


class WeightedChainCurrent(Current):
    """``T_{uA}(psi) = sum_p a_p * integral over s_p of u psi``."""

    def __init__(self, chain: Chain, weight, patch: Patch | None = None,
                 fd_step: float = FD_RELATIVE_STEP):
        self.chain = chain
        self.fd_step = fd_step
        self.weight = as_field(weight, chain.dim)
        self.patch = patch
        self.dim = chain.dim
        self.degree = chain.degree

    def _evaluate(self, psi, q, hint):
        u = SmoothForm(self.dim, 0, {(): self.weight})
        return integrate_over_chain(self.chain, wedge(u, psi), q, hint)

    def describe(self):
        w = self.weight
        weight = [[list(e), c] for e, c in w.terms()] if isinstance(w, Polynomial) else repr(w)
        return {
            "variant": "weighted_chain",
            "degree": self.degree,
            "chain": self.chain.to_list(),
            "weight": weight,
        }


class DiracCurrent(Current):
    """``T(psi) = psi(x0)(v_1, ..., v_k)``."""

    def __init__(self, point, vectors: Sequence = (), patch: Patch | None = None):
        self.point = np.asarray(point, dtype=float).reshape(-1)
        self.vectors = [np.asarray(v, dtype=float).reshape(-1) for v in vectors]
        self.patch = patch
        self.dim = len(self.point)
        self.degree = len(self.vectors)
        if any(len(v) != self.dim for v in self.vectors):
            raise DegreeMismatchError("Dirac vectors must match the point dimension")

    def _evaluate(self, psi, q, hint):
        if not isinstance(psi, TestForm) and psi.patch is not None and not psi.patch.contains(self.point):
            return 0.0
        if isinstance(psi, TestForm) and not psi.support.contains(self.point, closed=False):
            return 0.0
        return evaluate_form(psi, self.point, self.vectors)

    def describe(self):
        return {
            "variant": "dirac",
            "degree": self.degree,
            "point": self.point.tolist(),
            "vectors": [v.tolist() for v in self.vectors],
        }


class Contraction(Current):
    """``(T -| alpha)(omega) = T(alpha ^ omega)``."""

    def __init__(self, current: Current, form: SmoothForm):
        if form.degree > current.degree:
            raise DegreeMismatchError(
                f"cannot contract a {current.degree}-current with a {form.degree}-form"
            )
        if form.dim != current.dim:
            raise DegreeMismatchError("form and current live in different dimensions")
        self.current = current
        self.form = form
        self.patch = current.patch
        self.dim = current.dim
        self.degree = current.degree - form.degree

    def _evaluate(self, psi, q, hint):
        return self.current.evaluate(wedge(self.form, psi), q, hint)

    def describe(self):
        return {
            "variant": "contraction",
            "degree": self.degree,
            "current": self.current.describe(),
            "form": self.form.describe(),
        }


class Combination(Current):
    """Formal linear combination of currents of a common degree."""

    def __init__(self, terms: Sequence, degree: int, dim: int, patch: Patch | None = None):
        terms = [(float(c), t) for c, t in terms]
        for _, t in terms:
            if t.degree != degree or t.dim != dim:
                raise DegreeMismatchError("combined currents must share degree and dimension")
        self.terms = terms
        self.degree = degree
        self.dim = dim
        self.patch = patch or next((t.patch for _, t in terms if t.patch is not None), None)

    def _evaluate(self, psi, q, hint):
        total = 0.0
        for c, t in self.terms:
            if c != 0.0:
                total += c * t.evaluate(psi, q, hint)
        return total

    def is_zero(self) -> bool:
        return all(c == 0.0 for c, _ in self.terms)

    def describe(self):
        return {
            "variant": "combination",
            "degree": self.degree,
            "terms": [{"coefficient": c, "current": t.describe()} for c, t in self.terms],
        }


class WeakBoundary(Current):
    """Lazy boundary ``(dT)(omega) = T(d omega)``."""

    def __init__(self, current: Current):
        if current.degree < 1:
            raise DegreeMismatchError("a 0-current has no boundary")
        self.current = current
        self.patch = current.patch
        self.dim = current.dim
        self.degree = current.degree - 1

    def _evaluate(self, psi, q, hint):
        return self.current.evaluate(exterior_derivative(psi), q, hint)

    def describe(self):
        return {"variant": "weak_boundary", "degree": self.degree, "of": self.current.describe()}


def evaluate(current: Current, psi, q: QuadratureRule | None = None) -> float:
    return current.evaluate(psi, q)


def boundary_weak(current: Current) -> Current:
    return WeakBoundary(current)


def contract(current: Current, form: SmoothForm) -> Current:
    return Contraction(current, form)


def combine(terms: Sequence, degree: int | None = None, dim: int | None = None,
            patch: Patch | None = None) -> Combination:
    terms = list(terms)
    if degree is None or dim is None:
        if not terms:
            raise DegreeMismatchError("an empty combination needs a declared degree and dimension")
        degree = terms[0][1].degree if degree is None else degree
        dim = terms[0][1].dim if dim is None else dim
    return Combination(terms, degree, dim, patch)


def zero_current(degree: int, dim: int, patch: Patch | None = None) -> Combination:
    return Combination([], degree, dim, patch)


# --- structural boundary -------------------------------------------------

def _restrict(chain: Chain, patch: Patch | None) -> Chain:
    return chain if patch is None else restrict_to_interior(chain, patch)


def _normalized(form: SmoothForm):
    """Split a constant single-component form into ``(coefficient, dx^I)``."""
    comps = form.nonzero_components()
    if len(comps) == 1:
        (idx, f), = comps.items()
        c = f.constant_value()
        if c is not None:
            return c, coordinate_form(form.dim, idx, patch=form.patch)
    return 1.0, form


def _piece_chains(boxes: Sequence[Box]) -> list:
    """Conforming Kuhn triangulations of boxes on their common breakpoint grid."""
    dim = boxes[0].dim
    breaks = [sorted({b.lo[i] for b in boxes} | {b.hi[i] for b in boxes}) for i in range(dim)]
    chains = []
    for b in boxes:
        axes = [np.array([x for x in breaks[i] if b.lo[i] <= x <= b.hi[i]]) for i in range(dim)]
        chains.append(triangulate_grid(axes))
    return chains


def _structural_form_current(t: FormCurrent) -> Current:
    r = t.form.degree
    n = t.dim
    out_degree = t.degree - 1
    terms = []
    if isinstance(t.region, Chain):
        if isinstance(t.form, PiecewiseForm):
            raise NoStructuralRule("piecewise forms on chain regions; use boundary_weak")
        if r < n:
            dphi = exterior_derivative(t.form, fd_step=t.fd_step)
            if not dphi.is_zero():
                terms.append(((-1.0) ** (r + 1), FormCurrent(dphi, t.patch, t.region, t.resolution, t.fd_step)))
        bdry = _restrict(boundary_chain(t.region), t.patch)
        if not bdry.is_empty():
            terms.append(((-1.0) ** r, Contraction(ChainCurrent(bdry, t.patch), t.form)))
        return Combination(terms, out_degree, n, t.patch)

    region = t.patch.box if t.region is None else t.region
    if isinstance(t.form, PiecewiseForm):
        pieces = []
        for b, f in t.form.pieces:
            sub = b.intersect(region)
            if not sub.is_empty() and sub.is_solid():
                pieces.append((sub, f))
    else:
        pieces = [(region, t.form)]

    for box, f in pieces:
        if r < n:
            df = exterior_derivative(f, fd_step=t.fd_step)
            if not df.is_zero():
                terms.append(((-1.0) ** (r + 1), FormCurrent(df, t.patch, box, t.resolution, t.fd_step)))

    bdries = [_restrict(boundary_chain(c), t.patch) for c in _piece_chains([b for b, _ in pieces])]
    for i, j in itertools.combinations(range(len(pieces)), 2):
        shared = set(bdries[i].keys()) & set(bdries[j].keys())
        if not shared:
            continue
        interface = bdries[i].filter(lambda k: k in shared)
        bdries[i] = bdries[i].filter(lambda k: k not in shared)
        bdries[j] = bdries[j].filter(lambda k: k not in shared)
        jump = pieces[i][1] - pieces[j][1]
        if jump.is_zero():
            continue
        coef, form = _normalized(jump)
        terms.append(((-1.0) ** r * coef, Contraction(ChainCurrent(interface, t.patch), form)))
    for (box, f), rest in zip(pieces, bdries):
        if not rest.is_empty() and not f.is_zero():
            coef, form = _normalized(f)
            terms.append(((-1.0) ** r * coef, Contraction(ChainCurrent(rest, t.patch), form)))
    return Combination(terms, out_degree, n, t.patch)


def _simplify(terms, degree, dim, patch) -> Current:
    """Flatten nested combinations and merge chain currents into one chain."""
    flat = []

    def push(c, t):
        if isinstance(t, Combination):
            for c2, t2 in t.terms:
                push(c * c2, t2)
        elif c != 0.0:
            flat.append((c, t))

    for c, t in terms:
        push(c, t)
    chain = None
    rest = []
    for c, t in flat:
        if type(t) is ChainCurrent:
            chain = t.chain * c if chain is None else chain + t.chain * c
        else:
            rest.append((c, t))
    out = []
    if chain is not None and not chain.is_empty():
        out.append((1.0, ChainCurrent(chain, patch)))
    out.extend(rest)
    return Combination(out, degree, dim, patch)


def boundary_structural(current: Current) -> Current:
    """Symbolic boundary via the rewrite rules.

    * form current: ``(-1)**(r+1) T_{d phi}`` plus ``(-1)**r`` times the
      boundary chain contracted with ``phi`` (jump ``phi_i - phi_j`` on
      interfaces between pieces);
    * chain current: ``T_{dA}``;
    * weighted chain: ``T_{u dA} - T_A -| du``;
    * combinations: termwise.

    Chains are restricted to the open patch.  Dirac masses, contractions and
    lazy boundaries have no rule and raise :class:`NoStructuralRule`.
    """
    if current.degree < 1:
        raise DegreeMismatchError("a 0-current has no boundary")
    patch = current.patch
    if isinstance(current, ChainCurrent):
        bd = _restrict(boundary_chain(current.chain), patch)
        return Combination([(1.0, ChainCurrent(bd, patch))] if not bd.is_empty() else [],
                           current.degree - 1, current.dim, patch)
    if isinstance(current, WeightedChainCurrent):
        bd = _restrict(boundary_chain(current.chain), patch)
        u = current.weight
        c = u.constant_value() if isinstance(u, Polynomial) else None
        if c is not None:
            terms = [(c, ChainCurrent(bd, patch))] if not bd.is_empty() else []
            return _simplify(terms, current.degree - 1, current.dim, patch)
        terms = []
        if not bd.is_empty():
            terms.append((1.0, WeightedChainCurrent(bd, u, patch, current.fd_step)))
        du = exterior_derivative(SmoothForm(current.dim, 0, {(): u}, patch, audit=False),
                                 fd_step=current.fd_step)
        if not du.is_zero():
            terms.append((-1.0, Contraction(ChainCurrent(current.chain, patch), du)))
        return Combination(terms, current.degree - 1, current.dim, patch)
    if isinstance(current, FormCurrent):
        return _structural_form_current(current)
    if isinstance(current, Combination):
        parts = [(c, boundary_structural(t)) for c, t in current.terms if c != 0.0]
        return _simplify(parts, current.degree - 1, current.dim, patch)
    raise NoStructuralRule(
        f"no structural rule for {type(current).__name__}; use boundary_weak"
    )


# --- probes --------------------------------------------------------------

def probe_family(patch: Patch, degree: int, count: int = 8, seed: int = 0, m: int = 4,
                 modulated: bool = True, region: Box | None = None) -> list:
    """Deterministic random bump test forms of the given degree.

    Centers are uniform in ``region`` (default: the patch), radii between
    15% and 45% of the patch extent, shrunk to stay strictly inside the
    patch.  With ``modulated`` each bump is multiplied by a random quadratic
    and spread over random components.
    """
    rng = np.random.default_rng(seed)
    box = patch.box
    area = region or box
    lo, hi = box.lo_array, box.hi_array
    ext = hi - lo
    idxs = multi_indices(patch.dim, degree)
    out = []
    for _ in range(count):
        c = rng.uniform(area.lo_array, area.hi_array)
        c = np.clip(c, lo + 0.02 * ext, hi - 0.02 * ext)
        r = rng.uniform(0.15, 0.45, size=patch.dim) * ext / 2
        r = np.minimum(r, 0.999 * np.minimum(c - lo, hi - c))
        if modulated:
            mod = Polynomial(rng.normal(size=(3,) * patch.dim) * _quadratic_mask(patch.dim), origin=c)
            chosen = {i: float(rng.normal()) for i in idxs if rng.random() < 0.7} or {idxs[0]: 1.0}
            out.append(make_bump_testform(c, r, m, chosen, patch=patch, degree=degree, modulation=mod))
        else:
            i = idxs[rng.integers(len(idxs))]
            out.append(make_bump_testform(c, r, m, i, 1.0, patch=patch))
    return out


def _quadratic_mask(dim: int) -> np.ndarray:
    grids = np.meshgrid(*([np.arange(3)] * dim), indexing="ij")
    return (sum(grids) <= 2).astype(float)
