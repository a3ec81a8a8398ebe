"""Dislocation layer: density, total dislocation, torsion, Burgers bracket,
dislocation currents, support detection and Frank's-rule checks."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .currents import (
    ChainCurrent,
    Combination,
    Current,
    WeightedChainCurrent,
    boundary_structural,
    boundary_weak,
    combine,
)
from .errors import (
    BracketMismatchError,
    DegreeMismatchError,
    DislocError,
    FormError,
    GeometryError,
    NoStructuralRule,
)
from .fields import FunctionField, ScalarField, _FiniteDifference, as_field, audit_partials
from .forms import (
    SmoothForm,
    VectorValuedForm,
    evaluate_form,
    exterior_derivative,
    make_bump_testform,
    multi_indices,
)
from .geometry import (
    Box,
    Chain,
    Patch,
    boundary_chain,
    clip_simplex,
    integrate_over_chain,
    restrict_to_interior,
)
from .quadrature import QuadratureRule

__all__ = [
    "TOLERANCES",
    "CoframeField",
    "FrameField",
    "DislocationReport",
    "Verdict",
    "dislocation_density",
    "total_dislocation",
    "torsion",
    "burgers_bracket",
    "tube_flux_check",
    "closed_surface_flux",
    "dislocation_current",
    "detect_support",
    "cells_meeting",
    "grid_edges",
    "ray_decomposition",
    "frank_node_check",
    "frank_constancy_check",
    "closedness_check",
]

TOLERANCES = {"exact": 1e-10, "quadrature": 1e-8, "finite_difference": 1e-5}
SINGULAR_DET = 1e-10
BRACKET_RTOL = 1e-6


def _rung(tol: float) -> str:
    for name, value in TOLERANCES.items():
        if tol <= value:
            return name
    return "custom"


@dataclass
class Verdict:
    name: str
    residual: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    @property
    def rung(self) -> str:
        return _rung(self.tolerance)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "residual": float(self.residual),
            "tolerance": self.tolerance,
            "rung": self.rung,
            "verdict": "pass" if self.passed else "fail",
            **self.details,
        }


@dataclass
class DislocationReport:
    scenario_id: str
    term_tree: dict | None = None
    probe_residuals: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)
    support_cells: list | None = None

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario_id,
            "term_tree": self.term_tree,
            "probe_residuals": [float(r) for r in self.probe_residuals],
            "verdicts": [v.to_dict() for v in self.verdicts],
            "support_cells": None if self.support_cells is None else [list(c) for c in self.support_cells],
        }


# --- frames and coframes -------------------------------------------------

def _matrix_values(entries, pts) -> np.ndarray:
    n = len(entries)
    out = np.empty((len(pts), n, n))
    for r in range(n):
        for c in range(n):
            out[:, r, c] = entries[r][c].values(pts)
    return out


def _checked_inverse(m: np.ndarray) -> np.ndarray:
    det = np.linalg.det(m)
    if np.any(np.abs(det) <= SINGULAR_DET):
        raise GeometryError(f"singular frame matrix (|det| = {float(np.min(np.abs(det))):.3e})")
    return np.linalg.inv(m)


class _InverseEntry(ScalarField):
    """Entry ``(r, c)`` of the pointwise inverse of a matrix of fields."""

    def __init__(self, entries, r: int, c: int):
        self.entries = entries
        self.dim = entries[0][0].dim
        self.r, self.c = r, c

    def values(self, pts):
        return _checked_inverse(_matrix_values(self.entries, pts))[:, self.r, self.c]

    def partial(self, j: int) -> ScalarField:
        return _InverseEntryPartial(self.entries, self.r, self.c, j)

    @property
    def has_analytic_partials(self):
        return all(e.has_analytic_partials for row in self.entries for e in row)


class _InverseEntryPartial(ScalarField):
    """``d_j (A^-1) = -A^-1 (d_j A) A^-1``, entry ``(r, c)``."""

    def __init__(self, entries, r: int, c: int, j: int):
        self.entries = entries
        self.dim = entries[0][0].dim
        self.r, self.c, self.j = r, c, j

    def values(self, pts):
        inv = _checked_inverse(_matrix_values(self.entries, pts))
        da = _matrix_values([[e.partial(self.j) for e in row] for row in self.entries], pts)
        return -(inv @ da @ inv)[:, self.r, self.c]

    def partial(self, j: int) -> ScalarField:
        return _FiniteDifference(self, j, 1e-5, None)


def _audit_points(patch: Patch | None, dim: int, count: int = 16, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if patch is None:
        return rng.uniform(-1.0, 1.0, size=(count, dim))
    return rng.uniform(patch.box.lo_array, patch.box.hi_array, size=(count, dim))


class _MatrixField:
    def __init__(self, entries, patch: Patch | None = None, audit_points=None):
        n = len(entries)
        if n not in (2, 3) or any(len(row) != n for row in entries):
            raise DegreeMismatchError("frame matrices must be square of size 2 or 3")
        self.dim = n
        self.entries = [[as_field(e, n) for e in row] for row in entries]
        self.patch = patch
        if not all(e.has_analytic_partials for row in self.entries for e in row):
            raise FormError("frame and coframe entries need analytic partials")
        pts = _audit_points(patch, n) if audit_points is None else np.atleast_2d(audit_points)
        _checked_inverse(self.matrix(pts))
        for e in (e for row in self.entries for e in row):
            if isinstance(e, FunctionField):
                audit_partials(e, pts)

    def matrix(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return _matrix_values(self.entries, pts)

    def _inverse_entries(self):
        n = self.dim
        return [[_InverseEntry(self.entries, r, c) for c in range(n)] for r in range(n)]


class CoframeField(_MatrixField):
    """Rows ``e^alpha_i``: the 1-forms ``e^alpha = e^alpha_i dx^i``."""

    @classmethod
    def identity(cls, dim: int, patch: Patch | None = None) -> "CoframeField":
        return cls([[float(r == c) for c in range(dim)] for r in range(dim)], patch)

    def forms(self) -> VectorValuedForm:
        n = self.dim
        return VectorValuedForm([
            SmoothForm(n, 1, {(i,): self.entries[a][i] for i in range(n)}, self.patch, audit=False)
            for a in range(n)
        ])

    def frame(self) -> "FrameField":
        return FrameField(self._inverse_entries(), self.patch)


class FrameField(_MatrixField):
    """Entries ``e^i_alpha`` (row ``i``, column ``alpha``): ``e_alpha = e^i_alpha d/dx^i``."""

    @classmethod
    def identity(cls, dim: int, patch: Patch | None = None) -> "FrameField":
        return cls([[float(r == c) for c in range(dim)] for r in range(dim)], patch)

    def vector(self, alpha: int, x) -> np.ndarray:
        return self.matrix(x)[0, :, alpha]

    def coframe(self) -> CoframeField:
        return CoframeField(self._inverse_entries(), self.patch)


# --- densities and torsion -----------------------------------------------

def dislocation_density(phi: SmoothForm) -> SmoothForm:
    """``delta = d phi`` for a layering 1-form."""
    if phi.degree != 1:
        raise DegreeMismatchError("the dislocation density is defined for 1-forms")
    return exterior_derivative(phi)


@dataclass
class TotalDislocation:
    boundary_integral: float
    surface_integral: float

    @property
    def value(self) -> float:
        return self.surface_integral

    @property
    def discrepancy(self) -> float:
        return abs(self.boundary_integral - self.surface_integral)


def total_dislocation(phi: SmoothForm, z: Chain, q: QuadratureRule | None = None) -> TotalDislocation:
    """``I = integral over dZ of phi = integral over Z of d phi``, both computed."""
    if z.degree != 2:
        raise DegreeMismatchError("total dislocation needs a 2-chain")
    if phi.degree != 1:
        raise DegreeMismatchError("total dislocation needs a layering 1-form")
    y = boundary_chain(z)
    return TotalDislocation(
        integrate_over_chain(y, phi, q),
        integrate_over_chain(z, dislocation_density(phi), q),
    )


def torsion(cf: CoframeField) -> VectorValuedForm:
    """``tau^alpha = d e^alpha``."""
    return VectorValuedForm([exterior_derivative(e) for e in cf.forms()])


@dataclass
class BurgersBracket:
    component_formula: np.ndarray
    torsion_formula: np.ndarray
    relative_gap: float
    edge: np.ndarray | None = None
    screw: np.ndarray | None = None

    @property
    def value(self) -> np.ndarray:
        return self.component_formula

    def to_dict(self) -> dict:
        out = {
            "bracket": self.component_formula.tolist(),
            "via_torsion": self.torsion_formula.tolist(),
            "relative_gap": self.relative_gap,
        }
        if self.edge is not None:
            out["edge"] = self.edge.tolist()
            out["screw"] = self.screw.tolist()
        return out


def burgers_bracket(ff: FrameField, alpha: int, beta: int, x,
                    rtol: float = BRACKET_RTOL) -> BurgersBracket:
    """Lie bracket ``[e_alpha, e_beta]`` at ``x`` computed two ways.

    (i) components: ``e^j_alpha d_j e^i_beta - e^j_beta d_j e^i_alpha``;
    (ii) torsion: ``-tau^sigma(e_alpha, e_beta) e_sigma`` with ``tau`` the
    torsion of the inverse coframe.  Raises if they differ by more than
    ``rtol`` relative.  For n = 3 the bracket is split along
    ``span(e_alpha, e_beta)`` (edge) and ``e_alpha x e_beta`` (screw).
    """
    n = ff.dim
    if alpha == beta:
        raise DislocError("the bracket needs two distinct frame indices")
    if not (0 <= alpha < n and 0 <= beta < n):
        raise DislocError("frame index out of range")
    x = np.asarray(x, dtype=float).reshape(1, n)
    if ff.patch is not None and not np.all(ff.patch.contains(x)):
        raise GeometryError("bracket point outside the patch")
    e = ff.matrix(x)[0]
    _checked_inverse(e[None])
    grad = np.empty((n, n, n))  # grad[i, a, j] = d_j e^i_a
    for i in range(n):
        for a in range(n):
            for j in range(n):
                grad[i, a, j] = ff.entries[i][a].partial(j).values(x)[0]
    ea, eb = e[:, alpha], e[:, beta]
    direct = grad[:, beta, :] @ ea - grad[:, alpha, :] @ eb

    tau = torsion(ff.coframe())
    coeffs = np.array([evaluate_form(tau[s], x[0], [ea, eb]) for s in range(n)])
    via = -(e @ coeffs)

    scale = max(np.linalg.norm(direct), np.linalg.norm(via), 1e-300)
    gap = float(np.linalg.norm(direct - via) / scale) if np.any(direct) or np.any(via) else 0.0
    if gap > rtol:
        raise BracketMismatchError(f"bracket formulas disagree (relative gap {gap:.3e})")
    out = BurgersBracket(direct, via, gap)
    if n == 3:
        normal = np.cross(ea, eb)
        basis = np.column_stack([ea, eb, normal])
        c = np.linalg.solve(basis, direct)
        out.edge = c[0] * ea + c[1] * eb
        out.screw = c[2] * normal
    return out


def tube_flux_check(tau: VectorValuedForm, lid1: Chain, lid2: Chain, tol: float = 1e-8,
                    q: QuadratureRule | None = None) -> Verdict:
    """Compare ``integral over lid1 of tau^alpha`` with the same over ``lid2``.

    Residuals are relative to ``max(1, |flux|)``.
    """
    if lid1.degree != 2 or lid2.degree != 2:
        raise DegreeMismatchError("tube lids must be 2-chains")
    residuals, fluxes = [], []
    for t in tau:
        if t.degree != 2:
            raise DegreeMismatchError("torsion components must be 2-forms")
        f1 = integrate_over_chain(lid1, t, q)
        f2 = integrate_over_chain(lid2, t, q)
        fluxes.append([f1, f2])
        residuals.append(abs(f1 - f2) / max(1.0, abs(f1), abs(f2)))
    worst = max(residuals)
    return Verdict("tube_flux", worst, tol, worst <= tol, {"fluxes": fluxes, "per_component": residuals})


def closed_surface_flux(tau: VectorValuedForm, surface: Chain, tol: float = 1e-8,
                        q: QuadratureRule | None = None) -> Verdict:
    """Flux of each ``tau^alpha`` through a closed 2-chain; zero for exact torsion."""
    if surface.degree != 2:
        raise DegreeMismatchError("closed surfaces are 2-chains")
    if not boundary_chain(surface).is_empty():
        raise GeometryError("surface chain is not closed")
    fluxes = [integrate_over_chain(surface, t, q) for t in tau]
    worst = max(abs(f) for f in fluxes)
    return Verdict("closed_surface_flux", worst, tol, worst <= tol, {"fluxes": fluxes})


# --- dislocation currents ------------------------------------------------

def dislocation_current(t: Current) -> Current:
    """``D = dT``: structural when a rewrite exists, weak otherwise."""
    try:
        return boundary_structural(t)
    except NoStructuralRule:
        return boundary_weak(t)


def grid_edges(patch: Patch, resolution) -> list:
    res = np.broadcast_to(np.asarray(resolution, dtype=int), (patch.dim,))
    if np.any(res < 2):
        raise GeometryError("support grid resolution must be >= 2")
    return [np.linspace(l, h, r + 1) for l, h, r in zip(patch.box.lo, patch.box.hi, res)]


def cells_meeting(chain: Chain, edges) -> list:
    """Grid cells whose closed box meets ``chain`` in a set of positive k-measure.

    Cells touching a k-chain (k >= 1) only in lower-dimensional pieces,
    such as a line endpoint at a cell corner, are not counted.
    """
    dim = len(edges)
    out = set()
    for v, _ in chain.items():
        lo_idx = [max(0, int(np.searchsorted(edges[i], v[:, i].min(), side="left")) - 1) for i in range(dim)]
        hi_idx = [min(len(edges[i]) - 2, int(np.searchsorted(edges[i], v[:, i].max(), side="right")) - 1)
                  for i in range(dim)]
        for cell in itertools.product(*[range(a, b + 1) for a, b in zip(lo_idx, hi_idx)]):
            box = Box([edges[i][c] for i, c in enumerate(cell)], [edges[i][c + 1] for i, c in enumerate(cell)])
            if len(v) == 1:
                hit = bool(np.all(box.contains(v[0])))
            else:
                hit = bool(clip_simplex(v, box))
            if hit:
                out.add(tuple(int(c) for c in cell))
    return sorted(out)


def cell_probes(patch: Patch, cell, edges, degree: int, amplitude: float = 1.0,
                inflation: float = 0.55, m: int = 4) -> list:
    """Bump probes of every basis component centered on one grid cell.

    The support is the cell center plus or minus ``inflation`` cell widths,
    clipped to stay strictly inside the open patch.
    """
    lo = np.array([edges[i][c] for i, c in enumerate(cell)])
    hi = np.array([edges[i][c + 1] for i, c in enumerate(cell)])
    center = (lo + hi) / 2
    width = hi - lo
    plo = np.maximum(center - inflation * width, patch.box.lo_array + 1e-3 * width)
    phi = np.minimum(center + inflation * width, patch.box.hi_array - 1e-3 * width)
    c = (plo + phi) / 2
    r = (phi - plo) / 2
    return [make_bump_testform(c, r, m, idx, amplitude, patch=patch)
            for idx in multi_indices(patch.dim, degree)]


def detect_support(d: Current, grid_resolution=8, probe_amplitude: float = 1.0,
                   patch: Patch | None = None, q: QuadratureRule | None = None,
                   rtol: float = 1e-9) -> list:
    """Grid cells on which ``d`` is detectably nonzero, sorted.

    A cell is flagged when some probe gives ``|d(probe)| > rtol *
    amplitude * volume(probe support)``.
    """
    patch = patch or d.patch
    if patch is None:
        raise GeometryError("support detection needs a patch")
    if isinstance(d, Combination) and d.is_zero():
        return []
    edges = grid_edges(patch, grid_resolution)
    flagged = []
    for cell in itertools.product(*[range(len(e) - 1) for e in edges]):
        for probe in cell_probes(patch, cell, edges, d.degree, probe_amplitude):
            threshold = rtol * probe_amplitude * probe.support.volume()
            if abs(d.evaluate(probe, q)) > threshold:
                flagged.append(tuple(int(i) for i in cell))
                break
    return sorted(flagged)


# --- Frank's rules -------------------------------------------------------

def ray_decomposition(chain: Chain, node) -> list:
    """Group a 1-chain into straight rays leaving ``node``.

    Each simplex is assigned to the ray through its vertex farthest from
    the node.  Returns ``(weight, ray_chain)`` pairs where ``ray_chain`` has
    unit coefficients in its stored orientation; weights must be uniform
    along a ray.
    """
    if chain.degree != 1:
        raise DegreeMismatchError("rays are 1-chains")
    node = np.asarray(node, dtype=float)
    groups: dict = {}
    for v, c in chain.items():
        far = v[np.argmax(np.linalg.norm(v - node, axis=1))]
        u = (far - node) / np.linalg.norm(far - node)
        key = tuple(np.round(u, 9))
        # weight relative to the outward direction of the ray
        outward = 1.0 if np.dot(v[1] - v[0], u) > 0 else -1.0
        groups.setdefault(key, []).append((v, c * outward))
    out = []
    for key in sorted(groups):
        items = groups[key]
        weights = [w for _, w in items]
        if max(weights) - min(weights) > 1e-12 * max(1.0, max(abs(w) for w in weights)):
            raise DislocError("weight varies along a ray; split it first")
        ray = Chain(1, chain.dim, {})
        for v, _ in items:
            ray = ray + Chain.simplex(v if np.linalg.norm(v[1] - node) >= np.linalg.norm(v[0] - node)
                                      else v[::-1])
        out.append((weights[0], ray))
    return out


def _node_sign(line: Chain, node: np.ndarray, patch: Patch | None) -> float:
    bd = boundary_chain(line)
    if patch is not None:
        bd = restrict_to_interior(bd, patch)
        interior = [k for k in bd.keys() if np.all(patch.contains(np.array(k[0]), closed=False))]
        bd = bd.filter(lambda k: k in interior)
    keys = list(bd.keys())
    if len(keys) != 1 or not np.allclose(keys[0][0], node, atol=1e-12):
        raise GeometryError(f"line does not end at the node {node.tolist()} inside the patch")
    return bd.coefficient(keys[0])


def frank_node_check(lines: Sequence, node, probes: Sequence, patch: Patch | None = None,
                     tol: float = 1e-10, q: QuadratureRule | None = None) -> Verdict:
    """Balance of line weights at a node, read off from ``d`` of the lines.

    Builds ``D = sum a_i T_{L_i}``, takes its structural boundary and
    evaluates it on probes ``gamma`` covering the node; the residual is
    ``max |dD(gamma)| / |gamma(node)|``, which equals ``|sum a_i sign_i|``
    with sign +1 for lines running into the node.
    """
    node = np.asarray(node, dtype=float)
    if not lines:
        raise DislocError("node check needs at least one line")
    patch = patch or next((getattr(c, "patch", None) for _, c in lines if hasattr(c, "patch")), None)
    signs = [_node_sign(c, node, patch) for _, c in lines]
    d = combine([(a, ChainCurrent(c, patch)) for a, c in lines])
    dd = boundary_structural(d)
    residuals = []
    for g in probes:
        if g.degree != 0:
            raise DegreeMismatchError("node probes are 0-forms")
        g0 = evaluate_form(g, node)
        if abs(g0) < 1e-14:
            raise GeometryError("probe does not cover the node")
        residuals.append(abs(dd.evaluate(g, q)) / abs(g0))
    worst = max(residuals)
    signed_sum = float(sum(a * s for (a, _), s in zip(lines, signs)))
    return Verdict("frank_node", worst, tol, worst <= tol,
                   {"signed_sum": signed_sum, "probe_residuals": residuals})


def frank_constancy_check(u, loop: Chain, probes: Sequence, patch: Patch | None = None,
                          tol: float = 1e-8, q: QuadratureRule | None = None) -> Verdict:
    """Constancy of a line weight ``u`` along a closed line ``L``.

    Computes ``d T_{uL} = T_{u dL} - T_L -| du`` with the structural rule and
    evaluates it on the probes; it vanishes on every probe iff ``u`` is
    constant along ``L``.  The probe values are reported.
    """
    if loop.degree != 1:
        raise DegreeMismatchError("constancy is checked along 1-chains")
    bd = boundary_chain(loop)
    if patch is not None:
        bd = restrict_to_interior(bd, patch)
        bd = bd.filter(lambda k: bool(np.all(patch.contains(np.array(k[0]), closed=False))))
    if not bd.is_empty():
        raise GeometryError("line has an endpoint inside the patch; use frank_node_check")
    u = as_field(u, loop.dim)
    d = boundary_structural(WeightedChainCurrent(loop, u, patch))
    values = []
    for g in probes:
        if g.degree != 0:
            raise DegreeMismatchError("constancy probes are 0-forms")
        values.append(d.evaluate(g, q))
    worst = max(abs(v) for v in values)
    return Verdict("frank_constancy", worst, tol, worst <= tol,
                   {"probe_values": values, "consistent": worst <= tol})


def closedness_check(d: Current, probes: Sequence, tol: float = 1e-9,
                     q: QuadratureRule | None = None) -> Verdict:
    """``dD(gamma) = 0`` for 0-form probes, with ``dD`` computed weakly."""
    dd = boundary_weak(d)
    values = [abs(dd.evaluate(g, q)) for g in probes]
    worst = max(values) if values else 0.0
    return Verdict("closedness", worst, tol, worst <= tol, {"probe_values": values})
