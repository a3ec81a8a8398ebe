"""Build library objects from a validated scenario and execute its checks."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import layerings
from .currents import (
    ChainCurrent,
    Combination,
    Contraction,
    DiracCurrent,
    FormCurrent,
    WeightedChainCurrent,
    boundary_structural,
    boundary_weak,
    combine,
    probe_family,
    zero_current,
)
from .dislocation import (
    CoframeField,
    FrameField,
    Verdict,
    burgers_bracket,
    cells_meeting,
    closed_surface_flux,
    closedness_check,
    detect_support,
    dislocation_current,
    dislocation_density,
    frank_constancy_check,
    frank_node_check,
    ray_decomposition,
    torsion,
    total_dislocation,
    tube_flux_check,
    grid_edges,
)
from .errors import DislocError
from .fields import FunctionField, Polynomial
from .forms import (
    PiecewiseForm,
    SmoothForm,
    VectorValuedForm,
    coordinate_form,
    evaluate_form,
    exterior_derivative,
    make_bump_testform,
    wedge,
)
from .geometry import Box, Chain, Patch, boundary_chain, integrate_over_chain, triangulate_box, triangulate_flat
from .quadrature import QuadratureRule
from .scenario import (
    BuiltinField,
    Scenario,
)

__all__ = ["Settings", "CheckResult", "Report", "run_scenario", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

DEFAULT_TOLERANCE = {
    "boundary_equals": 1e-8,
    "weak_structural": 1e-8,
    "closed": 1e-9,
    "support": 0.0,
    "frank_node": 1e-10,
    "frank_constancy": 1e-8,
    "total_dislocation": 1e-8,
    "dislocation_density": 1e-10,
    "torsion": 1e-10,
    "burgers_bracket": 1e-6,
    "tube_flux": 1e-8,
    "closed_surface_flux": 1e-8,
    "evaluate": 1e-8,
    "stokes": 1e-10,
}

RUNGS = ((1e-10, "exact"), (1e-8, "quadrature"), (1e-5, "finite_difference"))


def rung_of(tol: float) -> str:
    if tol == 0.0:
        return "set_equality"
    for value, name in RUNGS:
        if tol <= value * (1 + 1e-12):
            return name
    return "custom"


@dataclass
class Settings:
    quadrature_order: int = 5
    fd_step: float = 1e-5
    tolerance_scale: float = 1.0
    resolution: int = 8
    timings: bool = False


@dataclass
class CheckResult:
    name: str
    kind: str
    expect: str
    holds: bool
    residual: float
    tolerance: float
    wall_time: float = 0.0
    details: dict = field(default_factory=dict)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and self.holds == (self.expect == "holds")

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "name": self.name,
            "kind": self.kind,
            "expect": self.expect,
            "observed": "error" if self.error else ("holds" if self.holds else "violated"),
            "verdict": "pass" if self.passed else "fail",
            "residual": float(self.residual) if math.isfinite(self.residual) else None,
            "tolerance": float(self.tolerance),
            "rung": rung_of(self.tolerance),
            "details": self.details,
        }
        if self.error:
            out["error"] = self.error
        if timings:
            out["wall_time"] = self.wall_time
        return out


@dataclass
class Report:
    scenario_id: str
    topic: str
    checks: list
    term_trees: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, timings: bool = False) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario_id,
            "topic": self.topic,
            "verdict": "pass" if self.passed else "fail",
            "checks": [c.to_dict(timings) for c in self.checks],
            "term_trees": self.term_trees,
        }


def _index(s: str) -> tuple:
    return tuple(int(ch) - 1 for ch in s)


def _box(spec) -> Box:
    return Box([lo for lo, _ in spec], [hi for _, hi in spec])


class _Builder:
    def __init__(self, sc: Scenario, settings: Settings):
        self.sc = sc
        self.settings = settings
        self.n = sc.patch.dim
        self.patch = Patch(self.n, sc.patch.bounds)
        self.q = QuadratureRule(settings.quadrature_order)
        self._forms: dict = {}
        self._chains: dict = {}
        self._frames: dict = {}
        self._currents: dict = {}

    # scalar fields
    def field(self, spec):
        n = self.n
        if isinstance(spec, (int, float)):
            return Polynomial.constant(n, float(spec))
        if isinstance(spec, BuiltinField):
            return self._builtin(spec)
        return Polynomial.from_terms(n, [(tuple(e), c) for e, c in spec])

    def _builtin(self, spec: BuiltinField):
        ax, k, a = spec.axis - 1, spec.scale, spec.coefficient
        fns = {
            "sin": (np.sin, lambda t: k * np.cos(t)),
            "cos": (np.cos, lambda t: -k * np.sin(t)),
            "exp": (np.exp, lambda t: k * np.exp(t)),
        }
        f, df = fns[spec.function]
        name = f"{a}*{spec.function}({k}*x{spec.axis})"
        partials = None
        if spec.analytic:
            # first partials are analytic; deeper ones fall back to differences
            partials = [
                (lambda p, df=df: a * df(k * p[:, ax])) if j == ax else (lambda p: np.zeros(len(p)))
                for j in range(self.n)
            ]
        return FunctionField(self.n, lambda p: a * f(k * p[:, ax]), partials=partials,
                             fd_step=self.settings.fd_step, name=name)

    def form(self, name):
        if name in self._forms:
            return self._forms[name]
        spec = self.sc.forms[name]
        n, patch = self.n, self.patch
        kind = spec.kind
        if kind == "constant":
            comps = {_index(k): Polynomial.constant(n, v) for k, v in spec.components.items()}
            out = SmoothForm(n, spec.degree, comps, patch)
        elif kind == "polynomial":
            comps = {_index(k): self.field(v) for k, v in spec.components.items()}
            out = SmoothForm(n, spec.degree, comps, patch)
        elif kind == "coordinate":
            out = coordinate_form(n, _index(spec.index), spec.coefficient, patch=patch)
        elif kind == "piecewise":
            out = PiecewiseForm([(_box(p.box), self.form(p.form)) for p in spec.pieces], patch)
        elif kind == "derivative":
            out = exterior_derivative(self.form(spec.of), fd_step=self.settings.fd_step)
        elif kind == "wedge":
            out = wedge(self.form(spec.left), self.form(spec.right))
        elif kind == "sum":
            out = None
            for t in spec.terms:
                term = self.form(t.form) * t.coefficient
                out = term if out is None else out + term
        else:
            out = make_bump_testform(spec.center, spec.radii, spec.m, _index(spec.index), spec.amplitude,
                                     patch=patch)
        self._forms[name] = out
        return out

    def chain(self, name) -> Chain:
        if name in self._chains:
            return self._chains[name]
        spec = self.sc.chains[name]
        res = self.settings.resolution
        kind = spec.kind
        if kind == "simplices":
            out = None
            for s in spec.simplices:
                c = Chain.simplex(s.vertices, s.coefficient, patch=self.patch)
                out = c if out is None else out + c
        elif kind == "box":
            out = triangulate_box(_box(spec.box), spec.resolution or res)
        elif kind == "flat":
            out = triangulate_flat(_box(spec.box), spec.resolution or 1, spec.orientation, spec.normal)
        elif kind == "boundary":
            out = boundary_chain(self.chain(spec.of))
        elif kind == "sum":
            out = None
            for t in spec.terms:
                c = self.chain(t.chain) * t.coefficient
                out = c if out is None else out + c
        else:
            out = self._named_chain(spec.name)
        self._chains[name] = out
        return out

    def _named_chain(self, name: str) -> Chain:
        p = self.patch
        if name == "half_plane_cube":
            return layerings.half_plane_sheet(p)
        if name == "half_plane_line":
            return layerings.half_plane_line(p)
        if name.startswith("quarter_plane_"):
            return layerings.quarter_plane_sheets(p)[int(name[-1]) - 1]
        return layerings.fork_lines(p)[name[len("fork_"):]]

    def frame(self, name):
        if name in self._frames:
            return self._frames[name]
        spec = self.sc.frames[name]
        if spec.kind == "dual":
            inner = self.frame(spec.of)
            out = inner.frame() if isinstance(inner, CoframeField) else inner.coframe()
        else:
            entries = [[self.field(e) for e in row] for row in spec.entries]
            cls = CoframeField if spec.kind == "coframe" else FrameField
            out = cls(entries, self.patch)
        self._frames[name] = out
        return out

    def current(self, name):
        if name in self._currents:
            return self._currents[name]
        spec = self.sc.currents[name]
        p = self.patch
        kind = spec.kind
        if kind == "form":
            region = None
            if spec.box is not None:
                region = _box(spec.box)
            elif spec.chain is not None:
                region = self.chain(spec.chain)
            out = FormCurrent(self.form(spec.form), p, region, spec.resolution or self.settings.resolution,
                              self.settings.fd_step)
        elif kind == "chain":
            out = ChainCurrent(self.chain(spec.chain), p)
        elif kind == "weighted_chain":
            out = WeightedChainCurrent(self.chain(spec.chain), self.field(spec.weight), p, self.settings.fd_step)
        elif kind == "dirac":
            out = DiracCurrent(spec.point, spec.vectors, p)
        elif kind == "contraction":
            out = Contraction(self.current(spec.current), self.form(spec.form))
        elif kind == "combination":
            if spec.terms:
                out = combine([(t.coefficient, self.current(t.current)) for t in spec.terms])
            else:
                out = zero_current(spec.degree, self.n, p)
        elif kind == "weak_boundary":
            out = boundary_weak(self.current(spec.of))
        elif kind == "structural_boundary":
            out = boundary_structural(self.current(spec.of))
        elif kind == "dislocation":
            out = dislocation_current(self.current(spec.of))
        elif kind == "step_interface":
            out = layerings.step_layering(spec.a, p)
        elif kind == "step_line":
            out = layerings.step_line(p)
        elif kind == "half_plane_cube":
            out = ChainCurrent(layerings.half_plane_sheet(p), p)
        elif kind == "three_quarter_planes":
            out = layerings.quarter_plane_layering(spec.a1, spec.a2, spec.a3, p)
        else:
            out = layerings.fork_current(spec.a1, spec.a2, spec.a3, p)
        self._currents[name] = out
        return out

    def probes(self, spec, degree: int) -> list:
        if spec.bumps:
            out = []
            for b in spec.bumps:
                idx = _index(b.index) if b.index is not None else tuple(range(degree))
                out.append(make_bump_testform(b.center, b.radii, 4, idx, 1.0, patch=self.patch))
            return out
        region = _box(spec.region) if spec.region is not None else None
        return probe_family(self.patch, degree, spec.count, spec.seed, modulated=spec.modulated, region=region)

    def sample_points(self, count: int, seed: int) -> np.ndarray:
        rng = np.random.default_rng(seed)
        box = self.patch.box
        return rng.uniform(box.lo_array, box.hi_array, size=(count, self.n))


def _relative_gap(a, b, floor: float = 1e-12) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), floor)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


def _torsion_from(b: _Builder, ch) -> VectorValuedForm:
    if ch.coframe is not None:
        return torsion(b.frame(ch.coframe))
    return VectorValuedForm([exterior_derivative(b.form(f)) for f in ch.potentials])


def _line_terms(current) -> list:
    """Flatten a current into (weight, chain) pairs of plain chain currents."""
    if isinstance(current, ChainCurrent):
        return [(1.0, current.chain)]
    if isinstance(current, Combination):
        out = []
        for c, t in current.terms:
            out.extend((c * w, ch) for w, ch in _line_terms(t))
        return out
    raise DislocError(f"{type(current).__name__} is not a sum of line chains")


def _execute(b: _Builder, ch, tol: float, trees: dict) -> tuple:
    """Return ``(holds, residual, details)`` for one check."""
    q = b.q
    kind = ch.kind
    if kind == "boundary_equals":
        t = b.current(ch.current)
        d = dislocation_current(t)
        trees[ch.current] = d.describe()
        e = b.current(ch.expected)
        probes = b.probes(ch.probes, d.degree)
        dv = [d.evaluate(p, q) for p in probes]
        ev = [e.evaluate(p, q) for p in probes]
        r = _relative_gap(dv, ev)
        return r <= tol, r, {"probes": len(probes)}
    if kind == "weak_structural":
        t = b.current(ch.current)
        s = boundary_structural(t)
        trees[ch.current] = s.describe()
        w = boundary_weak(t)
        probes = b.probes(ch.probes, t.degree - 1)
        sv = [s.evaluate(p, q) for p in probes]
        wv = [w.evaluate(p, q) for p in probes]
        r = _relative_gap(sv, wv)
        return r <= tol, r, {"probes": len(probes)}
    if kind == "closed":
        t = b.current(ch.current)
        d = dislocation_current(t)
        v = closedness_check(d, b.probes(ch.probes, t.degree - 2), tol, q)
        return v.passed, v.residual, {"probes": len(v.details["probe_values"])}
    if kind == "support":
        d = b.current(ch.current)
        res = ch.resolution or b.settings.resolution
        cells = detect_support(d, res, ch.amplitude, b.patch, q)
        if ch.empty:
            expected = []
        elif ch.cells is not None:
            expected = sorted(tuple(c) for c in ch.cells)
        else:
            expected = cells_meeting(b.chain(ch.meets), grid_edges(b.patch, res))
        got = set(cells)
        want = set(expected)
        r = float(len(got ^ want))
        return r == 0.0, r, {
            "detected": [list(c) for c in cells],
            "missing": [list(c) for c in sorted(want - got)],
            "extra": [list(c) for c in sorted(got - want)],
        }
    if kind == "frank_node":
        if ch.lines is not None:
            lines = [(line.weight, b.chain(line.chain)) for line in ch.lines]
        else:
            terms = _line_terms(b.current(ch.from_current))
            merged = None
            for w, c in terms:
                merged = c * w if merged is None else merged + c * w
            lines = ray_decomposition(merged, ch.node)
        v = frank_node_check(lines, ch.node, b.probes(ch.probes, 0), b.patch, tol, q)
        return v.passed, v.residual, {"signed_sum": v.details["signed_sum"],
                                      "weights": [w for w, _ in lines]}
    if kind == "frank_constancy":
        v = frank_constancy_check(b.field(ch.weight), b.chain(ch.loop), b.probes(ch.probes, 0),
                                  b.patch, tol, q)
        return v.passed, v.residual, {"probe_values": v.details["probe_values"]}
    if kind == "total_dislocation":
        phi = b.form(ch.form)
        values = [total_dislocation(phi, b.chain(c), q) for c in ch.chains]
        surf = [v.surface_integral for v in values]
        bdry = [v.boundary_integral for v in values]
        r = max(_relative_gap(surf, [surf[0]] * len(surf)), _relative_gap(surf, bdry))
        if ch.expected is not None:
            r = max(r, _relative_gap(surf, [ch.expected] * len(surf)))
        return r <= tol, r, {"surface_integrals": surf, "boundary_integrals": bdry}
    if kind == "dislocation_density":
        delta = dislocation_density(b.form(ch.form))
        e = b.form(ch.expected)
        pts = b.sample_points(ch.points, ch.seed)
        r = 0.0
        for (_, f), (_, g) in zip(sorted(delta.components.items()), sorted(e.components.items())):
            r = max(r, _relative_gap(f.values(pts), g.values(pts)))
        return r <= tol, r, {"points": len(pts)}
    if kind == "torsion":
        tau = torsion(b.frame(ch.coframe))
        pts = b.sample_points(ch.points, ch.seed)
        r = 0.0
        for a, t in enumerate(tau):
            for idx, f in sorted(t.components.items()):
                got = f.values(pts)
                want = np.zeros(len(pts)) if ch.expected is None else b.form(ch.expected[a]).components[idx].values(pts)
                r = max(r, float(np.max(np.abs(got - want))))
        return r <= tol, r, {"points": len(pts)}
    if kind == "burgers_bracket":
        ff = b.frame(ch.frame)
        pts = ch.points if isinstance(ch.points, list) else b.sample_points(ch.points, ch.seed)
        r = 0.0
        values = []
        for x in pts:
            br = burgers_bracket(ff, ch.alpha - 1, ch.beta - 1, x, rtol=max(tol, 1e-6))
            r = max(r, br.relative_gap)
            values.append(br.value.tolist())
            if ch.expected is not None:
                r = max(r, _relative_gap(br.value, ch.expected))
        details = {"points": len(pts)}
        if len(pts) <= 4:
            details["brackets"] = values
        return r <= tol, r, details
    if kind == "tube_flux":
        tau = _torsion_from(b, ch)
        lids = [b.chain(c) for c in ch.lids]
        r = 0.0
        fluxes = []
        for i in range(len(lids)):
            for j in range(i + 1, len(lids)):
                v = tube_flux_check(tau, lids[i], lids[j], tol, q)
                r = max(r, v.residual)
                fluxes.append(v.details["fluxes"])
        return r <= tol, r, {"fluxes": fluxes}
    if kind == "closed_surface_flux":
        v = closed_surface_flux(_torsion_from(b, ch), b.chain(ch.surface), tol, q)
        return v.passed, v.residual, {"fluxes": v.details["fluxes"]}
    if kind == "evaluate":
        val = b.current(ch.current).evaluate(b.form(ch.probe), q)
        r = _relative_gap([val], [ch.expected])
        return r <= tol, r, {"value": val}
    if kind == "stokes":
        c = b.chain(ch.chain)
        w = b.form(ch.form)
        lhs = integrate_over_chain(boundary_chain(c), w, q)
        rhs = integrate_over_chain(c, exterior_derivative(w, fd_step=b.settings.fd_step), q)
        r = _relative_gap([lhs], [rhs])
        return r <= tol, r, {"boundary_integral": lhs, "interior_integral": rhs}
    raise DislocError(f"unknown check kind {kind!r}")


def run_scenario(sc: Scenario, settings: Settings | None = None) -> Report:
    """Execute the checks of a validated scenario in declaration order."""
    settings = settings or Settings()
    b = _Builder(sc, settings)
    results = []
    trees: dict = {}
    for i, ch in enumerate(sc.checks):
        base = ch.tolerance if ch.tolerance is not None else DEFAULT_TOLERANCE[ch.kind]
        tol = base * settings.tolerance_scale
        start = time.perf_counter()
        error = None
        try:
            holds, residual, details = _execute(b, ch, tol, trees)
        except DislocError as exc:
            holds, residual, details, error = False, float("inf"), {}, str(exc)
        results.append(CheckResult(
            name=ch.name or f"{ch.kind}#{i + 1}",
            kind=ch.kind,
            expect=ch.expect,
            holds=bool(holds),
            residual=float(residual),
            tolerance=tol,
            wall_time=time.perf_counter() - start,
            details=details,
            error=error,
        ))
    return Report(sc.id, sc.topic, results, trees)
