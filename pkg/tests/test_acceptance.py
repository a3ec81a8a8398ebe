"""Acceptance criteria 1-10, one or more tests per criterion.

The terminal summary (see conftest.py) prints one PASS/FAIL line per
criterion.
"""

import itertools

import numpy as np
import pytest
from scipy.integrate import quad

from disloc.currents import (
    ChainCurrent,
    boundary_structural,
    boundary_weak,
    probe_family,
)
from disloc.dislocation import (
    CoframeField,
    FrameField,
    burgers_bracket,
    cells_meeting,
    detect_support,
    dislocation_current,
    frank_constancy_check,
    frank_node_check,
    grid_edges,
    ray_decomposition,
    torsion,
    total_dislocation,
    tube_flux_check,
)
from disloc.errors import NoStructuralRule
from disloc.fields import Polynomial
from disloc.forms import (
    SmoothForm,
    evaluate_form,
    exterior_derivative,
    make_bump_testform,
    multi_indices,
    wedge,
)
from disloc.geometry import Box, Chain, Patch, boundary_chain, integrate_over_chain, triangulate_box, triangulate_flat
from disloc.layerings import (
    half_plane_line,
    half_plane_sheet,
    quarter_plane_layering,
    step_layering,
    step_line,
)
from populations import nilpotency_population, random_form, random_polynomial, smooth_population


def _gap(a, b, floor=1e-12):
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), floor)
    return float(np.max(np.abs(a - b)) / scale)


# probes have unit amplitude; values below this are compared absolutely
PROBE_SCALE_FLOOR = 1e-6


def _boundary_gap(t, probes):
    """Relative weak/structural gap, floored for boundaries that nearly vanish on the probes."""
    s, w = boundary_structural(t), boundary_weak(t)
    return _gap([s(p) for p in probes], [w(p) for p in probes], floor=PROBE_SCALE_FLOOR)


# 1 -----------------------------------------------------------------------

@pytest.mark.criterion(1)
def test_boundary_of_boundary_vanishes_on_random_currents():
    worst = 0.0
    population = nilpotency_population()
    assert len(population) == 50
    for i, t in enumerate(population):
        probes = probe_family(t.patch, 0, count=3, seed=100 + i)
        twice_weak = boundary_weak(boundary_weak(t))
        d = dislocation_current(t)
        try:
            twice = boundary_structural(d)
        except NoStructuralRule:
            twice = boundary_weak(d)
        for g in probes:
            worst = max(worst, abs(twice_weak(g)), abs(twice(g)))
    assert worst <= 1e-9, worst


# 2 -----------------------------------------------------------------------

@pytest.mark.criterion(2)
def test_weak_and_structural_boundaries_agree_on_polynomial_currents():
    n_probes = 0
    worst = 0.0
    for i, t in enumerate(nilpotency_population()):
        probes = probe_family(t.patch, 1, count=3, seed=500 + i)
        worst = max(worst, _boundary_gap(t, probes))
        n_probes += len(probes)
    assert n_probes >= 100
    assert worst <= 1e-8, worst


@pytest.mark.criterion(2)
def test_weak_and_structural_boundaries_agree_on_smooth_currents():
    worst = 0.0
    for i, t in enumerate(smooth_population()):
        probes = probe_family(t.patch, 1, count=4, seed=900 + i)
        worst = max(worst, _boundary_gap(t, probes))
    assert worst <= 1e-5, worst


# 3 -----------------------------------------------------------------------

@pytest.mark.criterion(3)
@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 3.0])
def test_step_interface_boundary_is_weighted_line(a):
    patch = Patch.cube(2)
    d = dislocation_current(step_layering(a, patch))
    line = step_line(patch)
    probes = probe_family(patch, 0, count=20, seed=int(10 * a))
    got = [d(p) for p in probes]
    want = [(a - 1.0) * line(p) for p in probes]
    assert _gap(got, want) <= 1e-8
    # independent oracle: (1 - a) times the integral of the probe along the x^1-axis
    for p, value in zip(probes[:5], got[:5]):
        oracle = (1.0 - a) * quad(lambda x: p(np.array([x, 0.0])), -1, 1, limit=200, epsabs=1e-14)[0]
        assert value == pytest.approx(oracle, rel=1e-8, abs=1e-12)
    if a == 1.0:
        assert detect_support(d, 8) == []


# 4 -----------------------------------------------------------------------

@pytest.mark.criterion(4)
def test_half_plane_dislocation_line_support():
    patch = Patch.cube(3)
    d = dislocation_current(ChainCurrent(half_plane_sheet(patch), patch))
    cells = detect_support(d, 16)
    # cells of the 16^3 grid whose closed box meets the x^3-axis: indices 7 and 8 in x^1, x^2
    expected = sorted((i, j, k) for i in (7, 8) for j in (7, 8) for k in range(16))
    assert cells == expected
    assert cells == cells_meeting(half_plane_line(patch), grid_edges(patch, 16))


# 5 -----------------------------------------------------------------------

FORK_DIRECTIONS = {(0.0, 0.0, 1.0), (1.0, 0.0, 0.0), (-1.0, 0.0, 0.0)}
NODE_PROBES = [((0.0, 0.0, 0.0), (0.3, 0.3, 0.3)), ((0.05, -0.04, 0.02), (0.25, 0.4, 0.35))]


def _fork_rays(d):
    chain = d.terms[0][1].chain
    rays = ray_decomposition(chain, (0, 0, 0))
    fork, other = [], []
    for w, ray in rays:
        v = next(iter(ray.keys()))
        far = max(v, key=lambda p: np.linalg.norm(p))
        direction = tuple(float(np.sign(c)) for c in far)
        (fork if direction in FORK_DIRECTIONS else other).append((w, ray))
    return fork, other


@pytest.mark.criterion(5)
@pytest.mark.parametrize("weights", [(1.0, 1.0, 0.0), (2.0, 1.0, 1.0), (1.0, 0.25, 0.75), (1.0, 1.0, 1.0)])
def test_node_balance_of_three_quarter_planes(weights):
    a1, a2, a3 = weights
    patch = Patch.cube(3)
    d = dislocation_current(quarter_plane_layering(a1, a2, a3, patch))
    fork, other = _fork_rays(d)
    probes = [make_bump_testform(c, r, 4, (), 1.0, patch=patch) for c, r in NODE_PROBES]
    verdict = frank_node_check(fork, (0, 0, 0), probes, patch)
    imbalance = abs(a1 - a2 - a3)
    edges = grid_edges(patch, 8)
    cells = detect_support(d, 8)
    fork_cells = set()
    for _, ray in fork:
        fork_cells |= set(cells_meeting(ray, edges))
    if imbalance == 0.0:
        assert verdict.residual <= 1e-10
        assert other == []
        assert set(cells) == fork_cells
    else:
        assert verdict.residual == pytest.approx(imbalance, abs=1e-10)
        assert not verdict.passed
        assert len(other) == 1
        weight, line = other[0]
        assert abs(weight) == pytest.approx(imbalance, abs=1e-12)
        line_cells = set(cells_meeting(line, edges))
        assert line_cells - fork_cells
        assert set(cells) == fork_cells | line_cells
    # the whole dislocation current is closed, fork plus L
    full = frank_node_check(fork + other, (0, 0, 0), probes, patch)
    assert full.residual <= 1e-10


# 6 -----------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_total_dislocation_is_independent_of_the_spanning_surface():
    phi = SmoothForm(3, 1, {(0,): Polynomial.coordinate(3, 1)})
    base = triangulate_flat(Box((0, 0, 0), (1, 1, 0)), 1)
    apex = (0.5, 0.5, 1.0)
    corners = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)]
    pyramid = None
    for p, q in zip(corners, corners[1:] + corners[:1]):
        c = Chain.simplex([p, q, apex])
        pyramid = c if pyramid is None else pyramid + c
    five_faces = boundary_chain(triangulate_box(Box((0, 0, 0), (1, 1, 1)), 1)) + base
    assert not any(all(v[2] == 0.0 for v in key) for key in five_faces.keys())
    rim = boundary_chain(base)
    for z in (base, pyramid, five_faces):
        assert boundary_chain(z) == rim
    values = [total_dislocation(phi, z) for z in (base, pyramid, five_faces)]
    surface = [v.surface_integral for v in values]
    assert _gap(surface, [surface[0]] * 3) <= 1e-8
    for v in values:
        assert v.surface_integral == pytest.approx(v.boundary_integral, rel=1e-8)
        # closed form: the rim integral of x^2 dx^1 is -1
        assert v.value == pytest.approx(-1.0, rel=1e-8)


# 7 -----------------------------------------------------------------------

def _random_frame(rng, dim):
    while True:
        entries = [[random_polynomial(rng, dim, 2, scale=0.3) + float(r == c) for c in range(dim)]
                   for r in range(dim)]
        try:
            return FrameField(entries, Patch.cube(dim, -0.5, 0.5))
        except Exception:
            continue


@pytest.mark.criterion(7)
def test_bracket_formulas_agree_on_random_frames():
    rng = np.random.default_rng(7)
    checked = 0
    for f in range(10):
        dim = 2 + f % 2
        ff = _random_frame(rng, dim)
        pts = rng.uniform(-0.5, 0.5, size=(20, dim))
        for x in pts:
            for a, b in itertools.combinations(range(dim), 2):
                br = burgers_bracket(ff, a, b, x)
                assert br.relative_gap <= 1e-6
                checked += 1
    assert checked >= 200


@pytest.mark.criterion(7)
@pytest.mark.parametrize("dim", [2, 3])
def test_identity_coframe_has_zero_torsion(dim):
    tau = torsion(CoframeField.identity(dim, Patch.cube(dim)))
    assert all(t.is_zero() for t in tau)


# 8 -----------------------------------------------------------------------

def _tube_lids():
    flat = triangulate_flat(Box((0, 0, 0), (1, 1, 0)), 2)
    tilted = Chain.simplex([(0, 0, 0.2), (1, 0, 0.5), (1, 1, 0.8)]) + Chain.simplex([(0, 0, 0.2), (1, 1, 0.8), (0, 1, 0.5)])
    corners = [(0, 0, 0.1), (1, 0, 0.1), (1, 1, 0.1), (0, 1, 0.1)]
    tent = None
    for p, q in zip(corners, corners[1:] + corners[:1]):
        c = Chain.simplex([p, q, (0.5, 0.5, 0.9)])
        tent = c if tent is None else tent + c
    return flat, tilted, tent


@pytest.mark.criterion(8)
def test_exact_torsion_has_equal_flux_through_tube_sections():
    rng = np.random.default_rng(8)
    patch = Patch(3, [(-0.5, 1.5)] * 3)
    lids = _tube_lids()
    for trial in range(3):
        etas = []
        for _ in range(3):
            comps = {}
            for i in (0, 1):
                terms = [((int(e1), int(e2), 0), float(rng.normal()))
                         for e1, e2 in rng.integers(0, 4, size=(4, 2))]
                comps[(i,)] = Polynomial.from_terms(3, terms)
            etas.append(SmoothForm(3, 1, comps, patch))
        from disloc.forms import VectorValuedForm

        tau = VectorValuedForm([exterior_derivative(e) for e in etas])
        for l1, l2 in itertools.combinations(lids, 2):
            verdict = tube_flux_check(tau, l1, l2, tol=1e-8)
            assert verdict.passed, verdict.details
        # oracle: Stokes around the unit square rim by 1-D quadrature
        for eta, t in zip(etas, tau):
            def line(f, a, b):
                return quad(lambda s: f(s), a, b, epsabs=1e-14, epsrel=1e-13)[0]
            e1, e2 = eta.components[(0,)], eta.components[(1,)]
            rim = (line(lambda s: e1(np.array([s, 0.0, 0.0])), 0, 1)
                   + line(lambda s: e2(np.array([1.0, s, 0.0])), 0, 1)
                   - line(lambda s: e1(np.array([s, 1.0, 0.0])), 0, 1)
                   - line(lambda s: e2(np.array([0.0, s, 0.0])), 0, 1))
            flux = integrate_over_chain(lids[0], t)
            assert flux == pytest.approx(rim, rel=1e-8, abs=1e-12)


# 9 -----------------------------------------------------------------------

def _square_loop():
    c = [(-0.5, -0.5, 0.0), (0.5, -0.5, 0.0), (0.5, 0.5, 0.0), (-0.5, 0.5, 0.0)]
    loop = None
    for p, q in zip(c, c[1:] + c[:1]):
        s = Chain.simplex([p, q])
        loop = s if loop is None else loop + s
    return loop


def _loop_probes(patch):
    out = []
    for cx, cy, cz in [(0.5, 0.0, 0.05), (-0.3, 0.5, 0.0), (0.0, -0.5, -0.1), (0.45, 0.45, 0.0)]:
        out.append(make_bump_testform((cx, cy, cz), (0.35, 0.3, 0.3), 4, (), 1.0, patch=patch,
                                      modulation=Polynomial.from_terms(3, [((0, 0, 0), 1.0), ((1, 0, 0), 0.7)])))
    return out


@pytest.mark.criterion(9)
def test_constant_weight_on_closed_loop_is_consistent():
    patch = Patch.cube(3)
    verdict = frank_constancy_check(3.0, _square_loop(), _loop_probes(patch), patch)
    assert verdict.passed
    assert max(abs(v) for v in verdict.details["probe_values"]) == 0.0


@pytest.mark.criterion(9)
def test_linear_weight_on_closed_loop_is_inconsistent():
    patch = Patch.cube(3)
    probes = _loop_probes(patch)
    u = Polynomial.coordinate(3, 0)
    verdict = frank_constancy_check(u, _square_loop(), probes, patch)
    assert not verdict.passed
    oracle = []
    for g in probes:
        # -integral over the loop of g du, du = dx^1: bottom edge forward, top edge backward
        bottom = quad(lambda x: g(np.array([x, -0.5, 0.0])), -0.5, 0.5, epsabs=1e-15, epsrel=1e-13)[0]
        top = quad(lambda x: g(np.array([x, 0.5, 0.0])), -0.5, 0.5, epsabs=1e-15, epsrel=1e-13)[0]
        oracle.append(-(bottom - top))
    got = verdict.details["probe_values"]
    assert max(abs(v) for v in oracle) > 1e-3
    assert _gap(got, oracle) <= 1e-8
    assert verdict.residual == pytest.approx(max(abs(v) for v in oracle), rel=1e-8)


# 10 ----------------------------------------------------------------------

@pytest.mark.criterion(10)
@pytest.mark.parametrize("dim", [2, 3])
def test_d_squared_vanishes_at_random_points(dim):
    rng = np.random.default_rng(10 + dim)
    pts = rng.uniform(-1, 1, size=(100, dim))
    for degree in range(dim - 1):
        form = random_form(rng, dim, degree, max_degree=4)
        dd = exterior_derivative(exterior_derivative(form))
        for values in dd.component_values(pts).values():
            assert np.max(np.abs(values)) <= 1e-10


@pytest.mark.criterion(10)
@pytest.mark.parametrize("dim", [2, 3])
def test_leibniz_rule_at_random_points(dim):
    rng = np.random.default_rng(20 + dim)
    pts = rng.uniform(-1, 1, size=(100, dim))
    for p in range(dim):
        for r in range(dim - p):
            a = random_form(rng, dim, p, max_degree=3)
            b = random_form(rng, dim, r, max_degree=3)
            if p + r + 1 > dim:
                continue
            lhs = exterior_derivative(wedge(a, b))
            rhs = wedge(exterior_derivative(a), b) + wedge(a, exterior_derivative(b)) * (-1) ** p
            for idx in multi_indices(dim, p + r + 1):
                lv = lhs.components[idx].values(pts)
                rv = rhs.components[idx].values(pts)
                assert _gap(lv, rv) <= 1e-8


@pytest.mark.criterion(10)
@pytest.mark.parametrize("dim,k", [(2, 1), (2, 2), (3, 1), (3, 2), (3, 3)])
def test_stokes_on_single_simplices(dim, k):
    rng = np.random.default_rng(30 + 10 * dim + k)
    for _ in range(5):
        while True:
            try:
                s = Chain.simplex(rng.uniform(-1, 1, size=(k + 1, dim)))
                break
            except Exception:
                continue
        omega = random_form(rng, dim, k - 1, max_degree=3)
        lhs = integrate_over_chain(boundary_chain(s), omega)
        rhs = integrate_over_chain(s, exterior_derivative(omega))
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@pytest.mark.criterion(10)
def test_bracket_hand_example():
    x1 = Polynomial.coordinate(2, 0)
    ff = FrameField([[1.0, 0.0], [0.0, x1]], Patch(2, [(1, 3), (-1, 1)]))
    br = burgers_bracket(ff, 0, 1, (2.0, 0.0))
    assert np.allclose(br.value, [0.0, 1.0], atol=1e-14)
    assert evaluate_form(torsion(ff.coframe())[1], (2.0, 0.0), [(1, 0), (0, 1)]) == pytest.approx(-0.25)
