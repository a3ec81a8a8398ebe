import numpy as np
import pytest

from disloc.currents import (
    ChainCurrent,
    Combination,
    Contraction,
    DiracCurrent,
    FormCurrent,
    WeakBoundary,
    WeightedChainCurrent,
    boundary_structural,
    boundary_weak,
    combine,
    contract,
    probe_family,
    zero_current,
)
from disloc.dislocation import (
    CoframeField,
    FrameField,
    burgers_bracket,
    cells_meeting,
    closedness_check,
    detect_support,
    dislocation_current,
    dislocation_density,
    frank_constancy_check,
    frank_node_check,
    grid_edges,
    ray_decomposition,
    torsion,
    total_dislocation,
)
from disloc.errors import BracketMismatchError, DegreeMismatchError, DislocError, FormError, NoStructuralRule
from disloc.fields import FunctionField, Polynomial
from disloc.forms import SmoothForm, coordinate_form, evaluate_form, make_bump_testform
from disloc.geometry import Box, Chain, Patch, triangulate_flat
from disloc.layerings import fork_current, fork_lines, step_layering, step_line


def test_form_current_degree_and_value():
    patch = Patch.cube(2, 0, 1)
    t = FormCurrent(coordinate_form(2, (0,)), patch)
    assert t.degree == 1
    g = make_bump_testform((0.5, 0.5), (0.3, 0.3), 4, (1,), 1.0, patch=patch)
    # dx^1 ^ g dx^2 integrates the bump; each axis gives 256/315 * radius
    assert t(g) == pytest.approx((256 / 315 * 0.3) ** 2, rel=1e-12)
    with pytest.raises(DegreeMismatchError):
        t(make_bump_testform((0.5, 0.5), (0.3, 0.3), 4, (), patch=patch))


def test_form_current_on_nonpolynomial_box_needs_resolution():
    patch = Patch.cube(2, 0, 1)
    f = SmoothForm(2, 1, {(0,): FunctionField(2, lambda p: np.exp(p[:, 0]))})
    g = make_bump_testform((0.5, 0.5), (0.3, 0.3), 4, (1,), patch=patch)
    with pytest.raises(DislocError):
        FormCurrent(f, patch, Box((0.1, 0.1), (0.9, 0.9)))(g)
    assert np.isfinite(FormCurrent(f, patch, Box((0.1, 0.1), (0.9, 0.9)), resolution=2)(g))


def test_current_algebra_is_linear():
    patch = Patch.cube(2)
    a = ChainCurrent(Chain.simplex([(-0.5, 0.0), (0.5, 0.1)]), patch)
    b = FormCurrent(coordinate_form(2, (1,)), patch)
    for g in probe_family(patch, 1, count=3, seed=1):
        assert (2 * a - b)(g) == pytest.approx(2 * a(g) - b(g), abs=1e-14)
        assert (-a)(g) == pytest.approx(-a(g))
    assert zero_current(1, 2, patch).is_zero()


def test_combine_flattens_and_merges_chains():
    patch = Patch.cube(2)
    s = Chain.simplex([(-0.5, 0.0), (0.5, 0.0)])
    c = combine([(1.0, ChainCurrent(s, patch)), (1.0, combine([(2.0, ChainCurrent(s, patch))]))])
    d = boundary_structural(c)
    assert d.describe()["variant"] in ("chain", "combination")


def test_dirac_current_evaluates_form_at_point():
    patch = Patch.cube(2)
    t = DiracCurrent((0.1, 0.2), [(1.0, 0.0)], patch)
    g = make_bump_testform((0.0, 0.0), (0.5, 0.5), 4, (0,), 1.0, patch=patch)
    assert t(g) == pytest.approx(evaluate_form(g, (0.1, 0.2), [(1.0, 0.0)]))
    with pytest.raises(NoStructuralRule):
        boundary_structural(t)


def test_dirac_support_is_the_cell_holding_the_point():
    patch = Patch.cube(2)
    t = DiracCurrent((0.3, -0.6), [], patch)
    assert detect_support(t, 4) == [(2, 0)]


def test_contraction_and_weak_boundary_have_no_structural_rule():
    patch = Patch.cube(2)
    c = contract(ChainCurrent(triangulate_flat(Box((-0.5, -0.5), (0.5, 0.5)), 1), patch), coordinate_form(2, (0,)))
    assert isinstance(c, Contraction) and c.degree == 1
    with pytest.raises(NoStructuralRule):
        boundary_structural(c)
    w = boundary_weak(c)
    assert isinstance(w, WeakBoundary)
    # the dislocation current falls back to the weak boundary
    assert isinstance(dislocation_current(c), WeakBoundary)


def test_weighted_chain_with_constant_weight_scales_the_boundary():
    patch = Patch.cube(2)
    tri = Chain.simplex([(-0.5, -0.5), (0.5, -0.5), (0.0, 0.5)])
    t = WeightedChainCurrent(tri, 3.0, patch)
    s = boundary_structural(t)
    for g in probe_family(patch, 1, count=4, seed=3):
        assert s(g) == pytest.approx(3 * boundary_weak(ChainCurrent(tri, patch))(g), abs=1e-13)


def test_step_layering_structural_boundary_is_the_line():
    patch = Patch.cube(2)
    d = boundary_structural(step_layering(2.5, patch))
    line = step_line(patch)
    for g in probe_family(patch, 0, count=5, seed=4):
        assert d(g) == pytest.approx(1.5 * line(g), rel=1e-10, abs=1e-14)


def test_closedness_check_on_layering_boundary():
    patch = Patch.cube(2)
    d = dislocation_current(step_layering(2.0, patch))
    v = closedness_check(d, probe_family(patch, 0, count=3, seed=5)) if d.degree > 0 else None
    assert v is None or v.passed


def test_dislocation_density_requires_one_form():
    with pytest.raises(DegreeMismatchError):
        dislocation_density(coordinate_form(3, (0, 1)))


def test_total_dislocation_of_shear_layering():
    phi = SmoothForm(2, 1, {(0,): Polynomial.coordinate(2, 1)})
    z = triangulate_flat(Box((0, 0), (1, 1)), 2)
    td = total_dislocation(phi, z)
    assert td.value == pytest.approx(-1.0)
    assert td.discrepancy < 1e-12


def test_torsion_hand_example():
    patch = Patch(2, [(1, 3), (-1, 1)])
    x1 = Polynomial.coordinate(2, 0)
    cf = CoframeField([[1.0, 0.0], [0.0, x1]], patch)
    tau = torsion(cf)
    assert tau[0].is_zero()
    assert evaluate_form(tau[1], (2.0, 0.3), [(1, 0), (0, 1)]) == pytest.approx(1.0)


def test_burgers_bracket_hand_example_and_edge_screw_split():
    patch = Patch(2, [(1, 3), (-1, 1)])
    x1 = Polynomial.coordinate(2, 0)
    ff = FrameField([[1.0, 0.0], [0.0, x1]], patch)
    br = burgers_bracket(ff, 0, 1, (2.0, 0.0))
    assert np.allclose(br.component_formula, [0.0, 1.0])
    assert np.allclose(br.torsion_formula, [0.0, 1.0])
    assert br.edge is None
    patch3 = Patch.cube(3)
    z = Polynomial.coordinate(3, 0) * 0.2 + 1.0
    ff3 = FrameField([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, z]], patch3)
    b3 = burgers_bracket(ff3, 0, 2, (0.1, 0.0, 0.0))
    assert np.allclose(b3.edge + b3.screw, b3.value)
    with pytest.raises(DislocError):
        burgers_bracket(ff, 0, 0, (2.0, 0.0))


def test_frame_with_wrong_analytic_partials_is_rejected():
    patch = Patch.cube(2)
    bad = FunctionField(2, lambda p: 1 + 0.1 * p[:, 0], partials=[lambda p: 0 * p[:, 0] + 1.0, lambda p: 0 * p[:, 0]])
    with pytest.raises(FormError):
        FrameField([[bad, 0.0], [0.0, 1.0]], patch)


def test_node_check_with_three_outgoing_lines():
    patch = Patch.cube(3)
    o = (0.0, 0.0, 0.0)
    lines = [(1.0, Chain.simplex([o, (0.0, 0.0, 1.0)])),
             (1.0, Chain.simplex([o, (1.0, 0.0, 0.0)])),
             (1.0, Chain.simplex([o, (-1.0, 0.0, 0.0)]))]
    g = make_bump_testform(o, (0.3, 0.3, 0.3), 4, (), patch=patch)
    v = frank_node_check(lines, o, [g], patch)
    assert v.residual == pytest.approx(3.0, abs=1e-10)
    assert v.details["signed_sum"] == pytest.approx(-3.0)
    assert not v.passed


def test_fork_current_balances_when_weights_do():
    patch = Patch.cube(3)
    lines = fork_lines(patch)
    assert set(lines) == {"L1", "L2", "L3", "L"}
    d = fork_current(2.0, 1.0, 1.0, patch)
    for g in probe_family(patch, 0, count=3, seed=6):
        assert abs(boundary_weak(d)(g)) < 1e-10


def test_ray_decomposition_splits_a_polyline():
    o = np.zeros(3)
    chain = Chain.simplex([(0, 0, 0), (0, 0, 0.5)]) + Chain.simplex([(0, 0, 0.5), (0, 0, 1)]) \
        + 2.0 * Chain.simplex([(0, 0, 0), (1, 0, 0)])
    rays = ray_decomposition(chain, o)
    assert sorted(abs(w) for w, _ in rays) == [1.0, 2.0]


def test_constancy_check_rejects_open_loop():
    patch = Patch.cube(3)
    g = make_bump_testform((0, 0, 0), (0.3, 0.3, 0.3), 4, (), patch=patch)
    with pytest.raises(DislocError):
        frank_constancy_check(1.0, Chain.simplex([(-0.5, 0, 0), (0.5, 0, 0)]), [g], patch)


def test_cells_meeting_ignores_point_contact():
    patch = Patch.cube(2)
    edges = grid_edges(patch, 2)
    # a segment along x = 0 touches the left cells only along their shared edge
    seg = Chain.simplex([(0.0, -0.5), (0.0, 0.5)])
    assert cells_meeting(seg, edges) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    corner = Chain.simplex([(0.5, 0.5), (0.9, 0.9)])
    assert cells_meeting(corner, edges) == [(1, 1)]


def test_combination_rejects_mixed_degrees():
    patch = Patch.cube(2)
    with pytest.raises(DegreeMismatchError):
        Combination([(1.0, ChainCurrent(Chain.simplex([(0, 0), (0.5, 0)]), patch)),
                     (1.0, DiracCurrent((0, 0), [], patch))], 1, 2, patch)
