import numpy as np
import pytest

from disloc.errors import DegreeMismatchError, FormError, GeometryError
from disloc.fields import FunctionField, Polynomial, audit_partials
from disloc.forms import (
    PiecewiseForm,
    SmoothForm,
    coordinate_form,
    evaluate_form,
    exterior_derivative,
    forms_close,
    make_bump_testform,
    multi_indices,
    n_components,
    polynomial_form,
    wedge,
)
from disloc.geometry import Box, Patch


def test_polynomial_arithmetic_and_partials():
    x, y = Polynomial.coordinate(2, 0), Polynomial.coordinate(2, 1)
    p = x * x * y + 3.0
    pts = np.array([[1.0, 2.0], [-0.5, 0.25]])
    assert np.allclose(p.values(pts), pts[:, 0] ** 2 * pts[:, 1] + 3)
    assert np.allclose(p.partial(0).values(pts), 2 * pts[:, 0] * pts[:, 1])
    assert p.poly_degree == 3
    assert Polynomial.constant(2, 4.0).constant_value() == 4.0


def test_polynomial_shift_keeps_values():
    p = Polynomial.from_terms(2, [((2, 1), 1.5), ((0, 0), -1.0)])
    q = p.shifted((0.3, -0.7))
    pts = np.random.default_rng(0).uniform(-1, 1, (10, 2))
    assert np.allclose(p.values(pts), q.values(pts), atol=1e-13)


def test_function_field_finite_difference_partials():
    f = FunctionField(2, lambda p: np.sin(p[:, 0]) * p[:, 1])
    pts = np.array([[0.3, 2.0]])
    assert f.partial(0).values(pts)[0] == pytest.approx(np.cos(0.3) * 2.0, rel=1e-8)
    assert not f.has_analytic_partials


def test_audit_partials_flags_wrong_derivative():
    good = FunctionField(1, lambda p: p[:, 0] ** 2, partials=[lambda p: 2 * p[:, 0]])
    assert audit_partials(good, np.array([[0.5], [1.0]])) < 1e-8
    bad = FunctionField(1, lambda p: p[:, 0] ** 2, partials=[lambda p: 3 * p[:, 0]])
    with pytest.raises(FormError):
        audit_partials(bad, np.array([[0.5], [1.0]]))


def test_multi_indices_and_counts():
    assert multi_indices(3, 2) == [(0, 1), (0, 2), (1, 2)]
    assert n_components(4, 2) == 6


def test_wedge_is_graded_antisymmetric():
    a = coordinate_form(3, (0,))
    b = coordinate_form(3, (1,))
    ab, ba = wedge(a, b), wedge(b, a)
    assert forms_close(ab + ba, SmoothForm(3, 2, {}), np.zeros((1, 3)))
    with pytest.raises(DegreeMismatchError):
        wedge(coordinate_form(3, (0, 1)), coordinate_form(3, (1, 2)))


def test_dislocation_density_hand_example():
    # d(x^2 dx^1) = -dx^1 ^ dx^2
    phi = SmoothForm(2, 1, {(0,): Polynomial.coordinate(2, 1)})
    dphi = exterior_derivative(phi)
    assert evaluate_form(dphi, (0.4, 0.1), [(1, 0), (0, 1)]) == pytest.approx(-1.0)


def test_evaluate_form_on_vectors_is_determinant():
    form = coordinate_form(3, (0, 2), 2.0)
    u, v = (1.0, 2.0, 3.0), (4.0, 5.0, 6.0)
    assert evaluate_form(form, (0, 0, 0), [u, v]) == pytest.approx(2.0 * (1 * 6 - 3 * 4))


def test_piecewise_form_pieces_and_lookup():
    patch = Patch.cube(2)
    lower = SmoothForm(2, 1, {(0,): Polynomial.constant(2, 1.0)})
    upper = SmoothForm(2, 1, {(0,): Polynomial.constant(2, 2.0)})
    pw = PiecewiseForm([(Box((-1, -1), (1, 0)), lower), (Box((-1, 0), (1, 1)), upper)], patch)
    assert pw.piece_at((0.0, 0.5)) is upper
    assert len(list(pw.integration_pieces())) == 2


def test_bump_testform_support_and_vanishing_at_edge():
    patch = Patch.cube(2)
    g = make_bump_testform((0.1, 0.0), (0.3, 0.2), 4, (0,), 2.0, patch=patch)
    assert g((0.1, 0.0), [(1, 0)]) == pytest.approx(2.0)
    assert g((0.1, 0.0), [(0, 1)]) == 0.0
    assert g((0.4, 0.0), [(1, 0)]) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(GeometryError):
        make_bump_testform((0.9, 0.0), (0.3, 0.3), 4, (), patch=patch)
    with pytest.raises(FormError):
        make_bump_testform((0, 0), (0.3, 0.3), 1)


def test_polynomial_form_from_terms():
    f = polynomial_form(2, 1, {(1,): [((1, 0), 2.0)]})
    assert evaluate_form(f, (3.0, 0.0), [(0, 1)]) == pytest.approx(6.0)
