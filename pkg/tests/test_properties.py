import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from disloc.currents import ChainCurrent, FormCurrent, boundary_structural, boundary_weak, probe_family
from disloc.forms import exterior_derivative, multi_indices, wedge
from disloc.geometry import Chain, Patch, boundary_chain, integrate_over_chain
from populations import random_form, random_simplex_chain

SETTINGS = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
seeds = st.integers(0, 2**31 - 1)
dims = st.sampled_from([2, 3])


def _simplex(rng, dim, k):
    while True:
        try:
            return Chain.simplex(rng.uniform(-1, 1, size=(k + 1, dim)))
        except Exception:
            continue


@SETTINGS
@given(seed=seeds, dim=dims)
def test_boundary_of_boundary_of_chain_is_empty(seed, dim):
    rng = np.random.default_rng(seed)
    c = random_simplex_chain(rng, dim, dim, pieces=3)
    assert boundary_chain(boundary_chain(c)).is_empty()


@SETTINGS
@given(seed=seeds, dim=dims)
def test_reversing_orientation_negates_integrals(seed, dim):
    rng = np.random.default_rng(seed)
    s = _simplex(rng, dim, 1)
    form = random_form(rng, dim, 1, max_degree=3)
    assert integrate_over_chain(-1.0 * s, form) == -integrate_over_chain(s, form)


@SETTINGS
@given(seed=seeds, dim=dims, a=st.floats(-3, 3), b=st.floats(-3, 3))
def test_evaluation_is_linear_in_the_current(seed, dim, a, b):
    rng = np.random.default_rng(seed)
    patch = Patch.cube(dim)
    t1 = FormCurrent(random_form(rng, dim, dim - 1, patch), patch)
    t2 = ChainCurrent(random_simplex_chain(rng, dim, 1), patch)
    for g in probe_family(patch, 1, count=2, seed=seed % 1000):
        assert np.isclose((a * t1 + b * t2)(g), a * t1(g) + b * t2(g), rtol=1e-10, atol=1e-12)


@SETTINGS
@given(seed=seeds, dim=dims, k=st.integers(1, 3))
def test_stokes_on_a_simplex(seed, dim, k):
    if k > dim:
        return
    rng = np.random.default_rng(seed)
    s = _simplex(rng, dim, k)
    omega = random_form(rng, dim, k - 1, max_degree=3)
    lhs = integrate_over_chain(boundary_chain(s), omega)
    rhs = integrate_over_chain(s, exterior_derivative(omega))
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


@SETTINGS
@given(seed=seeds, dim=dims)
def test_d_of_d_vanishes(seed, dim):
    rng = np.random.default_rng(seed)
    form = random_form(rng, dim, 0, max_degree=4)
    dd = exterior_derivative(exterior_derivative(form))
    pts = rng.uniform(-1, 1, size=(20, dim))
    for values in dd.component_values(pts).values():
        assert np.max(np.abs(values)) <= 1e-10


@SETTINGS
@given(seed=seeds, p=st.integers(0, 2), r=st.integers(0, 2))
def test_wedge_graded_commutativity(seed, p, r):
    dim = 3
    if p + r > dim:
        return
    rng = np.random.default_rng(seed)
    a, b = random_form(rng, dim, p), random_form(rng, dim, r)
    ab, ba = wedge(a, b), wedge(b, a)
    pts = rng.uniform(-1, 1, size=(10, dim))
    sign = (-1) ** (p * r)
    for idx in multi_indices(dim, p + r):
        x = ab.components[idx].values(pts) if idx in ab.components else np.zeros(len(pts))
        y = ba.components[idx].values(pts) if idx in ba.components else np.zeros(len(pts))
        assert np.allclose(x, sign * y, atol=1e-12)


@SETTINGS
@given(seed=seeds, dim=dims)
def test_chain_current_boundaries_agree(seed, dim):
    rng = np.random.default_rng(seed)
    patch = Patch.cube(dim, 0, 1)
    t = ChainCurrent(random_simplex_chain(rng, dim, 2, pieces=2), patch)
    s, w = boundary_structural(t), boundary_weak(t)
    for g in probe_family(patch, 1, count=2, seed=seed % 1000):
        assert abs(s(g) - w(g)) <= 1e-9 * max(1.0, abs(w(g)))
