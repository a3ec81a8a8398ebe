"""Conical-product (collapsed Gauss-Jacobi) quadrature on reference simplices.

Nodes are returned in barycentric coordinates and weights are normalized to
sum to one, so that the integral of ``f`` over a ``k``-simplex of volume
``V`` is ``V * sum(w * f(nodes))``.  Every rule is checked at construction
against the closed-form integrals of all monomials up to its order.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .errors import QuadratureError

__all__ = ["QuadratureRule", "simplex_rule", "monomial_simplex_average"]

MAX_ORDER = 40


def monomial_simplex_average(exponents) -> float:
    """Average of ``prod t_i**a_i`` over the reference simplex.

    The reference ``k``-simplex is ``{t >= 0, sum(t) <= 1}``; with
    barycentric ``t_0 = 1 - sum(t)`` omitted this equals
    ``k! * prod(a_i!) / (|a| + k)!``.
    """
    exponents = tuple(int(a) for a in exponents)
    k = len(exponents)
    num = math.factorial(k) * math.prod(math.factorial(a) for a in exponents)
    return num / math.factorial(sum(exponents) + k)


def _collapsed_rule(k: int, order: int):
    npts = order // 2 + 1
    coords_1d = []
    for i in range(k):
        # the Duffy jacobian contributes (1 - u_i)**(k - 1 - i)
        alpha = k - 1 - i
        x, w = roots_jacobi(npts, alpha, 0.0)
        u = (x + 1.0) / 2.0
        coords_1d.append((u, w))
    nodes = []
    weights = []
    for combo in itertools.product(range(npts), repeat=k):
        us = [coords_1d[i][0][c] for i, c in enumerate(combo)]
        w = math.prod(coords_1d[i][1][c] for i, c in enumerate(combo))
        t = np.empty(k)
        rem = 1.0
        for i, u in enumerate(us):
            t[i] = rem * u
            rem *= 1.0 - u
        nodes.append(t)
        weights.append(w)
    t = np.array(nodes)
    w = np.array(weights)
    w = w / w.sum()
    bary = np.column_stack([1.0 - t.sum(axis=1), t])
    return bary, w


def _certify(k: int, order: int, bary: np.ndarray, w: np.ndarray) -> None:
    t = bary[:, 1:]
    powers = [t[:, i, None] ** np.arange(order + 1) for i in range(k)]
    if k == 1:
        approx = w @ powers[0]
    elif k == 2:
        approx = (powers[0] * w[:, None]).T @ powers[1]
    else:
        wp0 = powers[0] * w[:, None]
        approx = np.stack(
            [(wp0 * powers[2][:, c, None]).T @ powers[1] for c in range(order + 1)],
            axis=-1,
        )
    grids = np.meshgrid(*([np.arange(order + 1)] * k), indexing="ij")
    total = sum(grids)
    log_exact = gammaln(k + 1) + sum(gammaln(g + 1) for g in grids) - gammaln(total + k + 1)
    exact = np.exp(log_exact)
    mask = total <= order
    err = np.abs(approx - exact)[mask]
    bad = err > 1e-12 * exact[mask] + 1e-15
    if np.any(bad):
        idx = np.argwhere(mask)[np.argmax(bad)]
        raise QuadratureError(
            f"rule k={k} order={order} fails on monomial exponents {tuple(idx)}"
        )


@lru_cache(maxsize=None)
def simplex_rule(k: int, order: int):
    """Return ``(barycentric_nodes, weights)`` exact to ``order`` on a k-simplex."""
    if k < 0:
        raise QuadratureError("simplex dimension must be non-negative")
    if order < 1:
        raise QuadratureError("quadrature order must be >= 1")
    if order > MAX_ORDER:
        raise QuadratureError(f"quadrature order {order} exceeds {MAX_ORDER}")
    if k == 0:
        bary, w = np.ones((1, 1)), np.ones(1)
    else:
        bary, w = _collapsed_rule(k, order)
        _certify(k, order, bary, w)
    bary.setflags(write=False)
    w.setflags(write=False)
    return bary, w


class QuadratureRule:
    """Family of simplex rules sharing a polynomial exactness order.

    With ``adaptive=True`` (the default) integrands whose polynomial degree
    is known are integrated with ``max(order, degree)`` so that polynomial
    data is integrated exactly; ``order`` is then a floor.
    """

    def __init__(self, order: int = 5, adaptive: bool = True):
        if int(order) < 1:
            raise QuadratureError("quadrature order must be >= 1")
        self.order = int(order)
        self.adaptive = bool(adaptive)
        # build eagerly so that a bad order fails here
        for k in range(4):
            simplex_rule(k, self.order)

    def order_for(self, degree) -> int:
        if self.adaptive and degree is not None:
            return min(max(self.order, int(degree)), MAX_ORDER)
        return self.order

    def rule(self, k: int, degree=None):
        return simplex_rule(k, self.order_for(degree))

    def __repr__(self):
        return f"QuadratureRule(order={self.order}, adaptive={self.adaptive})"
