"""Ready-made layering currents for standard singular configurations.

All builders work on the cube patch ``(-1, 1)^n`` unless another patch is
passed; chains are given in closed form so that the expected dislocation
lines can be written down independently.
"""

from __future__ import annotations

from .currents import ChainCurrent, Contraction, FormCurrent, combine
from .forms import PiecewiseForm, coordinate_form
from .geometry import Box, Chain, Patch, triangulate_flat

__all__ = [
    "step_layering",
    "step_line",
    "half_plane_sheet",
    "half_plane_line",
    "quarter_plane_sheets",
    "quarter_plane_layering",
    "fork_lines",
    "fork_current",
]


def _cube(dim: int, patch: Patch | None) -> Patch:
    return patch or Patch.cube(dim)


def step_layering(a: float, patch: Patch | None = None) -> FormCurrent:
    """2-D layering ``dx^1`` below the x^1-axis and ``a dx^1`` above it."""
    patch = _cube(2, patch)
    (x0, x1), (y0, y1) = patch.box.bounds()
    lower = Box((x0, y0), (x1, 0.0))
    upper = Box((x0, 0.0), (x1, y1))
    phi = PiecewiseForm([(lower, coordinate_form(2, (0,))), (upper, coordinate_form(2, (0,), a))], patch)
    return FormCurrent(phi, patch)


def step_line(patch: Patch | None = None) -> Contraction:
    """``T_L(omega) = integral of omega dx^1`` over the x^1-axis run in the ``-x^1`` direction."""
    patch = _cube(2, patch)
    (x0, x1), _ = patch.box.bounds()
    segment = ChainCurrent(Chain.simplex([(x1, 0.0), (x0, 0.0)]), patch)
    return Contraction(segment, coordinate_form(2, (0,), patch=patch))


def half_plane_sheet(patch: Patch | None = None, resolution: int = 1) -> Chain:
    """``{x^1 = 0, x^2 <= 0}`` oriented by ``dx^2 ^ dx^3``."""
    patch = _cube(3, patch)
    lo, hi = patch.box.lo, patch.box.hi
    region = Box((0.0, lo[1], lo[2]), (0.0, 0.0, hi[2]))
    return triangulate_flat(region, resolution, normal=(1, 0, 0))


def half_plane_line(patch: Patch | None = None) -> Chain:
    """The edge ``{x^1 = x^2 = 0}`` oriented by ``dx^3``."""
    patch = _cube(3, patch)
    lo, hi = patch.box.lo, patch.box.hi
    return Chain.simplex([(0.0, 0.0, lo[2]), (0.0, 0.0, hi[2])])


def quarter_plane_sheets(patch: Patch | None = None, resolution: int = 1) -> tuple:
    """Three quarter planes meeting along the negative x^2-axis.

    ``s1 = {x^1 = 0, x^2 <= 0, x^3 >= 0}`` with normal ``+e1``;
    ``s2 = {x^3 = 0, x^1 >= 0, x^2 <= 0}`` with normal ``+e3``;
    ``s3 = {x^3 = 0, x^1 <= 0, x^2 <= 0}`` with normal ``-e3``.
    """
    patch = _cube(3, patch)
    lo, hi = patch.box.lo, patch.box.hi
    s1 = triangulate_flat(Box((0.0, lo[1], 0.0), (0.0, 0.0, hi[2])), resolution, normal=(1, 0, 0))
    s2 = triangulate_flat(Box((0.0, lo[1], 0.0), (hi[0], 0.0, 0.0)), resolution, normal=(0, 0, 1))
    s3 = triangulate_flat(Box((lo[0], lo[1], 0.0), (0.0, 0.0, 0.0)), resolution, normal=(0, 0, -1))
    return s1, s2, s3


def quarter_plane_layering(a1: float, a2: float, a3: float, patch: Patch | None = None,
                           resolution: int = 1):
    """``a1 T_{s1} + a2 T_{s2} + a3 T_{s3}``."""
    patch = _cube(3, patch)
    s = quarter_plane_sheets(patch, resolution)
    return combine([(a, ChainCurrent(c, patch)) for a, c in zip((a1, a2, a3), s)])


def fork_lines(patch: Patch | None = None) -> dict:
    """Expected boundary lines of the quarter-plane layering.

    ``L1`` runs from the origin up the x^3-axis, ``L2`` and ``L3`` run along
    the x^1-axis into the origin from the positive and negative side, and
    ``L`` runs along the x^2-axis from its negative end into the origin.
    """
    patch = _cube(3, patch)
    lo, hi = patch.box.lo, patch.box.hi
    o = (0.0, 0.0, 0.0)
    return {
        "L1": Chain.simplex([o, (0.0, 0.0, hi[2])]),
        "L2": Chain.simplex([(hi[0], 0.0, 0.0), o]),
        "L3": Chain.simplex([(lo[0], 0.0, 0.0), o]),
        "L": Chain.simplex([(0.0, lo[1], 0.0), o]),
    }


def fork_current(a1: float, a2: float, a3: float, patch: Patch | None = None):
    """``a1 T_{L1} + a2 T_{L2} + a3 T_{L3} + (a1 - a2 - a3) T_L``."""
    patch = _cube(3, patch)
    lines = fork_lines(patch)
    weights = {"L1": a1, "L2": a2, "L3": a3, "L": a1 - a2 - a3}
    return combine([(weights[k], ChainCurrent(c, patch)) for k, c in lines.items()])
