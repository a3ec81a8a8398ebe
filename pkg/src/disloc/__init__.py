"""Singular dislocations as de Rham currents.

Layering forms and chains induce currents on a coordinate patch; their
boundaries are dislocation currents, whose support and balance laws are
checked numerically with bump-function probes.
"""

from .currents import (
    ChainCurrent,
    Combination,
    Contraction,
    Current,
    DiracCurrent,
    FormCurrent,
    WeakBoundary,
    WeightedChainCurrent,
    boundary_structural,
    boundary_weak,
    combine,
    contract,
    evaluate,
    probe_family,
    zero_current,
)
from .dislocation import (
    CoframeField,
    DislocationReport,
    FrameField,
    burgers_bracket,
    detect_support,
    dislocation_current,
    dislocation_density,
    frank_constancy_check,
    frank_node_check,
    torsion,
    total_dislocation,
    tube_flux_check,
)
from .errors import DislocError
from .fields import FunctionField, Polynomial
from .forms import PiecewiseForm, SmoothForm, TestForm, exterior_derivative, make_bump_testform, wedge
from .geometry import Box, Chain, OrientedSimplex, Patch, boundary_chain, integrate_over_chain
from .quadrature import QuadratureRule

__version__ = "0.1.0"
