"""Built-in scenarios covering the standard layering configurations.

Each entry is a YAML scenario document parsed with the same schema as
user files; ``disloc examples`` runs them all.
"""

from __future__ import annotations

from .errors import ScenarioError
from .scenario import Scenario, parse_scenario

__all__ = ["EXAMPLES", "example_ids", "load_example", "select_examples"]

_CUBE_FORK_CHAINS = """
chains:
  l1: {kind: named, name: fork_L1}
  l2: {kind: named, name: fork_L2}
  l3: {kind: named, name: fork_L3}
  l:  {kind: named, name: fork_L}
"""

EXAMPLES = {
    "closed-layering": """
id: closed-layering
topic: layering form
description: A closed layering dx^1 has no dislocation.
patch: {dim: 3}
forms:
  phi: {kind: coordinate, index: "1"}
currents:
  T: {kind: form, form: phi}
  D: {kind: dislocation, of: T}
  zero: {kind: combination, degree: 1}
checks:
  - {kind: boundary_equals, current: T, expected: zero}
  - {kind: support, current: D, empty: true, resolution: 4}
""",
    "shear-layering-density": """
id: shear-layering-density
topic: dislocation density and total dislocation
description: phi = x^2 dx^1 has density -dx^1^dx^2; three surfaces with one rim give I = -1.
patch: {dim: 3, bounds: [[-0.5, 1.5], [-0.5, 1.5], [-0.5, 1.5]]}
forms:
  phi: {kind: polynomial, degree: 1, components: {"1": [[[0, 1, 0], 1.0]]}}
  delta: {kind: constant, degree: 2, components: {"12": -1.0}}
chains:
  base: {kind: flat, box: [[0, 1], [0, 1], [0, 0]], resolution: 2}
  pyramid:
    kind: simplices
    simplices:
      - {vertices: [[0, 0, 0], [1, 0, 0], [0.5, 0.5, 1]]}
      - {vertices: [[1, 0, 0], [1, 1, 0], [0.5, 0.5, 1]]}
      - {vertices: [[1, 1, 0], [0, 1, 0], [0.5, 0.5, 1]]}
      - {vertices: [[0, 1, 0], [0, 0, 0], [0.5, 0.5, 1]]}
  cube: {kind: box, box: [[0, 1], [0, 1], [0, 1]], resolution: 1}
  cube_skin: {kind: boundary, of: cube}
  five_faces:
    kind: sum
    terms: [{chain: cube_skin}, {chain: base}]
checks:
  - {kind: dislocation_density, form: phi, expected: delta}
  - {kind: total_dislocation, form: phi, chains: [base, pyramid, five_faces], expected: -1.0}
""",
    "step-interface": """
id: step-interface
topic: piecewise layering
description: dx^1 below the x^1-axis and 2 dx^1 above; the jump is a dislocation line.
patch: {dim: 2}
chains:
  axis: {kind: simplices, simplices: [{vertices: [[-1, 0], [1, 0]]}]}
currents:
  T: {kind: step_interface, a: 2.0}
  TL: {kind: step_line}
  expected: {kind: combination, terms: [{current: TL, coefficient: 1.0}]}
  D: {kind: dislocation, of: T}
checks:
  - {kind: boundary_equals, current: T, expected: expected, probes: {count: 12, seed: 3}}
  - {kind: weak_structural, current: T, probes: {count: 12, seed: 4}}
  - {kind: support, current: D, meets: axis, resolution: 8}
""",
    "step-interface-coherent": """
id: step-interface-coherent
topic: piecewise layering
description: With equal spacing on both sides the step carries no dislocation.
patch: {dim: 2}
currents:
  T: {kind: step_interface, a: 1.0}
  D: {kind: dislocation, of: T}
checks:
  - {kind: support, current: D, empty: true, resolution: 8}
""",
    "half-plane-in-cube": """
id: half-plane-in-cube
topic: chain layering
description: A half plane ending inside the cube; its rim is the dislocation line on the x^3-axis.
patch: {dim: 3}
chains:
  line: {kind: named, name: half_plane_line}
currents:
  T: {kind: half_plane_cube}
  TL: {kind: chain, chain: line}
  D: {kind: dislocation, of: T}
checks:
  - {kind: boundary_equals, current: T, expected: TL}
  - {kind: weak_structural, current: T}
  - {kind: support, current: D, meets: line, resolution: 8}
""",
    "three-quarter-planes-balanced": """
id: three-quarter-planes-balanced
topic: dislocation node
description: Weights (1, 1, 0) satisfy a1 = a2 + a3, so the boundary is the fork only.
patch: {dim: 3}
""" + _CUBE_FORK_CHAINS + """
  fork: {kind: sum, terms: [{chain: l1}, {chain: l2}]}
currents:
  T: {kind: three_quarter_planes, a1: 1.0, a2: 1.0, a3: 0.0}
  expected: {kind: fork, a1: 1.0, a2: 1.0, a3: 0.0}
  D: {kind: dislocation, of: T}
checks:
  - {kind: boundary_equals, current: T, expected: expected}
  - {kind: closed, current: T}
  - {kind: support, current: D, meets: fork, resolution: 8}
  - kind: frank_node
    from_current: D
    node: [0, 0, 0]
    probes: {bumps: [{center: [0, 0, 0], radii: [0.3, 0.3, 0.3]}, {center: [0.05, -0.02, 0.03], radii: [0.4, 0.2, 0.3]}]}
""",
    "three-quarter-planes-unbalanced": """
id: three-quarter-planes-unbalanced
topic: dislocation node
description: Weights (1, 1, 1) leave a residual line L with weight a1 - a2 - a3 = -1.
patch: {dim: 3}
""" + _CUBE_FORK_CHAINS + """
  all_lines: {kind: sum, terms: [{chain: l1}, {chain: l2}, {chain: l3}, {chain: l}]}
currents:
  T: {kind: three_quarter_planes, a1: 1.0, a2: 1.0, a3: 1.0}
  expected: {kind: fork, a1: 1.0, a2: 1.0, a3: 1.0}
  D: {kind: dislocation, of: T}
checks:
  - {kind: boundary_equals, current: T, expected: expected}
  - {kind: support, current: D, meets: all_lines, resolution: 8}
  - kind: frank_node
    name: fork lines alone do not balance
    expect: violated
    lines: [{chain: l1, weight: 1.0}, {chain: l2, weight: 1.0}, {chain: l3, weight: 1.0}]
    node: [0, 0, 0]
    probes: {bumps: [{center: [0, 0, 0], radii: [0.3, 0.3, 0.3]}]}
  - kind: frank_node
    name: all four lines balance
    from_current: D
    node: [0, 0, 0]
    probes: {bumps: [{center: [0, 0, 0], radii: [0.3, 0.3, 0.3]}]}
""",
    "weighted-line-constancy": """
id: weighted-line-constancy
topic: constancy along a line
description: A weight on a closed loop must be constant; u = x^1 needs extra dislocations.
patch: {dim: 3}
chains:
  loop:
    kind: simplices
    simplices:
      - {vertices: [[-0.5, -0.5, 0], [0.5, -0.5, 0]]}
      - {vertices: [[0.5, -0.5, 0], [0.5, 0.5, 0]]}
      - {vertices: [[0.5, 0.5, 0], [-0.5, 0.5, 0]]}
      - {vertices: [[-0.5, 0.5, 0], [-0.5, -0.5, 0]]}
checks:
  - {kind: frank_constancy, name: constant weight, loop: loop, weight: 3.0}
  - kind: frank_constancy
    name: linear weight
    expect: violated
    loop: loop
    weight: [[[1, 0, 0], 1.0]]
    probes: {count: 6, seed: 1, region: [[-0.6, 0.6], [-0.6, 0.6], [-0.1, 0.1]]}
""",
    "weighted-surface": """
id: weighted-surface
topic: weighted layering
description: A constant weight on a square sheet; the boundary lives on the rim only.
patch: {dim: 3}
chains:
  sheet: {kind: flat, box: [[-0.5, 0.5], [-0.5, 0.5], [0, 0]], resolution: 2}
  rim: {kind: boundary, of: sheet}
currents:
  T: {kind: weighted_chain, chain: sheet, weight: 2.0}
  rim2: {kind: weighted_chain, chain: rim, weight: 2.0}
  Tx: {kind: weighted_chain, chain: sheet, weight: [[[1, 0, 0], 1.0], [[0, 0, 0], 2.0]]}
  D: {kind: dislocation, of: T}
checks:
  - {kind: boundary_equals, current: T, expected: rim2}
  - {kind: support, current: D, meets: rim, resolution: 8}
  - {kind: weak_structural, current: Tx}
  - {kind: closed, current: Tx}
""",
    "coframe-torsion": """
id: coframe-torsion
topic: torsion and Burgers bracket
description: e^2 = x^1 dx^2 has torsion dx^1^dx^2; the dual frame has bracket d/dx^2 at (2, 0).
patch: {dim: 2, bounds: [[1, 3], [-1, 1]]}
forms:
  zero2: {kind: constant, degree: 2, components: {}}
  area: {kind: coordinate, index: "12"}
frames:
  cf: {kind: coframe, entries: [[1.0, 0.0], [0.0, [[[1, 0], 1.0]]]]}
  ff: {kind: frame, entries: [[1.0, 0.0], [0.0, [[[1, 0], 1.0]]]]}
checks:
  - {kind: torsion, coframe: cf, expected: [zero2, area]}
  - {kind: burgers_bracket, frame: ff, alpha: 1, beta: 2, points: [[2.0, 0.0]], expected: [0.0, 1.0]}
  - {kind: burgers_bracket, frame: ff, alpha: 1, beta: 2, points: 20}
""",
    "holonomic-coframe": """
id: holonomic-coframe
topic: torsion and Burgers bracket
description: The identity coframe has no torsion and no flux through closed surfaces.
patch: {dim: 3}
chains:
  cube: {kind: box, box: [[-0.5, 0.5], [-0.5, 0.5], [-0.5, 0.5]], resolution: 1}
  skin: {kind: boundary, of: cube}
frames:
  id: {kind: coframe, entries: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}
  ff: {kind: dual, of: id}
currents:
  T: {kind: form, form: e1}
  D: {kind: dislocation, of: T}
forms:
  e1: {kind: coordinate, index: "1"}
checks:
  - {kind: torsion, coframe: id}
  - {kind: burgers_bracket, frame: ff, alpha: 1, beta: 3, points: 5, expected: [0, 0, 0]}
  - {kind: closed_surface_flux, coframe: id, surface: skin}
  - {kind: support, current: D, empty: true, resolution: 4}
""",
    "tube-flux": """
id: tube-flux
topic: torsion flux through a tube
description: Exact torsion d eta has the same flux through a flat, a tilted and a tent-shaped lid.
patch: {dim: 3, bounds: [[-0.5, 1.5], [-0.5, 1.5], [-0.5, 1.5]]}
forms:
  eta1:
    kind: polynomial
    degree: 1
    components:
      "1": [[[0, 1, 0], 1.0], [[2, 1, 0], 0.5]]
      "2": [[[1, 0, 0], 2.0], [[1, 2, 0], -1.0]]
  eta2:
    kind: polynomial
    degree: 1
    components:
      "1": [[[1, 1, 0], 1.0]]
      "2": [[[3, 0, 0], 0.25]]
chains:
  flat: {kind: flat, box: [[0, 1], [0, 1], [0, 0]], resolution: 2}
  tilted:
    kind: simplices
    simplices:
      - {vertices: [[0, 0, 0.2], [1, 0, 0.5], [1, 1, 0.8]]}
      - {vertices: [[0, 0, 0.2], [1, 1, 0.8], [0, 1, 0.5]]}
  tent:
    kind: simplices
    simplices:
      - {vertices: [[0, 0, 0.1], [1, 0, 0.1], [0.5, 0.5, 0.9]]}
      - {vertices: [[1, 0, 0.1], [1, 1, 0.1], [0.5, 0.5, 0.9]]}
      - {vertices: [[1, 1, 0.1], [0, 1, 0.1], [0.5, 0.5, 0.9]]}
      - {vertices: [[0, 1, 0.1], [0, 0, 0.1], [0.5, 0.5, 0.9]]}
checks:
  - {kind: tube_flux, potentials: [eta1, eta2, eta1], lids: [flat, tilted, tent]}
""",
    "dirac-mass": """
id: dirac-mass
topic: point current
description: A Dirac 0-current is seen only by probes covering its point.
patch: {dim: 2}
forms:
  probe: {kind: bump, center: [0.3, 0.1], radii: [0.4, 0.4]}
currents:
  delta: {kind: dirac, point: [0.3, 0.1]}
checks:
  - {kind: evaluate, current: delta, probe: probe, expected: 1.0}
  - {kind: support, current: delta, cells: [[5, 4]], resolution: 8}
""",
    "smooth-layering": """
id: smooth-layering
topic: layering form
description: A non-polynomial layering checked along the finite-difference path.
patch: {dim: 2}
forms:
  phi:
    kind: polynomial
    degree: 1
    components:
      "1": {function: sin, axis: 2, scale: 2.0, analytic: false}
      "2": [[[1, 1], 0.5]]
currents:
  T: {kind: form, form: phi, resolution: 6}
checks:
  - {kind: weak_structural, current: T, tolerance: 1.0e-5, probes: {count: 6, seed: 2}}
""",
    "contraction-and-chain-region": """
id: contraction-and-chain-region
topic: current algebra
description: Form currents on simplicial regions, contractions and mixed combinations.
patch: {dim: 2}
forms:
  phi: {kind: polynomial, degree: 1, components: {"1": [[[0, 1], 1.0]], "2": [[[2, 0], 1.0]]}}
  dx2: {kind: coordinate, index: "2"}
  probe: {kind: bump, center: [0.0, 0.0], radii: [0.5, 0.5], index: "1"}
chains:
  tri: {kind: simplices, simplices: [{vertices: [[-0.8, -0.8], [0.8, -0.8], [0.0, 0.8]]}]}
  seg: {kind: simplices, simplices: [{vertices: [[-0.5, 0.0], [0.5, 0.0]]}]}
currents:
  Ttri: {kind: form, form: phi, chain: tri}
  Tseg: {kind: chain, chain: seg}
  mixed: {kind: combination, terms: [{current: Ttri}, {current: Tseg, coefficient: -2.0}]}
  C: {kind: contraction, current: Tseg, form: dx2}
checks:
  - {kind: weak_structural, current: mixed}
  - {kind: evaluate, current: Tseg, probe: probe, expected: 0.4063492063492063}
  - {kind: stokes, chain: tri, form: phi}
""",
}


def example_ids() -> list:
    return list(EXAMPLES)


def load_example(example_id: str) -> Scenario:
    if example_id not in EXAMPLES:
        raise ScenarioError(f"unknown example {example_id!r}; available: {', '.join(EXAMPLES)}")
    return parse_scenario(EXAMPLES[example_id], f"example:{example_id}")


def select_examples(filter_: str | None = None) -> list:
    """Examples whose id contains ``filter_`` (all when omitted)."""
    if filter_ is None:
        return [load_example(k) for k in EXAMPLES]
    chosen = [k for k in EXAMPLES if filter_ == k] or [k for k in EXAMPLES if filter_ in k]
    if not chosen:
        raise ScenarioError(f"unknown example {filter_!r}; available: {', '.join(EXAMPLES)}")
    return [load_example(k) for k in chosen]
