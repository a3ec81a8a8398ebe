"""Declarative scenario documents: schema, loading and static validation.

A scenario is a YAML mapping with sections ``patch``, ``forms``,
``chains``, ``frames``, ``currents`` and ``checks``.  Every named object
carries a ``kind`` tag.  Multi-indices are written as strings of 1-based
axis digits (``"1"`` for dx^1, ``"23"`` for dx^2 ^ dx^3, ``""`` for a
0-form); scalar fields are numbers, lists of ``[exponents, coefficient]``
monomials, or built-in functions of one coordinate.
"""

from __future__ import annotations

from typing import Annotated, Any, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ScenarioError

__all__ = [
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "scenario_json_schema",
    "FORM_KINDS",
    "CHAIN_KINDS",
    "FRAME_KINDS",
    "CURRENT_KINDS",
    "CHECK_KINDS",
]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


BoxSpec = list[tuple[float, float]]
Monomial = tuple[list[int], float]


class BuiltinField(_Model):
    function: Literal["sin", "cos", "exp"]
    axis: int = Field(ge=1, le=3)
    scale: float = 1.0
    coefficient: float = 1.0
    analytic: bool = True


FieldSpec = Union[float, list[Monomial], BuiltinField]


def _check_index(s: str) -> str:
    if any(ch not in "123" for ch in s) or list(s) != sorted(set(s)):
        raise ValueError(f"multi-index {s!r} must be increasing 1-based digits")
    return s


class PatchSpec(_Model):
    dim: Literal[2, 3]
    bounds: Optional[BoxSpec] = None

    @model_validator(mode="after")
    def _bounds(self):
        if self.bounds is None:
            self.bounds = [(-1.0, 1.0)] * self.dim
        if len(self.bounds) != self.dim or any(lo >= hi for lo, hi in self.bounds):
            raise ValueError("patch bounds must give lo < hi for every axis")
        return self


# --- forms ---------------------------------------------------------------

class ConstantForm(_Model):
    kind: Literal["constant"]
    degree: int = Field(ge=0, le=3)
    components: dict[str, float]


class FieldForm(_Model):
    kind: Literal["polynomial"]
    degree: int = Field(ge=0, le=3)
    components: dict[str, FieldSpec]


class CoordinateForm(_Model):
    kind: Literal["coordinate"]
    index: str
    coefficient: float = 1.0


class PiecewisePiece(_Model):
    box: BoxSpec
    form: str


class PiecewiseFormSpec(_Model):
    kind: Literal["piecewise"]
    pieces: list[PiecewisePiece] = Field(min_length=1)


class DerivativeForm(_Model):
    kind: Literal["derivative"]
    of: str


class WedgeForm(_Model):
    kind: Literal["wedge"]
    left: str
    right: str


class FormTerm(_Model):
    form: str
    coefficient: float = 1.0


class SumForm(_Model):
    kind: Literal["sum"]
    terms: list[FormTerm] = Field(min_length=1)


class BumpForm(_Model):
    kind: Literal["bump"]
    center: list[float]
    radii: list[float]
    index: str = ""
    m: int = Field(default=4, ge=2)
    amplitude: float = 1.0


FormSpec = Annotated[
    Union[ConstantForm, FieldForm, CoordinateForm, PiecewiseFormSpec, DerivativeForm, WedgeForm,
          SumForm, BumpForm],
    Field(discriminator="kind"),
]


# --- chains --------------------------------------------------------------

class SimplexSpec(_Model):
    vertices: list[list[float]]
    coefficient: float = 1.0


class SimplicesChain(_Model):
    kind: Literal["simplices"]
    simplices: list[SimplexSpec] = Field(min_length=1)


class BoxChain(_Model):
    kind: Literal["box"]
    box: BoxSpec
    resolution: Optional[int] = Field(default=None, ge=1)


class FlatChain(_Model):
    kind: Literal["flat"]
    box: BoxSpec
    normal: Optional[list[float]] = None
    orientation: Literal[1, -1] = 1
    resolution: Optional[int] = Field(default=None, ge=1)


class BoundaryChain(_Model):
    kind: Literal["boundary"]
    of: str


class ChainTerm(_Model):
    chain: str
    coefficient: float = 1.0


class SumChain(_Model):
    kind: Literal["sum"]
    terms: list[ChainTerm] = Field(min_length=1)


NAMED_CHAINS = ("half_plane_cube", "half_plane_line", "quarter_plane_1", "quarter_plane_2",
                "quarter_plane_3", "fork_L1", "fork_L2", "fork_L3", "fork_L")


class NamedChain(_Model):
    kind: Literal["named"]
    name: Literal[NAMED_CHAINS]  # type: ignore[valid-type]


ChainSpec = Annotated[
    Union[SimplicesChain, BoxChain, FlatChain, BoundaryChain, SumChain, NamedChain],
    Field(discriminator="kind"),
]


# --- frames --------------------------------------------------------------

class MatrixFrame(_Model):
    kind: Literal["coframe", "frame"]
    entries: list[list[FieldSpec]]


class DualFrame(_Model):
    kind: Literal["dual"]
    of: str


FrameSpec = Annotated[Union[MatrixFrame, DualFrame], Field(discriminator="kind")]


# --- currents ------------------------------------------------------------

class FormCurrentSpec(_Model):
    kind: Literal["form"]
    form: str
    box: Optional[BoxSpec] = None
    chain: Optional[str] = None
    resolution: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_region(self):
        if self.box is not None and self.chain is not None:
            raise ValueError("give at most one of box and chain")
        return self


class ChainCurrentSpec(_Model):
    kind: Literal["chain"]
    chain: str


class WeightedChainCurrentSpec(_Model):
    kind: Literal["weighted_chain"]
    chain: str
    weight: FieldSpec


class DiracCurrentSpec(_Model):
    kind: Literal["dirac"]
    point: list[float]
    vectors: list[list[float]] = []


class ContractionSpec(_Model):
    kind: Literal["contraction"]
    current: str
    form: str


class CurrentTerm(_Model):
    current: str
    coefficient: float = 1.0


class CombinationSpec(_Model):
    kind: Literal["combination"]
    terms: list[CurrentTerm] = []
    degree: Optional[int] = None


class BoundarySpec(_Model):
    kind: Literal["weak_boundary", "structural_boundary", "dislocation"]
    of: str


class StepInterfaceSpec(_Model):
    kind: Literal["step_interface"]
    a: float


class StepLineSpec(_Model):
    kind: Literal["step_line"]


class HalfPlaneSpec(_Model):
    kind: Literal["half_plane_cube"]


class QuarterPlanesSpec(_Model):
    kind: Literal["three_quarter_planes", "fork"]
    a1: float
    a2: float
    a3: float


CurrentSpec = Annotated[
    Union[FormCurrentSpec, ChainCurrentSpec, WeightedChainCurrentSpec, DiracCurrentSpec, ContractionSpec,
          CombinationSpec, BoundarySpec, StepInterfaceSpec, StepLineSpec, HalfPlaneSpec, QuarterPlanesSpec],
    Field(discriminator="kind"),
]


# --- checks --------------------------------------------------------------

class Bump(_Model):
    center: list[float]
    radii: list[float]
    index: Optional[str] = None


class ProbeSpec(_Model):
    count: int = Field(default=8, ge=1)
    seed: int = 0
    region: Optional[BoxSpec] = None
    modulated: bool = True
    bumps: Optional[list[Bump]] = None


class _Check(_Model):
    name: Optional[str] = None
    tolerance: Optional[float] = Field(default=None, gt=0)
    expect: Literal["holds", "violated"] = "holds"


class BoundaryEqualsCheck(_Check):
    kind: Literal["boundary_equals"]
    current: str
    expected: str
    probes: ProbeSpec = ProbeSpec()


class WeakStructuralCheck(_Check):
    kind: Literal["weak_structural"]
    current: str
    probes: ProbeSpec = ProbeSpec()


class ClosedCheck(_Check):
    kind: Literal["closed"]
    current: str
    probes: ProbeSpec = ProbeSpec()


class SupportCheck(_Check):
    kind: Literal["support"]
    current: str
    resolution: Optional[int] = Field(default=None, ge=2)
    amplitude: float = 1.0
    meets: Optional[str] = None
    cells: Optional[list[list[int]]] = None
    empty: bool = False

    @model_validator(mode="after")
    def _one_target(self):
        if sum([self.meets is not None, self.cells is not None, self.empty]) != 1:
            raise ValueError("support check needs exactly one of meets, cells, empty")
        return self


class WeightedLine(_Model):
    chain: str
    weight: float


class FrankNodeCheck(_Check):
    kind: Literal["frank_node"]
    node: list[float]
    lines: Optional[list[WeightedLine]] = None
    from_current: Optional[str] = None
    probes: ProbeSpec

    @model_validator(mode="after")
    def _one_source(self):
        if (self.lines is None) == (self.from_current is None):
            raise ValueError("give exactly one of lines and from_current")
        return self


class FrankConstancyCheck(_Check):
    kind: Literal["frank_constancy"]
    loop: str
    weight: FieldSpec
    probes: ProbeSpec = ProbeSpec()


class TotalDislocationCheck(_Check):
    kind: Literal["total_dislocation"]
    form: str
    chains: list[str] = Field(min_length=1)
    expected: Optional[float] = None


class DensityCheck(_Check):
    kind: Literal["dislocation_density"]
    form: str
    expected: str
    points: int = Field(default=20, ge=1)
    seed: int = 0


class TorsionCheck(_Check):
    kind: Literal["torsion"]
    coframe: str
    expected: Optional[list[str]] = None
    points: int = Field(default=20, ge=1)
    seed: int = 0


class BracketCheck(_Check):
    kind: Literal["burgers_bracket"]
    frame: str
    alpha: int = Field(ge=1, le=3)
    beta: int = Field(ge=1, le=3)
    points: Union[list[list[float]], int] = 20
    seed: int = 0
    expected: Optional[list[float]] = None


class TubeFluxCheck(_Check):
    kind: Literal["tube_flux"]
    potentials: Optional[list[str]] = None
    coframe: Optional[str] = None
    lids: list[str] = Field(min_length=2)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.potentials is None) == (self.coframe is None):
            raise ValueError("give exactly one of potentials and coframe")
        return self


class ClosedSurfaceCheck(_Check):
    kind: Literal["closed_surface_flux"]
    potentials: Optional[list[str]] = None
    coframe: Optional[str] = None
    surface: str

    @model_validator(mode="after")
    def _one_source(self):
        if (self.potentials is None) == (self.coframe is None):
            raise ValueError("give exactly one of potentials and coframe")
        return self


class EvaluateCheck(_Check):
    kind: Literal["evaluate"]
    current: str
    probe: str
    expected: float


class StokesCheck(_Check):
    kind: Literal["stokes"]
    chain: str
    form: str


CheckSpec = Annotated[
    Union[BoundaryEqualsCheck, WeakStructuralCheck, ClosedCheck, SupportCheck, FrankNodeCheck,
          FrankConstancyCheck, TotalDislocationCheck, DensityCheck, TorsionCheck, BracketCheck,
          TubeFluxCheck, ClosedSurfaceCheck, EvaluateCheck, StokesCheck],
    Field(discriminator="kind"),
]


class Scenario(_Model):
    id: str
    topic: str = ""
    description: str = ""
    patch: PatchSpec
    forms: dict[str, FormSpec] = {}
    chains: dict[str, ChainSpec] = {}
    frames: dict[str, FrameSpec] = {}
    currents: dict[str, CurrentSpec] = {}
    checks: list[CheckSpec] = Field(min_length=1)

    @field_validator("forms")
    @classmethod
    def _indices(cls, forms):
        for f in forms.values():
            keys = getattr(f, "components", {}) or {}
            for k in keys:
                _check_index(k)
            if isinstance(f, (CoordinateForm, BumpForm)):
                _check_index(f.index)
        return forms


def _kinds(spec) -> tuple:
    union = spec.__metadata__ and spec.__args__[0]
    out = []
    for model in union.__args__:
        out.extend(model.model_fields["kind"].annotation.__args__)
    return tuple(out)


FORM_KINDS = _kinds(FormSpec)
CHAIN_KINDS = _kinds(ChainSpec)
FRAME_KINDS = _kinds(FrameSpec)
CURRENT_KINDS = _kinds(CurrentSpec)
CHECK_KINDS = _kinds(CheckSpec)


def scenario_json_schema() -> dict:
    return Scenario.model_json_schema()


# --- loading -------------------------------------------------------------

def _locate(node, path) -> tuple:
    """1-based (line, column) of the YAML node at ``path``, as deep as it resolves."""
    best = node
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == str(key):
                    nxt = v
                    break
            if nxt is None:
                break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            continue
        best = node
    if best is None:
        return None, None
    return best.start_mark.line + 1, best.start_mark.column + 1


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line, col = (mark.line + 1, mark.column + 1) if mark is not None else (None, None)
        raise ScenarioError(f"{source}: YAML syntax error: {getattr(exc, 'problem', exc)}", line, col) from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: a scenario must be a mapping", 1, 1)
    try:
        scenario = Scenario.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = [p for p in err["loc"] if not (isinstance(p, str) and p in _TAGS)]
        line, col = _locate(root, loc)
        where = ".".join(str(p) for p in loc)
        raise ScenarioError(f"{source}: {where}: {err['msg']}", line, col) from None
    check_references(scenario, root, source)
    return scenario


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text, str(path))


_TAGS = set(FORM_KINDS + CHAIN_KINDS + FRAME_KINDS + CURRENT_KINDS + CHECK_KINDS) | {
    "float", "list[tuple[list[int],float]]", "BuiltinField", "list[list[float]]", "int",
}


# --- static validation ---------------------------------------------------

class _Checker:
    """Resolve references and infer degrees without numeric work."""

    def __init__(self, sc: Scenario, root, source: str):
        self.sc = sc
        self.root = root
        self.source = source
        self.n = sc.patch.dim
        self.form_deg: dict = {}
        self.chain_deg: dict = {}
        self.current_deg: dict = {}
        self._active: set = set()

    def fail(self, msg, path):
        line, col = _locate(self.root, path) if self.root is not None else (None, None)
        raise ScenarioError(f"{self.source}: {'.'.join(map(str, path))}: {msg}", line, col)

    def _ref(self, table, name, section, path):
        if name not in table:
            avail = ", ".join(sorted(table)) or "none"
            self.fail(f"unknown {section[:-1]} {name!r} (defined: {avail})", path)
        key = (section, name)
        if key in self._active:
            self.fail(f"circular reference through {name!r}", path)
        return key

    def _field(self, spec, path):
        if isinstance(spec, BuiltinField) and spec.axis > self.n:
            self.fail(f"axis {spec.axis} exceeds dimension {self.n}", path)
        if isinstance(spec, list):
            for m, (exps, _) in enumerate(spec):
                if len(exps) != self.n or any(e < 0 for e in exps):
                    self.fail(f"monomial exponents must be {self.n} non-negative integers", path + [m])

    def _box(self, box, path, flat_ok=False):
        if len(box) != self.n or any(lo > hi or (lo == hi and not flat_ok) for lo, hi in box):
            self.fail("box must give lo < hi for every axis", path)

    def _point(self, p, path):
        if len(p) != self.n:
            self.fail(f"point must have {self.n} coordinates", path)

    def form(self, name, path):
        if name in self.form_deg:
            return self.form_deg[name]
        key = self._ref(self.sc.forms, name, "forms", path)
        self._active.add(key)
        here = ["forms", name]
        f = self.sc.forms[name]
        if isinstance(f, (ConstantForm, FieldForm)):
            for idx, val in f.components.items():
                if len(idx) != f.degree:
                    self.fail(f"component {idx!r} does not have degree {f.degree}", here + ["components", idx])
                if any(int(ch) > self.n for ch in idx):
                    self.fail(f"component {idx!r} exceeds dimension {self.n}", here + ["components", idx])
                if isinstance(f, FieldForm):
                    self._field(val, here + ["components", idx])
            deg = f.degree
        elif isinstance(f, CoordinateForm):
            if any(int(ch) > self.n for ch in f.index):
                self.fail(f"index {f.index!r} exceeds dimension {self.n}", here + ["index"])
            deg = len(f.index)
        elif isinstance(f, PiecewiseFormSpec):
            degs = set()
            for i, piece in enumerate(f.pieces):
                self._box(piece.box, here + ["pieces", i, "box"])
                degs.add(self.form(piece.form, here + ["pieces", i, "form"]))
            if len(degs) != 1:
                self.fail("pieces must share one degree", here)
            deg = degs.pop()
        elif isinstance(f, DerivativeForm):
            deg = self.form(f.of, here + ["of"]) + 1
            if deg > self.n:
                self.fail("derivative of a top-degree form", here)
        elif isinstance(f, WedgeForm):
            deg = self.form(f.left, here + ["left"]) + self.form(f.right, here + ["right"])
            if deg > self.n:
                self.fail(f"wedge degree {deg} exceeds dimension {self.n}", here)
        elif isinstance(f, SumForm):
            degs = {self.form(t.form, here + ["terms", i, "form"]) for i, t in enumerate(f.terms)}
            if len(degs) != 1:
                self.fail("summed forms must share one degree", here)
            deg = degs.pop()
        else:  # bump
            self._point(f.center, here + ["center"])
            self._point(f.radii, here + ["radii"])
            deg = len(f.index)
        self._active.discard(key)
        self.form_deg[name] = deg
        return deg

    def chain(self, name, path):
        if name in self.chain_deg:
            return self.chain_deg[name]
        key = self._ref(self.sc.chains, name, "chains", path)
        self._active.add(key)
        here = ["chains", name]
        c = self.sc.chains[name]
        if isinstance(c, SimplicesChain):
            degs = set()
            for i, s in enumerate(c.simplices):
                for j, v in enumerate(s.vertices):
                    self._point(v, here + ["simplices", i, "vertices", j])
                degs.add(len(s.vertices) - 1)
            if len(degs) != 1:
                self.fail("simplices must share one degree", here)
            deg = degs.pop()
            if deg > self.n:
                self.fail("too many vertices for the dimension", here)
        elif isinstance(c, BoxChain):
            self._box(c.box, here + ["box"])
            deg = self.n
        elif isinstance(c, FlatChain):
            self._box(c.box, here + ["box"], flat_ok=True)
            deg = sum(1 for lo, hi in c.box if hi > lo)
            if c.normal is not None:
                self._point(c.normal, here + ["normal"])
        elif isinstance(c, BoundaryChain):
            deg = self.chain(c.of, here + ["of"]) - 1
            if deg < 0:
                self.fail("0-chains have no boundary", here)
        elif isinstance(c, SumChain):
            degs = {self.chain(t.chain, here + ["terms", i, "chain"]) for i, t in enumerate(c.terms)}
            if len(degs) != 1:
                self.fail("summed chains must share one degree", here)
            deg = degs.pop()
        else:
            if self.n != 3:
                self.fail("named chains live in the 3-cube", here)
            deg = 2 if c.name.startswith(("half_plane_cube", "quarter")) else 1
        self._active.discard(key)
        self.chain_deg[name] = deg
        return deg

    def frame(self, name, path, want=None):
        key = self._ref(self.sc.frames, name, "frames", path)
        here = ["frames", name]
        f = self.sc.frames[name]
        if isinstance(f, MatrixFrame):
            if len(f.entries) != self.n or any(len(r) != self.n for r in f.entries):
                self.fail(f"matrix must be {self.n}x{self.n}", here + ["entries"])
            for i, row in enumerate(f.entries):
                for j, e in enumerate(row):
                    self._field(e, here + ["entries", i, j])
            kind = f.kind
        else:
            self._active.add(key)
            inner = self.frame(f.of, here + ["of"])
            self._active.discard(key)
            kind = "frame" if inner == "coframe" else "coframe"
        if want is not None and kind != want:
            self.fail(f"{name!r} is a {kind}, expected a {want}", path)
        return kind

    def current(self, name, path):
        if name in self.current_deg:
            return self.current_deg[name]
        key = self._ref(self.sc.currents, name, "currents", path)
        self._active.add(key)
        here = ["currents", name]
        c = self.sc.currents[name]
        n = self.n
        if isinstance(c, FormCurrentSpec):
            deg = n - self.form(c.form, here + ["form"])
            if c.box is not None:
                self._box(c.box, here + ["box"])
            if c.chain is not None and self.chain(c.chain, here + ["chain"]) != n:
                self.fail("form current regions must be top-degree chains", here + ["chain"])
        elif isinstance(c, (ChainCurrentSpec, WeightedChainCurrentSpec)):
            deg = self.chain(c.chain, here + ["chain"])
            if isinstance(c, WeightedChainCurrentSpec):
                self._field(c.weight, here + ["weight"])
        elif isinstance(c, DiracCurrentSpec):
            self._point(c.point, here + ["point"])
            for i, v in enumerate(c.vectors):
                self._point(v, here + ["vectors", i])
            deg = len(c.vectors)
        elif isinstance(c, ContractionSpec):
            deg = self.current(c.current, here + ["current"]) - self.form(c.form, here + ["form"])
            if deg < 0:
                self.fail("contraction form degree exceeds the current degree", here)
        elif isinstance(c, CombinationSpec):
            degs = {self.current(t.current, here + ["terms", i, "current"]) for i, t in enumerate(c.terms)}
            if c.degree is not None:
                degs.add(c.degree)
            if len(degs) != 1:
                self.fail("combined currents must share one degree (declare degree for empty sums)", here)
            deg = degs.pop()
        elif isinstance(c, BoundarySpec):
            deg = self.current(c.of, here + ["of"]) - 1
            if deg < 0:
                self.fail("a 0-current has no boundary", here)
        elif isinstance(c, (StepInterfaceSpec, StepLineSpec)):
            if n != 2:
                self.fail("the step interface lives in the 2-square", here)
            deg = 1 if isinstance(c, StepInterfaceSpec) else 0
        else:
            if n != 3:
                self.fail("this layering lives in the 3-cube", here)
            deg = 1 if c.kind == "fork" else 2
        self._active.discard(key)
        self.current_deg[name] = deg
        return deg

    def probes(self, spec: ProbeSpec, path):
        if spec.region is not None:
            self._box(spec.region, path + ["region"])
        for i, b in enumerate(spec.bumps or []):
            self._point(b.center, path + ["bumps", i, "center"])
            self._point(b.radii, path + ["bumps", i, "radii"])

    def run(self):
        for name in self.sc.forms:
            self.form(name, ["forms", name])
        for name in self.sc.chains:
            self.chain(name, ["chains", name])
        for name in self.sc.frames:
            self.frame(name, ["frames", name])
        for name in self.sc.currents:
            self.current(name, ["currents", name])
        for i, ch in enumerate(self.sc.checks):
            self.check(ch, ["checks", i])

    def check(self, ch, here):
        n = self.n
        if hasattr(ch, "probes") and ch.probes is not None:
            self.probes(ch.probes, here + ["probes"])
        if isinstance(ch, BoundaryEqualsCheck):
            d = self.current(ch.current, here + ["current"]) - 1
            e = self.current(ch.expected, here + ["expected"])
            if d != e:
                self.fail(f"boundary has degree {d} but the expected current has degree {e}", here)
        elif isinstance(ch, (WeakStructuralCheck, ClosedCheck)):
            deg = self.current(ch.current, here + ["current"])
            if deg < (2 if isinstance(ch, ClosedCheck) else 1):
                self.fail("current degree too low for this check", here + ["current"])
        elif isinstance(ch, SupportCheck):
            self.current(ch.current, here + ["current"])
            if ch.meets is not None:
                self.chain(ch.meets, here + ["meets"])
        elif isinstance(ch, FrankNodeCheck):
            self._point(ch.node, here + ["node"])
            for i, line in enumerate(ch.lines or []):
                if self.chain(line.chain, here + ["lines", i, "chain"]) != 1:
                    self.fail("node lines must be 1-chains", here + ["lines", i])
            if ch.from_current is not None and self.current(ch.from_current, here + ["from_current"]) != 1:
                self.fail("node lines must come from a 1-current", here + ["from_current"])
        elif isinstance(ch, FrankConstancyCheck):
            if self.chain(ch.loop, here + ["loop"]) != 1:
                self.fail("constancy loops must be 1-chains", here + ["loop"])
            self._field(ch.weight, here + ["weight"])
        elif isinstance(ch, TotalDislocationCheck):
            if self.form(ch.form, here + ["form"]) != 1:
                self.fail("total dislocation needs a 1-form", here + ["form"])
            for i, c in enumerate(ch.chains):
                if self.chain(c, here + ["chains", i]) != 2:
                    self.fail("total dislocation needs 2-chains", here + ["chains", i])
        elif isinstance(ch, DensityCheck):
            if self.form(ch.form, here + ["form"]) != 1:
                self.fail("the dislocation density needs a 1-form", here + ["form"])
            if self.form(ch.expected, here + ["expected"]) != 2:
                self.fail("the expected density must be a 2-form", here + ["expected"])
        elif isinstance(ch, TorsionCheck):
            self.frame(ch.coframe, here + ["coframe"], "coframe")
            if ch.expected is not None:
                if len(ch.expected) != n:
                    self.fail(f"expected torsion needs {n} 2-forms", here + ["expected"])
                for i, f in enumerate(ch.expected):
                    if self.form(f, here + ["expected", i]) != 2:
                        self.fail("torsion components are 2-forms", here + ["expected", i])
        elif isinstance(ch, BracketCheck):
            self.frame(ch.frame, here + ["frame"], "frame")
            if ch.alpha == ch.beta or max(ch.alpha, ch.beta) > n:
                self.fail("alpha and beta must be distinct frame indices", here)
            if isinstance(ch.points, list):
                for i, p in enumerate(ch.points):
                    self._point(p, here + ["points", i])
            if ch.expected is not None:
                self._point(ch.expected, here + ["expected"])
        elif isinstance(ch, (TubeFluxCheck, ClosedSurfaceCheck)):
            if ch.coframe is not None:
                self.frame(ch.coframe, here + ["coframe"], "coframe")
            for i, f in enumerate(ch.potentials or []):
                if self.form(f, here + ["potentials", i]) != 1:
                    self.fail("torsion potentials are 1-forms", here + ["potentials", i])
            targets = ch.lids if isinstance(ch, TubeFluxCheck) else [ch.surface]
            for i, c in enumerate(targets):
                if self.chain(c, here + ["lids" if isinstance(ch, TubeFluxCheck) else "surface"]) != 2:
                    self.fail("flux surfaces must be 2-chains", here)
        elif isinstance(ch, EvaluateCheck):
            d = self.current(ch.current, here + ["current"])
            if self.form(ch.probe, here + ["probe"]) != d:
                self.fail(f"probe degree does not match the current degree {d}", here + ["probe"])
            if not isinstance(self.sc.forms[ch.probe], BumpForm):
                self.fail("evaluation probes must be bump forms", here + ["probe"])
        elif isinstance(ch, StokesCheck):
            k = self.chain(ch.chain, here + ["chain"])
            if self.form(ch.form, here + ["form"]) != k - 1:
                self.fail("Stokes needs a (k-1)-form on a k-chain", here)


def check_references(sc: Scenario, root=None, source: str = "<scenario>") -> _Checker:
    checker = _Checker(sc, root, source)
    checker.run()
    return checker
