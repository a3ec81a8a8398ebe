"""Exception hierarchy shared by every module of the package."""


class DislocError(Exception):
    """Base class for all errors raised by :mod:`disloc`."""


class GeometryError(DislocError):
    """Invalid simplex, chain, box or patch."""


class DegreeMismatchError(DislocError):
    """Operands carry incompatible form or current degrees."""


class FormError(DislocError):
    """A form cannot be evaluated or differentiated as requested."""


class QuadratureError(DislocError):
    """A quadrature rule failed its exactness certificate."""


class NoStructuralRule(DislocError):
    """Raised by the structural boundary for variants without a rewrite rule."""


class BracketMismatchError(DislocError):
    """The two Lie bracket formulas disagree beyond tolerance."""


class ScenarioError(DislocError):
    """Malformed or inconsistent scenario document.

    ``line`` and ``column`` are 1-based when the location is known.
    """

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
