"""Exception hierarchy shared by every module."""


class SolitonForgeError(Exception):
    """Base class for all errors raised by the package."""


class ContextError(SolitonForgeError):
    """Operands live in different coordinate/parameter contexts."""


class DivisionByZero(SolitonForgeError, ZeroDivisionError):
    """A parameter-field denominator vanished, or a zero divisor was inverted."""


class NonMonomialDeterminant(SolitonForgeError):
    """det(g) is not a unit of the exp-polynomial ring."""


class AsymmetryDetected(SolitonForgeError):
    """A tensor that must be symmetric came out asymmetric (kernel bug)."""


class NonAffineResidual(SolitonForgeError):
    """The soliton residual is not affine in the ansatz unknowns (kernel bug)."""


class UnknownEntry(SolitonForgeError, KeyError):
    """No catalog entry with the requested id."""

    def __str__(self):
        return Exception.__str__(self)


class DegenerateMetricAtPoint(SolitonForgeError):
    """The numeric metric is singular at a sample point."""


class ParseError(SolitonForgeError, ValueError):
    """Base for located parser diagnostics."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self):
        if self.line is None:
            return self.message
        return f"{self.line}:{self.column}: {self.message}"


class ExprSyntaxError(ParseError):
    pass


class UnknownSymbol(ParseError):
    pass


class NonRationalFrequency(ParseError):
    pass


class DimensionMismatch(ParseError):
    pass
