"""Exception hierarchy shared by all modules."""


class FermisigError(Exception):
    """Base class for every error raised by the toolkit."""


class InvariantViolation(FermisigError):
    def __init__(self, condition, detail=""):
        self.condition = condition
        msg = condition if not detail else f"{condition}: {detail}"
        super().__init__(msg)


class UnsupportedExact(FermisigError):
    pass


class MixedCausalType(FermisigError):
    pass


class IndexOutOfRange(FermisigError):
    pass


class BoundaryTooClose(FermisigError):
    pass


class CornerOutsideDomain(FermisigError):
    pass


class QuadratureTooCoarse(FermisigError):
    pass


class EigensolverFailure(FermisigError):
    pass


class OddUnpairedEigenvalue(FermisigError):
    pass


class ZeroAcceptance(FermisigError):
    pass


class NotChiral(FermisigError):
    pass


class CurveLeavesDomain(FermisigError):
    pass


class RootNotFound(FermisigError):
    pass


class EmptyInterval(FermisigError):
    pass


class WindowTooSmall(FermisigError):
    pass


class SchemaError(FermisigError):
    def __init__(self, field, detail=""):
        self.field = field
        super().__init__(f"{field}: {detail}" if detail else field)


class ExprSyntaxError(FermisigError):
    """Malformed expression text; carries the 1-based column of the problem."""

    def __init__(self, message, position, line=1):
        self.position = position
        self.line = line
        super().__init__(f"line {line}, column {position}: {message}")


class UnknownFunction(FermisigError):
    def __init__(self, name, position):
        self.name = name
        self.position = position
        super().__init__(f"unknown function '{name}' at column {position}")


class EvaluationError(FermisigError):
    pass


class SpecSyntaxError(FermisigError):
    """Malformed domain spec text, with 1-based line and column."""

    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class OutputError(FermisigError):
    pass
