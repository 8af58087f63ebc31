"""Exception hierarchy shared by all modules."""


class LndkitError(Exception):
    """Base class for errors raised by lndkit."""


class ParseError(LndkitError, ValueError):
    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


class EvaluationError(LndkitError, ZeroDivisionError):
    """A denominator vanished (at a point, or under substitution)."""


class CapExceeded(LndkitError):
    """A semidecision procedure ran past its iteration or degree cap."""

    def __init__(self, message, cap):
        super().__init__(f"{message} (cap {cap})")
        self.cap = cap


class NotUnipotentError(CapExceeded):
    pass


class NotTriangularError(LndkitError, ValueError):
    pass


class NotLndError(LndkitError, ValueError):
    """Raised when an operation needs a certified LND and only Unknown is available."""


class VerificationError(LndkitError, RuntimeError):
    """An internal postcondition check failed."""


class SchemaError(LndkitError, ValueError):
    """JSON payload does not match the expected form."""


class FamilyError(LndkitError, ValueError):
    """A derivation family violates its structural requirements."""
