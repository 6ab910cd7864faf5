"""Exception hierarchy shared by every module."""


class BiharmError(Exception):
    """Base class for all errors raised by the package."""


class ExprSyntaxError(BiharmError):
    """Malformed expression text. ``offset`` is the byte offset of the fault."""

    def __init__(self, message, offset, text=""):
        self.offset = offset
        self.text = text
        super().__init__(f"{message} at offset {offset}")

    def diagnostic(self):
        """Two-line caret diagnostic pointing at the offending position."""
        return f"{self.text}\n{' ' * self.offset}^ {self.args[0]}"


class UnknownFunctionError(ExprSyntaxError):
    pass


class UnboundParameterError(BiharmError):
    pass


class DomainError(BiharmError, ArithmeticError):
    """Evaluation hit the singular set (ln/sqrt of non-positive, 1/0, ...)."""


class RegionExhaustedError(BiharmError):
    """Rejection sampling could not find enough admissible points."""


class RankDeficientError(BiharmError):
    """A parametrization lost rank at the evaluated parameter."""


class PreconditionError(BiharmError, ValueError):
    """Input does not satisfy an operation's precondition (non-minimal, non-CMC, ...)."""


class ConfigError(BiharmError):
    pass
