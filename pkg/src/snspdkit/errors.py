"""Exception types raised across the toolkit.

The CLI maps these onto exit-code categories: ``ParseFailure`` subclasses
exit with 3, every other ``SnspdError`` with 4.
"""


class SnspdError(Exception):
    """Base class for all toolkit errors."""


class InvariantViolation(SnspdError, ValueError):
    """A record failed one of its type invariants."""

    def __init__(self, record: str, invariant: str):
        self.record = record
        self.invariant = invariant
        super().__init__(f"{record}: invariant violated: {invariant}")


# -- input / parse errors -----------------------------------------------------

class ParseFailure(SnspdError):
    """Base for file-ingestion errors."""


class ParseError(ParseFailure, ValueError):
    def __init__(self, line: int, text: str = "", path: str | None = None):
        self.line = line
        self.text = text
        self.path = path
        where = f"{path}:" if path else "line "
        super().__init__(f"{where}{line}: cannot parse {text!r}")


class EmptyFile(ParseFailure, ValueError):
    pass


class MissingField(ParseFailure, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return f"missing required field {self.name!r}"


# -- analysis errors ----------------------------------------------------------

class EmptyInput(SnspdError, ValueError):
    pass


class NonPositiveBinWidth(InvariantViolation):
    def __init__(self, bin_width):
        super().__init__("TimingHistogram", f"bin_width > 0 (got {bin_width})")


class InsufficientCounts(SnspdError, ValueError):
    pass


class FitNotConverged(SnspdError, RuntimeError):
    pass


class LevelNotReached(SnspdError, ValueError):
    def __init__(self, level: float, side: str):
        self.level = level
        self.side = side
        super().__init__(f"histogram never falls below level {level} on the {side} side")


class NegativeInput(SnspdError, ValueError):
    pass


class NonPositiveInput(SnspdError, ValueError):
    pass


class TooFewSamples(SnspdError, ValueError):
    pass


class NegativeRadicand(SnspdError, ValueError):
    pass


class DivisionDomain(SnspdError, ZeroDivisionError):
    pass


class NegativeNumerator(SnspdError, ValueError):
    pass


class ZeroFlux(SnspdError, ZeroDivisionError):
    pass


class NeverReaches(SnspdError, ValueError):
    pass


class EmptyRegion(SnspdError, ValueError):
    pass


class NonPositiveISat(SnspdError, ValueError):
    pass


class TooFewPoints(SnspdError, ValueError):
    pass
