"""Exception hierarchy shared by every module."""


class CastleKitError(Exception):
    """Base class for all library errors."""


class InvalidSymbol(CastleKitError, ValueError):
    pass


class SpaceMismatch(CastleKitError, ValueError):
    pass


class ParseError(CastleKitError, ValueError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class ConstructionError(CastleKitError):
    """A construction produced an object that failed its own exact check."""


class NotFeedback(ConstructionError):
    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"set is not a feedback set; orbit of {witness} avoids it")


class HasShortPeriod(ConstructionError):
    def __init__(self, orbit, n):
        self.orbit = orbit
        super().__init__(f"periodic orbit {orbit} has period {orbit.period} < {n}")


class DepthExhausted(ConstructionError):
    def __init__(self, max_depth, what="deepening loop"):
        self.max_depth = max_depth
        super().__init__(f"{what} exceeded max depth {max_depth}")


class BudgetExceeded(ConstructionError):
    def __init__(self, seconds, what="construction"):
        self.seconds = seconds
        super().__init__(f"{what} exceeded its time budget of {seconds:g} s")


class NumericalFailure(CastleKitError, ArithmeticError):
    pass


class Singular(NumericalFailure):
    pass


class FieldDimUnsupported(CastleKitError, ValueError):
    pass


class IllConditionedFrame(NumericalFailure):
    pass


class ShortTowerUnsupported(CastleKitError):
    pass


class NotConstantOnFloor(CastleKitError):
    pass


class NotPartition(CastleKitError):
    pass
