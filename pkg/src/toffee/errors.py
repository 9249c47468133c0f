"""Exception hierarchy shared by every module."""


class ToffeeError(Exception):
    """Base class for all errors raised by this package."""


class DimMismatch(ToffeeError, ValueError):
    pass


class SymmetryViolation(ToffeeError, ValueError):
    """Inverse transform of a stack that is not conjugate symmetric."""


class ParseError(ToffeeError, ValueError):
    def __init__(self, line: int, message: str = "malformed row"):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EmptyInput(ToffeeError, ValueError):
    pass


class DegenerateTimespan(ToffeeError, ValueError):
    pass


class SingularSolve(ToffeeError, ArithmeticError):
    def __init__(self, message: str, slice_index=None, iteration=None):
        where = []
        if slice_index is not None:
            where.append(f"slice {slice_index}")
        if iteration is not None:
            where.append(f"iteration {iteration}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.slice_index = slice_index
        self.iteration = iteration


class NonFiniteObjective(ToffeeError, ArithmeticError):
    pass


class EmptySplit(ToffeeError, ValueError):
    pass


class Exhausted(ToffeeError, ValueError):
    """Not enough absent node pairs to draw the requested negatives."""


class DegenerateLabels(ToffeeError, ValueError):
    pass


class LengthMismatch(ToffeeError, ValueError):
    pass


class ContainerError(ToffeeError, ValueError):
    """Bad magic bytes, truncated payload or otherwise corrupt tensor file."""


class ConfigError(ToffeeError, ValueError):
    pass
