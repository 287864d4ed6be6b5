"""Exception hierarchy shared across the package."""


class QamlError(Exception):
    """Base class for all errors raised by qaml."""


class CapacityError(QamlError, ValueError):
    pass


class ShapeError(QamlError, ValueError):
    pass


class QubitIndexError(QamlError, IndexError):
    pass


class CircuitLogicError(QamlError, RuntimeError):
    """A classically-controlled step read a slot nobody wrote."""


class PreconditionError(QamlError, ValueError):
    pass


class EstimationError(QamlError, ArithmeticError):
    """Shot counts were insufficient to form a conditioned estimate."""


class DataError(QamlError, ValueError):
    """Base for anything wrong with input data; the CLI maps it to exit code 2."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class FormatError(DataError):
    pass


class ConsistencyError(DataError):
    pass


class DegenerateDataError(DataError):
    pass


class DatasetTooSmallError(DataError):
    pass


class MiningError(DataError):
    pass


class DivergenceError(QamlError, FloatingPointError):
    def __init__(self, epoch, value):
        self.epoch = epoch
        self.value = value
        super().__init__(f"non-finite loss {value!r} at epoch {epoch}")
