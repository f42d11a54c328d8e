class XCRuntimeError(Exception):
    pass


class RuntimeTypeError(XCRuntimeError):
    """A value of the wrong shape reached a primitive. Unreachable from well-typed programs."""


class SensorError(XCRuntimeError):
    """The program read a sensor that the device does not provide."""


class StepBudgetExceeded(XCRuntimeError):
    """The round ran out of reduction steps (or call depth) and was aborted."""


class AlignmentError(XCRuntimeError):
    """Debug check: a value-tree from a different AST position reached an expression."""
