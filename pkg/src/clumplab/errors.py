"""Exception types shared by all modules."""


class ClumpLabError(Exception):
    """Base class for library errors."""


class InvalidArgument(ClumpLabError, ValueError):
    """A parameter violates a documented precondition."""


class InvalidInput(ClumpLabError, ValueError):
    """Input data is malformed or non-finite."""


class DegenerateInput(ClumpLabError, ValueError):
    """Input carries no usable information (e.g. all zero)."""


class DivergentLogIntegral(ClumpLabError, ValueError):
    """The Poisson-weighted log integral of a boundary modulus diverges."""


class CannotCarve(ClumpLabError, ValueError):
    """The clamped log integral saturates below the requested mass."""


class InvalidWeight(ClumpLabError, ValueError):
    """A concave weight fails one of its structural checks."""


class OutOfRange(ClumpLabError, ValueError):
    """Argument lies outside the range where an estimate is claimed."""


class HypothesisNotMet(ClumpLabError):
    """The input does not satisfy the hypothesis a pipeline relies on.

    The command line maps this to exit code 2.
    """
