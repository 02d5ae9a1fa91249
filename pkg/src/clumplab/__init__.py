"""Numerical experiments on spectral clumping of functions on the line."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    CannotCarve,
    ClumpLabError,
    DegenerateInput,
    DivergentLogIntegral,
    HypothesisNotMet,
    InvalidArgument,
    InvalidInput,
    InvalidWeight,
    OutOfRange,
)
from .signal_core import Grid, SampledSignal, forward_transform, inverse_transform, make_grid  # noqa: F401
