"""Reference signals and sets used by tests, experiments and the CLI."""
from __future__ import annotations

import math

import numpy as np

from .decay_clump import IntervalCollection
from .signal_core import SQRT_2PI, Grid, SampledSignal, pole_tail, sample


def fat_cantor_intervals(measure: float = 0.5, stages: int = 10, lo: float = 0.0, hi: float = 1.0):
    """Closed intervals left after removing the same middle fraction at each stage.

    The fraction r satisfies (1 - r)**stages = measure, so every surviving
    interval loses the same share at every later stage.
    """
    r = 1.0 - measure ** (1.0 / stages)
    pieces = [(lo, hi)]
    for _ in range(stages):
        nxt = []
        for a, b in pieces:
            L = b - a
            g = r * L
            m = 0.5 * (a + b)
            nxt.append((a, m - 0.5 * g))
            nxt.append((m + 0.5 * g, b))
        pieces = nxt
    return IntervalCollection(pieces)


def indicator(grid: Grid, intervals: IntervalCollection) -> SampledSignal:
    x = grid.points
    mask = np.zeros(grid.count, dtype=bool)
    for a, b in intervals.intervals:
        mask |= (x >= a) & (x <= b)
    return SampledSignal(grid, mask.astype(float))


def fat_cantor_indicator(grid: Grid, measure: float = 0.5, stages: int = 10) -> SampledSignal:
    return indicator(grid, fat_cantor_intervals(measure, stages))


def cauchy_signal(z: complex, grid: Grid, terms: int = 8) -> SampledSignal:
    """psi_z(x) = i / (sqrt(2 pi) (x - conj z)) sampled with its Laurent tail."""
    a = 1j / SQRT_2PI
    p = np.conj(z)
    return sample(lambda x: a / (x - p), grid, pole_tail(a, p, 1, terms))


def gevrey_bump(x, lo: float = 0.0, hi: float = 1.0):
    """exp(-1/((x-lo)(hi-x))) on (lo, hi), zero elsewhere."""
    x = np.asarray(x, dtype=float)
    inside = (x > lo) & (x < hi)
    u = np.where(inside, (x - lo) * (hi - x), 1.0)
    return np.where(inside, np.exp(-1.0 / u), 0.0)


def fat_cantor_context(step: float = 2.0**-12, p: float = 3.0, measure: float = 0.5, stages: int = 10):
    """Residual context with w = 1 on a fat Cantor set and 0 elsewhere."""
    from .oscillation import ResidualContext
    from .signal_core import grid_from_span

    g = grid_from_span(-0.25, 1.25, step)
    K = fat_cantor_intervals(measure, stages)
    mask = K.contains(g.points)
    return ResidualContext(SampledSignal(g, mask.astype(float)), mask, p=p, delta=0.5)


def stretched_spectrum(zeta, c: float = 2.0, scale: float = 40.0):
    """scale * exp(-c (1 + zeta^2)^(1/4)), a smooth even spectrum decaying like exp(-c sqrt|zeta|)."""
    z = np.asarray(zeta, dtype=float)
    return scale * np.exp(-c * (1.0 + z * z) ** 0.25)


def stretched_signal(x_step: float = 0.005, x_max: float = 30.0, c: float = 2.0) -> SampledSignal:
    """Inverse transform of stretched_spectrum sampled on [-x_max, x_max]."""
    from .signal_core import grid_from_span, inverse_transform, make_grid

    zg = make_grid(-150.0, 0.01, 30001)
    Fz = SampledSignal(zg, stretched_spectrum(zg.points, c))
    return inverse_transform(Fz, grid_from_span(-x_max, x_max, x_step), method="czt")


def gevrey_input(step: float = 2.0**-11) -> SampledSignal:
    """100 (1 + x^2) times a Gevrey bump on [0, 1], sampled on [-0.5, 1.5]."""
    from .signal_core import grid_from_span

    g = grid_from_span(-0.5, 1.5, step)
    return sample(lambda x: 100.0 * (1 + x * x) * gevrey_bump(x), g)


def corpus_signal(name: str) -> SampledSignal:
    """Named reference signals for the command line (corpus:NAME)."""
    from .signal_core import gaussian, grid_from_span

    if name == "gauss":
        return gaussian(grid_from_span(-12.0, 12.0, 0.01))
    if name == "cauchy":
        return cauchy_signal(1j, grid_from_span(-50.0, 50.0, 0.01))
    if name == "fat-cantor":
        return fat_cantor_indicator(grid_from_span(-0.25, 1.25, 2.0**-12))
    if name == "gevrey":
        return gevrey_input()
    if name == "stretched":
        return stretched_signal()
    raise KeyError(f"unknown corpus signal {name!r}; choose gauss, cauchy, fat-cantor, gevrey or stretched")
