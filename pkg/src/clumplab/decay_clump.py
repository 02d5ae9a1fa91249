"""One-sided tail mass, stretched-exponential fits and clump detection.

A clump of f is an interval on which log|f| is integrable. On a grid this is
only a semi-decision: we integrate max(log|f|, -T) over dyadic cells for a
ladder of cutoffs T and call a cell convergent when the integrals stop
moving. Cells on which |f| vanishes on a set of measure m lose about m per
unit of T, so the slope of the ladder measures how much of the cell is
missing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import DegenerateInput, InvalidArgument
from .signal_core import SampledSignal

DEFAULT_CUTOFFS = tuple(float(2**k) for k in range(1, 9))
DEFAULT_SLOPE_THRESHOLD = 0.02
DEFAULT_FLOOR = 1e-12


# --- tail mass ------------------------------------------------------------


def _abs_tail_beyond(f: SampledSignal) -> float:
    """int over x > grid end of |tail model| (exact for exponential tails)."""
    t = f.tail
    if t.kind == "none" or not t.right:
        return 0.0
    if t.kind == "exponential":
        return abs(t.right[0]) / t.rate
    X = f.grid.stop
    n = t.exponent
    if X <= 0:
        raise InvalidArgument("rational tail needs a positive grid end")
    lead = next((k for k, c in enumerate(t.right) if abs(c) > 0), None)
    if lead is None:
        return 0.0
    if n + lead <= 1:
        return math.inf
    cs = np.array(t.right)
    ms = n + np.arange(len(cs))

    def g(u):
        # substitute x = X / u, dx = X du / u^2
        xv = X / u
        return abs(np.sum(cs * xv ** (-ms.astype(float)))) * X / u**2

    val, _ = integrate.quad(g, 0.0, 1.0, limit=200, epsabs=0, epsrel=1e-12)
    return float(val)


def tail_mass(f: SampledSignal, x: float) -> float:
    """rho_f(x) = int_x^inf |f(t)| dt (trapezoid plus closed-form tail)."""
    return float(tail_mass_profile(f, np.array([x]))[0])


def tail_mass_profile(f: SampledSignal, xs) -> np.ndarray:
    """Vectorised tail mass at each point of ``xs``.

    Points left of the grid start are clamped to the start; the sampled part
    uses the cumulative trapezoid rule with linear interpolation inside the
    first partial cell.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    a = f.abs()
    h = f.grid.step
    seg = 0.5 * h * (a[1:] + a[:-1])
    # right_cum[j] = int_{x_j}^{end}
    right_cum = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    beyond = _abs_tail_beyond(f)
    u = (np.clip(xs, f.grid.start, f.grid.stop) - f.grid.start) / h
    j = np.minimum(np.floor(u).astype(int), f.grid.count - 2)
    t = u - j
    # partial cell from x to x_{j+1} with the linear interpolant
    aj, aj1 = a[j], a[j + 1]
    ax = aj + t * (aj1 - aj)
    partial = 0.5 * (1 - t) * h * (ax + aj1)
    out = partial + right_cum[j + 1] + beyond
    out = np.where(xs >= f.grid.stop, beyond, out)
    return out


@dataclass
class DecayProfile:
    """Samples of a one-sided tail mass with an optional stretched fit."""

    x: np.ndarray
    rho: np.ndarray
    fitted: Optional[tuple] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        if self.x.shape != self.rho.shape:
            raise InvalidArgument("x and rho must have equal length")
        if np.any(np.diff(self.x) < 0):
            raise InvalidArgument("profile samples must be sorted in x")

    def to_dict(self) -> dict:
        d = {"x": self.x.tolist(), "rho": self.rho.tolist()}
        if self.fitted is not None:
            d["fit"] = dict(zip(("c", "a", "r2"), self.fitted))
        return d


def decay_profile(f: SampledSignal, xs) -> DecayProfile:
    return DecayProfile(np.asarray(xs, dtype=float), tail_mass_profile(f, xs))


DEFAULT_A_GRID = tuple(np.round(np.arange(5, 101) / 100.0, 12))


def fit_stretched_decay(profile: DecayProfile, a_grid: Sequence[float] = DEFAULT_A_GRID):
    """Fit log rho ~ log A - c x**a, choosing a from ``a_grid`` by best r^2.

    Returns
    -------
    (c, a, r2)
        Decay rate, stretching exponent and coefficient of determination.
    """
    mask = (profile.rho > 0) & np.isfinite(profile.rho)
    if not np.any(profile.rho > 0):
        raise DegenerateInput("all tail masses are zero")
    if mask.sum() < 8:
        raise DegenerateInput("need at least 8 samples with positive tail mass")
    x = profile.x[mask]
    y = np.log(profile.rho[mask])
    best = None
    for a in a_grid:
        u = x**a
        A = np.vstack([np.ones_like(u), u]).T
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
        c = -float(coef[1])
        if c <= 0:
            continue
        if best is None or r2 > best[2] + 1e-15:
            best = (c, float(a), r2)
    if best is None:
        raise DegenerateInput("no candidate exponent gives a decaying fit")
    profile.fitted = best
    return best


# --- interval collections --------------------------------------------------


@dataclass
class IntervalCollection:
    """Finite union of disjoint open intervals, sorted by left end."""

    intervals: list = field(default_factory=list)

    def __post_init__(self):
        iv = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in iv:
            if not a < b:
                raise InvalidArgument(f"empty interval ({a}, {b})")
        for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
            if a1 < b0:
                raise InvalidArgument("intervals overlap")
        self.intervals = iv

    @staticmethod
    def merged(pieces, gap: float = 0.0) -> "IntervalCollection":
        """Union of possibly overlapping or touching intervals.

        Pieces separated by at most ``gap`` are joined (absorbs rounding).
        """
        out = []
        for a, b in sorted(pieces):
            if b <= a:
                continue
            if out and a <= out[-1][1] + gap:
                out[-1] = (out[-1][0], max(out[-1][1], b))
            else:
                out.append((a, b))
        return IntervalCollection(out)

    def measure(self) -> float:
        return math.fsum(b - a for a, b in self.intervals)

    def intersect(self, other: "IntervalCollection") -> "IntervalCollection":
        out, i, j = [], 0, 0
        A, B = self.intervals, other.intervals
        while i < len(A) and j < len(B):
            lo, hi = max(A[i][0], B[j][0]), min(A[i][1], B[j][1])
            if lo < hi:
                out.append((lo, hi))
            if A[i][1] < B[j][1]:
                i += 1
            else:
                j += 1
        return IntervalCollection(out)

    def difference_measure(self, other: "IntervalCollection") -> float:
        """|self minus other|."""
        return self.measure() - self.intersect(other).measure()

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (x > a) & (x < b)
        return out

    def covers(self, x) -> np.ndarray:
        """Closed-interval membership."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (x >= a) & (x <= b)
        return out

    def __len__(self):
        return len(self.intervals)

    def to_list(self) -> list:
        return [[a, b] for a, b in self.intervals]


def mask_to_intervals(x: np.ndarray, mask: np.ndarray, step: float, lo=None, hi=None) -> IntervalCollection:
    """Grid mask to intervals: sample j owns [x_j - step/2, x_j + step/2]."""
    lo = x[0] if lo is None else lo
    hi = x[-1] if hi is None else hi
    out = []
    m = np.concatenate([[False], np.asarray(mask, bool), [False]])
    d = np.diff(m.astype(int))
    starts = np.nonzero(d == 1)[0]
    ends = np.nonzero(d == -1)[0] - 1
    for s, e in zip(starts, ends):
        a = max(x[s] - 0.5 * step, lo)
        b = min(x[e] + 0.5 * step, hi)
        if a < b:
            out.append((a, b))
    return IntervalCollection(out)


# --- truncated log integrals ------------------------------------------------


def _clamped_log(absvals: np.ndarray, T: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        lg = np.log(absvals)
    return np.maximum(lg, -T)


def truncated_log_integral(f: SampledSignal, interval, T: float) -> float:
    """int_I max(log|f|, -T) dx by the trapezoid rule.

    Interior grid points are used as nodes; the interval end points are
    added with linearly interpolated clamped logarithms.
    """
    if T <= 0:
        raise InvalidArgument("cutoff T must be positive")
    lo, hi = float(interval[0]), float(interval[1])
    g = f.grid
    if lo < g.start - 1e-12 * g.step or hi > g.stop + 1e-12 * g.step or not lo < hi:
        raise InvalidArgument("interval must lie inside the grid")
    x = f.x
    v = _clamped_log(f.abs(), T)
    inside = (x > lo) & (x < hi)
    xi = np.concatenate([[lo], x[inside], [hi]])
    vi = np.concatenate([[np.interp(lo, x, v)], v[inside], [np.interp(hi, x, v)]])
    return float(np.sum(0.5 * np.diff(xi) * (vi[1:] + vi[:-1])))


def _cell_log_integrals(f: SampledSignal, depth: int, cutoffs) -> tuple:
    """Truncated log integrals of every dyadic cell for every cutoff.

    Uses a cumulative trapezoid over grid nodes with linear interpolation at
    cell edges, which matches ``truncated_log_integral`` cell by cell.
    """
    g = f.grid
    edges = g.start + (g.stop - g.start) * np.arange(2**depth + 1) / 2**depth
    x = f.x
    a = f.abs()
    table = np.empty((2**depth, len(cutoffs)))
    for k, T in enumerate(cutoffs):
        v = _clamped_log(a, T)
        cum = np.concatenate([[0.0], np.cumsum(0.5 * g.step * (v[1:] + v[:-1]))])
        # integral from start to e via the cumulative sum and a partial cell
        u = (edges - g.start) / g.step
        j = np.minimum(np.floor(u + 1e-9).astype(int), g.count - 2)
        t = np.clip(u - j, 0.0, 1.0)
        ve = v[j] + t * (v[j + 1] - v[j])
        F = cum[j] + 0.5 * t * g.step * (v[j] + ve)
        table[:, k] = np.diff(F)
    return edges, table


@dataclass
class CellDiagnostic:
    interval: tuple
    values: list
    verdict: str

    def to_dict(self) -> dict:
        return {"interval": list(self.interval), "values": self.values, "verdict": self.verdict}


@dataclass
class ClumpReport:
    clumps: IntervalCollection
    support_estimate: IntervalCollection
    residual_measure: float
    diagnostics: list
    depth: int = 0
    cutoffs: tuple = ()
    slope_threshold: float = DEFAULT_SLOPE_THRESHOLD

    def verdicts(self) -> list:
        return [d.verdict for d in self.diagnostics]

    def to_dict(self) -> dict:
        return {
            "clumps": self.clumps.to_list(),
            "support_estimate": self.support_estimate.to_list(),
            "residual_measure": self.residual_measure,
            "depth": self.depth,
            "cutoffs": list(self.cutoffs),
            "slope_threshold": self.slope_threshold,
            "cells": [d.to_dict() for d in self.diagnostics],
        }

    def table(self) -> str:
        lines = [f"{'interval':>28}  {'verdict':>10}  {'L[-2]':>12}  {'L[-1]':>12}"]
        for d in self.diagnostics:
            a, b = d.interval
            lines.append(
                f"({a:12.6g}, {b:12.6g})  {d.verdict:>10}  {d.values[-2]:12.6g}  {d.values[-1]:12.6g}"
            )
        lines.append(f"clumps: {self.clumps.to_list()}")
        lines.append(f"residual measure: {self.residual_measure:.6g}")
        return "\n".join(lines)


def support_estimate(f: SampledSignal, floor: float = DEFAULT_FLOOR) -> IntervalCollection:
    """{|f| > floor * max|f|} at grid resolution."""
    a = f.abs()
    top = a.max()
    if top == 0:
        return IntervalCollection([])
    return mask_to_intervals(f.x, a > floor * top, f.grid.step, f.grid.start, f.grid.stop)


def detect_clumps(
    f: SampledSignal,
    depth: int = 8,
    cutoffs: Sequence[float] = DEFAULT_CUTOFFS,
    slope_threshold: float = DEFAULT_SLOPE_THRESHOLD,
    floor: float = DEFAULT_FLOOR,
) -> ClumpReport:
    """Dyadic clump detection on the grid span.

    A cell I is convergent when the last step of the cutoff ladder moves its
    truncated log integral by less than ``slope_threshold * (T[-1] - T[-2]) * |I|``.
    Scaling by the cell length makes the verdict monotone under refinement:
    the change per unit length of a cell is the mean of its children's, so a
    divergent cell always has a divergent child.
    The clump set is the union of convergent cells, merged and clipped to the
    numerical support {|f| > floor * max|f|}; the residual is the part of the
    support not covered by clumps.
    """
    cutoffs = [float(T) for T in cutoffs]
    if len(cutoffs) < 2 or any(b <= a for a, b in zip(cutoffs, cutoffs[1:])):
        raise InvalidArgument("cutoffs must be increasing with at least two entries")
    if not 0 <= depth <= 14:
        raise InvalidArgument("depth must be in [0, 14]")
    support = support_estimate(f, floor)
    if not support.intervals:
        empty = IntervalCollection([])
        return ClumpReport(empty, empty, 0.0, [], depth, tuple(cutoffs), slope_threshold)
    edges, table = _cell_log_integrals(f, depth, cutoffs)
    dT = cutoffs[-1] - cutoffs[-2]
    cell = (f.grid.stop - f.grid.start) / 2**depth
    diags, conv = [], []
    for i in range(2**depth):
        L = table[i]
        ok = abs(L[-1] - L[-2]) < slope_threshold * dT * cell
        iv = (float(edges[i]), float(edges[i + 1]))
        diags.append(CellDiagnostic(iv, [float(v) for v in L], "convergent" if ok else "divergent"))
        if ok:
            conv.append(iv)
    clumps = IntervalCollection.merged(conv).intersect(support)
    residual = support.difference_measure(clumps)
    return ClumpReport(clumps, support, max(residual, 0.0), diags, depth, tuple(cutoffs), slope_threshold)
