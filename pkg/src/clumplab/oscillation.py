"""Oscillating outer functions that split a residual set from the half-plane.

Given a weight w with 0 <= w <= 1 and a bounded set F (a grid mask) on which
w stays above some delta, we cover the line by dyadic cells of length 2^-n.
In every cell meeting F we put negative mass -c_n spread evenly over the
cell's part of F, and balance it with positive mass c_n carved out of the
cell's complement of F where log(1/w) is large. The outer function with this
log-modulus is tiny on F, bounded near the real line by the oscillation
estimate, and close to a unimodular constant in the half-plane.

Measure conventions: grid sample j owns the cell [x_j - step/2, x_j + step/2];
all lengths and integrals are sums over (clipped) cells, so carved masses are
exact up to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .decay_clump import IntervalCollection
from .errors import CannotCarve, InvalidArgument
from .hardy import PiecewiseConstant, as_point, log_outer, poisson_extension
from .signal_core import SampledSignal

D_UPPER = 2.0**40
BISECTION_STEPS = 60


def default_c_sequence(ns: Sequence[int]) -> list:
    """c_n = 2^(-n/2): tends to zero while c_n 2^n grows without bound."""
    return [2.0 ** (-n / 2.0) for n in ns]


@dataclass(frozen=True, eq=False)
class ResidualContext:
    """Weight w, residual piece F (grid mask) and exponent p > 2."""

    w: SampledSignal
    F_mask: np.ndarray
    p: float = 3.0
    delta: float = 0.5
    m_index: int = 1

    def __post_init__(self):
        mask = np.asarray(self.F_mask, dtype=bool)
        if mask.shape != (self.w.grid.count,):
            raise InvalidArgument("F mask must match the weight grid")
        object.__setattr__(self, "F_mask", mask)
        wv = self.w.values.real
        if np.any(wv < 0) or np.any(wv > 1):
            raise InvalidArgument("w must take values in [0, 1]")
        if not self.p > 2:
            raise InvalidArgument("p must exceed 2")
        if np.any(wv[mask] <= self.delta):
            raise InvalidArgument("w must exceed delta on F")

    def cells(self):
        x = self.w.x
        h = self.w.grid.step
        return x - 0.5 * h, x + 0.5 * h

    def log_plus_over_p(self) -> np.ndarray:
        wv = self.w.values.real
        with np.errstate(divide="ignore"):
            lg = -np.log(wv)
        return np.maximum(lg, 0.0) / self.p


def _clipped_lengths(a: np.ndarray, b: np.ndarray, lo: float, hi: float) -> np.ndarray:
    return np.clip(np.minimum(b, hi) - np.maximum(a, lo), 0.0, None)


class CarveResult(NamedTuple):
    D: float
    E: IntervalCollection
    density: PiecewiseConstant


def carve_subset(interval, F_mask, w: SampledSignal, c: float, p: float, D: Optional[float] = None) -> CarveResult:
    """Pick D and E inside interval minus F with int_E min(log+(1/w)/p, D) = c.

    Without an explicit D, bisection on [0, 2^40] finds the clamp at which the
    integral over interval minus F reaches 2c. E is then swept from left to
    right and cut exactly at mass c, the last cell being taken fractionally.
    """
    if not c > 0:
        raise InvalidArgument("c must be positive")
    lo, hi = float(interval[0]), float(interval[1])
    mask = np.asarray(F_mask, dtype=bool)
    h = w.grid.step
    a, b = w.x - 0.5 * h, w.x + 0.5 * h
    lens = _clipped_lengths(a, b, lo, hi)
    if float(np.sum(lens[mask])) <= 0:
        raise InvalidArgument("interval does not meet F")
    wv = w.values.real
    with np.errstate(divide="ignore"):
        g = np.maximum(-np.log(wv), 0.0) / p
    free = (~mask) & (lens > 0)
    idx = np.nonzero(free)[0]
    gi, li = g[idx], lens[idx]

    def mass(Dv):
        return float(np.sum(np.minimum(gi, Dv) * li))

    if D is None:
        if mass(D_UPPER) < 2 * c:
            raise CannotCarve(f"clamped log integral saturates below {2 * c:.6g} on ({lo}, {hi})")
        dl, du = 0.0, D_UPPER
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (dl + du)
            if mass(mid) < 2 * c:
                dl = mid
            else:
                du = mid
        D = du
    elif mass(D) < c:
        raise CannotCarve(f"clamp D = {D} gives mass below c = {c}")
    vals = np.minimum(gi, D)
    contrib = vals * li
    cum = np.cumsum(contrib)
    k = int(np.searchsorted(cum, c))
    k = min(k, len(idx) - 1)
    before = cum[k - 1] if k > 0 else 0.0
    theta = (c - before) / contrib[k]
    lo_c = np.maximum(a[idx[: k + 1]], lo)
    hi_c = np.minimum(b[idx[: k + 1]], hi)
    hi_c[-1] = lo_c[-1] + theta * (hi_c[-1] - lo_c[-1])
    dens = PiecewiseConstant(lo_c, hi_c, vals[: k + 1])
    E = IntervalCollection.merged(zip(lo_c.tolist(), hi_c.tolist()), gap=1e-9 * h)
    return CarveResult(float(D), E, dens)


@dataclass
class SignedDensityMeasure:
    """Piecewise-constant log W with per-cell balance records."""

    density: PiecewiseConstant
    cells: list = field(default_factory=list)
    c_n: float = 0.0
    n: int = 0

    def per_cell_bound(self) -> float:
        return max((cell["variation"] for cell in self.cells), default=0.0)

    def boundary_log_modulus(self, x) -> np.ndarray:
        return self.density.evaluate(x)

    def to_dict(self) -> dict:
        d = self.density
        return {
            "n": self.n,
            "c_n": self.c_n,
            "pieces": [[float(a), float(b), float(v)] for a, b, v in zip(d.lo, d.hi, d.values)],
            "cells": self.cells,
        }


def build_oscillating_density(ctx: ResidualContext, n: int, c_n: float, origin: float = 0.0) -> SignedDensityMeasure:
    """log W = sum_k min(log+(1/w)/p, D_k) 1_{E_k} - c_n / |l_k & F| 1_{l_k & F}."""
    if c_n < 0:
        raise InvalidArgument("c_n must be non-negative")
    empty = PiecewiseConstant([], [], [])
    if c_n == 0:
        return SignedDensityMeasure(empty, [], 0.0, n)
    L = 2.0 ** (-n)
    a, b = ctx.cells()
    mask = ctx.F_mask
    if not mask.any():
        return SignedDensityMeasure(empty, [], c_n, n)
    k0 = math.floor((a[mask].min() - origin) / L)
    k1 = math.floor((b[mask].max() - origin) / L)
    los, his, vs, cells = [], [], [], []
    for k in range(k0, k1 + 1):
        lo, hi = origin + k * L, origin + (k + 1) * L
        lens = _clipped_lengths(a, b, lo, hi)
        fl = lens * mask
        fmeas = float(math.fsum(fl))
        if fmeas <= 0:
            continue
        carve = carve_subset((lo, hi), mask, ctx.w, c_n, ctx.p)
        sel = fl > 0
        neg_lo = np.maximum(a[sel], lo)
        neg_hi = np.minimum(b[sel], hi)
        neg_v = np.full(neg_lo.shape, -c_n / fmeas)
        los += [carve.density.lo, neg_lo]
        his += [carve.density.hi, neg_hi]
        vs += [carve.density.values, neg_v]
        pos = math.fsum(carve.density.values * (carve.density.hi - carve.density.lo))
        neg = math.fsum(neg_v * (neg_hi - neg_lo))
        cells.append(
            {
                "interval": [lo, hi],
                "D": carve.D,
                "F_measure": fmeas,
                "net": pos + neg,
                "variation": pos - neg,
            }
        )
    dens = PiecewiseConstant(np.concatenate(los), np.concatenate(his), np.concatenate(vs))
    return SignedDensityMeasure(dens, cells, c_n, n)


def multiplier_element(density, z) -> complex:
    """h_n(z): the outer function whose log-modulus is the signed density."""
    d = density.density if isinstance(density, SignedDensityMeasure) else density
    if len(d.values) == 0:
        return 1.0 + 0j
    return complex(np.exp(log_outer(d, z)))


def oscillation_bound_check(density, z_list, C: Optional[float] = None) -> dict:
    """Check |P_mu(z)| <= C / (pi y) at every probe point.

    C defaults to the largest per-cell total variation of the density.
    """
    if isinstance(density, SignedDensityMeasure):
        d = density.density
        C = density.per_cell_bound() if C is None else C
    else:
        d = density
        if C is None:
            raise InvalidArgument("C is required for a bare density")
    rows, violations = [], 0
    for z in z_list:
        p = as_point(z)
        val = poisson_extension(d, p) if len(d.values) else 0.0
        bound = C / (math.pi * p.y)
        ok = abs(val) <= bound * (1 + 1e-12)
        violations += not ok
        rows.append({"x": p.x, "y": p.y, "value": val, "bound": bound, "ok": ok})
    return {"C": C, "violations": violations, "rows": rows}


def splitting_conditions_report(
    ctx: ResidualContext,
    n_list: Sequence[int],
    c_sequence: Optional[Sequence[float]] = None,
    z_probes=None,
    slack: float = 1e-6,
) -> dict:
    """Verify the four splitting conditions for the constructed h_n.

    (i)   |h_n(z)| <= e^{2 c_n / (pi y)} at the probes (two-sided bound recorded);
    (ii)  boundary |h_n| <= e^{-c_n 2^n} on F;
    (iii) after fixing the phase at z = i, max_z |h_n(z) - 1| decreases in n;
    (iv)  |h_n|^p w <= 1 off F.
    """
    n_list = list(n_list)
    c_sequence = default_c_sequence(n_list) if c_sequence is None else list(c_sequence)
    if len(c_sequence) != len(n_list) or any(c <= 0 for c in c_sequence):
        raise InvalidArgument("need one positive c_n per n")
    if z_probes is None:
        z_probes = [complex(x, y) for x in (-1.0, 0.25, 0.5, 1.0, 2.0) for y in (0.05, 0.2, 1.0)]
    notes = []
    prod = [c * 2.0**n for c, n in zip(c_sequence, n_list)]
    seq_ok = all(b < a for a, b in zip(c_sequence, c_sequence[1:])) and all(
        b > a for a, b in zip(prod, prod[1:])
    )
    if not seq_ok:
        notes.append("c_n is not decreasing with c_n 2^n increasing on the given list")
    x = ctx.w.x
    mask = ctx.F_mask
    wv = ctx.w.values.real
    if not mask.any():
        notes.append("F has zero grid measure: condition (ii) is vacuous")
    rows, devs = [], []
    for n, c in zip(n_list, c_sequence):
        dens = build_oscillating_density(ctx, n, c)
        # (i) two-sided bound from the oscillation estimate
        i_ok = True
        worst_i = 0.0
        logs = []
        for z in z_probes:
            lg = log_outer(dens.density, z) if len(dens.density.values) else 0j
            logs.append(lg)
            p = as_point(z)
            allowed = 2 * c / (math.pi * p.y)
            worst_i = max(worst_i, abs(lg.real) / allowed)
            i_ok &= abs(lg.real) <= allowed * (1 + slack)
        # (ii) boundary modulus on F
        lb = dens.boundary_log_modulus(x)
        if mask.any():
            ii_val = float(np.max(lb[mask]))
            ii_ok = ii_val <= -c * 2.0**n + slack
        else:
            ii_val, ii_ok = float("nan"), True
        # (iii) renormalise the phase at z = i
        base = log_outer(dens.density, 1j) if len(dens.density.values) else 0j
        dev = max(abs(np.exp(lg - 1j * base.imag) - 1.0) for lg in logs)
        devs.append(float(dev))
        # (iv) |h_n|^p w off F
        off = ~mask
        with np.errstate(over="ignore", invalid="ignore"):
            prod_iv = np.exp(ctx.p * lb[off]) * wv[off]
        # w = 0 kills any growth of |h_n|^p there
        prod_iv = np.where(wv[off] == 0, 0.0, prod_iv)
        iv_val = float(np.max(prod_iv)) if off.any() else 0.0
        iv_ok = iv_val <= 1 + slack
        balance = max((abs(cell["net"]) for cell in dens.cells), default=0.0)
        var_err = max((abs(cell["variation"] - 2 * c) for cell in dens.cells), default=0.0)
        rows.append(
            {
                "n": n,
                "c_n": c,
                "active_cells": len(dens.cells),
                "max_cell_net": balance,
                "max_variation_error": var_err,
                "i_ratio": worst_i,
                "i": bool(i_ok),
                "ii_max_log_modulus_on_F": ii_val,
                "ii_allowed": -c * 2.0**n,
                "ii": bool(ii_ok),
                "iii_deviation": float(dev),
                "iv_max": iv_val,
                "iv": bool(iv_ok),
            }
        )
    # (iii): deviations must shrink overall and never grow by more than 10%
    iii_ok = len(devs) < 2 or (
        devs[-1] <= 0.5 * devs[0] and all(b <= 1.1 * a for a, b in zip(devs, devs[1:]))
    )
    if not iii_ok:
        notes.append("condition (iii) fails: h_n(z) does not approach 1")
    for r in rows:
        r["iii"] = bool(iii_ok)
    passed = all(r["i"] and r["ii"] and r["iv"] for r in rows) and iii_ok
    return {
        "n_list": n_list,
        "c_sequence": c_sequence,
        "sequence_ok": seq_ok,
        "rows": rows,
        "iii_deviations": devs,
        "passed": bool(passed),
        "notes": notes,
    }
