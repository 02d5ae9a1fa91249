"""Bounded multipliers that tame a growing function while keeping its spectral tail.

For f of tempered growth, m = Phi * conj(h_*) where Phi is a rational kernel
with spectrum on the negative half-line, h is the outer function with
|h| = min(1, 1/|f|) and h_* = h / (x + i)^2. Then mf is bounded and
integrable, m has spectrum on the negative half-line, so the positive-side
tail of (mf)^ is governed by that of f^. Clumps of mf are clumps of f,
because log|m| is locally integrable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .decay_clump import (
    ClumpReport,
    DecayProfile,
    decay_profile,
    detect_clumps,
    fit_stretched_decay,
    truncated_log_integral,
)
from .errors import HypothesisNotMet, InvalidArgument, InvalidInput
from .hardy import BoundaryModulus, outer_boundary, outer_function
from .signal_core import (
    NO_TAIL,
    SQRT_2PI,
    Grid,
    SampledSignal,
    forward_transform,
    make_grid,
    pole_tail,
    sample,
)

BOUNDARY_HEIGHT = 1e-10
BOUNDARY_SLACK = 1e-6  # relative error of boundary values read at BOUNDARY_HEIGHT
MIN_DECAY_EXPONENT = 0.45
MIN_LOG_DROP = 1.0  # tail mass must fall by at least a factor e across the fit window
NEGLIGIBLE_TAIL = 1e-8  # relative to the whole one-sided mass; sampled transforms bottom out near here


def phi_kernel(n: int):
    """Phi(x) = (-i)^n n! / (sqrt(2 pi) (x - i)^n) and its transform n |zeta|^(n-1) e^zeta on zeta < 0.

    Returns a pair of callables.
    """
    n = int(n)
    if n < 1:
        raise InvalidArgument("order n must be at least 1")
    coef = (-1j) ** n * math.factorial(n) / SQRT_2PI

    def Phi(x):
        return coef / (np.asarray(x) - 1j) ** n

    def Phi_hat(zeta):
        z = np.asarray(zeta, dtype=float)
        neg = z < 0
        return np.where(neg, n * np.abs(np.where(neg, z, 0.0)) ** (n - 1) * np.exp(np.where(neg, z, 0.0)), 0.0)

    return Phi, Phi_hat


def phi_signal(n: int, grid: Grid, terms: int = 10) -> SampledSignal:
    """Phi sampled on a grid with its Laurent tail, ready for forward_transform."""
    Phi, _ = phi_kernel(n)
    coef = (-1j) ** n * math.factorial(n) / SQRT_2PI
    return sample(Phi, grid, pole_tail(coef, 1j, n, terms))


def phi_abs_integral(n: int) -> float:
    """int |Phi| dx = n! / sqrt(2 pi) * sqrt(pi) Gamma((n-1)/2) / Gamma(n/2); infinite for n = 1."""
    if n < 2:
        return math.inf
    return math.factorial(n) / SQRT_2PI * math.sqrt(math.pi) * math.gamma((n - 1) / 2) / math.gamma(n / 2)


# --- taming outer function -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TamingOuter:
    """Outer h with log|h| = -log+|f|, stored on the window where |f| > 1."""

    modulus: Optional[BoundaryModulus]

    def __call__(self, z) -> complex:
        if self.modulus is None:
            return 1.0 + 0j
        return outer_function(self.modulus, z)

    def boundary(self, x, y0: float = BOUNDARY_HEIGHT) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.modulus is None:
            return np.ones(x.shape, complex)
        return outer_boundary(self.modulus, x, y0)


def taming_outer(f: SampledSignal, tail_log_abs: Optional[Callable] = None) -> TamingOuter:
    """Outer function with boundary modulus min(1, 1/|f|).

    ``tail_log_abs`` gives log|f| beyond the grid when |f| exceeds 1 there;
    otherwise |f| <= 1 is assumed outside the samples.
    """
    a = np.abs(f.values)
    if np.any(np.isnan(a)) or np.any(np.isinf(a)):
        raise InvalidInput("f must be finite on the grid")
    with np.errstate(divide="ignore"):
        lp = np.maximum(np.log(a), 0.0)
    tail = None if tail_log_abs is None else (lambda t: -max(float(tail_log_abs(t)), 0.0))
    on = np.nonzero(lp > 0)[0]
    if len(on) == 0 and tail is None:
        return TamingOuter(None)
    if len(on):
        i0, i1 = max(on[0] - 1, 0), min(on[-1] + 1, len(lp) - 1)
        if tail is not None:
            i0, i1 = 0, len(lp) - 1
    else:
        i0, i1 = 0, len(lp) - 1
    vals = -lp[i0 : i1 + 1]
    start = f.grid.start + i0 * f.grid.step
    if tail is None:
        # one zero sample past each end keeps the grid ends interior nodes of
        # the interpolant, so the boundary limit there is the sample itself
        vals = np.concatenate([[0.0], vals, [0.0]])
        start -= f.grid.step
    g = make_grid(start, f.grid.step, len(vals))
    log_w = SampledSignal(g, vals)
    return TamingOuter(BoundaryModulus.from_log(log_w, tail))


# --- bundle ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TemperedInput:
    f: SampledSignal
    n: int = 2
    fhat: Optional[Callable] = None
    tail_log_abs: Optional[Callable] = None

    def __post_init__(self):
        if self.n < 1:
            raise InvalidArgument("growth order must be at least 1")
        a = np.abs(self.f.values)
        if not np.all(np.isfinite(a)):
            raise InvalidInput("f must be finite on the grid")

    def growth_integral(self) -> float:
        """int |f| / (1 + |x|)^n over the grid."""
        x = self.f.x
        return float(np.dot(np.abs(self.f.values) / (1 + np.abs(x)) ** self.n, self.f.grid.trapezoid_weights()))


@dataclass(frozen=True, eq=False)
class MultiplierBundle:
    n: int
    x: np.ndarray
    Phi: np.ndarray
    h: np.ndarray
    h_star: np.ndarray
    m: np.ndarray
    mf: SampledSignal
    outer: TamingOuter
    checks: dict = field(default_factory=dict)


def build_multiplier(inp: TemperedInput, y0: float = BOUNDARY_HEIGHT) -> MultiplierBundle:
    """m = Phi * conj(h / (x + i)^2) on the grid of f, with mf and property checks.

    n = 1 is allowed: Phi itself is not integrable then, but m still decays
    like |x|^-3. The check ``phi_integrable`` records which case applies.
    """
    f = inp.f
    x = f.x
    Phi, _ = phi_kernel(inp.n)
    outer = taming_outer(f, inp.tail_log_abs)
    hb = outer.boundary(x, y0)
    hs = hb / (x + 1j) ** 2
    ph = Phi(x)
    m = ph * np.conj(hs)
    mf = m * f.values
    absf = np.abs(f.values)
    bound_m = np.abs(ph) / np.abs(x + 1j) ** 2
    bound_mf = bound_m * np.minimum(absf, 1.0)
    wts = f.grid.trapezoid_weights()
    lm = np.log(np.maximum(np.abs(m), 1e-300))
    checks = {
        "h_le_1": bool(np.all(np.abs(hb) <= 1 + BOUNDARY_SLACK)),
        "m_le_bound": bool(np.all(np.abs(m) <= bound_m * (1 + BOUNDARY_SLACK))),
        "mf_le_bound": bool(np.all(np.abs(mf) <= bound_mf * (1 + BOUNDARY_SLACK) + 1e-300)),
        "m_nonzero": bool(np.all(np.abs(m) > 0)),
        "sup_mf": float(np.max(np.abs(mf))),
        "l1_mf": float(np.dot(np.abs(mf), wts)),
        "l2_mf": float(math.sqrt(np.dot(np.abs(mf) ** 2, wts))),
        "log_m_integral": float(np.dot(lm, wts)),
        "trivial": bool(not np.any(absf)),
        "phi_integrable": inp.n >= 2,
    }
    return MultiplierBundle(inp.n, x, ph, hb, hs, m, f.with_values(mf, NO_TAIL), outer, checks)


# --- decay ----------------------------------------------------------------------------


def _spectrum(inp: TemperedInput, zeta_grid: Grid) -> np.ndarray:
    if inp.fhat is not None:
        return np.asarray(inp.fhat(zeta_grid.points), dtype=complex) * np.ones(zeta_grid.count)
    return forward_transform(inp.f, zeta_grid, method="czt").values


def _fit_tail(values: np.ndarray, zeta_grid: Grid, fit_points: np.ndarray, beyond: float = 0.0):
    """Stretched-exponential fit of the tail mass at ``fit_points``.

    Points where the tail mass is negligible against the whole one-sided
    mass are dropped; when fewer than 8 remain the spectrum counts as
    compactly supported and the fit reports a = c = inf.
    """
    spec = SampledSignal(zeta_grid, values)
    prof = decay_profile(spec, fit_points)
    prof = DecayProfile(prof.x, prof.rho + beyond)
    total = float(np.dot(np.abs(values), zeta_grid.trapezoid_weights())) + beyond
    live = prof.rho > NEGLIGIBLE_TAIL * total
    out = {"rho": prof.rho.tolist(), "compact": False}
    if live.sum() < 8:
        return {**out, "c": math.inf, "a": math.inf, "r2": 1.0, "compact": True}
    c, a, r2 = fit_stretched_decay(DecayProfile(prof.x[live], prof.rho[live]))
    return {**out, "c": c, "a": a, "r2": r2}


def _sampled_tail_beyond(values: np.ndarray, zeta_grid: Grid, start: float, blocks: int = 16) -> float:
    """Mass of |F| past the grid end from a power-law fit to block maxima on [start, end].

    A sampled spectrum is truncated at the grid end, which makes a slow tail
    look fast. Returns inf when the fitted power is <= 1 (tail not integrable).
    """
    z = zeta_grid.points
    keep = z >= start
    q, z = np.abs(np.asarray(values))[keep], z[keep]
    if len(q) < 2 * blocks:
        return 0.0
    chunks = np.array_split(np.arange(len(q)), blocks)
    env = np.array([q[c].max() for c in chunks])
    zc = np.array([z[c].mean() for c in chunks])
    ok = env > 0
    if ok.sum() < 4 or zc[0] <= 0:
        return 0.0
    slope, icpt = np.polyfit(np.log(zc[ok]), np.log(env[ok]), 1)
    p = -slope
    if p <= 1.0:
        return math.inf
    return float(math.exp(icpt) * zeta_grid.stop ** (1 - p) / (p - 1))


def check_decay_hypothesis(inp: TemperedInput, zeta_grid: Grid, fit_points) -> dict:
    """Fit the one-sided tail of f^; raise HypothesisNotMet unless the exponent is near 1/2 or larger."""
    F = _spectrum(inp, zeta_grid)
    beyond = 0.0
    if inp.fhat is not None:
        # a closed-form spectrum keeps its mass past the grid
        beyond = integrate.quad(lambda t: abs(complex(inp.fhat(np.array([t]))[0])), zeta_grid.stop, np.inf, limit=200)[0]
    else:
        beyond = _sampled_tail_beyond(F, zeta_grid, float(np.max(fit_points)))
    if not math.isfinite(beyond):
        raise HypothesisNotMet("spectral tail of f is not integrable (power-law decay of order <= 1)")
    fit = _fit_tail(F, zeta_grid, np.asarray(fit_points, float), beyond)
    fit["mass_beyond_grid"] = beyond
    drop = math.log(fit["rho"][0] / fit["rho"][-1]) if fit["rho"][-1] > 0 else math.inf
    fit["log_drop"] = drop
    if not drop >= MIN_LOG_DROP:
        raise HypothesisNotMet(f"spectral tail mass of f falls by only a factor {math.exp(drop):.3g} over the fit window")
    if not fit["a"] >= MIN_DECAY_EXPONENT:
        raise HypothesisNotMet(f"spectral tail of f decays with fitted exponent {fit['a']:.3g} < {MIN_DECAY_EXPONENT}")
    return fit


def multiplier_decay_check(inp: TemperedInput, bundle: MultiplierBundle, zeta_grid: Grid, fit_points) -> dict:
    """Fitted stretched-exponential tails of f^ and (mf)^ on zeta >= 0."""
    fit_in = check_decay_hypothesis(inp, zeta_grid, fit_points)
    G = forward_transform(bundle.mf, zeta_grid, method="czt").values
    fit_out = _fit_tail(G, zeta_grid, np.asarray(fit_points, float))
    return {
        "input": fit_in,
        "output": fit_out,
        "d_over_c": fit_out["c"] / fit_in["c"] if math.isfinite(fit_in["c"]) and fit_in["c"] else math.nan,
        "passed": fit_out["a"] >= MIN_DECAY_EXPONENT,
    }


# --- clump pipeline ----------------------------------------------------------------------


@dataclass
class PipelineReport:
    clumps: Optional[ClumpReport]
    hypothesis: Optional[dict]
    log_m_evidence: list
    checks: dict
    notes: list

    def to_dict(self) -> dict:
        return {
            "clumps": None if self.clumps is None else self.clumps.to_dict(),
            "hypothesis": self.hypothesis,
            "log_m_evidence": self.log_m_evidence,
            "checks": self.checks,
            "notes": self.notes,
        }


def _log_m_evidence(bundle: MultiplierBundle, cutoffs: Sequence[float], cells: int = 8) -> list:
    """Truncated integrals of log|m| on dyadic cells of the grid span: they stabilise."""
    x = bundle.x
    lo, hi = x[0], x[-1]
    sig = bundle.mf.with_values(bundle.m)
    rows = []
    L = (hi - lo) / cells
    for k in range(cells):
        a, b = lo + k * L, lo + (k + 1) * L
        vals = [truncated_log_integral(sig, (a, b), T) for T in cutoffs]
        rows.append({"interval": [a, b], "ladder": vals, "stable": abs(vals[-1] - vals[-2]) < 1e-9 * max(1.0, abs(vals[-1]))})
    return rows


def distributional_clump_pipeline(
    inp: TemperedInput,
    zeta_grid: Optional[Grid] = None,
    fit_points=None,
    depth: int = 6,
    cutoffs: Sequence[float] = tuple(float(2**k) for k in range(1, 9)),
) -> PipelineReport:
    """Clumps of f read off from mf after checking the spectral-decay hypothesis."""
    if not np.any(np.abs(inp.f.values)):
        return PipelineReport(None, None, [], {"trivial": True}, ["f vanishes identically: nothing to clump"])
    zeta_grid = zeta_grid or make_grid(0.0, 0.05, 2001)
    fit_points = np.linspace(1.0, 0.5 * zeta_grid.stop, 40) if fit_points is None else fit_points
    hyp = check_decay_hypothesis(inp, zeta_grid, fit_points)
    bundle = build_multiplier(inp)
    rep = detect_clumps(bundle.mf, depth=depth, cutoffs=cutoffs)
    ev = _log_m_evidence(bundle, cutoffs)
    notes = []
    if not all(r["stable"] for r in ev):
        notes.append("log|m| ladder did not stabilise on every cell")
    return PipelineReport(rep, hyp, ev, bundle.checks, notes)
