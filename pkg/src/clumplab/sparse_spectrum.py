"""Concave spectral weights, the Cantor-type set E, tent domains and
walk-on-spheres harmonic measure.

A concave weight M gives the spectral density rho = exp(-M). Its dual
M_*(y) = M(K(y)), K = (M')^{-1}, controls half-plane growth of functions
whose spectra are square-integrable against rho. When M_* is integrable at
zero, the budget H(y) = log(2C)/2 + M_*(y) - log y is integrable too and a
Cantor set whose gaps are small enough keeps the harmonic-measure integral of
H over the tents finite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from .decay_clump import IntervalCollection
from .errors import InvalidArgument, InvalidWeight, OutOfRange
from .hardy import as_point

CHECK_GRID = np.logspace(-6, 8, 200)
CHECK_SLACK = 1e-9
PATH_BLOCK = 4096
DEFAULT_SPLICE = math.exp(4.0)


# --- concave weights ------------------------------------------------------------


class ConcaveWeight:
    """Concave increasing M on [0, inf) with M(0) = 0, plus M', K and M_*.

    Parameters
    ----------
    family : "sqrt", "power", "sqrt-over-log" or "tabulated"
    params : dict of family parameters (see ``make_concave_weight``)
    """

    def __init__(self, family: str, params: dict, M, dM, K=None):
        self.family = family
        self.params = dict(params)
        self._M, self._dM, self._K = M, dM, K

    def M(self, x):
        return self._M(np.asarray(x, dtype=float))

    def dM(self, x):
        return self._dM(np.asarray(x, dtype=float))

    def K(self, y):
        """Inverse of M'. Vectorised; falls back to root finding in log x."""
        y = np.asarray(y, dtype=float)
        if self._K is not None:
            return self._K(y)
        out = np.array([self._K_scalar(v) for v in np.atleast_1d(y)])
        return out.reshape(y.shape)

    def _K_scalar(self, y: float) -> float:
        if not y > 0:
            raise OutOfRange("K is defined for y > 0 only")
        lo, hi = self.params.get("k_bracket", (-40.0, 200.0))
        g = lambda u: float(self._dM(np.exp(u))) - y
        if g(lo) < 0 or g(hi) > 0:
            raise OutOfRange(f"M'(x) = {y} has no solution in the supported range")
        u = optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
        return math.exp(u)

    def Mstar(self, y):
        return self.M(self.K(y))

    def to_dict(self) -> dict:
        return {"family": self.family, "params": {k: v for k, v in self.params.items() if k != "table"}}

    def check(self, grid=CHECK_GRID) -> dict:
        """Evaluate the structural invariants on a log grid; raise InvalidWeight on failure."""
        x = np.asarray(grid, dtype=float)
        if self.family == "tabulated":
            t = self.params["table"][0]
            x = x[(x >= t[1]) & (x <= t[-1])]
        m, d = self.M(x), self.dM(x)
        problems = []
        if abs(float(self.M(0.0))) > CHECK_SLACK:
            problems.append("M(0) != 0")
        if np.any(np.diff(m) < -CHECK_SLACK) or np.any(d <= 0):
            problems.append("M is not increasing")
        if np.any(np.diff(d) > CHECK_SLACK * np.maximum(1.0, np.abs(d[1:]))):
            problems.append("M' is not decreasing")
        # the power family below 1/2 exceeds sqrt(x) on (0, 1); only the tail matters there
        sq = x >= 1 if self.family == "power" and self.params.get("alpha", 0.5) < 0.5 else np.ones_like(x, bool)
        if np.any(m[sq] > np.sqrt(x[sq]) + CHECK_SLACK):
            problems.append("M(x) > sqrt(x)")
        if np.any(d > m / x + CHECK_SLACK * np.maximum(1.0, m / x)):
            problems.append("M'(x) > M(x)/x")
        kk = self.K(d)
        inv_err = float(np.max(np.abs(kk - x) / x))
        if inv_err > 1e-8:
            problems.append(f"K(M'(x)) != x (relative error {inv_err:.3g})")
        if problems:
            raise InvalidWeight("; ".join(problems))
        return {"points": int(len(x)), "inverse_error": inv_err}


def _sqrt_weight(scale: float) -> ConcaveWeight:
    e = float(scale)
    return ConcaveWeight(
        "sqrt",
        {"scale": e},
        lambda x: e * np.sqrt(x),
        lambda x: e / (2 * np.sqrt(x)),
        lambda y: e * e / (4 * y * y),
    )


def _power_weight(alpha: float, scale: float) -> ConcaveWeight:
    a, e = float(alpha), float(scale)
    if not 0 < a < 1:
        raise InvalidWeight("power family needs 0 < alpha < 1")
    return ConcaveWeight(
        "power",
        {"alpha": a, "scale": e},
        lambda x: e * np.power(x, a),
        lambda x: e * a * np.power(x, a - 1),
        lambda y: np.power(y / (e * a), 1.0 / (a - 1)),
    )


def _sqrt_over_log_weight(x0: float) -> ConcaveWeight:
    """sqrt(x)/log x beyond x0, a sqrt(x) + b x below, matching M and M' at x0."""
    x0 = float(x0)
    if not x0 > 1:
        raise InvalidWeight("splice point must exceed 1")
    L = math.log(x0)
    M0 = math.sqrt(x0) / L
    M1 = (L - 2) / (2 * math.sqrt(x0) * L * L)
    if M1 <= 0:
        raise InvalidWeight(f"M' vanishes or is negative at the splice point x0 = {x0}")
    a = 2 * (M0 - M1 * x0) / math.sqrt(x0)
    b = M1 - a / (2 * math.sqrt(x0))
    if a <= 0:
        raise InvalidWeight("splice does not give a concave lower piece")

    def M(x):
        x = np.asarray(x, dtype=float)
        hi = x > x0
        xs = np.where(hi, x, 1.0)
        return np.where(hi, np.sqrt(xs) / np.log(np.where(hi, xs, 2.0)), a * np.sqrt(np.maximum(x, 0)) + b * x)

    def dM(x):
        x = np.asarray(x, dtype=float)
        hi = x > x0
        xs = np.where(hi, x, 2.0)
        lg = np.log(xs)
        up = (lg - 2) / (2 * np.sqrt(xs) * lg * lg)
        xl = np.where(hi, 1.0, np.maximum(x, 1e-300))
        return np.where(hi, up, a / (2 * np.sqrt(xl)) + b)

    w = ConcaveWeight("sqrt-over-log", {"x0": x0, "a": a, "b": b, "k_bracket": (math.log(x0), 700.0)}, M, dM)

    def K(y):
        y = np.asarray(y, dtype=float)
        low = y > M1
        out = np.empty(y.shape)
        yl = y[low]
        out[low] = a * a / (4 * (yl - b) ** 2)
        out[~low] = [w._K_scalar(float(v)) for v in y[~low]]
        return out

    w._K = K
    return w


def _tabulated_weight(xs, ms) -> ConcaveWeight:
    xs = np.asarray(xs, dtype=float)
    ms = np.asarray(ms, dtype=float)
    if xs.ndim != 1 or xs.shape != ms.shape or len(xs) < 3 or xs[0] != 0 or np.any(np.diff(xs) <= 0):
        raise InvalidWeight("table needs increasing x starting at 0 and matching M values")
    slopes = np.diff(ms) / np.diff(xs)
    if np.any(slopes <= 0) or np.any(np.diff(slopes) > CHECK_SLACK):
        raise InvalidWeight("tabulated M is not increasing and concave")
    p = PchipInterpolator(xs, ms, extrapolate=False)
    dp = p.derivative()
    w = ConcaveWeight(
        "tabulated",
        {"table": (xs, ms), "k_bracket": (math.log(xs[1]), math.log(xs[-1]))},
        lambda x: np.nan_to_num(p(x)),
        lambda x: np.nan_to_num(dp(x)),
    )
    return w


def make_concave_weight(family: str = "sqrt", **params) -> ConcaveWeight:
    """Build and validate a weight.

    families: ``sqrt`` (scale), ``power`` (alpha, scale), ``sqrt-over-log``
    (x0, the splice point, default e^4), ``tabulated`` (x, M arrays).
    """
    if family == "sqrt":
        w = _sqrt_weight(params.get("scale", 1.0))
    elif family == "power":
        w = _power_weight(params.get("alpha", 1.0 / 3.0), params.get("scale", 1.0))
    elif family == "sqrt-over-log":
        w = _sqrt_over_log_weight(params.get("x0", DEFAULT_SPLICE))
    elif family == "tabulated":
        w = _tabulated_weight(params["x"], params["M"])
    else:
        raise InvalidArgument(f"unknown weight family {family!r}")
    w.check()
    return w


# --- Laplace tail integral and integrability ---------------------------------------


def laplace_tail_integral(M: ConcaveWeight, y: float):
    """I_M(y) = int_0^inf exp(M(x) - 2yx) dx and the bound 2 exp(M_*(y)) / y^2.

    The integral is split at K(y); beyond K(y) + 60/y the majorant
    exp(M_*(y) - yx) is integrated in closed form and added, so the
    returned value is an upper estimate that exceeds the true one by a
    relative amount below e^-60.
    """
    if not 0 < y < 1:
        raise OutOfRange("the estimate is for small y in (0, 1)")
    k = float(M.K(y))
    ms = float(M.Mstar(y))
    g = lambda x: math.exp(float(M.M(x)) - 2 * y * x - ms)
    head = integrate.quad(g, 0.0, k, limit=200, epsabs=0, epsrel=1e-12)[0]
    x1 = k + 60.0 / y
    body = integrate.quad(g, k, x1, limit=400, epsabs=0, epsrel=1e-12, points=[k + 1 / y, k + 10 / y])[0]
    tail = math.exp(-y * x1) / y
    value = math.exp(ms) * (head + body + tail)
    bound = 2 * math.exp(ms) / (y * y)
    return value, bound


def _log_block(fn: Callable, u0: float, u1: float) -> float:
    return integrate.quad(lambda u: float(fn(math.exp(u))) * math.exp(u), u0, u1, limit=200, epsabs=0, epsrel=1e-11)[0]


def _ladder_verdict(increments: np.ndarray, exponent_threshold: float = 1.5) -> dict:
    """Classify a cumulative ladder from its dyadic increments.

    Increments decaying like k^-s with s > threshold (or faster than any
    power) count as convergent; threshold 1.5 separates the k^-1 borderline
    of divergent logarithmic tails from the k^-2 of convergent ones.
    """
    d = np.abs(np.asarray(increments, dtype=float))
    k = np.arange(1, len(d) + 1, dtype=float)
    half = slice(len(d) // 2, None)
    if d[0] > 0 and np.all(d[half] <= 1e-14 * d[0]):
        return {"verdict": "convergent", "exponent": math.inf}
    dd = np.maximum(d[half], 1e-300)
    s = -np.polyfit(np.log(k[half]), np.log(dd), 1)[0]
    return {"verdict": "convergent" if s > exponent_threshold else "divergent", "exponent": float(s)}


def dual_integrability_check(M: ConcaveWeight, delta: float = 0.5, X: float = 2.0**40, levels: Optional[int] = None) -> dict:
    """Ladder test of int_0^delta M_* dy and int_1^inf (M')^2 dx; verdicts must agree."""
    if not 0 < delta < 1:
        raise InvalidArgument("delta must lie in (0, 1)")
    n = int(levels or max(8, round(math.log2(X))))
    dual_inc = np.array(
        [_log_block(M.Mstar, math.log(delta) - (j + 1) * math.log(2), math.log(delta) - j * math.log(2)) for j in range(n)]
    )
    sq = lambda x: M.dM(x) ** 2
    prime_inc = np.array([_log_block(sq, j * math.log(2), (j + 1) * math.log(2)) for j in range(n)])
    a, b = _ladder_verdict(dual_inc), _ladder_verdict(prime_inc)
    return {
        "weight": M.to_dict(),
        "delta": delta,
        "levels": n,
        "dual": {"ladder": np.cumsum(dual_inc).tolist(), **a},
        "derivative_square": {"ladder": np.cumsum(prime_inc).tolist(), **b},
        "agree": a["verdict"] == b["verdict"],
        "verdict": a["verdict"] if a["verdict"] == b["verdict"] else "disagree",
    }


def clump_budget(M: ConcaveWeight, C: float, y):
    """H(y) = log(2C)/2 + M_*(y) - log y."""
    y = np.asarray(y, dtype=float)
    return 0.5 * math.log(2 * C) + M.Mstar(y) - np.log(y)


def derivative_square_tail(M: ConcaveWeight, X: float) -> float:
    """int_X^inf M'(x)^2 dx; closed form on the logarithmic branch of sqrt-over-log."""
    u0 = math.log(X)
    f = lambda u: float(M.dM(math.exp(u))) ** 2 * math.exp(u)
    if M.family == "sqrt-over-log":
        # x M'(x)^2 = (L - 2)^2 / (4 L^4) in L = log x
        x0 = M.params["x0"]
        L = math.log(max(X, x0))
        tail = 1 / (4 * L) - 1 / (2 * L * L) + 1 / (3 * L**3)
        if X < x0:
            tail += integrate.quad(f, u0, L, limit=200, epsabs=0, epsrel=1e-12)[0]
        return tail
    return integrate.quad(f, u0, max(700.0, u0 + 1), limit=400, epsabs=0, epsrel=1e-11)[0]


def budget_integral(M: ConcaveWeight, C: float, L: float) -> float:
    """int_0^L H(x) dx.

    The log part is closed form. For the dual part put x = K(y), so that
    dy = M''(x) dx, and integrate by parts:
    int_0^L M_* dy = L M_*(L) + int_{K(L)}^inf M'(x)^2 dx,
    using M M' -> 0 at infinity. The slowly converging small-y end turns
    into the derivative-square tail.
    """
    if L <= 0:
        return 0.0
    k = float(M.K(L))
    dual = L * float(M.M(k)) + derivative_square_tail(M, k)
    return 0.5 * math.log(2 * C) * L + dual + (L - L * math.log(L))


# --- Cantor set ----------------------------------------------------------------------


@dataclass
class CantorSpec:
    A: float
    L: list
    depth: int
    levels: list
    E: IntervalCollection
    gaps: list
    lo: float = 0.0
    sums: dict = field(default_factory=dict)
    weight: Optional[dict] = None
    C: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "lo": self.lo,
            "depth": self.depth,
            "L": list(self.L),
            "E": self.E.to_list(),
            "gaps": [list(g) for g in self.gaps],
            "measure": self.E.measure(),
            "sums": self.sums,
            "weight": self.weight,
            "C": self.C,
        }

    @staticmethod
    def from_dict(d: dict) -> "CantorSpec":
        E = IntervalCollection([tuple(p) for p in d["E"]])
        gaps = [tuple(g) for g in d["gaps"]]
        return CantorSpec(d["A"], list(d["L"]), d["depth"], [], E, gaps, d.get("lo", 0.0), d.get("sums", {}), d.get("weight"), d.get("C"))


def build_cantor_set(
    A: float = 1.0,
    M: Optional[ConcaveWeight] = None,
    C: float = 0.5,
    depth: int = 8,
    margin: float = 1.0,
    lengths: Optional[Sequence[float]] = None,
    lo: float = 0.0,
    check_weight: bool = True,
    min_gap: float = 2.0**-48,
) -> CantorSpec:
    """Cantor-type set in [lo, lo + A] by middle-gap removal.

    Refining E_{n-1} to E_n removes an open middle gap of length L_n from each
    of its 2^{n-1} intervals. Unless ``lengths`` is given, L_n is the smaller
    of A 8^-n and the largest L with 2^n int_0^L H <= margin 2^-n, but never
    below A * min_gap.
    """
    if A <= 0 or depth < 0:
        raise InvalidArgument("need A > 0 and depth >= 0")
    budget = None
    if M is not None:
        if check_weight:
            rep = dual_integrability_check(M)
            if rep["verdict"] != "convergent":
                raise InvalidWeight(f"M_* is not integrable at 0 (verdict {rep['verdict']}); H has no finite budget")
        budget = lambda L: budget_integral(M, C, L)
    met = None
    if lengths is None:
        if budget is None:
            lengths = [A * 8.0**-n for n in range(1, depth + 1)]
        else:
            # int_0^L H shrinks only like 1/log(1/L), so the cap can demand gaps
            # far below double precision; those levels stop at min_gap and are flagged
            floor = A * min_gap
            lengths, met = [], []
            for n in range(1, depth + 1):
                cand = A * 8.0**-n
                cap = margin * 2.0**-n
                f = lambda L: 2**n * budget(L) - cap
                if f(cand) <= 0:
                    lengths.append(cand)
                    met.append(True)
                elif f(floor) > 0:
                    lengths.append(floor)
                    met.append(False)
                else:
                    lengths.append(optimize.brentq(f, floor, cand, xtol=1e-300, rtol=1e-13))
                    met.append(True)
    lengths = [float(v) for v in lengths][:depth]
    if len(lengths) < depth:
        raise InvalidArgument("need one gap length per level")
    pieces = [(lo, lo + A)]
    levels = [IntervalCollection(pieces)]
    gaps = []
    for n, Ln in enumerate(lengths, start=1):
        nxt = []
        for a, b in pieces:
            if not Ln < b - a:
                raise InvalidArgument(f"gap L_{n} = {Ln} does not fit in an interval of length {b - a}")
            m = 0.5 * (a + b)
            g0, g1 = m - 0.5 * Ln, m + 0.5 * Ln
            nxt += [(a, g0), (g1, b)]
            gaps.append((g0, g1))
        pieces = nxt
        levels.append(IntervalCollection(pieces))
    E = levels[-1]
    gaps.sort()
    sums = {
        "gap_condition": math.fsum(2**n * L for n, L in enumerate(lengths, start=1)),
        "gap_condition_limit": A / 2,
        "measure": E.measure(),
        "removed": math.fsum(b - a for a, b in gaps),
        "max_interval": max(b - a for a, b in E.intervals),
    }
    if budget is not None:
        per_level = [budget(L) for L in lengths]
        sums["budget_condition"] = math.fsum(2**n * v for n, v in enumerate(per_level, start=1))
        sums["clump_sum"] = math.fsum(2 ** (n - 1) * v for n, v in enumerate(per_level, start=1))
        sums["per_level_budget"] = per_level
    if met is not None:
        sums["budget_cap_met"] = met
    return CantorSpec(
        A, lengths, depth, levels, E, gaps, lo, sums, M.to_dict() if M is not None else None, C if M is not None else None
    )


# --- tent domain ---------------------------------------------------------------------


TAGS = ("E-base", "tent-side", "top", "lateral")


@dataclass
class TentDomain:
    """Rectangle over the hull of E minus the tents erected on the gaps.

    ``segments`` is an (m, 4) array of x0, y0, x1, y1 tracing the boundary
    counter-clockwise; ``tags`` names each segment's role and ``owner`` holds
    the gap index for tent sides (-1 otherwise).
    """

    E: IntervalCollection
    gaps: list
    height: float
    segments: np.ndarray
    tags: list
    owner: np.ndarray
    side: np.ndarray

    @property
    def lo(self) -> float:
        return self.E.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.E.intervals[-1][1]

    def area(self) -> float:
        s = self.segments
        return 0.5 * float(np.sum(s[:, 0] * s[:, 3] - s[:, 2] * s[:, 1]))

    def contains(self, z) -> bool:
        p = as_point(z)
        if not (self.lo < p.x < self.hi and 0 < p.y < self.height):
            return False
        for a, b in self.gaps:
            if a <= p.x <= b and p.y <= min(p.x - a, b - p.x):
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "E": self.E.to_list(),
            "gaps": [list(g) for g in self.gaps],
            "height": self.height,
            "segments": self.segments.tolist(),
            "tags": self.tags,
        }

    def polyline_csv(self) -> str:
        rows = ["x0,y0,x1,y1,tag"]
        for s, t in zip(self.segments, self.tags):
            rows.append(",".join(repr(float(v)) for v in s) + "," + t)
        return "\n".join(rows) + "\n"


def build_tent_domain(spec, height: float = 0.5) -> TentDomain:
    E = spec.E if isinstance(spec, CantorSpec) else spec
    gaps = sorted(spec.gaps) if isinstance(spec, CantorSpec) else []
    apex = max((0.5 * (b - a) for a, b in gaps), default=0.0)
    if not height > apex:
        raise InvalidArgument(f"height {height} must exceed the tallest tent apex {apex}")
    segs, tags, owner, side = [], [], [], []

    def add(p, q, tag, k=-1, sd=0):
        segs.append((p[0], p[1], q[0], q[1]))
        tags.append(tag)
        owner.append(k)
        side.append(sd)

    gi = {g: k for k, g in enumerate(gaps)}
    starts = {a: (a, b) for a, b in gaps}
    for a, b in E.intervals:
        add((a, 0.0), (b, 0.0), "E-base")
        if b in starts:
            g = starts[b]
            m = 0.5 * (g[0] + g[1])
            add((g[0], 0.0), (m, 0.5 * (g[1] - g[0])), "tent-side", gi[g], -1)
            add((m, 0.5 * (g[1] - g[0])), (g[1], 0.0), "tent-side", gi[g], 1)
    lo, hi = E.intervals[0][0], E.intervals[-1][1]
    add((hi, 0.0), (hi, height), "lateral")
    add((hi, height), (lo, height), "top")
    add((lo, height), (lo, 0.0), "lateral")
    dom = TentDomain(E, gaps, float(height), np.array(segs, dtype=float), tags, np.array(owner), np.array(side))
    expect = (hi - lo) * height - math.fsum(0.25 * (b - a) ** 2 for a, b in gaps)
    if abs(dom.area() - expect) > 1e-10:
        raise InvalidArgument("boundary polyline does not enclose the expected area")
    return dom


# --- walk on spheres ---------------------------------------------------------------


def _nearest(px, py, segs):
    """Distance from each point to the polygon and the closest segment (index, parameter)."""
    x0, y0, x1, y1 = (segs[:, j][None, :] for j in range(4))
    dx, dy = x1 - x0, y1 - y0
    ll = dx * dx + dy * dy
    t = ((px[:, None] - x0) * dx + (py[:, None] - y0) * dy) / ll
    t = np.clip(t, 0.0, 1.0)
    qx = x0 + t * dx - px[:, None]
    qy = y0 + t * dy - py[:, None]
    d2 = qx * qx + qy * qy
    j = np.argmin(d2, axis=1)
    r = np.arange(len(px))
    return np.sqrt(d2[r, j]), j, t[r, j]


@dataclass
class Absorptions:
    x: np.ndarray
    y: np.ndarray
    segment: np.ndarray


def walk_on_spheres(domain: TentDomain, z, n_paths: int = 100_000, eps: float = 1e-4, seed: int = 42, max_steps: int = 10_000) -> Absorptions:
    """Exit points of Brownian paths started at z.

    Paths run in fixed blocks; block b draws from SeedSequence([seed, b]), so
    results do not depend on how the work is scheduled.
    """
    p = as_point(z)
    if not domain.contains(p):
        raise InvalidArgument(f"z = {p.z} is not inside the domain")
    segs = domain.segments
    xs, ys, js = [], [], []
    for b, start in enumerate(range(0, n_paths, PATH_BLOCK)):
        m = min(PATH_BLOCK, n_paths - start)
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, b])))
        px = np.full(m, p.x)
        py = np.full(m, p.y)
        seg = np.full(m, -1)
        par = np.zeros(m)
        alive = np.arange(m)
        for _ in range(max_steps):
            if len(alive) == 0:
                break
            r, j, t = _nearest(px[alive], py[alive], segs)
            done = r < eps
            if done.any():
                idx = alive[done]
                seg[idx] = j[done]
                par[idx] = t[done]
                alive = alive[~done]
                r = r[~done]
            if len(alive) == 0:
                break
            th = rng.uniform(0.0, 2 * math.pi, len(alive))
            px[alive] += r * np.cos(th)
            py[alive] += r * np.sin(th)
        if len(alive):
            raise RuntimeError("walk-on-spheres did not terminate")
        s = segs[seg]
        xs.append(s[:, 0] + par * (s[:, 2] - s[:, 0]))
        ys.append(s[:, 1] + par * (s[:, 3] - s[:, 1]))
        js.append(seg)
    return Absorptions(np.concatenate(xs), np.concatenate(ys), np.concatenate(js))


def tent_side_target(domain: TentDomain, gap_index: int, s: float) -> Callable:
    """A(s): the part of the tent boundary above (a, a + s), 0 < s <= |l|/2."""
    a, b = domain.gaps[gap_index]
    if not 0 < s <= 0.5 * (b - a) + 1e-15:
        raise InvalidArgument("need 0 < s <= |l|/2")

    def pred(ab: Absorptions):
        own = domain.owner[ab.segment] == gap_index
        left = domain.side[ab.segment] == -1
        return own & left & (ab.x < a + s)

    return pred


def base_target(interval) -> Callable:
    a, b = float(interval[0]), float(interval[1])

    def pred(ab: Absorptions):
        return (ab.y == 0.0) & (ab.x >= a) & (ab.x <= b)

    return pred


def _resolve_target(domain: TentDomain, target) -> Callable:
    if callable(target):
        return target
    if target == "all":
        return lambda ab: np.ones(len(ab.x), bool)
    if target in TAGS:
        mask = np.array([t == target for t in domain.tags])
        return lambda ab: mask[ab.segment]
    raise InvalidArgument(f"unknown target {target!r}")


def harmonic_measure_mc(domain: TentDomain, z, target="all", n_paths: int = 100_000, eps: float = 1e-4, seed: int = 42):
    """omega_z(target) with its binomial standard error."""
    ab = walk_on_spheres(domain, z, n_paths, eps, seed)
    hit = _resolve_target(domain, target)(ab)
    p = float(np.mean(hit))
    return p, math.sqrt(p * (1 - p) / len(hit))


def khrushchev_budget_sum(domain: TentDomain, z, M: ConcaveWeight, C: float = 0.5, n_paths: int = 100_000, seed: int = 42, eps: float = 1e-4) -> dict:
    """MC estimate of int H(Im t) d omega_z over the tent sides, against (16/y) sum_l int_0^|l| H.

    The majorant only accounts for the tents; the top and lateral parts of
    the upper boundary are reported separately.
    """
    p = as_point(z)
    ab = walk_on_spheres(domain, z, n_paths, eps, seed)
    tags = np.array(domain.tags)[ab.segment]
    upper = ab.y > 0
    vals = np.zeros(len(ab.x))
    vals[upper] = clump_budget(M, C, ab.y[upper])
    tent = tags == "tent-side"
    vt = np.where(tent, vals, 0.0)
    vo = np.where(upper & ~tent, vals, 0.0)
    est = float(np.mean(vt))
    se = float(np.std(vt) / math.sqrt(len(vt)))
    majorant = 16.0 / p.y * math.fsum(budget_integral(M, C, b - a) for a, b in domain.gaps)
    return {
        "z": [p.x, p.y],
        "n_paths": n_paths,
        "seed": seed,
        "tent_estimate": est,
        "std_err": se,
        "other_estimate": float(np.mean(vo)),
        "other_std_err": float(np.std(vo) / math.sqrt(len(vo))),
        "majorant": majorant,
        "holds": est <= majorant + 3 * se,
    }
