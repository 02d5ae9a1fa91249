"""Finite-dimensional probes of the weighted product space and its Hardy subspace.

A function f is sent to the pair Jf = (f, f^ restricted to zeta >= 0) in
L^2(w dx) + L^2(R_+, rho dzeta). Distances from a target pair to the span of
finitely many embedded basis functions are computed by least squares in that
product norm. Basis functions are modulated Cauchy kernels, whose transforms
are known in closed form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateInput, HypothesisNotMet, InvalidArgument
from .hardy import log_integral_ladder
from .signal_core import SQRT_2PI, Grid, SampledSignal, forward_transform, make_grid

EIG_CUTOFF = 1e-10


def _as_weight(weight, x: np.ndarray) -> np.ndarray:
    if weight is None:
        return np.ones_like(x)
    if isinstance(weight, SampledSignal):
        if len(weight.values) != len(x):
            raise InvalidArgument("weight samples do not match the grid")
        return np.asarray(weight.values.real, dtype=float)
    if callable(weight):
        return np.asarray(weight(x), dtype=float) * np.ones_like(x)
    w = np.asarray(weight, dtype=float)
    if w.shape != x.shape:
        raise InvalidArgument("weight array does not match the grid")
    return w


@dataclass(frozen=True, eq=False)
class ProductSpace:
    """Grids and weights defining the product norm."""

    x_grid: Grid
    zeta_grid: Grid
    w: np.ndarray
    rho: np.ndarray

    @staticmethod
    def build(x_grid: Grid, zeta_grid: Grid, w=None, rho=None) -> "ProductSpace":
        if zeta_grid.start < 0:
            raise InvalidArgument("the spectral grid must lie in zeta >= 0")
        return ProductSpace(x_grid, zeta_grid, _as_weight(w, x_grid.points), _as_weight(rho, zeta_grid.points))

    def row_scale(self) -> np.ndarray:
        """sqrt of quadrature weight times density, stacked x then zeta."""
        a = self.x_grid.trapezoid_weights() * self.w
        b = self.zeta_grid.trapezoid_weights() * self.rho
        return np.sqrt(np.concatenate([a, b]))


@dataclass(frozen=True, eq=False)
class ProductTuple:
    h: SampledSignal
    k: SampledSignal

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.h.values, self.k.values]).astype(complex)

    def norm(self, space: ProductSpace) -> float:
        return float(np.linalg.norm(space.row_scale() * self.stacked()))

    def component_norms(self, space: ProductSpace):
        hw = float(np.sqrt(np.dot(np.abs(self.h.values) ** 2, space.x_grid.trapezoid_weights() * space.w)))
        kw = float(np.sqrt(np.dot(np.abs(self.k.values) ** 2, space.zeta_grid.trapezoid_weights() * space.rho)))
        return hw, kw

    def __add__(self, other: "ProductTuple") -> "ProductTuple":
        return ProductTuple(self.h.with_values(self.h.values + other.h.values), self.k.with_values(self.k.values + other.k.values))

    def scaled(self, a: complex) -> "ProductTuple":
        return ProductTuple(self.h.with_values(a * self.h.values), self.k.with_values(a * self.k.values))


def zero_tuple(space: ProductSpace) -> ProductTuple:
    return ProductTuple(
        SampledSignal(space.x_grid, np.zeros(space.x_grid.count, complex)),
        SampledSignal(space.zeta_grid, np.zeros(space.zeta_grid.count, complex)),
    )


def embed(f: SampledSignal, space: ProductSpace, f_hat: Optional[Callable] = None, method: str = "czt") -> ProductTuple:
    """(f on the x grid, f^ on the zeta >= 0 grid).

    ``f_hat`` may supply the transform in closed form; otherwise it is computed
    from the samples of f (which may live on a wider grid than the x grid).
    """
    x = space.x_grid.points
    if f.grid.compatible(space.x_grid):
        hv = f.values
    else:
        hv = np.interp(x, f.x, f.values.real) + 1j * np.interp(x, f.x, f.values.imag)
        hv = np.where((x < f.grid.start) | (x > f.grid.stop), 0.0, hv)
    if f_hat is not None:
        kv = np.asarray(f_hat(space.zeta_grid.points), dtype=complex)
    else:
        kv = forward_transform(f, space.zeta_grid, method=method).values
    return ProductTuple(SampledSignal(space.x_grid, hv), SampledSignal(space.zeta_grid, kv))


def shift_tuple(t: ProductTuple, s: float) -> ProductTuple:
    """(e^{isx} h, k(. - s)), the second component zero on [0, s)."""
    if not s > 0:
        raise InvalidArgument("shift must be positive")
    x = t.h.x
    zeta = t.k.x
    src = zeta - s
    kv = t.k.values
    moved = np.interp(src, zeta, kv.real) + 1j * np.interp(src, zeta, kv.imag)
    moved = np.where(src < zeta[0], 0.0, moved)
    return ProductTuple(t.h.with_values(np.exp(1j * s * x) * t.h.values), t.k.with_values(moved))


# --- bases ----------------------------------------------------------------------------


def _van_der_corput(n: int) -> np.ndarray:
    out = np.empty(n)
    for i in range(n):
        k, f, v = i + 1, 0.5, 0.0
        while k:
            v += f * (k & 1)
            k >>= 1
            f *= 0.5
        out[i] = v
    return out


def lattice_nodes(count: int, lo: float, hi: float, heights: Sequence[float] = (0.05, 0.25)) -> list:
    """Nested two-scale node sequence: x by van der Corput over [lo, hi], heights alternating."""
    u = _van_der_corput(count)
    hs = [heights[i % len(heights)] for i in range(count)]
    return [complex(lo + (hi - lo) * a, y) for a, y in zip(u, hs)]


@dataclass
class BasisSpec:
    """Functions e^{isx} psi_z for each (node, modulation) pair, nodes major."""

    nodes: list
    modulations: list = field(default_factory=lambda: [0.0])
    kind: str = "cauchy-nodes"
    epsilon: float = 0.0

    def __post_init__(self):
        if any(complex(z).imag <= 0 for z in self.nodes):
            raise InvalidArgument("nodes must lie in the upper half-plane")
        if any(s < 0 for s in self.modulations):
            raise InvalidArgument("modulations must be non-negative")

    def pairs(self):
        return [(complex(z), float(s)) for z in self.nodes for s in self.modulations]

    def __len__(self):
        return len(self.nodes) * len(self.modulations)

    def truncated(self, n: int) -> "BasisSpec":
        return BasisSpec(self.nodes[:n], list(self.modulations), self.kind, self.epsilon)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "nodes": [[z.real, z.imag] for z in map(complex, self.nodes)],
            "modulations": list(self.modulations),
        }


def kernel_tuple(z: complex, s: float, space: ProductSpace) -> ProductTuple:
    """J(e^{isx} psi_z): psi_z(x) = i/(sqrt(2 pi)(x - conj z)), transform e^{-i conj(z)(zeta - s)} on zeta >= s."""
    x = space.x_grid.points
    zeta = space.zeta_grid.points
    zc = np.conj(z)
    h = np.exp(1j * s * x) * 1j / (SQRT_2PI * (x - zc))
    on = zeta >= s
    k = np.where(on, np.exp(-1j * zc * np.where(on, zeta - s, 0.0)), 0.0)
    return ProductTuple(SampledSignal(space.x_grid, h), SampledSignal(space.zeta_grid, k))


def basis_matrix(basis: BasisSpec, space: ProductSpace) -> np.ndarray:
    cols = [space.row_scale() * kernel_tuple(z, s, space).stacked() for z, s in basis.pairs()]
    return np.stack(cols, axis=1)


@dataclass
class GramSystem:
    gram: np.ndarray
    rhs: np.ndarray
    cutoff: float
    rank: int


def _solve(A: np.ndarray, b: np.ndarray, cutoff: float = EIG_CUTOFF):
    G = A.conj().T @ A
    G = 0.5 * (G + G.conj().T)
    r = A.conj().T @ b
    lam, V = np.linalg.eigh(G)
    lmax = float(lam[-1]) if len(lam) else 0.0
    if lmax <= 0:
        raise DegenerateInput("basis vanishes in the product norm")
    keep = lam > cutoff * lmax
    coef = V[:, keep] @ ((V[:, keep].conj().T @ r) / lam[keep])
    resid = b - A @ coef
    return coef, float(np.linalg.norm(resid)), GramSystem(G, r, cutoff * lmax, int(keep.sum()))


def subspace_distance(target: ProductTuple, basis, space: ProductSpace, cutoff: float = EIG_CUTOFF):
    """min || target - sum c_j J b_j || in the product norm.

    ``basis`` is a BasisSpec or a list of ProductTuple. Returns
    (distance, coefficients, GramSystem).
    """
    scale = space.row_scale()
    if isinstance(basis, BasisSpec):
        if len(basis) == 0:
            raise DegenerateInput("empty basis")
        A = basis_matrix(basis, space)
    else:
        if not basis:
            raise DegenerateInput("empty basis")
        A = np.stack([scale * b.stacked() for b in basis], axis=1)
    b = scale * target.stacked()
    if not np.any(b):
        return 0.0, np.zeros(A.shape[1], complex), None
    coef, dist, gs = _solve(A, b, cutoff)
    return dist, coef, gs


def nested_distances(A: np.ndarray, b: np.ndarray, sizes: Sequence[int], tol: float = math.sqrt(EIG_CUTOFF)) -> list:
    """Distances from b to the spans of the leading columns of A.

    Columns are orthonormalised in order (Gram-Schmidt, applied twice); a
    column whose remainder falls below ``tol`` times its own norm adds
    nothing, which matches the spectral cutoff of ``subspace_distance``.
    The distances are therefore non-increasing in the size by construction.
    """
    r = np.array(b, dtype=complex)
    Q = []
    out = []
    want = sorted(set(int(n) for n in sizes))
    done = 0
    for n in want:
        for j in range(done, min(n, A.shape[1])):
            v = np.array(A[:, j], dtype=complex)
            n0 = np.linalg.norm(v)
            if n0 == 0:
                continue
            for _ in range(2):
                for q in Q:
                    v -= q * np.vdot(q, v)
            nv = np.linalg.norm(v)
            if nv <= tol * n0:
                continue
            q = v / nv
            Q.append(q)
            r -= q * np.vdot(q, r)
        done = n
        out.append(float(np.linalg.norm(r)))
    lookup = dict(zip(want, out))
    return [lookup[int(n)] for n in sizes]


def distance_trend(target: ProductTuple, basis: BasisSpec, space: ProductSpace, sizes: Sequence[int]) -> dict:
    """Distances for the nested bases made of the first n nodes, n in sizes."""
    norm = target.norm(space)
    per_node = len(basis.modulations)
    if norm == 0:
        d = [0.0 for _ in sizes]
    else:
        full = basis_matrix(basis.truncated(max(sizes)), space)
        b = space.row_scale() * target.stacked()
        d = nested_distances(full, b, [n * per_node for n in sizes])
    return {
        "basis_size": list(sizes),
        "distance": d,
        "target_norm": norm,
        "ratio": [v / norm if norm else 0.0 for v in d],
    }


# --- experiments --------------------------------------------------------------------


def _monotone(seq, rel: float = 1e-6) -> bool:
    return all(b <= a * (1 + rel) + 1e-14 for a, b in zip(seq, seq[1:]))


def condensation_experiment(
    f: SampledSignal,
    c: float = 1.0,
    basis_sizes: Sequence[int] = (8, 16, 32, 64),
    residual_mask: Optional[np.ndarray] = None,
    zeta_max: float = 400.0,
    zeta_step: float = 0.05,
    pad: float = 0.5,
    target: Optional[np.ndarray] = None,
    clump_depth: int = 8,
) -> dict:
    """Distance of (h, 0) to the span, h supported on the residual of w = min(|f|^2, 1).

    ``residual_mask`` defaults to the clump detector's residual on f's grid.
    """
    from .decay_clump import detect_clumps

    if residual_mask is None:
        rep = detect_clumps(f, depth=clump_depth)
        # samples on a clump endpoint belong to the clump
        covered = rep.clumps.covers(f.x)
        support = rep.support_estimate.contains(f.x)
        residual_mask = support & ~covered
    residual_mask = np.asarray(residual_mask, bool)
    w = np.minimum(np.abs(f.values) ** 2, 1.0)
    space = ProductSpace.build(f.grid, make_grid(0.0, zeta_step, int(round(zeta_max / zeta_step)) + 1), w, lambda z: np.exp(-c * np.sqrt(z)))
    meta = {"c": c, "residual_measure": float(residual_mask.sum() * f.grid.step), "basis_size": list(basis_sizes)}
    if not residual_mask.any():
        return {**meta, "vacuous": True, "distance": [], "ratio": [], "monotone": True}
    hv = residual_mask.astype(complex) if target is None else np.where(residual_mask, target, 0.0)
    tgt = ProductTuple(SampledSignal(f.grid, hv), SampledSignal(space.zeta_grid, np.zeros(space.zeta_grid.count, complex)))
    idx = np.nonzero(residual_mask)[0]
    lo, hi = f.x[idx[0]], f.x[idx[-1]]
    basis = BasisSpec(lattice_nodes(max(basis_sizes), lo - pad, hi + pad))
    tr = distance_trend(tgt, basis, space, basis_sizes)
    return {**meta, "vacuous": False, **tr, "monotone": _monotone(tr["distance"])}


def sparseness_experiment(
    w_mask: np.ndarray,
    x_grid: Grid,
    rho: Callable,
    k: Callable = lambda z: np.exp(-z),
    basis_sizes: Sequence[int] = (8, 16, 32, 64),
    zeta_max: float = 400.0,
    zeta_step: float = 0.05,
    pad: float = 0.5,
) -> dict:
    """Distance of (0, k) to the span for w = indicator of a set and a spectral density rho."""
    zg = make_grid(0.0, zeta_step, int(round(zeta_max / zeta_step)) + 1)
    space = ProductSpace.build(x_grid, zg, np.asarray(w_mask, float), rho)
    kv = np.asarray(k(zg.points), dtype=complex) * np.ones(zg.count)
    tgt = ProductTuple(SampledSignal(x_grid, np.zeros(x_grid.count, complex)), SampledSignal(zg, kv))
    on = np.nonzero(np.asarray(w_mask, bool))[0]
    lo, hi = (x_grid.points[on[0]], x_grid.points[on[-1]]) if len(on) else (x_grid.start, x_grid.stop)
    basis = BasisSpec(lattice_nodes(max(basis_sizes), lo - pad, hi + pad))
    tr = distance_trend(tgt, basis, space, basis_sizes)
    floor = min(tr["ratio"]) if tr["ratio"] else 0.0
    return {**tr, "floor_ratio": floor, "final_ratio": tr["ratio"][-1] if tr["ratio"] else 0.0, "monotone": _monotone(tr["distance"])}


def cyclicity_experiment(
    f: SampledSignal,
    w: SampledSignal,
    target: SampledSignal,
    s_grids: Sequence[Sequence[float]],
) -> dict:
    """Distance in L^2(w dx) from target to span{e^{isx} f : s in grid and s = 0}.

    Runs only when int log w / (1 + x^2) diverges on the ladder.
    """
    lw = np.log(np.maximum(w.values.real, 0.0), where=w.values.real > 0, out=np.full(len(w.values), -np.inf))
    rungs, verdict = log_integral_ladder(w.with_values(lw))
    ladder = {"rungs": rungs, "verdict": verdict}
    if verdict != "divergent":
        raise HypothesisNotMet("int log w / (1 + x^2) converges; the modulation span is not expected to fill L^2(w)")
    x = w.x
    scale = np.sqrt(w.grid.trapezoid_weights() * w.values.real)
    b = scale * target.values
    norm = float(np.linalg.norm(b))
    out = []
    for grid in s_grids:
        ss = sorted({0.0, *map(float, grid)})
        if any(s < 0 for s in ss):
            raise InvalidArgument("modulations must be non-negative")
        if norm == 0:
            out.append(0.0)
            continue
        A = np.stack([scale * np.exp(1j * s * x) * f.values for s in ss], axis=1)
        out.append(nested_distances(A, b, [len(ss)])[0])
    return {
        "sizes": [len(set(g) | {0.0}) for g in s_grids],
        "distance": out,
        "target_norm": norm,
        "ratio": [d / norm if norm else 0.0 for d in out],
        "ladder": ladder,
        "monotone": _monotone(out),
    }
