import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from clumplab.corpus import cauchy_signal, fat_cantor_indicator, stretched_signal, stretched_spectrum
from clumplab.errors import DivergentLogIntegral, InvalidArgument, InvalidInput
from clumplab.hardy import (
    BoundaryModulus,
    HalfPlanePoint,
    PiecewiseConstant,
    cauchy_kernel,
    cauchy_kernel_transform,
    cauchy_product_decay,
    conjugate_extension,
    corollary_decay_check,
    growth_from_spectral_weight,
    hardy_project,
    log_integral_ladder,
    outer_function,
    poisson_extension,
    poisson_kernel,
    transform_via_extension,
)
from clumplab.signal_core import (
    SQRT_2PI,
    SampledSignal,
    forward_transform,
    grid_from_span,
    make_grid,
    norm,
    pole_tail,
    sample,
)
from clumplab.sparse_spectrum import make_concave_weight


# --- Poisson kernel -----------------------------------------------------------------------


def test_poisson_kernel_value_at_origin():
    assert poisson_kernel(0.0, 1j) == pytest.approx(1 / math.pi, rel=1e-15)


@pytest.mark.parametrize("z", [1j, 0.3 + 0.05j, -2 + 4j])
def test_poisson_kernel_unit_mass_and_peak(z):
    p = HalfPlanePoint(z.real, z.imag)
    L = 50.0
    body = integrate.quad(lambda t: poisson_kernel(t, z), p.x - L, p.x + L, points=[p.x], limit=400)[0]
    tails = 1 - 2 * math.atan(L / p.y) / math.pi
    assert body + tails == pytest.approx(1.0, abs=1e-8)
    t = np.linspace(p.x - 3, p.x + 3, 6001)
    assert np.max(poisson_kernel(t, z)) == pytest.approx(1 / (math.pi * p.y), rel=1e-12)


def test_half_plane_point_rejects_boundary():
    with pytest.raises(InvalidArgument):
        HalfPlanePoint(0.0, 0.0)


# --- Poisson extensions -------------------------------------------------------------------


def test_poisson_extension_of_unit_box():
    expected = math.atan(1.0) / math.pi
    pc = PiecewiseConstant([0.0], [1.0], [1.0])
    assert poisson_extension(pc, 1j) == pytest.approx(0.25, abs=1e-15)
    assert expected == pytest.approx(0.25)
    sampled = sample(np.ones_like, grid_from_span(0, 1, 0.01))
    assert poisson_extension(sampled, 1j) == pytest.approx(0.25, abs=1e-8)


def test_sampled_extension_is_exact_for_linear_densities():
    # the piecewise-linear interpolant of a linear density is the density
    mu = sample(lambda t: 2 + t, grid_from_span(-1, 2, 0.1))
    z = 0.4 + 0.01j
    oracle = integrate.quad(lambda t: poisson_kernel(t, z) * (2 + t), -1, 2, points=[0.4], limit=400, epsabs=1e-13)[0]
    assert poisson_extension(mu, z) == pytest.approx(oracle, abs=1e-11)


@given(st.lists(st.floats(-3, 3), min_size=3, max_size=12), st.floats(-1, 2), st.floats(0.01, 3))
def test_extension_bounded_by_total_variation(vals, x, y):
    n = len(vals)
    mu = PiecewiseConstant(np.arange(n) / n, np.arange(1, n + 1) / n, vals)
    P = poisson_extension(mu, complex(x, y))
    assert abs(P) <= mu.total_variation() / (math.pi * y) * (1 + 1e-12) + 1e-15
    pos = PiecewiseConstant(mu.lo, mu.hi, np.abs(vals))
    assert poisson_extension(pos, complex(x, y)) >= 0


def test_conjugate_extension_vanishes_at_i():
    mu = PiecewiseConstant([-1.0, 0.5], [0.0, 2.0], [1.0, -3.0])
    assert conjugate_extension(mu, 1j) == pytest.approx(0.0, abs=1e-15)


# --- outer functions -----------------------------------------------------------------------


def _modulus(func, lo=-30.0, hi=30.0, step=0.01, tail=None):
    W = sample(func, grid_from_span(lo, hi, step))
    return BoundaryModulus.from_modulus(W, tail)


@pytest.mark.parametrize("z", [1j, 2 + 3j])
def test_constant_modulus_gives_constant_outer(z):
    c = 2.5
    W = _modulus(lambda t: np.full_like(t, c), tail=lambda t: math.log(c))
    assert abs(outer_function(W, z) - c) < 1e-8


def test_outer_of_dip_on_unit_interval():
    W = _modulus(lambda t: np.where((t >= 0) & (t <= 1), math.exp(-1), 1.0), -2, 3, 1e-4)
    assert abs(outer_function(W, 1j)) == pytest.approx(math.exp(-0.25), abs=1e-4)
    # exact pieces: no sampling error at all
    pc = PiecewiseConstant([0.0], [1.0], [-1.0])
    assert abs(outer_function(pc, 1j)) == pytest.approx(math.exp(-0.25), abs=1e-12)


def test_outer_boundary_recovery():
    W = _modulus(lambda t: 1 / (1 + t * t), tail=lambda t: -math.log(1 + t * t))
    x = np.array([-2.0, 0.0, 0.7])
    errs = []
    for y in (0.1, 0.01, 0.001):
        vals = np.array([abs(outer_function(W, complex(xx, y))) for xx in x])
        # the outer function is 1/(z+i)^2, so the height-y modulus is known exactly
        assert np.max(np.abs(vals - 1 / (x * x + (1 + y) ** 2))) < 3e-5
        errs.append(np.max(np.abs(vals - 1 / (1 + x * x))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 2.1e-3


@given(st.floats(-1, 1), st.floats(0.05, 2))
def test_outer_is_multiplicative(x, y):
    g = grid_from_span(-5, 5, 0.01)
    W1 = sample(lambda t: 1 + 0.5 * np.sin(t), g)
    W2 = sample(lambda t: np.exp(-np.abs(t)), g)
    B1, B2 = BoundaryModulus.from_modulus(W1), BoundaryModulus.from_modulus(W2)
    B12 = BoundaryModulus.from_modulus(W1.with_values(W1.values * W2.values))
    z = complex(x, y)
    assert abs(outer_function(B12, z) - outer_function(B1, z) * outer_function(B2, z)) < 1e-7


def test_outer_refuses_vanishing_modulus():
    W = fat_cantor_indicator(grid_from_span(-0.25, 1.25, 2**-10))
    B = BoundaryModulus.from_modulus(W)
    assert B.integrability_flag == "divergent"
    with pytest.raises(DivergentLogIntegral):
        outer_function(B, 1j)


def test_negative_modulus_is_invalid():
    with pytest.raises(InvalidInput):
        BoundaryModulus.from_modulus(sample(lambda t: t, make_grid(-1, 0.5, 5)))


def test_log_integral_ladder_separates_corpus():
    g = grid_from_span(-0.25, 1.25, 2**-12)
    cantor = fat_cantor_indicator(g)
    with np.errstate(divide="ignore"):
        _, v1 = log_integral_ladder(cantor.with_values(np.log(cantor.values.real)))
    psi = cauchy_signal(1j, grid_from_span(-50, 50, 0.01))
    _, v2 = log_integral_ladder(psi.with_values(np.log(np.abs(psi.values))))
    assert (v1, v2) == ("divergent", "convergent")


# --- Cauchy kernels and the Hardy projection ----------------------------------------------------


@given(st.floats(-2, 2), st.floats(0.2, 2))
def test_cauchy_kernel_transform_matches_quadrature(x0, y0):
    z = complex(x0, y0)
    f = cauchy_signal(z, grid_from_span(-200, 200, 0.01))
    zg = make_grid(0.2, 0.2, 20)
    assert np.max(np.abs(forward_transform(f, zg).values - cauchy_kernel_transform(z, zg.points))) < 1e-4


def _psi_grid():
    return grid_from_span(-200, 200, 0.01)


def test_projection_keeps_positive_spectrum():
    f = cauchy_signal(1j, _psi_grid())
    out = make_grid(-5, 0.25, 41)
    P = hardy_project(f, zeta_max=40, zeta_step=0.002, out_grid=out)
    assert np.max(np.abs(P.values - cauchy_kernel(1j)(out.points))) < 1e-5


def test_projection_kills_negative_spectrum():
    f = cauchy_signal(1j, _psi_grid()).conj()
    out = make_grid(-5, 0.25, 41)
    P = hardy_project(f, zeta_max=40, zeta_step=0.002, out_grid=out)
    assert np.max(np.abs(P.values)) < 1e-5


def test_projection_is_orthogonal():
    # wide window: the spectrum is ~1e-8 at zeta = 0, so P f has no slow tail
    g = grid_from_span(-40, 40, 0.01)
    f = sample(lambda x: 2 * np.cos(3 * x) * np.exp(-x * x / 8), g)
    P = hardy_project(f, zeta_max=12, zeta_step=0.002)
    Q = f.with_values(f.values - P.values)
    assert abs(norm(f) ** 2 - norm(P) ** 2 - norm(Q) ** 2) < 1e-6
    # the cosine splits evenly between the two half-lines
    assert norm(P) ** 2 == pytest.approx(0.5 * norm(f) ** 2, rel=1e-6)


# --- transforms from analytic extensions ------------------------------------------------------


@pytest.mark.parametrize("y", [0.1, 0.5, 1.0])
def test_transform_via_extension_of_cauchy_kernel(y):
    psi = cauchy_kernel(1j)
    assert abs(transform_via_extension(psi, y, 1.0) - math.exp(-1)) < 1e-4
    assert abs(transform_via_extension(psi, y, -1.0)) < 1e-4


def test_transform_via_extension_of_double_pole():
    # direct transform of 1/(x+i)^2 with its Laurent tail as the oracle
    f = sample(lambda x: 1 / (x + 1j) ** 2, grid_from_span(-200, 200, 0.005), pole_tail(1.0, -1j, 2, 10))
    zeta = np.array([-2.0, -0.5, 0.5, 1.0, 3.0])
    direct = forward_transform(f, make_grid(-2, 0.5, 11)).values[[0, 3, 5, 6, 10]]
    closed = np.where(zeta > 0, -SQRT_2PI * zeta * np.exp(-zeta), 0.0)
    assert np.max(np.abs(direct - closed)) < 1e-6
    h = lambda w: 1 / (1j + w) ** 2
    a = transform_via_extension(h, 0.1, zeta)
    b = transform_via_extension(h, 1.0, zeta)
    assert np.max(np.abs(a - b)) < 1e-5
    assert np.max(np.abs(b - direct)) < 1e-5


# --- growth estimates --------------------------------------------------------------------------


def _psi_spectrum():
    zg = make_grid(0, 0.001, 60001)
    return SampledSignal(zg, np.exp(-zg.points))


@pytest.mark.parametrize("y", [0.05, 0.1, 0.2])
@pytest.mark.parametrize("x", [-1.0, 0.0, 1.0])
def test_growth_bound_for_cauchy_kernel(x, y):
    M = make_concave_weight("sqrt")
    val, bound = growth_from_spectral_weight(_psi_spectrum(), M, 0.5, complex(x, y))
    assert val == pytest.approx(abs(cauchy_kernel(1j)(complex(x, y))), rel=1e-6)
    assert bound == pytest.approx(math.exp(1 / (2 * y)) / y, rel=1e-12)
    assert val <= bound


def test_growth_bound_scales_with_root_c():
    M = make_concave_weight("sqrt")
    _, b1 = growth_from_spectral_weight(_psi_spectrum(), M, 0.5, 0.1j)
    _, b2 = growth_from_spectral_weight(_psi_spectrum(), M, 1.0, 0.1j)
    assert b2 / b1 == pytest.approx(math.sqrt(2), rel=1e-14)


def test_growth_bound_checks_its_hypotheses():
    M = make_concave_weight("sqrt")
    with pytest.raises(InvalidInput):
        growth_from_spectral_weight(_psi_spectrum(), M, 0.01, 0.1j)
    with pytest.raises(InvalidArgument):
        growth_from_spectral_weight(_psi_spectrum(), M, 0.5, 0.7j)


def test_compact_spectrum_is_far_below_bound():
    zg = make_grid(0, 0.001, 1001)
    F = SampledSignal(zg, np.ones(zg.count))
    M = make_concave_weight("sqrt")
    val, bound = growth_from_spectral_weight(F, M, 1.0, 0.3 + 0.1j)
    assert val <= 1 / SQRT_2PI + 1e-12 < bound


def test_corollary_envelope_for_trivial_extension():
    rep = corollary_decay_check(lambda w: np.ones_like(w), 0.05, [0.5, 1.0, 2.0, 4.0])
    assert rep["holds"]
    for row in rep["rows"]:
        assert row["value"] == pytest.approx(SQRT_2PI * row["zeta"] * math.exp(-row["zeta"]), rel=1e-4)


def test_corollary_rejects_fast_growth():
    with pytest.raises(InvalidInput):
        corollary_decay_check(lambda w: np.exp(2j / w), 0.5, [1.0])


# --- product with the conjugate Cauchy kernel ----------------------------------------------


@pytest.mark.parametrize("c", [1.5, 3.0])
def test_cauchy_product_matches_convolution(c):
    f = stretched_signal(c=c)
    zg = make_grid(0.0, 0.01, 20001)
    fh = SampledSignal(zg, stretched_spectrum(zg.points, c))
    z = np.array([0.5, 4.0, 15.0, 40.0])
    rep = cauchy_product_decay(f, fh, z)
    # the spectrum is real, so the convolution integral is real and positive
    conv = [
        integrate.quad(lambda t: stretched_spectrum(t, c) * np.exp(zz - t), zz, np.inf, epsabs=0, epsrel=1e-11)[0]
        for zz in z
    ]
    assert np.allclose(rep["product_transform"], np.array(conv) / SQRT_2PI, rtol=1e-4)
    assert rep["holds"] and rep["worst_ratio"] < 1 / SQRT_2PI + 1e-6


def test_oscillating_tail_is_refused():
    # e^{iw} / (w + i)^2 is in H^1 but its tail is not a Laurent series in 1/x
    with pytest.raises(InvalidInput):
        transform_via_extension(lambda w: np.exp(1j * w) / (w + 1j) ** 2, 0.5, 1.0)
