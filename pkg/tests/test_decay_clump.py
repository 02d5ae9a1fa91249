import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from clumplab.corpus import fat_cantor_indicator
from clumplab.decay_clump import (
    DecayProfile,
    IntervalCollection,
    decay_profile,
    detect_clumps,
    fit_stretched_decay,
    mask_to_intervals,
    tail_mass,
    tail_mass_profile,
    truncated_log_integral,
)
from clumplab.errors import DegenerateInput, InvalidArgument
from clumplab.signal_core import SampledSignal, TailModel, gaussian, grid_from_span, make_grid, sample


# --- tail mass ------------------------------------------------------------------------


def test_tail_mass_of_one_sided_exponential():
    g = grid_from_span(-1, 40, 2**-12)
    f = sample(lambda t: np.where(t >= 0, np.exp(-t), 0.0), g, TailModel("exponential", right=(math.exp(-40),), rate=1.0))
    xs = np.array([0.0, 0.5, 3.0, 12.0, 39.0])
    assert np.max(np.abs(tail_mass_profile(f, xs) - np.exp(-xs))) < 1e-8


def test_tail_mass_of_box():
    f = sample(lambda t: ((t >= 0) & (t <= 1)).astype(float), grid_from_span(-1, 2, 1e-3))
    for x in (0.0, 0.25, 0.5, 0.999, 1.5):
        assert tail_mass(f, x) == pytest.approx(max(0.0, 1 - x), abs=1e-3)


def test_tail_mass_of_gaussian_against_erfc():
    f = gaussian(grid_from_span(-40, 40, 2**-12))
    xs = np.linspace(-3, 6, 19)
    oracle = np.array([integrate.quad(lambda t: math.exp(-t * t / 2), x, np.inf, epsabs=1e-14)[0] for x in xs])
    assert np.max(np.abs(oracle - math.sqrt(math.pi / 2) * special.erfc(xs / math.sqrt(2)))) < 1e-12
    assert np.max(np.abs(tail_mass_profile(f, xs) - oracle)) < 1e-8


def test_rational_tail_contributes_closed_form_mass():
    g = grid_from_span(-10, 10, 1e-3)
    f = sample(lambda t: 1 / (1 + t * t), g, TailModel("rational", 2, right=(1.0, 0.0, -1.0, 0.0, 1.0), left=(1.0, 0.0, -1.0, 0.0, 1.0)))
    assert tail_mass(f, 0.0) == pytest.approx(math.pi / 2, abs=1e-6)


@given(st.floats(0.2, 3.0), st.floats(-2, 2))
def test_tail_mass_is_non_increasing(scale, centre):
    f = sample(lambda t: np.exp(-np.abs(t - centre) / scale) * (1 + 0.5 * np.cos(5 * t)), grid_from_span(-20, 20, 0.01))
    rho = tail_mass_profile(f, np.linspace(-25, 25, 301))
    assert np.all(np.diff(rho) <= 1e-15)
    assert rho[-1] == 0.0


# --- stretched fit ---------------------------------------------------------------------


def test_fit_recovers_stretched_exponential():
    x = np.arange(1.0, 101.0)
    c, a, r2 = fit_stretched_decay(DecayProfile(x, np.exp(-2 * np.sqrt(x))))
    assert c == pytest.approx(2.0, abs=1e-6) and a == pytest.approx(0.5, abs=1e-6)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_recovers_exponential():
    x = np.arange(1.0, 101.0)
    c, a, _ = fit_stretched_decay(DecayProfile(x, np.exp(-x)))
    assert (c, a) == (pytest.approx(1.0, abs=1e-6), pytest.approx(1.0, abs=1e-6))


def test_fit_tolerates_small_oscillation():
    x = np.arange(1.0, 101.0)
    c, a, _ = fit_stretched_decay(DecayProfile(x, np.exp(-2 * np.sqrt(x)) * (1 + 0.01 * np.sin(x))))
    assert 0.45 <= a <= 0.55 and 1.8 <= c <= 2.2


@given(st.floats(0.3, 5.0), st.sampled_from([0.25, 0.4, 0.5, 0.7, 1.0]), st.floats(-3, 3))
def test_fit_is_exact_inside_the_family(c, a, logA):
    x = np.linspace(0.5, 80, 60)
    cf, af, _ = fit_stretched_decay(DecayProfile(x, np.exp(logA - c * x**a)))
    assert af == pytest.approx(a, abs=1e-9) and cf == pytest.approx(c, rel=1e-6)


def test_fit_rejects_zero_profile():
    with pytest.raises(DegenerateInput):
        fit_stretched_decay(DecayProfile(np.arange(10.0), np.zeros(10)))


def test_profile_records_fit():
    f = gaussian(grid_from_span(-20, 20, 0.01))
    prof = decay_profile(f, np.linspace(0.5, 5, 20))
    fit_stretched_decay(prof)
    assert set(prof.to_dict()["fit"]) == {"c", "a", "r2"}


# --- truncated log integrals -----------------------------------------------------------------


def test_log_integral_of_one_is_zero():
    f = sample(np.ones_like, grid_from_span(-0.5, 1.5, 1e-3))
    assert truncated_log_integral(f, (0, 1), 5.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("T,expected", [(10.0, -5.0), (3.0, -3.0)])
def test_log_integral_clamps(T, expected):
    f = sample(lambda x: np.full_like(x, math.exp(-5)), grid_from_span(0, 1, 1e-3))
    assert truncated_log_integral(f, (0, 1), T) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("T", [2.0, 4.0, 8.0, 16.0])
def test_log_integral_against_piecewise_closed_form(T):
    # int_0^1 max(-1/x, -T) dx = -1 - ln T for T >= 1
    with np.errstate(divide="ignore"):
        f = sample(lambda x: np.where(x > 0, np.exp(-1 / np.where(x > 0, x, 1.0)), 0.0), grid_from_span(0, 1, 1e-5))
    assert truncated_log_integral(f, (0, 1), T) == pytest.approx(-1 - math.log(T), abs=1e-4)


def test_log_integral_rejects_bad_input():
    f = sample(np.ones_like, grid_from_span(0, 1, 0.1))
    with pytest.raises(InvalidArgument):
        truncated_log_integral(f, (0, 1), 0.0)
    with pytest.raises(InvalidArgument):
        truncated_log_integral(f, (-1, 1), 1.0)


# --- intervals ----------------------------------------------------------------------------


def test_interval_collection_algebra():
    A = IntervalCollection([(0, 1), (2, 3)])
    B = IntervalCollection([(0.5, 2.5)])
    assert A.intersect(B).to_list() == [[0.5, 1.0], [2.0, 2.5]]
    assert A.difference_measure(B) == pytest.approx(1.0)
    assert IntervalCollection.merged([(0, 1), (1, 2), (2.0 + 1e-12, 3)], gap=1e-9).to_list() == [[0.0, 3.0]]
    with pytest.raises(InvalidArgument):
        IntervalCollection([(0, 2), (1, 3)])


def test_mask_to_intervals_cells_own_half_steps():
    x = make_grid(0, 0.1, 11).points
    iv = mask_to_intervals(x, (x > 0.25) & (x < 0.65), 0.1)
    assert iv.to_list() == [[pytest.approx(0.25), pytest.approx(0.65)]]


# --- clump detection --------------------------------------------------------------------------


def _box():
    return sample(lambda x: ((x >= 0) & (x <= 1)).astype(float), grid_from_span(-0.5, 1.5, 2**-10))


def test_box_is_one_clump():
    f = _box()
    rep = detect_clumps(f, depth=6)
    assert rep.residual_measure < 2 * f.grid.step
    assert rep.clumps.contains(np.linspace(0.01, 0.99, 50)).all()


def test_fat_cantor_has_no_clumps():
    f = fat_cantor_indicator(grid_from_span(-0.25, 1.25, 2**-12))
    rep = detect_clumps(f, depth=4)
    assert len(rep.clumps) == 0
    assert rep.residual_measure == pytest.approx(0.5, abs=0.05)


def test_essential_singularity_is_clumped_away_from_zero():
    with np.errstate(divide="ignore", over="ignore"):
        f = sample(lambda x: np.where((x > 0) & (x < 1), np.exp(-1 / np.where(x > 0, x, 1.0)), 0.0), grid_from_span(0, 1, 2**-14))
    rep = detect_clumps(f, depth=8, floor=1e-300)
    assert rep.residual_measure < 0.02
    assert rep.clumps.contains(np.linspace(0.05, 0.99, 40)).all()


def test_zero_signal_gives_empty_report():
    rep = detect_clumps(SampledSignal(make_grid(0, 0.1, 11), np.zeros(11)))
    assert len(rep.clumps) == 0 and rep.residual_measure == 0.0


@pytest.mark.parametrize("name", ["box", "cantor", "gauss"])
def test_divergent_cells_stay_divergent_under_refinement(name):
    g = grid_from_span(-0.25, 1.25, 2**-12)
    f = {"box": _box(), "cantor": fat_cantor_indicator(g), "gauss": gaussian(g, 0.2)}[name]
    for depth in range(1, 7):
        coarse = detect_clumps(f, depth=depth).verdicts()
        fine = detect_clumps(f, depth=depth + 1).verdicts()
        for i, v in enumerate(coarse):
            if v == "divergent":
                # at least one child stays divergent
                assert "divergent" in fine[2 * i : 2 * i + 2]


def test_bad_cutoffs_rejected():
    with pytest.raises(InvalidArgument):
        detect_clumps(_box(), cutoffs=[4.0, 2.0])


def test_report_serialises():
    d = detect_clumps(_box(), depth=3).to_dict()
    assert len(d["cells"]) == 8 and d["depth"] == 3
    assert "residual measure" in detect_clumps(_box(), depth=2).table()
