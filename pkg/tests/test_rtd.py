"""Pulse-shape models, their fits, and the residence-time regression."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

import golden
from flowtube import (
    AsymGaussParams,
    DegenerateInputError,
    InvalidSpecError,
    SymGaussParams,
    TimeSeries,
    asym_mean,
    asym_mode,
    eval_asym_gaussian,
    eval_laminar_rtd,
    eval_sym_gaussian,
    fit_rtd,
    initial_peak_guess,
    regression_through_origin,
)


# --- model evaluation --------------------------------------------------------

def test_sym_gaussian_amplitude_is_area():
    p = SymGaussParams(amplitude=7.5, mean=4.0, width=0.8, baseline=2.0)
    area, _ = quad(lambda t: eval_sym_gaussian(p, t) - p.baseline, -4.0, 12.0)
    assert area == pytest.approx(7.5, rel=1e-10)


def test_sym_gaussian_peaks_at_mean():
    p = SymGaussParams(amplitude=7.5, mean=4.0, width=0.8)
    t = np.linspace(0.0, 8.0, 1601)
    values = eval_sym_gaussian(p, t)
    assert t[np.argmax(values)] == pytest.approx(4.0, abs=0.01)
    assert float(values.max()) == pytest.approx(7.5 / (0.8 * math.sqrt(2 * math.pi)), rel=1e-6)


def test_asym_reduces_to_sym_at_zero_skewness():
    sym = SymGaussParams(amplitude=3.0, mean=5.0, width=1.1, baseline=0.4)
    asym = AsymGaussParams(amplitude=3.0, position=5.0, width=1.1, skewness=0.0, baseline=0.4)
    t = np.linspace(0.0, 10.0, 101)
    assert eval_asym_gaussian(asym, t) == pytest.approx(eval_sym_gaussian(sym, t), rel=1e-14)


def test_width_must_be_positive():
    with pytest.raises(InvalidSpecError):
        SymGaussParams(amplitude=1.0, mean=0.0, width=0.0)
    with pytest.raises(InvalidSpecError):
        AsymGaussParams(amplitude=1.0, position=0.0, width=-1.0, skewness=1.0)


# --- asymmetric moments --------------------------------------------------------

def test_asym_mean_closed_form_matches_frozen_shift():
    p = AsymGaussParams(amplitude=1.0, position=0.0, width=1.0, skewness=3.0)
    assert asym_mean(p) == pytest.approx(golden.ASYM_SHIFT_S, rel=1e-12)


def test_asym_mean_matches_quadrature():
    p = AsymGaussParams(amplitude=1.0, position=6.0, width=1.4, skewness=2.2)
    moment, _ = quad(lambda t: t * eval_asym_gaussian(p, t), -20.0, 40.0)
    assert asym_mean(p) == pytest.approx(moment, abs=1e-10)


def test_asym_mean_reproduces_published_longest_setting():
    for mu0, sigma, beta, published_mean in (
        golden.ASYM_LONGEST_ACETONE,
        golden.ASYM_LONGEST_ACETONITRILE,
    ):
        p = AsymGaussParams(amplitude=1.0, position=mu0, width=sigma, skewness=beta)
        assert asym_mean(p) == pytest.approx(published_mean, abs=0.01)


def test_asym_mode_matches_brute_force():
    p = AsymGaussParams(amplitude=1.0, position=6.0, width=1.4, skewness=2.2)
    grid = np.linspace(0.0, 12.0, 2_000_001)
    brute = grid[int(np.argmax(eval_asym_gaussian(p, grid)))]
    assert asym_mode(p) == pytest.approx(brute, abs=1e-4)


def test_asym_mode_is_position_at_zero_skewness():
    p = AsymGaussParams(amplitude=1.0, position=3.7, width=0.9, skewness=0.0)
    assert asym_mode(p) == pytest.approx(3.7, abs=1e-4)


def test_asym_mode_between_position_and_mean_for_positive_skew():
    p = AsymGaussParams(amplitude=1.0, position=5.0, width=1.0, skewness=3.0)
    mode = asym_mode(p)
    assert p.position < mode < asym_mean(p)


# --- laminar profile ----------------------------------------------------------

def test_laminar_rtd_shape():
    tau = 3.0
    t = np.array([0.0, 1.49, 1.5, 2.0, 6.0])
    values = eval_laminar_rtd(tau, t)
    assert values[0] == 0.0
    assert values[1] == 0.0
    # onset at tau/2, height tau^3/(2 (tau/2)^4) = 8/tau
    assert values[2] == pytest.approx(8.0 / tau, rel=1e-12)
    assert values[3] == pytest.approx(tau**3 / (2.0 * 2.0**4), rel=1e-12)


def test_laminar_rtd_moments():
    # implemented exactly as written: area 4/3, raw first moment tau
    tau = 3.0
    area, _ = quad(lambda t: eval_laminar_rtd(tau, np.array([t]))[0], tau / 2, 4000.0)
    first, _ = quad(
        lambda t: t * eval_laminar_rtd(tau, np.array([t]))[0], tau / 2, 400000.0,
        limit=200,
    )
    assert area == pytest.approx(4.0 / 3.0, rel=1e-6)
    assert first == pytest.approx(tau, rel=1e-4)


def test_laminar_rtd_needs_positive_tau():
    with pytest.raises(InvalidSpecError):
        eval_laminar_rtd(0.0, np.array([1.0]))


# --- initial guess --------------------------------------------------------------

def test_initial_guess_near_truth():
    p = SymGaussParams(amplitude=40.0, mean=6.0, width=0.9, baseline=3.0)
    t = np.linspace(0.0, 14.0, 141)
    guess = initial_peak_guess(TimeSeries(t, eval_sym_gaussian(p, t)))
    assert guess["mean"] == pytest.approx(6.0, abs=0.1)
    assert guess["width"] == pytest.approx(0.9, rel=0.25)
    assert guess["baseline"] == pytest.approx(3.0, rel=0.05)
    assert guess["amplitude"] == pytest.approx(40.0, rel=0.2)


def test_initial_guess_rejects_structureless_trace():
    t = np.linspace(0.0, 5.0, 20)
    with pytest.raises(DegenerateInputError):
        initial_peak_guess(TimeSeries(t, np.full(20, 7.0)))


def test_initial_guess_baseline_fraction_bounds():
    t = np.linspace(0.0, 5.0, 20)
    trace = TimeSeries(t, np.sin(t) + 2.0)
    with pytest.raises(InvalidSpecError):
        initial_peak_guess(trace, baseline_fraction=0.0)
    with pytest.raises(InvalidSpecError):
        initial_peak_guess(trace, baseline_fraction=0.5)


# --- fitting ---------------------------------------------------------------------

def test_fit_sym_roundtrip():
    p = SymGaussParams(amplitude=25.0, mean=7.0, width=1.3, baseline=1.5)
    t = np.linspace(0.0, 16.0, 161)
    fit = fit_rtd(TimeSeries(t, eval_sym_gaussian(p, t)), "sym")
    assert fit.converged
    assert fit.params.amplitude == pytest.approx(25.0, rel=1e-8)
    assert fit.params.mean == pytest.approx(7.0, rel=1e-8)
    assert fit.params.width == pytest.approx(1.3, rel=1e-8)
    assert fit.params.baseline == pytest.approx(1.5, rel=1e-8)


def test_fit_asym_roundtrip():
    p = AsymGaussParams(amplitude=25.0, position=6.0, width=1.1, skewness=2.5, baseline=1.0)
    t = np.linspace(0.0, 16.0, 161)
    fit = fit_rtd(TimeSeries(t, eval_asym_gaussian(p, t)), "asym")
    assert fit.converged
    assert fit.params.skewness == pytest.approx(2.5, rel=1e-7)
    assert fit.params.position == pytest.approx(6.0, rel=1e-7)


def test_fit_asym_escapes_flat_skewness_basin():
    # the default start walks into the skewness=0 valley on this shape;
    # the multi-start must climb back out and recover the true curve
    p = AsymGaussParams(
        amplitude=22.316826485935007,
        position=6.537895100785872,
        width=0.9585651536310156,
        skewness=0.6778036083808747,
        baseline=2.9939759875297987,
    )
    t = np.linspace(0.0, 20.0, 161)
    fit = fit_rtd(TimeSeries(t, eval_asym_gaussian(p, t)), "asym")
    assert fit.converged
    assert fit.params.skewness == pytest.approx(p.skewness, rel=1e-6)
    assert fit.params.position == pytest.approx(p.position, rel=1e-6)


def test_fit_asym_negative_skew():
    p = AsymGaussParams(amplitude=18.0, position=8.0, width=1.2, skewness=-2.0, baseline=0.7)
    t = np.linspace(0.0, 16.0, 161)
    fit = fit_rtd(TimeSeries(t, eval_asym_gaussian(p, t)), "asym")
    assert fit.converged
    assert fit.params.skewness == pytest.approx(-2.0, rel=1e-7)


def test_fit_rtd_unknown_model():
    t = np.linspace(0.0, 5.0, 20)
    trace = TimeSeries(t, np.exp(-((t - 2.0) ** 2)))
    with pytest.raises(InvalidSpecError):
        fit_rtd(trace, "triangular")


def test_fit_asym_needs_five_samples():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    trace = TimeSeries(t, np.array([0.1, 1.0, 0.9, 0.1]))
    with pytest.raises(InvalidSpecError):
        fit_rtd(trace, "asym")


def test_fit_rtd_nonconvergence_is_reported_not_raised():
    p = SymGaussParams(amplitude=25.0, mean=7.0, width=1.3, baseline=1.5)
    t = np.linspace(0.0, 16.0, 161)
    fit = fit_rtd(TimeSeries(t, eval_sym_gaussian(p, t)), "sym", max_iterations=1)
    assert not fit.converged


# --- regression -------------------------------------------------------------------

def test_regression_slope_matches_frozen_values():
    rows = [r for r in golden.RTD_SYM_TABLE if not r.exploratory]
    acetone = regression_through_origin((r.tau_s, r.acetone_mu) for r in rows)
    acetonitrile = regression_through_origin((r.tau_s, r.acetonitrile_mu) for r in rows)
    assert acetone == pytest.approx(golden.SLOPE_ACETONE, rel=1e-12)
    assert acetonitrile == pytest.approx(golden.SLOPE_ACETONITRILE, rel=1e-12)


def test_regression_exact_on_proportional_pairs():
    pairs = [(1.0, 1.7), (2.0, 3.4), (5.0, 8.5)]
    assert regression_through_origin(pairs) == pytest.approx(1.7, rel=1e-14)


def test_regression_rejects_bad_input():
    with pytest.raises(InvalidSpecError):
        regression_through_origin([])
    with pytest.raises(InvalidSpecError):
        regression_through_origin([(0.0, 1.0)])
    with pytest.raises(InvalidSpecError):
        regression_through_origin([(-1.0, 1.0)])
