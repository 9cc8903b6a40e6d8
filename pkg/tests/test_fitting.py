"""The shared damped Gauss-Newton engine and its parameter plumbing."""
import math

import numpy as np
import pytest

from flowtube import damped_gauss_newton, fit_model


def _linear_problem():
    t = np.linspace(0.0, 10.0, 21)
    y = 3.0 + 2.0 * t

    def residual(p):
        return p[0] + p[1] * t - y

    def jacobian(p):
        return np.column_stack([np.ones_like(t), t])

    return residual, jacobian


def test_linear_problem_solves_exactly():
    residual, jacobian = _linear_problem()
    result = damped_gauss_newton(residual, jacobian, [0.0, 0.0])
    assert result.converged
    assert result.params == pytest.approx([3.0, 2.0], rel=1e-10)
    assert result.ssr == pytest.approx(0.0, abs=1e-18)


def test_perfect_start_converges_immediately():
    residual, jacobian = _linear_problem()
    result = damped_gauss_newton(residual, jacobian, [3.0, 2.0])
    assert result.converged
    assert result.iterations == 0


def test_nonfinite_start_reported_not_raised():
    def residual(p):
        return np.array([math.inf, 1.0])

    def jacobian(p):
        return np.ones((2, 1))

    result = damped_gauss_newton(residual, jacobian, [1.0])
    assert not result.converged
    assert result.iterations == 0
    assert np.isnan(result.covariance).all()


def test_exponential_decay_roundtrip():
    t = np.linspace(0.0, 12.0, 40)
    truth = np.array([120.0, 0.35])
    y = truth[0] * np.exp(-truth[1] * t)

    def residual(p):
        return p[0] * np.exp(-p[1] * t) - y

    def jacobian(p):
        e = np.exp(-p[1] * t)
        return np.column_stack([e, -p[0] * t * e])

    result = damped_gauss_newton(residual, jacobian, [60.0, 1.0])
    assert result.converged
    assert result.params == pytest.approx(truth, rel=1e-8)


def test_unconstrained_parameter_gets_infinite_sigma():
    # second parameter never touches the model: no data constrains it
    t = np.linspace(0.0, 5.0, 11)
    y = 2.0 * t

    def residual(p):
        return p[0] * t - y

    def jacobian(p):
        return np.column_stack([t, np.zeros_like(t)])

    result = damped_gauss_newton(residual, jacobian, [1.0, 7.0])
    sigmas = result.uncertainties
    assert math.isfinite(sigmas[0])
    assert math.isinf(sigmas[1])
    # the dead parameter keeps its start value
    assert result.params[1] == 7.0


def test_underdetermined_covariance_is_nan():
    # one data point, two parameters
    def residual(p):
        return np.array([p[0] + p[1] - 3.0])

    def jacobian(p):
        return np.array([[1.0, 1.0]])

    result = damped_gauss_newton(residual, jacobian, [1.0, 1.0])
    assert np.isnan(result.covariance).all()


# --- fit_model plumbing ------------------------------------------------------


def _gauss_setup():
    t = np.linspace(0.0, 10.0, 51)
    names = ("amplitude", "center", "width")

    def predict(params, tt):
        a, c, w = params
        return a * np.exp(-0.5 * ((tt - c) / w) ** 2)

    def gradients(params, tt):
        a, c, w = params
        z = (tt - c) / w
        e = np.exp(-0.5 * z * z)
        return np.column_stack([e, a * e * z / w, a * e * z * z / w])

    return t, names, predict, gradients


def test_fit_model_recovers_and_reports():
    t, names, predict, gradients = _gauss_setup()
    y = predict(np.array([10.0, 5.0, 1.2]), t)
    fit = fit_model(
        predict, gradients, t, y, names,
        initial={"amplitude": 5.0, "center": 4.0, "width": 2.0},
        log_names=("width",),
    )
    assert fit.converged
    assert fit.value("amplitude") == pytest.approx(10.0, rel=1e-8)
    assert fit.value("center") == pytest.approx(5.0, rel=1e-8)
    assert fit.value("width") == pytest.approx(1.2, rel=1e-8)
    assert set(fit.as_dict()) == set(names)


def test_fit_model_frozen_is_bit_exact_with_zero_sigma():
    t, names, predict, gradients = _gauss_setup()
    y = predict(np.array([10.0, 5.0, 1.2]), t)
    frozen_center = 4.9750001
    fit = fit_model(
        predict, gradients, t, y, names,
        initial={"amplitude": 5.0, "center": 1.0, "width": 2.0},
        frozen={"center": frozen_center},
    )
    assert fit.value("center") == frozen_center
    assert fit.uncertainty("center") == 0.0
    assert "center" in fit.frozen


def test_fit_model_rejects_bad_parameter_plumbing():
    t, names, predict, gradients = _gauss_setup()
    y = predict(np.array([10.0, 5.0, 1.2]), t)
    with pytest.raises(ValueError):
        fit_model(
            predict, gradients, t, y, names,
            initial={"amplitude": 5.0, "center": 4.0, "width": 2.0},
            frozen={"no_such_param": 1.0},
        )
    with pytest.raises(ValueError):
        fit_model(
            predict, gradients, t, y, names,
            initial={"amplitude": 5.0, "center": 4.0, "width": 2.0},
            frozen={"amplitude": 10.0, "center": 5.0, "width": 1.2},
        )
    with pytest.raises(ValueError):
        fit_model(
            predict, gradients, t, y, names,
            initial={"amplitude": 5.0, "center": 4.0, "width": -2.0},
            log_names=("width",),
        )


def test_fit_model_log_space_keeps_parameter_positive():
    t, names, predict, gradients = _gauss_setup()
    y = predict(np.array([10.0, 5.0, 0.3]), t) + 0.05 * np.sin(t)
    fit = fit_model(
        predict, gradients, t, y, names,
        initial={"amplitude": 5.0, "center": 4.0, "width": 3.0},
        log_names=("width",),
    )
    assert fit.value("width") > 0.0
