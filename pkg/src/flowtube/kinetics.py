"""Kinetic trace models, pseudo-first-order rate extraction, and the
bimolecular ODE oracle.

Three trace shapes cover everything the detector sees:

    reactant      A * exp(-k*(t - t0)) + baseline
    product       A * (1 - exp(-k*(t - t0))) + baseline
    intermediate  A * (1 - exp(-kg*(t - t0))) + B * exp(-kd*(t - t0)) + baseline

The bimolecular rate coefficient follows from two pseudo-first-order
decay rates measured at two oxidant levels: any first-order wall loss
adds the same constant to both and cancels in the difference quotient.

Beware an identifiability trap shared by all three shapes: with the
baseline free, the time offset t0 is exactly degenerate with the
amplitude(s) (A*exp(-k(t-t0)) == (A*e^{k t0})*e^{-kt}).  ``fit_kinetic``
therefore freezes t0 at 0 unless the caller chooses a different frozen
subset, e.g. the product-fit protocol of freezing the rate and baseline
while floating amplitude and t0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DegenerateInputError, InvalidSpecError
from .fitting import MAX_ITERATIONS, SSR_RELATIVE_TOL, ModelFit, fit_model
from .trace import TimeSeries

KIND_REACTANT = "reactant"
KIND_PRODUCT = "product"
KIND_INTERMEDIATE = "intermediate"
KINDS = (KIND_REACTANT, KIND_PRODUCT, KIND_INTERMEDIATE)

SIMPLE_PARAM_NAMES = ("amplitude", "rate", "time_offset", "baseline")
INTERMEDIATE_PARAM_NAMES = (
    "amplitude",
    "growth_rate",
    "secondary_amplitude",
    "decay_rate",
    "time_offset",
    "baseline",
)

ODE_RELATIVE_TOL = 1e-9
ODE_ABSOLUTE_TOL = 1e-3  # in the concentration unit of the inputs


@dataclass(frozen=True)
class KineticModel:
    """One fitted (or prescribed) kinetic trace shape.

    ``rate`` applies to reactant/product kinds; intermediates carry a
    growth and a decay rate plus a secondary amplitude for the decaying
    term.  Amplitudes may take either sign; rates must be positive.
    """

    kind: str
    amplitude: float
    rate: float | None = None
    growth_rate: float | None = None
    decay_rate: float | None = None
    secondary_amplitude: float = 0.0
    time_offset: float = 0.0
    baseline: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidSpecError(f"unknown kind {self.kind!r}")
        if self.kind == KIND_INTERMEDIATE:
            if self.growth_rate is None or self.decay_rate is None:
                raise InvalidSpecError("intermediate needs growth_rate and decay_rate")
            if not (self.growth_rate > 0.0 and self.decay_rate > 0.0):
                raise InvalidSpecError("rates must be positive")
        else:
            if self.rate is None:
                raise InvalidSpecError(f"{self.kind} needs a rate")
            if not self.rate > 0.0:
                raise InvalidSpecError("rates must be positive")

    @property
    def primary_rate(self) -> float:
        """The rate used for significance filtering and reference ratios.

        For intermediates this is the decay rate, the number comparable
        with a reactant's loss rate.
        """
        if self.kind == KIND_INTERMEDIATE:
            assert self.decay_rate is not None
            return self.decay_rate
        assert self.rate is not None
        return self.rate


@dataclass(frozen=True)
class ReactionConditions:
    """Initial concentrations for the bimolecular system, molecules/cm^3."""

    conc_oxidant_cm3: float
    conc_organic_cm3: float
    temperature_k: float = 293.15

    def __post_init__(self) -> None:
        if not (self.conc_oxidant_cm3 > 0.0 and self.conc_organic_cm3 > 0.0):
            raise InvalidSpecError("concentrations must be positive")


@dataclass(frozen=True)
class KineticFit:
    model: KineticModel
    residual_norm: float
    parameter_uncertainties: dict[str, float]
    converged: bool
    iterations: int


@dataclass(frozen=True)
class KineticSolution:
    """ODE solution of the bimolecular system on the requested grid."""

    times: np.ndarray
    organic: np.ndarray
    oxidant: np.ndarray
    product: np.ndarray


def eval_reactant(m: KineticModel, t):
    if m.kind != KIND_REACTANT:
        raise InvalidSpecError(f"expected a reactant model, got {m.kind!r}")
    t = np.asarray(t, dtype=float)
    return m.amplitude * np.exp(-m.rate * (t - m.time_offset)) + m.baseline


def eval_product(m: KineticModel, t):
    if m.kind != KIND_PRODUCT:
        raise InvalidSpecError(f"expected a product model, got {m.kind!r}")
    t = np.asarray(t, dtype=float)
    return m.amplitude * (1.0 - np.exp(-m.rate * (t - m.time_offset))) + m.baseline


def eval_intermediate(m: KineticModel, t):
    if m.kind != KIND_INTERMEDIATE:
        raise InvalidSpecError(f"expected an intermediate model, got {m.kind!r}")
    t = np.asarray(t, dtype=float)
    shifted = t - m.time_offset
    grow = 1.0 - np.exp(-m.growth_rate * shifted)
    decay = np.exp(-m.decay_rate * shifted)
    return m.amplitude * grow + m.secondary_amplitude * decay + m.baseline


def eval_kinetic(m: KineticModel, t):
    """Dispatch on the model kind."""
    if m.kind == KIND_REACTANT:
        return eval_reactant(m, t)
    if m.kind == KIND_PRODUCT:
        return eval_product(m, t)
    return eval_intermediate(m, t)


def _simple_predict(sign: float):
    # sign +1: decaying exponential; sign -1: saturating growth
    def predict(params: np.ndarray, t: np.ndarray) -> np.ndarray:
        amplitude, rate, t0, baseline = params
        decay = np.exp(-rate * (t - t0))
        if sign > 0:
            return amplitude * decay + baseline
        return amplitude * (1.0 - decay) + baseline

    return predict


def _simple_gradients(sign: float):
    def gradients(params: np.ndarray, t: np.ndarray) -> np.ndarray:
        amplitude, rate, t0, _ = params
        shifted = t - t0
        decay = np.exp(-rate * shifted)
        grad = np.empty((t.size, 4))
        if sign > 0:
            grad[:, 0] = decay
            grad[:, 1] = -amplitude * shifted * decay
            grad[:, 2] = amplitude * rate * decay
        else:
            grad[:, 0] = 1.0 - decay
            grad[:, 1] = amplitude * shifted * decay
            grad[:, 2] = -amplitude * rate * decay
        grad[:, 3] = 1.0
        return grad

    return gradients


def _intermediate_predict(params: np.ndarray, t: np.ndarray) -> np.ndarray:
    amplitude, growth, secondary, decay, t0, baseline = params
    shifted = t - t0
    return (
        amplitude * (1.0 - np.exp(-growth * shifted))
        + secondary * np.exp(-decay * shifted)
        + baseline
    )


def _intermediate_gradients(params: np.ndarray, t: np.ndarray) -> np.ndarray:
    amplitude, growth, secondary, decay, t0, _ = params
    shifted = t - t0
    grow_exp = np.exp(-growth * shifted)
    decay_exp = np.exp(-decay * shifted)
    grad = np.empty((t.size, 6))
    grad[:, 0] = 1.0 - grow_exp
    grad[:, 1] = amplitude * shifted * grow_exp
    grad[:, 2] = decay_exp
    grad[:, 3] = -secondary * shifted * decay_exp
    grad[:, 4] = -amplitude * growth * grow_exp + secondary * decay * decay_exp
    grad[:, 5] = 1.0
    return grad


def _fit_is_exact(fit: ModelFit, trace: TimeSeries) -> bool:
    """Converged with an SSR at rounding level for the data scale."""
    scale = max(1.0, float(np.max(np.abs(trace.signal))))
    return fit.converged and fit.ssr <= 1e-16 * len(trace) * scale * scale


def _half_crossing_time(times: np.ndarray, values: np.ndarray) -> float:
    """First time the values cross half of their final level."""
    target = 0.5 * values[-1]
    above = np.nonzero(values >= target)[0]
    if above.size == 0:
        return float(times[-1])
    return float(times[above[0]])


def _initial_guess(trace: TimeSeries, kind: str, t0: float) -> dict[str, float]:
    times = trace.times
    signal = trace.signal
    edge = max(1, int(round(0.05 * len(trace))))
    spacing = float(np.min(np.diff(times)))
    duration = max(trace.duration, spacing)

    if kind == KIND_REACTANT:
        baseline = float(np.median(signal[-edge:]))
        amplitude = float(signal[0] - baseline)
        amplitude = amplitude if amplitude != 0.0 else float(np.ptp(signal)) or 1.0
        # log-linear regression of the baseline-subtracted decay
        cleaned = signal - baseline
        mask = cleaned > 0.0
        if mask.sum() >= 2:
            slope = np.polyfit(times[mask] - t0, np.log(cleaned[mask]), 1)[0]
            rate = -float(slope)
        else:
            rate = 0.0
        if not rate > 0.0:
            rate = math.log(2.0) / duration
        return {"amplitude": amplitude, "rate": rate, "time_offset": t0, "baseline": baseline}

    if kind == KIND_PRODUCT:
        baseline = float(np.median(signal[:edge]))
        amplitude = float(signal[-1] - baseline)
        amplitude = amplitude if amplitude != 0.0 else float(np.ptp(signal)) or 1.0
        # half-rise time sets the rate scale
        t_half = _half_crossing_time(times, signal - baseline)
        rate = math.log(2.0) / max(t_half - t0, spacing / 2.0)
        return {"amplitude": amplitude, "rate": rate, "time_offset": t0, "baseline": baseline}

    baseline = 0.0
    secondary = float(signal[0])
    amplitude = float(signal[-1])
    scale = float(np.ptp(signal)) or 1.0
    if abs(secondary) < 0.05 * scale:
        secondary = math.copysign(0.05 * scale, secondary if secondary != 0.0 else 1.0)
    apex = int(np.argmax(signal))
    if 0 < apex < len(trace) - 1:
        # interior hump: its position sets the growth timescale
        growth = math.log(2.0) / max(float(times[apex]) - t0, spacing / 2.0)
    else:
        t_half = _half_crossing_time(times, signal - signal[0])
        growth = math.log(2.0) / max(t_half - t0, spacing / 2.0)
    decay = growth / 3.0
    # log-slope of the post-apex tail, measured against the final level
    tail = signal[apex:-1] - signal[-1]
    tail_t = times[apex:-1]
    mask = tail > 0.0
    if int(mask.sum()) >= 3:
        slope = float(np.polyfit(tail_t[mask], np.log(tail[mask]), 1)[0])
        if slope < 0.0:
            decay = -slope
    return {
        "amplitude": amplitude,
        "growth_rate": growth,
        "secondary_amplitude": secondary,
        "decay_rate": decay,
        "time_offset": t0,
        "baseline": baseline,
    }


def fit_kinetic(
    trace: TimeSeries,
    kind: str,
    fixed: Mapping[str, float] | None = None,
    max_iterations: int = MAX_ITERATIONS,
    ssr_rtol: float = SSR_RELATIVE_TOL,
) -> KineticFit:
    """Least-squares fit of one kinetic shape, freezing any parameter subset.

    ``fixed`` maps parameter names to held values; when omitted it
    defaults to {"time_offset": 0.0} (see the module docstring for why
    t0 cannot float alongside a free baseline).  Pass an explicit dict
    to choose a different frozen subset; rates are optimized in
    log-space and stay positive.
    """
    if kind not in KINDS:
        raise InvalidSpecError(f"unknown kind {kind!r}")
    if fixed is None:
        fixed = {"time_offset": 0.0}
    names = INTERMEDIATE_PARAM_NAMES if kind == KIND_INTERMEDIATE else SIMPLE_PARAM_NAMES
    for name in fixed:
        if name not in names:
            raise InvalidSpecError(f"unknown parameter {name!r} for kind {kind!r}")
    free_count = len(names) - len(fixed)
    if len(trace) < free_count + 1:
        raise InvalidSpecError(
            f"need at least {free_count + 1} samples to fit {free_count} free parameters"
        )
    if float(np.ptp(trace.signal)) == 0.0 and free_count > 1:
        raise DegenerateInputError("constant trace cannot constrain a kinetic model")

    t0 = float(fixed.get("time_offset", trace.times[0]))
    guess = _initial_guess(trace, kind, t0)

    if kind == KIND_INTERMEDIATE:
        log_names = ("growth_rate", "decay_rate")
        predict, gradients = _intermediate_predict, _intermediate_gradients
    else:
        log_names = ("rate",)
        sign = 1.0 if kind == KIND_REACTANT else -1.0
        predict, gradients = _simple_predict(sign), _simple_gradients(sign)

    for name, value in fixed.items():
        guess[name] = float(value)

    def run(start: Mapping[str, float]) -> ModelFit:
        return fit_model(
            predict,
            gradients,
            trace.times,
            trace.signal,
            names,
            initial=start,
            log_names=log_names,
            frozen=fixed,
            max_iterations=max_iterations,
            ssr_rtol=ssr_rtol,
        )

    fit = run(guess)
    if kind == KIND_INTERMEDIATE and not _fit_is_exact(fit, trace):
        # the two-rate surface has a spurious basin where the growth rate
        # collapses to zero and the amplitude inflates to a linear ramp;
        # restart on a coarse factor grid and keep the lowest SSR
        tried = {(guess["growth_rate"], guess["decay_rate"])}
        for factor_g in (0.25, 1.0, 4.0):
            for factor_d in (0.25, 1.0, 4.0):
                start = dict(guess)
                start["growth_rate"] = guess["growth_rate"] * factor_g
                start["decay_rate"] = guess["decay_rate"] * factor_d
                key = (start["growth_rate"], start["decay_rate"])
                if key in tried:
                    continue
                tried.add(key)
                trial = run(start)
                if not math.isfinite(trial.ssr):
                    continue
                if (
                    not math.isfinite(fit.ssr)
                    or trial.ssr < fit.ssr
                    or (trial.ssr == fit.ssr and trial.converged and not fit.converged)
                ):
                    fit = trial
                if _fit_is_exact(fit, trace):
                    break
            else:
                continue
            break

    if kind == KIND_INTERMEDIATE and "baseline" not in fixed:
        # with the baseline free the shape is two exponentials plus a
        # constant, so relabeling the terms via (A,g,B,d,base) ->
        # (-B,d,-A,g,base+A+B) leaves the curve untouched; a fit landing
        # in the twin shows up as two negative amplitudes.  Restart once
        # from the relabeled point to report the canonical labels.
        v = fit.as_dict()
        if (
            v["amplitude"] < 0.0
            and v["secondary_amplitude"] < 0.0
            and math.isfinite(fit.ssr)
        ):
            swapped = {
                "amplitude": -v["secondary_amplitude"],
                "growth_rate": v["decay_rate"],
                "secondary_amplitude": -v["amplitude"],
                "decay_rate": v["growth_rate"],
                "time_offset": v["time_offset"],
                "baseline": v["baseline"] + v["amplitude"] + v["secondary_amplitude"],
            }
            if swapped["growth_rate"] > 0.0 and swapped["decay_rate"] > 0.0:
                trial = run(swapped)
                # the twins are exactly degenerate, so allow rounding
                # jitter between their SSRs when judging the re-run
                scale = max(1.0, float(np.max(np.abs(trace.signal))))
                slack = fit.ssr * 1e-9 + 1e-16 * len(trace) * scale * scale
                if math.isfinite(trial.ssr) and trial.ssr <= fit.ssr + slack:
                    fit = trial

    values = fit.as_dict()
    if kind == KIND_INTERMEDIATE:
        model = _build_kinetic(
            kind=kind,
            amplitude=values["amplitude"],
            growth_rate=values["growth_rate"],
            decay_rate=values["decay_rate"],
            secondary_amplitude=values["secondary_amplitude"],
            time_offset=values["time_offset"],
            baseline=values["baseline"],
            converged=fit.converged,
        )
    else:
        model = _build_kinetic(
            kind=kind,
            amplitude=values["amplitude"],
            rate=values["rate"],
            time_offset=values["time_offset"],
            baseline=values["baseline"],
            converged=fit.converged,
        )
    return KineticFit(
        model=model,
        residual_norm=fit.ssr,
        parameter_uncertainties=fit.uncertainties_dict(),
        converged=fit.converged,
        iterations=fit.iterations,
    )


def _build_kinetic(converged: bool, **kwargs) -> KineticModel:
    try:
        return KineticModel(**kwargs)
    except InvalidSpecError:
        if converged:
            raise
        obj = object.__new__(KineticModel)
        defaults = {
            "rate": None,
            "growth_rate": None,
            "decay_rate": None,
            "secondary_amplitude": 0.0,
            "time_offset": 0.0,
            "baseline": 0.0,
        }
        defaults.update(kwargs)
        for key, value in defaults.items():
            object.__setattr__(obj, key, value)
        return obj


def pseudo_first_order_k(
    k_prime_1: float, k_prime_0: float, conc_a1: float, conc_a0: float
) -> float:
    """Bimolecular rate coefficient from two pseudo-first-order rates.

    k = (k'_1 - k'_0) / ([A]_1 - [A]_0); a common wall-loss contribution
    to both measured rates cancels in the difference.
    """
    if conc_a1 == conc_a0:
        raise DegenerateInputError("the two oxidant concentrations must differ")
    return (k_prime_1 - k_prime_0) / (conc_a1 - conc_a0)


def ode_oracle(
    cond: ReactionConditions,
    k_cm3_s: float,
    times: Sequence[float],
    rtol: float = ODE_RELATIVE_TOL,
    atol: float = ODE_ABSOLUTE_TOL,
) -> KineticSolution:
    """Integrate the bimolecular system exactly (no excess approximation).

        organic' = oxidant' = -k * organic * oxidant,  product' = +k * ...

    Adaptive explicit Runge-Kutta 4(5); both reagents are consumed, so
    organic + product stays at the initial organic level and the
    oxidant drop mirrors the product rise.
    """
    if not k_cm3_s >= 0.0:
        raise InvalidSpecError("rate coefficient must be non-negative")
    times = np.asarray(times, dtype=float)
    if times.size == 0 or not np.all(np.diff(times) > 0.0):
        raise InvalidSpecError("times must be non-empty and sorted ascending")
    if not times[0] >= 0.0:
        raise InvalidSpecError("times must start at or after 0")

    y0 = [cond.conc_organic_cm3, cond.conc_oxidant_cm3, 0.0]

    def rhs(_t, y):
        reaction = k_cm3_s * y[0] * y[1]
        return [-reaction, -reaction, reaction]

    solution = solve_ivp(
        rhs,
        (0.0, float(times[-1])) if times[-1] > 0.0 else (0.0, 1.0),
        y0,
        method="RK45",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not solution.success:
        raise InvalidSpecError(f"ODE integration failed: {solution.message}")
    organic, oxidant, product = solution.y
    return KineticSolution(times=times, organic=organic, oxidant=oxidant, product=product)


def uncertainty_on_k(
    k_prime: float,
    sigma_k_prime: float,
    conc: float,
    sigma_conc: float,
    tau_rel_error: float = 0.0,
) -> float:
    """1-sigma uncertainty on k = k'/conc, relative errors in quadrature.

    Combines the fit error on k', the oxidant concentration error, and
    the relative residence-time error.
    """
    for name, value in (
        ("sigma_k_prime", sigma_k_prime),
        ("sigma_conc", sigma_conc),
        ("tau_rel_error", tau_rel_error),
    ):
        if not value >= 0.0:
            raise InvalidSpecError(f"{name} must be non-negative")
    if not (k_prime > 0.0 and conc > 0.0):
        raise InvalidSpecError("k_prime and conc must be positive")
    k = k_prime / conc
    rel = math.sqrt(
        (sigma_k_prime / k_prime) ** 2 + (sigma_conc / conc) ** 2 + tau_rel_error**2
    )
    return k * rel
