"""Synthetic pulse traces, kinetic time series, and mass spectra.

Everything random goes through a PCG64 generator built from an explicit
seed, so any simulated dataset is reproducible bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import InvalidSpecError
from .kinetics import KineticModel, ReactionConditions, eval_kinetic, ode_oracle
from .massspec import (
    FWHM_PER_SIGMA,
    CalibrationParams,
    Composition,
    MassSpectrum,
    monoisotopic_mass,
)
from .trace import TimeSeries


def make_rng(seed) -> np.random.Generator:
    """The package-wide PRNG: PCG64 under an explicit seed."""
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class PulseSpec:
    """Rectangular tracer injection smoothed by a single-pole flow lag."""

    duration_s: float
    mfc_response_s: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not self.duration_s > 0.0:
            raise InvalidSpecError("pulse duration must be positive")
        if self.mfc_response_s < 0.0:
            raise InvalidSpecError("flow-controller response time cannot be negative")
        if not self.amplitude > 0.0:
            raise InvalidSpecError("pulse amplitude must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    """Multiplicative Gaussian detector noise."""

    relative_sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.relative_sigma < 0.0:
            raise InvalidSpecError("noise level cannot be negative")


def _uniform_step(times: np.ndarray) -> float:
    steps = np.diff(times)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=1e-6, atol=0.0):
        raise InvalidSpecError("pulse synthesis needs a uniform time grid")
    return dt


def synth_pulse_response(
    times: np.ndarray,
    density: np.ndarray,
    pulse: PulseSpec,
    baseline: float = 0.0,
    noise: NoiseSpec = NoiseSpec(),
) -> TimeSeries:
    """Detector trace for a tracer pulse through a given residence density.

    The rectangular pulse is convolved with the flow-controller lag
    kernel and then with ``density`` (the residence-time density sampled
    on the same grid, which must be uniform and start at the pulse
    onset).  Noise multiplies the full signal, baseline included.
    """
    times = np.asarray(times, dtype=float)
    density = np.asarray(density, dtype=float)
    if times.ndim != 1 or times.size < 4 or density.shape != times.shape:
        raise InvalidSpecError("times and density must be matching 1-D arrays")
    dt = _uniform_step(times)
    grid = times - times[0]

    signal = np.where(grid < pulse.duration_s, pulse.amplitude, 0.0)
    if pulse.mfc_response_s > 0.0:
        kernel = np.exp(-grid / pulse.mfc_response_s) / pulse.mfc_response_s
        signal = np.convolve(signal, kernel)[: times.size] * dt
    signal = np.convolve(signal, density)[: times.size] * dt
    signal = signal + baseline
    if noise.relative_sigma > 0.0:
        rng = make_rng(noise.seed)
        signal = signal * (1.0 + noise.relative_sigma * rng.standard_normal(times.size))
    return TimeSeries(times, signal)


def synth_kinetic_dataset(
    conditions: ReactionConditions,
    k_cm3_s: float,
    times: np.ndarray,
    sensitivities: Mapping[str, float],
    noise: NoiseSpec = NoiseSpec(),
    baselines: Mapping[str, float] | None = None,
) -> dict[str, TimeSeries]:
    """Detector-scaled concentration traces from the bimolecular network.

    ``sensitivities`` maps any of organic / oxidant / product to a
    counts-per-concentration factor; only the named channels are
    returned.  One PRNG draws the noise for every channel in a fixed
    order, so the whole dataset is reproducible from one seed.
    """
    baselines = dict(baselines or {})
    unknown = set(sensitivities) - {"organic", "oxidant", "product"}
    if unknown:
        raise InvalidSpecError(f"unknown channels: {sorted(unknown)}")
    if not sensitivities:
        raise InvalidSpecError("no channels requested")
    solution = ode_oracle(conditions, k_cm3_s, times)
    rng = make_rng(noise.seed)
    out: dict[str, TimeSeries] = {}
    for name in ("organic", "oxidant", "product"):
        if name not in sensitivities:
            continue
        clean = sensitivities[name] * getattr(solution, name) + baselines.get(name, 0.0)
        if noise.relative_sigma > 0.0:
            clean = clean * (1.0 + noise.relative_sigma * rng.standard_normal(clean.size))
        out[name] = TimeSeries(solution.times, clean)
    return out


def geometric_mass_axis(
    mass_min: float,
    mass_max: float,
    resolution: float,
    samples_per_sigma: float = 3.0,
) -> np.ndarray:
    """Constant-resolution mass grid (geometric spacing).

    At resolving power R the peak width scales with mass, so a grid with
    a fixed number of samples per peak width is geometric.
    """
    if not 0.0 < mass_min < mass_max:
        raise InvalidSpecError("need 0 < mass_min < mass_max")
    if not resolution > 0.0 or not samples_per_sigma > 0.0:
        raise InvalidSpecError("resolution and samples_per_sigma must be positive")
    sigmas_across = math.log(mass_max / mass_min) * resolution * FWHM_PER_SIGMA
    n = int(math.ceil(sigmas_across * samples_per_sigma)) + 1
    return np.geomspace(mass_min, mass_max, n)


def synth_spectrum(
    species: Sequence[tuple[Composition | float, float]],
    calibration: CalibrationParams,
    resolution: float = 7000.0,
    mass_range: tuple[float, float] = (15.0, 130.0),
    samples_per_sigma: float = 3.0,
    baseline: float = 0.0,
    seed=None,
    label: str = "",
) -> MassSpectrum:
    """One synthetic spectrum: Gaussian peaks on a constant-resolution grid.

    ``species`` pairs an ion composition (or a bare mass) with its apex
    height in counts.  With a seed, the expected profile is replaced by
    Poisson counts; without one the spectrum is noiseless.  Flight times
    come from inverting the calibration, so a workflow run recovers the
    same calibration from the reference peaks.
    """
    if baseline < 0.0:
        raise InvalidSpecError("baseline cannot be negative")
    mass_axis = geometric_mass_axis(mass_range[0], mass_range[1], resolution, samples_per_sigma)
    expected = np.full(mass_axis.size, float(baseline))
    for what, apex in species:
        mass = monoisotopic_mass(what, charge=1) if isinstance(what, Composition) else float(what)
        sigma = mass / resolution / FWHM_PER_SIGMA
        if mass - 6.0 * sigma < mass_axis[0] or mass + 6.0 * sigma > mass_axis[-1]:
            raise InvalidSpecError(f"species at {mass:.4f} Da does not fit the mass range")
        if apex < 0.0:
            raise InvalidSpecError("peak apex height cannot be negative")
        lo, hi = np.searchsorted(mass_axis, (mass - 6.0 * sigma, mass + 6.0 * sigma))
        window = mass_axis[lo:hi]
        expected[lo:hi] += apex * np.exp(-0.5 * ((window - mass) / sigma) ** 2)
    if seed is not None:
        counts = make_rng(seed).poisson(expected).astype(float)
    else:
        counts = expected
    flight_times = np.asarray(calibration.time_for_mass(mass_axis), dtype=float)
    return MassSpectrum(flight_times=flight_times, intensities=counts, label=label)


def synth_ms_dataset(
    reaction_times: Sequence[float],
    dynamic_species: Sequence[tuple[Composition, KineticModel, float]],
    constant_species: Sequence[tuple[Composition, float]],
    calibration: CalibrationParams,
    resolution: float = 7000.0,
    mass_range: tuple[float, float] = (15.0, 130.0),
    samples_per_sigma: float = 3.0,
    baseline: float = 0.0,
    repeats: int = 1,
    seed=None,
) -> list[tuple[float, list[MassSpectrum]]]:
    """A full synthetic workflow dataset over a reaction-time series.

    Dynamic species follow their kinetic model (scale converts model
    signal to apex counts, negatives clipped); constant species hold a
    fixed apex, which is how calibration reference ions are injected.
    Every spectrum draws from its own child of one seed sequence.
    """
    if repeats < 1:
        raise InvalidSpecError("repeats must be at least 1")
    times = [float(t) for t in reaction_times]
    seeds: Sequence = [None] * (len(times) * repeats)
    if seed is not None:
        seeds = np.random.SeedSequence(seed).spawn(len(times) * repeats)
    dataset: list[tuple[float, list[MassSpectrum]]] = []
    for i, t in enumerate(times):
        row = []
        for r in range(repeats):
            species: list[tuple[Composition | float, float]] = []
            for comp, model, scale in dynamic_species:
                level = float(eval_kinetic(model, np.asarray([t]))[0])
                species.append((comp, max(scale * level, 0.0)))
            species.extend(constant_species)
            row.append(
                synth_spectrum(
                    species,
                    calibration,
                    resolution=resolution,
                    mass_range=mass_range,
                    samples_per_sigma=samples_per_sigma,
                    baseline=baseline,
                    seed=seeds[i * repeats + r],
                    label=f"t{t:g}s_rep{r}",
                )
            )
        dataset.append((t, row))
    return dataset
