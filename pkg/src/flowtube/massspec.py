"""Time-of-flight mass-spectrum processing.

Calibration maps flight time to mass through m(t) = a*t^c + b, solved
exactly through three reference peaks.  Detected peaks are assigned the
nearest elemental composition by monoisotopic mass, integrated in a
2-sigma window with a locally fitted linear baseline, tracked across
reaction times, and classified as reactant / product / intermediate /
insignificant by comparing kinetic model fits with a small-sample
corrected information score.

Compositions here are ION compositions: the element counts include the
transferred proton, and exact masses subtract one electron mass per
positive charge.  "C3H7O" therefore names protonated acetone.
"""
from __future__ import annotations

import bisect
import math
import re
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.signal import find_peaks

from ._compat import trapezoid
from .errors import CalibrationError, InvalidSpecError
from .kinetics import (
    INTERMEDIATE_PARAM_NAMES,
    KIND_INTERMEDIATE,
    KineticFit,
    KineticModel,
    SIMPLE_PARAM_NAMES,
    fit_kinetic,
)
from .trace import TimeSeries

ATOMIC_MASS = {"C": 12.0, "H": 1.007825, "O": 15.994915, "N": 14.003074}
ELECTRON_MASS = 0.000549
PROTON_MASS = ATOMIC_MASS["H"] - ELECTRON_MASS

DEFAULT_RESOLUTION = 7000.0
FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
DEFAULT_MASS_TOLERANCE = 0.03

CALIBRATION_EXPONENT_RANGE = (0.3, 0.7)

KIND_INSIGNIFICANT = "insignificant"
KIND_UNCLASSIFIABLE = "unclassifiable"

# margin on the shoulder veto in detect_peaks
FLANK_GUARD_FACTOR = 2.0

# Workflow integration windows shrink when another identified ion sits
# closer than CROWDED_GAP_SIGMAS instrument widths: the [3w, 4w] baseline
# flanks must keep FLANK_CLEARANCE_SIGMAS clear of the neighbor's core,
# or the local baseline rides up the neighbor and the subtracted trace
# inherits the neighbor's kinetics.
CROWDED_GAP_SIGMAS = 6.5
FLANK_CLEARANCE_SIGMAS = 2.5

_FORMULA_TOKEN = re.compile(r"([CHON])(\d*)")


@dataclass(frozen=True, order=True)
class Composition:
    """Element counts of one ion (proton included for protonated species)."""

    c: int = 0
    h: int = 0
    o: int = 0
    n: int = 0

    def __post_init__(self) -> None:
        for name in ("c", "h", "o", "n"):
            if getattr(self, name) < 0:
                raise InvalidSpecError("element counts must be non-negative")

    @property
    def atom_count(self) -> int:
        return self.c + self.h + self.o + self.n

    @property
    def heteroatom_count(self) -> int:
        return self.o + self.n

    def formula(self, charge: int = 0) -> str:
        parts = []
        for symbol, count in (("C", self.c), ("H", self.h), ("N", self.n), ("O", self.o)):
            if count == 0:
                continue
            parts.append(symbol if count == 1 else f"{symbol}{count}")
        body = "".join(parts) or "?"
        if charge > 0:
            body += "+" if charge == 1 else f"{charge}+"
        return body


def parse_formula(text: str) -> Composition:
    """Parse 'C3H7O'-style formulas (C, H, O, N; trailing '+' ignored)."""
    body = text.strip().rstrip("+")
    counts = {"C": 0, "H": 0, "O": 0, "N": 0}
    consumed = 0
    for match in _FORMULA_TOKEN.finditer(body):
        if match.start() != consumed:
            raise InvalidSpecError(f"cannot parse formula {text!r}")
        counts[match.group(1)] += int(match.group(2) or "1")
        consumed = match.end()
    if consumed != len(body) or consumed == 0:
        raise InvalidSpecError(f"cannot parse formula {text!r}")
    return Composition(c=counts["C"], h=counts["H"], o=counts["O"], n=counts["N"])


def monoisotopic_mass(composition: Composition, charge: int = 1) -> float:
    """Monoisotopic mass in Da, electron-corrected for the given charge."""
    if composition.atom_count == 0:
        raise InvalidSpecError("composition is empty")
    mass = (
        composition.c * ATOMIC_MASS["C"]
        + composition.h * ATOMIC_MASS["H"]
        + composition.o * ATOMIC_MASS["O"]
        + composition.n * ATOMIC_MASS["N"]
    )
    return mass - charge * ELECTRON_MASS


@dataclass(frozen=True)
class CalibrationParams:
    """Flight-time to mass map m(t) = a * t^c + b."""

    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if not self.a > 0.0:
            raise InvalidSpecError("calibration scale a must be positive")
        lo, hi = CALIBRATION_EXPONENT_RANGE
        if not lo < self.c < hi:
            raise InvalidSpecError(f"calibration exponent must be in ({lo}, {hi})")

    def mass_at(self, flight_time):
        t = np.asarray(flight_time, dtype=float)
        return self.a * t**self.c + self.b

    def time_for_mass(self, mass):
        m = np.asarray(mass, dtype=float)
        if np.any(m <= self.b):
            raise InvalidSpecError("mass at or below the calibration offset")
        return ((m - self.b) / self.a) ** (1.0 / self.c)


def calibrate(reference_peaks: Sequence[tuple[float, float]]) -> CalibrationParams:
    """Exact three-point calibration.

    ``reference_peaks`` holds three (flight_time, known_mass) pairs.  For
    a trial exponent c the scale and offset follow linearly from two mass
    differences; the exponent is the root of the remaining consistency
    condition, bracketed inside (0.3, 0.7).
    """
    if len(reference_peaks) != 3:
        raise InvalidSpecError("exactly three reference peaks are required")
    pairs = sorted((float(t), float(m)) for t, m in reference_peaks)
    times = np.array([p[0] for p in pairs])
    masses = np.array([p[1] for p in pairs])
    if np.any(np.diff(times) <= 0.0):
        raise InvalidSpecError("reference flight times must be distinct")
    if np.any(times <= 0.0):
        raise InvalidSpecError("reference flight times must be positive")
    if np.any(np.diff(masses) <= 0.0):
        raise CalibrationError("reference masses must increase with flight time")

    dm21 = masses[1] - masses[0]
    dm31 = masses[2] - masses[0]

    def mismatch(c: float) -> float:
        powers = times**c
        return dm21 * (powers[2] - powers[0]) - dm31 * (powers[1] - powers[0])

    lo, hi = CALIBRATION_EXPONENT_RANGE
    lo += 1e-9
    hi -= 1e-9
    f_lo, f_hi = mismatch(lo), mismatch(hi)
    if f_lo == 0.0:
        c = lo
    elif f_hi == 0.0:
        c = hi
    elif f_lo * f_hi > 0.0:
        raise CalibrationError(
            "no calibration exponent in (0.3, 0.7) passes through the reference peaks"
        )
    else:
        c = float(brentq(mismatch, lo, hi, xtol=1e-15, rtol=8.9e-16))

    powers = times**c
    a = dm31 / (powers[2] - powers[0])
    b = float(masses[0] - a * powers[0])
    params = CalibrationParams(a=float(a), b=b, c=c)
    residual = float(np.max(np.abs(params.mass_at(times) - masses)))
    if residual > 1e-9:
        raise CalibrationError(f"calibration residual {residual:g} Da exceeds 1e-9 Da")
    return params


@dataclass(frozen=True)
class MassSpectrum:
    """One acquired spectrum; calibration is attached once known."""

    flight_times: np.ndarray
    intensities: np.ndarray
    calibration: CalibrationParams | None = None
    label: str = ""

    def __post_init__(self) -> None:
        times = np.asarray(self.flight_times, dtype=float)
        intensities = np.asarray(self.intensities, dtype=float)
        object.__setattr__(self, "flight_times", times)
        object.__setattr__(self, "intensities", intensities)
        if times.ndim != 1 or intensities.shape != times.shape:
            raise InvalidSpecError("flight_times and intensities must be 1-D and equal length")
        if times.size < 16:
            raise InvalidSpecError("spectrum is too short")
        if not np.all(np.diff(times) > 0.0):
            raise InvalidSpecError("flight times must be strictly increasing")
        if not np.all(np.isfinite(intensities)) or np.any(intensities < 0.0):
            raise InvalidSpecError("intensities must be finite and non-negative")

    def __len__(self) -> int:
        return int(self.flight_times.size)

    def mz(self) -> np.ndarray:
        if self.calibration is None:
            raise InvalidSpecError("spectrum has no calibration")
        return self.calibration.mass_at(self.flight_times)


@dataclass(frozen=True)
class Peak:
    """One detected spectral peak in mass coordinates."""

    centroid_mz: float
    width_sigma: float
    height: float
    area: float = 0.0

    def __post_init__(self) -> None:
        if not self.width_sigma > 0.0:
            raise InvalidSpecError("width_sigma must be positive")
        if not self.area >= 0.0:
            raise InvalidSpecError("area must be non-negative")


@dataclass(frozen=True)
class PeakIntegral:
    """Baseline-subtracted window integral; flagged when the window was cut."""

    area: float
    partial_window: bool


@dataclass(frozen=True)
class ElementBounds:
    c: int = 20
    h: int = 40
    o: int = 10
    n: int = 4


DEFAULT_ELEMENT_BOUNDS = ElementBounds()


@dataclass(frozen=True)
class FormulaAssignment:
    composition: Composition
    charge: int
    exact_mass: float
    mass_error: float  # observed - exact
    candidate_rank: int


def assign_formula(
    observed_mz: float,
    tolerance: float = DEFAULT_MASS_TOLERANCE,
    bounds: ElementBounds = DEFAULT_ELEMENT_BOUNDS,
) -> list[FormulaAssignment]:
    """All ion compositions within the mass tolerance, best match first.

    Ranking is by |mass error|, ties broken by fewer heteroatoms, then
    fewer carbons.  An empty list means no candidate matched; that is a
    result, not an error.
    """
    if not observed_mz > 0.0:
        raise InvalidSpecError("observed m/z must be positive")
    if not tolerance > 0.0:
        raise InvalidSpecError("tolerance must be positive")
    mass_h = ATOMIC_MASS["H"]
    candidates = []
    for n_c in range(bounds.c + 1):
        mass_c = n_c * ATOMIC_MASS["C"]
        if mass_c - ELECTRON_MASS > observed_mz + tolerance:
            break
        for n_o in range(bounds.o + 1):
            mass_co = mass_c + n_o * ATOMIC_MASS["O"]
            if mass_co - ELECTRON_MASS > observed_mz + tolerance:
                break
            for n_n in range(bounds.n + 1):
                remainder = observed_mz + ELECTRON_MASS - mass_co - n_n * ATOMIC_MASS["N"]
                h_lo = math.ceil((remainder - tolerance) / mass_h)
                h_hi = math.floor((remainder + tolerance) / mass_h)
                for n_h in range(max(h_lo, 0), min(h_hi, bounds.h) + 1):
                    comp = Composition(c=n_c, h=n_h, o=n_o, n=n_n)
                    if comp.atom_count == 0:
                        continue
                    exact = monoisotopic_mass(comp, charge=1)
                    error = observed_mz - exact
                    if abs(error) <= tolerance:
                        candidates.append((abs(error), comp.heteroatom_count, comp.c, comp, exact, error))
    candidates.sort(key=lambda item: item[:3])
    return [
        FormulaAssignment(
            composition=comp,
            charge=1,
            exact_mass=exact,
            mass_error=error,
            candidate_rank=rank,
        )
        for rank, (_, _, _, comp, exact, error) in enumerate(candidates, start=1)
    ]


def noise_floor(intensities: np.ndarray, sigma_multiplier: float = 5.0) -> float:
    """Detection floor from the quietest contiguous tenth of the spectrum."""
    chunks = [c for c in np.array_split(np.asarray(intensities, float), 10) if c.size]
    quietest = min(chunks, key=lambda c: float(c.mean()))
    return float(quietest.mean() + sigma_multiplier * quietest.std())


def _local_maxima(values: np.ndarray, threshold: float) -> np.ndarray:
    # integer counts routinely produce runs of equal apex samples; a
    # strict neighbor comparison would drop such peaks entirely
    idx, _ = find_peaks(values)
    return idx[values[idx] > threshold]


def _parabolic_vertex(x: np.ndarray, y: np.ndarray) -> float:
    """Vertex abscissa of the parabola through three points; middle x if flat."""
    d1 = (y[1] - y[0]) / (x[1] - x[0])
    d2 = (y[2] - y[1]) / (x[2] - x[1])
    curvature = (d2 - d1) / (x[2] - x[0])
    if curvature >= 0.0:
        return float(x[1])
    vertex = 0.5 * (x[0] + x[1]) - d1 / (2.0 * curvature)
    return float(min(max(vertex, x[0]), x[2]))


def refine_apex(x: np.ndarray, y: np.ndarray, index: int) -> float:
    """Sub-sample apex position around a local-maximum sample.

    Uses the log of the counts when all three are positive (exact for a
    Gaussian), otherwise the raw counts.
    """
    sl = slice(index - 1, index + 2)
    window_y = y[sl]
    if np.all(window_y > 0.0):
        return _parabolic_vertex(x[sl], np.log(window_y))
    return _parabolic_vertex(x[sl], window_y)


def detect_peaks(
    spectrum: MassSpectrum,
    resolution: float = DEFAULT_RESOLUTION,
    noise_floor_sigma: float = 5.0,
    min_height: float = 10.0,
    merge_radius_sigmas: float = 2.0,
) -> list[Peak]:
    """Local-maxima peak detection on a calibrated spectrum.

    The detection threshold is the larger of the statistical noise floor
    and ``min_height`` (stray single counts on peak flanks are not
    peaks).  Maxima closer than ``merge_radius_sigmas`` widths to a
    stronger peak are absorbed into it.
    """
    mz = spectrum.mz()
    intensities = spectrum.intensities
    threshold = max(noise_floor(intensities, noise_floor_sigma), min_height)
    apex_idx = _local_maxima(intensities, threshold)

    candidates = []
    for idx in apex_idx:
        centroid = refine_apex(mz, intensities, idx)
        width = centroid / resolution / FWHM_PER_SIGMA
        candidates.append(Peak(centroid_mz=centroid, width_sigma=width, height=float(intensities[idx])))

    candidates.sort(key=lambda p: -p.height)
    kept: list[Peak] = []
    for peak in candidates:
        keep = True
        for other in kept:
            gap = abs(peak.centroid_mz - other.centroid_mz)
            if gap <= merge_radius_sigmas * peak.width_sigma:
                keep = False
                break
            # shoulder veto: drop a bump that a taller neighbor's own
            # Gaussian flank plus counting noise already accounts for
            z = gap / other.width_sigma
            if z < 8.0:
                flank = other.height * math.exp(-0.5 * z * z)
                if peak.height < FLANK_GUARD_FACTOR * (flank + 5.0 * math.sqrt(flank) + min_height):
                    keep = False
                    break
        if keep:
            kept.append(peak)
    kept.sort(key=lambda p: p.centroid_mz)
    return kept


def integrate_peak(spectrum: MassSpectrum, peak: Peak) -> PeakIntegral:
    """Trapezoidal 2-sigma window integral above a local linear baseline.

    The baseline is fitted to the flanking [3 sigma, 4 sigma] windows on
    both sides.  A window that runs past the spectrum edge (or an empty
    flank) sets the partial_window flag.
    """
    mz = spectrum.mz()
    intensities = spectrum.intensities
    center = peak.centroid_mz
    sigma = peak.width_sigma

    core = (mz >= center - 2.0 * sigma) & (mz <= center + 2.0 * sigma)
    flank = ((mz >= center - 4.0 * sigma) & (mz <= center - 3.0 * sigma)) | (
        (mz >= center + 3.0 * sigma) & (mz <= center + 4.0 * sigma)
    )
    partial = bool(
        center - 4.0 * sigma < mz[0]
        or center + 4.0 * sigma > mz[-1]
        or core.sum() < 2
        or not flank.any()
    )
    if core.sum() < 2:
        return PeakIntegral(area=0.0, partial_window=partial)

    if flank.sum() >= 2 and np.ptp(mz[flank]) > 0.0:
        slope, offset = np.polyfit(mz[flank], intensities[flank], 1)
        baseline = slope * mz[core] + offset
    elif flank.any():
        baseline = np.full(int(core.sum()), float(intensities[flank].mean()))
    else:
        baseline = np.zeros(int(core.sum()))
    area = float(trapezoid(intensities[core] - baseline, mz[core]))
    return PeakIntegral(area=area, partial_window=partial)


def cluster_peaks(
    peaks: Sequence[Peak],
    resolution: float = DEFAULT_RESOLUTION,
    radius_sigmas: float = 2.0,
) -> list[tuple[float, float]]:
    """Pool repeated detections of one ion across many spectra.

    Greedy mass-ordered clustering: a peak joins the current cluster when
    it sits within ``radius_sigmas`` peak widths of the running
    intensity-weighted centroid.  Returns (centroid, summed height) per
    cluster, mass-ordered.
    """
    ordered = sorted(peaks, key=lambda p: p.centroid_mz)
    clusters: list[tuple[float, float]] = []
    weighted_sum = 0.0
    weight = 0.0
    for peak in ordered:
        if weight > 0.0:
            center = weighted_sum / weight
            radius = radius_sigmas * center / resolution / FWHM_PER_SIGMA
            if abs(peak.centroid_mz - center) > radius:
                clusters.append((center, weight))
                weighted_sum = 0.0
                weight = 0.0
        weighted_sum += peak.height * peak.centroid_mz
        weight += peak.height
    if weight > 0.0:
        clusters.append((weighted_sum / weight, weight))
    return clusters


@dataclass(frozen=True)
class TraceClassification:
    """Outcome of fitting all kinetic shapes to one species trace."""

    kind: str
    fit: KineticFit | None
    k_prime: float
    ratio_to_reference: float


@dataclass(frozen=True)
class SpeciesVerdict:
    formula: FormulaAssignment
    kind: str
    fitted: KineticModel | None
    ratio_to_reference: float
    k_prime: float = math.nan
    converged: bool = True


def _aicc_score(ssr: float, n: int, n_params: int) -> float:
    if n - n_params - 1 <= 0:
        return math.inf
    penalty = 2.0 * n_params + 2.0 * n_params * (n_params + 1) / (n - n_params - 1)
    return n * math.log(max(ssr, n * 1e-300) / n) + penalty


def classify_trace(
    trace: TimeSeries,
    reference_k_prime: float,
    rate_threshold: float = 0.02,
    threshold_mode: str = "absolute",
    fit_baseline: bool = True,
    null_margin: float = 0.0,
    intermediate_margin: float = 0.0,
) -> TraceClassification:
    """Pick the kinetic shape that best explains a species trace.

    All three kinetic models are fitted (time offset frozen at 0, the
    reaction-time origin) and scored against each other and against a
    flat null model with a small-sample corrected information score.  A
    species whose best shape is the null model, or whose primary rate
    falls below the significance threshold, is insignificant.  The
    threshold is an absolute rate in 1/s in "absolute" mode, or a
    fraction of the reference rate in "relative" mode.

    ``fit_baseline=False`` freezes the kinetic baseline at zero; use it
    for traces that are already baseline-subtracted (peak-area series),
    where a free baseline only softens the rate estimate.

    ``null_margin`` demands that the winning kinetic shape beat the flat
    null by that many score units, not merely tie it.  Flexible shapes
    can eat a noticeable slice of pure noise on short traces, so a
    nonzero margin guards constant signals against spurious kinetics.

    ``intermediate_margin`` plays the same role between the kinetic
    shapes: the bi-exponential contains both simple shapes as exact
    special cases, so on a genuinely simple trace it wins a plain score
    race a few percent of the time by modeling noise.  Worse, the rate it
    then reports (its decay term) need not resemble the trace's real
    rate.  The margin makes the two extra parameters pay for themselves.

    Component amplitudes are required to be non-negative for every
    shape: a fitted growth with negative amplitude is a decay (and vice
    versa), and a grow-then-decay fit with either component negative is
    a simple shape plus a residual offset, not a real intermediate.  A
    trace whose fits all fall to these vetoes is insignificant;
    "unclassifiable" is reserved for traces no model could be fitted to
    at all.
    """
    if not reference_k_prime > 0.0:
        raise InvalidSpecError("reference k' must be positive")
    if threshold_mode not in ("absolute", "relative"):
        raise InvalidSpecError(f"unknown threshold mode {threshold_mode!r}")
    threshold = rate_threshold if threshold_mode == "absolute" else rate_threshold * reference_k_prime

    fixed = {"time_offset": 0.0}
    if not fit_baseline:
        fixed["baseline"] = 0.0

    n = len(trace)
    mean = float(trace.signal.mean())
    null_ssr = float(((trace.signal - mean) ** 2).sum())
    best_kind = None
    best_fit: KineticFit | None = None
    best_score = math.inf
    inter_fit: KineticFit | None = None
    inter_score = math.inf
    null_score = _aicc_score(null_ssr, n, 1)

    evaluated = 0
    for kind in ("reactant", "product", "intermediate"):
        names = INTERMEDIATE_PARAM_NAMES if kind == KIND_INTERMEDIATE else SIMPLE_PARAM_NAMES
        n_params = len(names) - len(fixed)
        if n < n_params + 2:
            continue
        try:
            fit = fit_kinetic(trace, kind, fixed=fixed)
        except (InvalidSpecError, FloatingPointError):
            continue
        if not math.isfinite(fit.residual_norm):
            continue
        evaluated += 1
        if kind == KIND_INTERMEDIATE:
            if fit.model.amplitude < 0.0 or fit.model.secondary_amplitude < 0.0:
                # grow-then-decay means two non-negative components; a
                # negative one is a simple shape plus a residual offset,
                # which belongs to the nested models
                continue
            inter_fit, inter_score = fit, _aicc_score(fit.residual_norm, n, n_params)
            continue
        if fit.model.amplitude < 0.0:
            # decay and growth are one family up to the amplitude sign; a
            # negative amplitude means the trace belongs to the other kind
            continue
        score = _aicc_score(fit.residual_norm, n, n_params)
        if score < best_score:
            best_kind, best_fit, best_score = kind, fit, score

    if inter_fit is not None and inter_score < best_score - intermediate_margin:
        best_kind, best_fit, best_score = KIND_INTERMEDIATE, inter_fit, inter_score

    if best_fit is None:
        # fits that ran but were all sign-vetoed leave a trace with no
        # admissible kinetics; only a trace no model could even be
        # fitted to is unclassifiable
        kind = KIND_INSIGNIFICANT if evaluated > 0 else KIND_UNCLASSIFIABLE
        return TraceClassification(
            kind=kind, fit=None, k_prime=math.nan, ratio_to_reference=math.nan
        )

    k_prime = best_fit.model.primary_rate
    ratio = k_prime / reference_k_prime
    kind = best_kind
    if null_score <= best_score + null_margin or k_prime < threshold:
        kind = KIND_INSIGNIFICANT
    return TraceClassification(kind=kind, fit=best_fit, k_prime=k_prime, ratio_to_reference=ratio)


@dataclass(frozen=True)
class WorkflowReferences:
    """What the workflow needs to bootstrap itself on each spectrum.

    ``calibration_guess`` predicts where the reference ions land; the
    exact calibration is then re-solved per spectrum from the detected
    reference peaks.  ``kinetic_reference`` names the ion whose fitted
    rate anchors every ratio.
    """

    calibration_guess: CalibrationParams
    reference_ions: tuple[Composition, Composition, Composition]
    kinetic_reference: Composition


@dataclass(frozen=True)
class WorkflowConfig:
    resolution: float = DEFAULT_RESOLUTION
    tolerance_da: float = DEFAULT_MASS_TOLERANCE
    noise_floor_sigma: float = 5.0
    min_peak_height: float = 10.0
    merge_radius_sigmas: float = 2.0
    rate_threshold: float = 0.02
    threshold_mode: str = "absolute"
    element_bounds: ElementBounds = DEFAULT_ELEMENT_BOUNDS
    reference_window_rel: float = 0.01
    # peak-area traces are flank-baseline-subtracted, so the kinetic
    # baseline is frozen at zero unless asked otherwise
    fit_baseline: bool = False
    null_margin: float = 6.0
    intermediate_margin: float = 6.0


def locate_reference_time(
    spectrum: MassSpectrum,
    ion: Composition,
    guess: CalibrationParams,
    window_rel: float = 0.01,
    min_height: float = 10.0,
) -> float:
    """Refined flight time of a reference ion, located via the guess map."""
    predicted = float(guess.time_for_mass(monoisotopic_mass(ion, charge=1)))
    times = spectrum.flight_times
    intensities = spectrum.intensities
    lo = np.searchsorted(times, predicted * (1.0 - window_rel))
    hi = np.searchsorted(times, predicted * (1.0 + window_rel))
    lo = max(int(lo), 1)
    hi = min(int(hi), len(spectrum) - 1)
    if hi - lo < 3:
        raise CalibrationError(
            f"reference ion {ion.formula(1)} window is outside spectrum {spectrum.label or '?'}"
        )
    segment = intensities[lo:hi]
    apex = lo + int(np.argmax(segment))
    if intensities[apex] < min_height or apex in (0, len(spectrum) - 1):
        raise CalibrationError(
            f"reference ion {ion.formula(1)} not found in spectrum {spectrum.label or '?'}"
        )
    return refine_apex(times, intensities, apex)


def calibrate_spectrum(
    spectrum: MassSpectrum, references: WorkflowReferences, config: WorkflowConfig
) -> MassSpectrum:
    """Attach an exact per-spectrum calibration from the reference ions."""
    pairs = []
    for ion in references.reference_ions:
        t_ref = locate_reference_time(
            spectrum,
            ion,
            references.calibration_guess,
            window_rel=config.reference_window_rel,
            min_height=config.min_peak_height,
        )
        pairs.append((t_ref, monoisotopic_mass(ion, charge=1)))
    try:
        calibration = calibrate(pairs)
    except (CalibrationError, InvalidSpecError) as exc:
        raise CalibrationError(
            f"calibration failed for spectrum {spectrum.label or '?'}: {exc}"
        ) from exc
    return replace(spectrum, calibration=calibration)


def run_workflow(
    spectra_at_times: Sequence[tuple[float, Sequence[MassSpectrum]]],
    references: WorkflowReferences,
    config: WorkflowConfig = WorkflowConfig(),
) -> list[SpeciesVerdict]:
    """Full spectrum-to-verdict pipeline.

    Per spectrum: locate the reference ions, solve the exact calibration,
    detect and assign peaks.  The union of assigned compositions is then
    integrated in every spectrum (2-sigma window at each ion's exact
    mass; the window scale shrinks for ions with a near neighbor, keeping
    the baseline flanks off the neighbor's core), repeat spectra at the
    same reaction time are averaged, and the resulting per-species traces
    are classified against the kinetic reference ion's fitted rate.

    Returns one verdict per detected composition, sorted by exact mass.
    """
    if len(spectra_at_times) < 4:
        raise InvalidSpecError(
            "need at least 4 reaction-time points to fit the kinetic shapes"
        )
    reaction_times = [float(t) for t, _ in spectra_at_times]
    if sorted(reaction_times) != reaction_times or len(set(reaction_times)) != len(reaction_times):
        raise InvalidSpecError("reaction times must be strictly increasing")
    for time, spectra in spectra_at_times:
        if not spectra:
            raise InvalidSpecError(f"no spectra given for reaction time {time:g} s")

    calibrated: list[list[MassSpectrum]] = []
    all_peaks: list[Peak] = []
    for _, spectra in spectra_at_times:
        row: list[MassSpectrum] = []
        calibrated.append(row)
        for spectrum in spectra:
            spec_cal = calibrate_spectrum(spectrum, references, config)
            row.append(spec_cal)
            all_peaks.extend(
                detect_peaks(
                    spec_cal,
                    resolution=config.resolution,
                    noise_floor_sigma=config.noise_floor_sigma,
                    min_height=config.min_peak_height,
                    merge_radius_sigmas=config.merge_radius_sigmas,
                )
            )

    # pool detections across spectra before assigning formulas: a pooled
    # centroid is steadier than any single noisy apex, so one ion cannot
    # fork into two near-mass formulas between repeats
    detected: dict[Composition, FormulaAssignment] = {}
    for centroid, _height in cluster_peaks(all_peaks, config.resolution, config.merge_radius_sigmas):
        matches = assign_formula(
            centroid, tolerance=config.tolerance_da, bounds=config.element_bounds
        )
        if not matches:
            continue
        top = matches[0]
        previous = detected.get(top.composition)
        if previous is None or abs(top.mass_error) < abs(previous.mass_error):
            detected[top.composition] = top

    if not detected:
        return []

    reference_comp = references.kinetic_reference
    if reference_comp not in detected:
        raise CalibrationError(
            f"kinetic reference {reference_comp.formula(1)} was never detected"
        )

    exact_masses = {comp: monoisotopic_mass(comp, charge=1) for comp in detected}
    ordered_masses = sorted(exact_masses.values())

    traces: dict[Composition, TimeSeries] = {}
    for comp in detected:
        exact = exact_masses[comp]
        sigma = exact / config.resolution / FWHM_PER_SIGMA
        idx = bisect.bisect_left(ordered_masses, exact)
        gap = math.inf
        if idx > 0:
            gap = exact - ordered_masses[idx - 1]
        if idx + 1 < len(ordered_masses):
            gap = min(gap, ordered_masses[idx + 1] - exact)
        width = sigma
        if gap < CROWDED_GAP_SIGMAS * sigma:
            width = max((gap - FLANK_CLEARANCE_SIGMAS * sigma) / 4.0, 0.25 * sigma)
        window = Peak(centroid_mz=exact, width_sigma=width, height=1.0)
        averaged = []
        for row in calibrated:
            areas = [integrate_peak(spectrum, window).area for spectrum in row]
            averaged.append(float(np.mean(areas)))
        traces[comp] = TimeSeries(np.asarray(reaction_times), np.asarray(averaged))

    reference_result = classify_trace(
        traces[reference_comp],
        reference_k_prime=1.0,  # placeholder; only the fitted rate matters here
        rate_threshold=config.rate_threshold,
        threshold_mode="absolute",
        fit_baseline=config.fit_baseline,
        null_margin=config.null_margin,
        intermediate_margin=config.intermediate_margin,
    )
    if reference_result.fit is None or not math.isfinite(reference_result.k_prime):
        raise InvalidSpecError("the kinetic reference trace could not be classified")
    k_ref = reference_result.k_prime

    verdicts = []
    for comp, assignment in detected.items():
        outcome = classify_trace(
            traces[comp],
            reference_k_prime=k_ref,
            rate_threshold=config.rate_threshold,
            threshold_mode=config.threshold_mode,
            fit_baseline=config.fit_baseline,
            null_margin=config.null_margin,
            intermediate_margin=config.intermediate_margin,
        )
        verdicts.append(
            SpeciesVerdict(
                formula=assignment,
                kind=outcome.kind,
                fitted=outcome.fit.model if outcome.fit is not None else None,
                ratio_to_reference=outcome.ratio_to_reference,
                k_prime=outcome.k_prime,
                converged=outcome.fit.converged if outcome.fit is not None else False,
            )
        )
    verdicts.sort(key=lambda v: v.formula.exact_mass)
    return verdicts
