"""Command-line interface.

Subcommands: ``design`` (flow balance, residence time, restrictor
sizing, regime diagnostics), ``rtd-fit`` (batch pulse-trace fitting),
``kinetics`` (single-trace kinetic fit, optional rate-coefficient
conversion), ``ms`` (manifest-driven spectra-to-verdicts workflow) and
``simulate`` (synthetic traces, kinetic datasets, spectra datasets).

File formats:
  trace CSV     header ``time_s,signal``
  spectrum CSV  header ``flight_time,intensity``
  manifest      JSON: calibration_guess {a,b,c}, reference_ions (three
                formulas), kinetic_reference formula, spectra as a list
                of {reaction_time_s, files} with paths relative to the
                manifest

Exit codes: 0 success, 1 input/parse/calibration error, 2 physical
validity error (back-diffusion, infeasible restrictor), 3 fit
non-convergence.  Human-readable numbers carry 6 significant digits;
``--json`` output keeps full precision and sorted keys.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from ._compat import trapezoid
from .errors import (
    BackDiffusionError,
    CalibrationError,
    DegenerateInputError,
    FlowTubeError,
    InfeasibleDesignError,
    InvalidSpecError,
)
from .kinetics import (
    KineticModel,
    ReactionConditions,
    fit_kinetic,
    pseudo_first_order_k,
    uncertainty_on_k,
)
from .massspec import (
    CalibrationParams,
    Composition,
    MassSpectrum,
    WorkflowConfig,
    WorkflowReferences,
    parse_formula,
    run_workflow,
)
from .physchem import AIR, GasProperties
from .reactor import (
    ReactorSpec,
    RestrictorSpec,
    capillary_pressure_drop,
    flow_balance,
    regime_report,
    residence_time,
    restrictor_length_for_dp,
)
from .rtd import (
    AsymGaussParams,
    SymGaussParams,
    asym_mean,
    eval_asym_gaussian,
    eval_laminar_rtd,
    eval_sym_gaussian,
    fit_rtd,
    regression_through_origin,
)
from .simulate import (
    NoiseSpec,
    PulseSpec,
    synth_kinetic_dataset,
    synth_ms_dataset,
    synth_pulse_response,
)
from .trace import TimeSeries

TRACE_HEADER = ("time_s", "signal")
SPECTRUM_HEADER = ("flight_time", "intensity")

_PRESSURE_UNITS = {"": 1.0, "pa": 1.0, "kpa": 1e3, "mbar": 1e2, "bar": 1e5}


def fmt(x: float) -> str:
    return f"{x:.6g}"


def parse_pressure(text: str) -> float:
    """'1bar', '250 mbar', '45kPa' or plain pascals."""
    match = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([a-zA-Z]*)\s*", text)
    if match is None:
        raise InvalidSpecError(f"cannot parse pressure {text!r}")
    unit = match.group(2).lower()
    if unit not in _PRESSURE_UNITS:
        raise InvalidSpecError(f"unknown pressure unit {match.group(2)!r}")
    try:
        value = float(match.group(1))
    except ValueError as exc:
        raise InvalidSpecError(f"cannot parse pressure {text!r}") from exc
    return value * _PRESSURE_UNITS[unit]


def _check_header(path, row, expected) -> None:
    if row is None or [c.strip() for c in row] != list(expected):
        raise InvalidSpecError(f"{path}: expected header {','.join(expected)}")


def read_trace_csv(path) -> TimeSeries:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        first = next(reader, None)
        _check_header(path, first, TRACE_HEADER)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise InvalidSpecError(f"{path}:{lineno}: bad data row") from exc
    if not rows:
        raise InvalidSpecError(f"{path}: no data rows")
    data = np.asarray(rows)
    return TimeSeries(data[:, 0], data[:, 1])


def write_trace_csv(path, trace: TimeSeries) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(",".join(TRACE_HEADER) + "\n")
        for t, s in zip(trace.times, trace.signal):
            handle.write(f"{t!r},{s!r}\n")


def read_spectrum_csv(path, label: str = "") -> MassSpectrum:
    with open(path, newline="") as handle:
        first = handle.readline().strip()
        _check_header(path, first.split(",") if first else None, SPECTRUM_HEADER)
        try:
            data = np.loadtxt(handle, delimiter=",", ndmin=2)
        except ValueError as exc:
            raise InvalidSpecError(f"{path}: bad data row") from exc
    if data.size == 0:
        raise InvalidSpecError(f"{path}: no data rows")
    try:
        return MassSpectrum(data[:, 0], data[:, 1], label=label or str(path))
    except InvalidSpecError as exc:
        raise InvalidSpecError(f"{path}: {exc}") from exc


def write_spectrum_csv(path, spectrum: MassSpectrum) -> None:
    with open(path, "w", newline="") as handle:
        handle.write(",".join(SPECTRUM_HEADER) + "\n")
        for t, i in zip(spectrum.flight_times, spectrum.intensities):
            handle.write(f"{t!r},{i!r}\n")


def _emit(args, payload: dict, lines: list[str]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print("\n".join(lines))


# --- design ---------------------------------------------------------------


def cmd_design(args) -> int:
    gas = GasProperties(
        dynamic_viscosity=args.viscosity,
        density=args.density,
        molecular_diffusivity=args.diffusivity,
    )
    spec = ReactorSpec(
        internal_radius_m=args.radius_cm / 100.0,
        fixed_length_m=args.fixed_length_cm / 100.0,
        variable_length_m=args.variable_length_cm / 100.0,
        inlet_length_a_m=args.inlet_a_cm / 100.0,
        inlet_length_b_m=args.inlet_b_cm / 100.0,
        flow_a_sccm=args.flow_a,
        flow_b_sccm=args.flow_b,
        sampling_flow_sccm=args.sampling_flow,
        pump_flow_sccm=args.pump_flow,
    )
    balance = flow_balance(spec)
    tau = residence_time(spec)
    regime = regime_report(spec, gas)

    payload = {
        "flow_balance": dataclasses.asdict(balance),
        "residence_time_s": tau,
        "regime": dataclasses.asdict(regime),
    }
    lines = [
        "flow balance:",
        f"  reactor flow   {fmt(balance.reactor_sccm)} sccm",
        f"  exhaust flow   {fmt(balance.exhaust_sccm)} sccm",
        f"  operable       {'yes' if balance.operable else 'no'}",
        f"residence time   {fmt(tau)} s",
        "regime:",
        f"  Reynolds       {fmt(regime.reynolds)}",
        f"  laminar        {'yes' if regime.laminar else 'no'}",
        f"  tau_diff       {fmt(regime.radial_diffusion_time_s)} s",
        f"  tau/tau_diff   {fmt(regime.taylor_aris_ratio)}",
        f"  symmetric RTD  {'yes' if regime.symmetric_rtd_expected else 'no'}",
    ]

    wants_restrictor = args.target_dp is not None or args.restrictor_length_cm is not None
    if wants_restrictor:
        rest = RestrictorSpec(
            radius_m=args.restrictor_radius_um * 1e-6,
            upstream_radius_m=args.upstream_radius_mm * 1e-3,
            shrinkage_coefficient=args.kappa,
        )
        section: dict = {"kappa": rest.kappa}
        lines.append("restrictor:")
        lines.append(f"  kappa          {fmt(rest.kappa)}")
        if args.target_dp is not None:
            target_pa = parse_pressure(args.target_dp)
            length = restrictor_length_for_dp(rest, args.restrictor_flow, gas, target_pa)
            section["target_dp_pa"] = target_pa
            section["length_m"] = length
            section["length_cm"] = length * 100.0
            lines.append(f"  target dP      {fmt(target_pa)} Pa")
            lines.append(f"  length for dP  {fmt(length * 100.0)} cm")
            if length > 0.0:
                drop = capillary_pressure_drop(
                    dataclasses.replace(rest, length_m=length), args.restrictor_flow, gas
                )
                section["pressure_drop"] = dataclasses.asdict(drop)
                section["singular_fraction"] = drop.singular_pa / drop.total_pa
                lines.append(
                    f"  singular part  {fmt(100.0 * drop.singular_pa / drop.total_pa)} %"
                )
        else:
            drop = capillary_pressure_drop(
                dataclasses.replace(rest, length_m=args.restrictor_length_cm / 100.0),
                args.restrictor_flow,
                gas,
            )
            section["pressure_drop"] = dataclasses.asdict(drop)
            section["singular_fraction"] = drop.singular_pa / drop.total_pa
            lines.append(f"  dP total       {fmt(drop.total_pa)} Pa")
            lines.append(f"  dP friction    {fmt(drop.regular_pa)} Pa")
            lines.append(f"  dP contraction {fmt(drop.singular_pa)} Pa")
        payload["restrictor"] = section

    _emit(args, payload, lines)
    return 0


# --- rtd-fit ---------------------------------------------------------------


def _rtd_row(path: str, fit) -> tuple[dict, list[str]]:
    p = fit.params
    if isinstance(p, AsymGaussParams):
        mean = asym_mean(p)
        fields = {
            "amplitude": p.amplitude,
            "position": p.position,
            "width": p.width,
            "skewness": p.skewness,
            "baseline": p.baseline,
        }
    else:
        mean = p.mean
        fields = {
            "amplitude": p.amplitude,
            "position": p.mean,
            "width": p.width,
            "skewness": None,
            "baseline": p.baseline,
        }
    record = {
        "file": str(path),
        "params": fields,
        "uncertainties": dict(fit.parameter_uncertainties),
        "mean_s": mean,
        "residual_norm": fit.residual_norm,
        "converged": fit.converged,
        "iterations": fit.iterations,
    }
    cells = [
        f"{path}",
        fmt(fields["amplitude"]),
        fmt(fields["position"]),
        fmt(fields["width"]),
        "-" if fields["skewness"] is None else fmt(fields["skewness"]),
        fmt(fields["baseline"]),
        fmt(mean),
        fmt(fit.residual_norm),
        "yes" if fit.converged else "no",
    ]
    return record, cells


def cmd_rtd_fit(args) -> int:
    expected = None
    if args.expected_tau:
        expected = [float(v) for v in args.expected_tau.split(",")]
        if len(expected) != len(args.traces):
            raise InvalidSpecError(
                f"--expected-tau lists {len(expected)} values for {len(args.traces)} traces"
            )

    header = ["file", "amplitude", "position", "width", "skew", "baseline", "mean_s", "residual", "conv"]
    table = [header]
    records = []
    fits = []
    for path in args.traces:
        try:
            fit = fit_rtd(read_trace_csv(path), model=args.model)
        except (OSError, FlowTubeError) as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            records.append({"file": str(path), "error": str(exc)})
            fits.append(None)
            continue
        record, cells = _rtd_row(path, fit)
        records.append(record)
        fits.append(fit)
        table.append(cells)

    if all(f is None for f in fits):
        print("error: every trace failed to load or fit", file=sys.stderr)
        return 1

    payload: dict = {"model": args.model, "traces": records}
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in table]

    if expected is not None:
        pairs = [
            (tau, rec["mean_s"])
            for tau, rec, fit in zip(expected, records, fits)
            if fit is not None and fit.converged
        ]
        if pairs:
            slope = regression_through_origin(pairs)
            payload["regression_slope"] = slope
            payload["regression_pairs"] = pairs
            lines.append(f"regression slope (mean vs expected tau): {fmt(slope)}")

    _emit(args, payload, lines)
    if any(fit is not None and not fit.converged for fit in fits):
        return 3
    return 0


# --- kinetics ---------------------------------------------------------------


def _parse_assignments(items) -> dict[str, float]:
    out: dict[str, float] = {}
    for item in items or []:
        name, sep, value = item.partition("=")
        if not sep:
            raise InvalidSpecError(f"expected name=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError as exc:
            raise InvalidSpecError(f"bad numeric value in {item!r}") from exc
    return out


def cmd_kinetics(args) -> int:
    trace = read_trace_csv(args.trace)
    fixed = {"time_offset": 0.0}
    fixed.update(_parse_assignments(args.fix))
    for name in args.free or []:
        fixed.pop(name, None)

    fit = fit_kinetic(trace, args.kind, fixed=fixed)
    model = fit.model
    payload: dict = {
        "file": str(args.trace),
        "kind": args.kind,
        "params": {k: v for k, v in dataclasses.asdict(model).items() if v is not None},
        "uncertainties": dict(fit.parameter_uncertainties),
        "k_prime_per_s": model.primary_rate,
        "residual_norm": fit.residual_norm,
        "converged": fit.converged,
        "iterations": fit.iterations,
    }
    lines = [f"kind            {args.kind}"]
    for name, sigma in fit.parameter_uncertainties.items():
        value = getattr(model, name)
        lines.append(f"{name:<15} {fmt(value)} +/- {fmt(sigma)}")
    lines.append(f"k'              {fmt(model.primary_rate)} 1/s")
    lines.append(f"residual        {fmt(fit.residual_norm)}")
    lines.append(f"converged       {'yes' if fit.converged else 'no'}")

    if args.oxidant_conc is not None:
        k_prime = model.primary_rate
        rate_name = "decay_rate" if args.kind == "intermediate" else "rate"
        sigma_k_prime = fit.parameter_uncertainties.get(rate_name, 0.0)
        k = pseudo_first_order_k(k_prime, 0.0, args.oxidant_conc, 0.0)
        sigma_k = uncertainty_on_k(
            k_prime,
            sigma_k_prime,
            args.oxidant_conc,
            args.oxidant_conc_sigma,
            args.tau_rel_error,
        )
        payload["rate_coefficient_cm3_s"] = k
        payload["rate_coefficient_sigma_cm3_s"] = sigma_k
        lines.append(f"k               {fmt(k)} +/- {fmt(sigma_k)} cm^3/s")

    _emit(args, payload, lines)
    return 0 if fit.converged else 3


# --- ms ---------------------------------------------------------------------


def _load_manifest(path: Path) -> dict:
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidSpecError(f"{path}: manifest is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidSpecError(f"{path}: manifest must be a JSON object")
    return data


def cmd_ms(args) -> int:
    manifest_path = Path(args.manifest)
    manifest = _load_manifest(manifest_path)

    ref_names = manifest.get("reference_ions")
    if not ref_names or len(ref_names) != 3:
        raise CalibrationError(
            f"{manifest_path}: manifest must declare exactly three reference_ions"
        )
    guess_fields = manifest.get("calibration_guess")
    if not isinstance(guess_fields, dict) or set(guess_fields) != {"a", "b", "c"}:
        raise CalibrationError(
            f"{manifest_path}: manifest must declare calibration_guess with a, b, c"
        )
    kinetic_ref = manifest.get("kinetic_reference")
    if not kinetic_ref:
        raise CalibrationError(f"{manifest_path}: manifest must name a kinetic_reference ion")
    entries = manifest.get("spectra")
    if not entries:
        raise InvalidSpecError(f"{manifest_path}: manifest lists no spectra")

    references = WorkflowReferences(
        calibration_guess=CalibrationParams(**{k: float(v) for k, v in guess_fields.items()}),
        reference_ions=tuple(parse_formula(name) for name in ref_names),
        kinetic_reference=parse_formula(kinetic_ref),
    )
    config = WorkflowConfig(
        resolution=args.resolution,
        tolerance_da=args.tolerance,
        min_peak_height=args.min_height,
        rate_threshold=args.rate_threshold,
        threshold_mode=args.threshold_mode,
    )

    base = manifest_path.parent
    dataset = []
    for entry in entries:
        try:
            time = float(entry["reaction_time_s"])
            files = list(entry["files"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSpecError(
                f"{manifest_path}: each spectra entry needs reaction_time_s and files"
            ) from exc
        spectra = [read_spectrum_csv(base / name, label=str(name)) for name in files]
        dataset.append((time, spectra))

    verdicts = run_workflow(dataset, references, config)

    reference_row = next(
        (v for v in verdicts if v.formula.composition == references.kinetic_reference), None
    )
    payload = {
        "kinetic_reference": kinetic_ref,
        "reference_k_prime_per_s": reference_row.k_prime if reference_row else None,
        "species": [
            {
                "formula": v.formula.composition.formula(charge=1),
                "exact_mass_da": v.formula.exact_mass,
                "mass_error_da": v.formula.mass_error,
                "kind": v.kind,
                "k_prime_per_s": v.k_prime,
                "ratio_to_reference": v.ratio_to_reference,
                "converged": v.converged,
            }
            for v in verdicts
        ],
    }
    header = ["ion", "mass_Da", "kind", "k_prime_1_s", "ratio"]
    table = [header]
    for v in verdicts:
        table.append(
            [
                v.formula.composition.formula(charge=1),
                fmt(v.formula.exact_mass),
                v.kind,
                fmt(v.k_prime) if math.isfinite(v.k_prime) else "-",
                fmt(v.ratio_to_reference) if math.isfinite(v.ratio_to_reference) else "-",
            ]
        )
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in table]
    lines.append(f"{len(verdicts)} species; reference {kinetic_ref}")

    _emit(args, payload, lines)
    return 0


# --- simulate ----------------------------------------------------------------


def _simulate_density(args, times: np.ndarray) -> np.ndarray:
    if args.model == "sym":
        params = SymGaussParams(args.amplitude, args.mean, args.width, 0.0)
        return eval_sym_gaussian(params, times)
    if args.model == "asym":
        params = AsymGaussParams(args.amplitude, args.mean, args.width, args.skewness, 0.0)
        return eval_asym_gaussian(params, times)
    return args.amplitude * eval_laminar_rtd(args.tau, times)


def cmd_simulate_rtd(args) -> int:
    if args.model == "laminar" and args.tau is None:
        raise InvalidSpecError("--tau is required for the laminar model")
    n = int(round(args.t_end / args.dt)) + 1
    times = np.arange(n) * args.dt
    density = _simulate_density(args, times)
    pulse = PulseSpec(
        duration_s=args.pulse_duration,
        mfc_response_s=args.mfc_response,
        amplitude=args.pulse_amplitude,
    )
    trace = synth_pulse_response(
        times,
        density,
        pulse,
        baseline=args.baseline,
        noise=NoiseSpec(relative_sigma=args.noise, seed=args.seed),
    )
    write_trace_csv(args.out, trace)
    payload = {
        "file": str(args.out),
        "samples": len(trace),
        "model": args.model,
        "area": float(trapezoid(trace.signal - args.baseline, trace.times)),
        "seed": args.seed,
    }
    _emit(args, payload, [f"wrote {args.out} ({len(trace)} samples)"])
    return 0


def cmd_simulate_kinetics(args) -> int:
    times = np.asarray([float(v) for v in args.times.split(",")])
    sens = _parse_assignments(args.sensitivity)
    if not sens:
        raise InvalidSpecError("at least one --sensitivity channel=value is required")
    baselines = _parse_assignments(args.baseline)
    conditions = ReactionConditions(
        conc_oxidant_cm3=args.oxidant_conc, conc_organic_cm3=args.organic_conc
    )
    dataset = synth_kinetic_dataset(
        conditions,
        args.k,
        times,
        sens,
        noise=NoiseSpec(relative_sigma=args.noise, seed=args.seed),
        baselines=baselines,
    )
    written = []
    for name, trace in dataset.items():
        path = f"{args.out_prefix}_{name}.csv"
        write_trace_csv(path, trace)
        written.append(path)
    payload = {"files": written, "k_cm3_s": args.k, "seed": args.seed}
    _emit(args, payload, [f"wrote {p}" for p in written])
    return 0


def cmd_simulate_ms_dataset(args) -> int:
    config = _load_manifest(Path(args.species_file))
    for key in ("calibration", "reference_ions", "kinetic_reference", "reaction_times", "species"):
        if key not in config:
            raise InvalidSpecError(f"{args.species_file}: missing key {key!r}")
    calibration = CalibrationParams(**{k: float(v) for k, v in config["calibration"].items()})
    constant = [
        (parse_formula(entry["formula"]), float(entry["height"]))
        for entry in config["reference_ions"]
    ]
    if len(constant) != 3:
        raise InvalidSpecError(f"{args.species_file}: exactly three reference_ions are required")

    model_keys = (
        "amplitude",
        "rate",
        "growth_rate",
        "decay_rate",
        "secondary_amplitude",
        "time_offset",
        "baseline",
    )
    dynamic = []
    for entry in config["species"]:
        comp = parse_formula(entry["formula"])
        kwargs = {k: float(entry[k]) for k in model_keys if k in entry}
        model = KineticModel(kind=entry["kind"], **kwargs)
        dynamic.append((comp, model, float(entry.get("scale", 1.0))))

    repeats = args.repeats if args.repeats is not None else int(config.get("repeats", 1))
    mass_range = tuple(config.get("mass_range", (15.0, 130.0)))
    dataset = synth_ms_dataset(
        [float(t) for t in config["reaction_times"]],
        dynamic,
        constant,
        calibration,
        resolution=float(config.get("resolution", 7000.0)),
        mass_range=mass_range,  # type: ignore[arg-type]
        samples_per_sigma=float(config.get("samples_per_sigma", 3.0)),
        baseline=float(config.get("baseline", 0.0)),
        repeats=repeats,
        seed=args.seed,
    )

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_entries = []
    count = 0
    for time, row in dataset:
        files = []
        for spectrum in row:
            name = f"{spectrum.label}.csv"
            write_spectrum_csv(out_dir / name, spectrum)
            files.append(name)
            count += 1
        manifest_entries.append({"reaction_time_s": time, "files": files})
    manifest = {
        "calibration_guess": dataclasses.asdict(calibration),
        "reference_ions": [entry["formula"] for entry in config["reference_ions"]],
        "kinetic_reference": config["kinetic_reference"],
        "spectra": manifest_entries,
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")

    payload = {
        "manifest": str(manifest_path),
        "spectra_written": count,
        "seed": args.seed,
    }
    _emit(args, payload, [f"wrote {count} spectra and {manifest_path}"])
    return 0


# --- parser -------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; the contract reserves 2 for
    physical-validity failures, so usage errors are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="flowtube", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    design = sub.add_parser("design", help="flow balance, residence time, restrictor sizing")
    design.add_argument("--radius-cm", type=float, default=0.198, help="tube inner radius")
    design.add_argument("--fixed-length-cm", type=float, default=7.0)
    design.add_argument("--variable-length-cm", type=float, default=0.0)
    design.add_argument("--inlet-a-cm", type=float, default=6.5)
    design.add_argument("--inlet-b-cm", type=float, default=6.0)
    design.add_argument("--flow-a", type=float, default=1600.0, help="inlet A flow, sccm")
    design.add_argument("--flow-b", type=float, default=100.0, help="inlet B flow, sccm")
    design.add_argument("--sampling-flow", type=float, default=252.0, help="detector draw, sccm")
    design.add_argument("--pump-flow", type=float, default=0.0, help="auxiliary pump draw, sccm")
    design.add_argument("--viscosity", type=float, default=AIR.dynamic_viscosity, help="Pa s")
    design.add_argument("--density", type=float, default=AIR.density, help="kg/m^3")
    design.add_argument("--diffusivity", type=float, default=AIR.molecular_diffusivity, help="m^2/s")
    design.add_argument("--restrictor-radius-um", type=float, default=65.0)
    design.add_argument("--restrictor-flow", type=float, default=50.0, help="sccm")
    design.add_argument("--restrictor-length-cm", type=float, default=None)
    design.add_argument("--upstream-radius-mm", type=float, default=1.98)
    design.add_argument("--kappa", type=float, default=None, help="contraction loss coefficient")
    design.add_argument("--target-dp", default=None, help="e.g. 1bar, 250mbar, 45kPa, 1e5")
    design.add_argument("--json", action="store_true")
    design.set_defaults(func=cmd_design)

    rtd_fit = sub.add_parser("rtd-fit", help="fit pulse traces")
    rtd_fit.add_argument("traces", nargs="+", help="trace CSV files (time_s,signal)")
    rtd_fit.add_argument("--model", choices=("sym", "asym"), default="sym")
    rtd_fit.add_argument(
        "--expected-tau",
        default=None,
        help="comma-separated plug-flow times, one per trace, for the regression summary",
    )
    rtd_fit.add_argument("--json", action="store_true")
    rtd_fit.set_defaults(func=cmd_rtd_fit)

    kinetics = sub.add_parser("kinetics", help="fit one kinetic trace")
    kinetics.add_argument("trace", help="trace CSV file (time_s,signal)")
    kinetics.add_argument("--kind", choices=("reactant", "product", "intermediate"), required=True)
    kinetics.add_argument("--fix", action="append", metavar="NAME=VALUE")
    kinetics.add_argument("--free", action="append", metavar="NAME")
    kinetics.add_argument("--oxidant-conc", type=float, default=None, help="cm^-3")
    kinetics.add_argument("--oxidant-conc-sigma", type=float, default=0.0, help="cm^-3")
    kinetics.add_argument("--tau-rel-error", type=float, default=0.0)
    kinetics.add_argument("--json", action="store_true")
    kinetics.set_defaults(func=cmd_kinetics)

    ms = sub.add_parser("ms", help="manifest-driven spectra workflow")
    ms.add_argument("--manifest", required=True)
    ms.add_argument("--resolution", type=float, default=7000.0)
    ms.add_argument("--tolerance", type=float, default=0.03, help="Da")
    ms.add_argument("--min-height", type=float, default=10.0, help="counts")
    ms.add_argument("--rate-threshold", type=float, default=0.02)
    ms.add_argument("--threshold-mode", choices=("absolute", "relative"), default="absolute")
    ms.add_argument("--json", action="store_true")
    ms.set_defaults(func=cmd_ms)

    simulate = sub.add_parser("simulate", help="generate synthetic data files")
    sim_sub = simulate.add_subparsers(dest="what", required=True, parser_class=_Parser)

    sim_rtd = sim_sub.add_parser("rtd", help="pulse trace through a residence-time density")
    sim_rtd.add_argument("--out", required=True)
    sim_rtd.add_argument("--model", choices=("sym", "asym", "laminar"), default="sym")
    sim_rtd.add_argument("--amplitude", type=float, default=1.0, help="density area scale")
    sim_rtd.add_argument("--mean", type=float, default=3.0, help="s")
    sim_rtd.add_argument("--width", type=float, default=0.5, help="s")
    sim_rtd.add_argument("--skewness", type=float, default=2.0)
    sim_rtd.add_argument("--tau", type=float, default=None, help="laminar plug-flow time, s")
    sim_rtd.add_argument("--t-end", type=float, default=12.0)
    sim_rtd.add_argument("--dt", type=float, default=0.01)
    sim_rtd.add_argument("--pulse-duration", type=float, default=0.2, help="s")
    sim_rtd.add_argument("--pulse-amplitude", type=float, default=1.0)
    sim_rtd.add_argument("--mfc-response", type=float, default=0.0, help="s")
    sim_rtd.add_argument("--baseline", type=float, default=0.0)
    sim_rtd.add_argument("--noise", type=float, default=0.0, help="relative sigma")
    sim_rtd.add_argument("--seed", type=int, default=None)
    sim_rtd.add_argument("--json", action="store_true")
    sim_rtd.set_defaults(func=cmd_simulate_rtd)

    sim_kin = sim_sub.add_parser("kinetics", help="bimolecular network traces")
    sim_kin.add_argument("--out-prefix", required=True)
    sim_kin.add_argument("--k", type=float, required=True, help="cm^3/s")
    sim_kin.add_argument("--oxidant-conc", type=float, required=True, help="cm^-3")
    sim_kin.add_argument("--organic-conc", type=float, required=True, help="cm^-3")
    sim_kin.add_argument("--times", required=True, help="comma-separated reaction times, s")
    sim_kin.add_argument(
        "--sensitivity",
        action="append",
        metavar="CHANNEL=VALUE",
        help="counts per cm^-3 for organic / oxidant / product",
    )
    sim_kin.add_argument("--baseline", action="append", metavar="CHANNEL=VALUE")
    sim_kin.add_argument("--noise", type=float, default=0.0, help="relative sigma")
    sim_kin.add_argument("--seed", type=int, default=None)
    sim_kin.add_argument("--json", action="store_true")
    sim_kin.set_defaults(func=cmd_simulate_kinetics)

    sim_ms = sim_sub.add_parser("ms-dataset", help="spectra dataset + manifest")
    sim_ms.add_argument("--species-file", required=True, help="JSON generator config")
    sim_ms.add_argument("--out-dir", required=True)
    sim_ms.add_argument("--repeats", type=int, default=None)
    sim_ms.add_argument("--seed", type=int, default=None)
    sim_ms.add_argument("--json", action="store_true")
    sim_ms.set_defaults(func=cmd_simulate_ms_dataset)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
        return 0 if code is None else int(code)
    except BackDiffusionError as exc:
        print(f"error: back-diffusion: {exc}", file=sys.stderr)
        return 2
    except InfeasibleDesignError as exc:
        print(f"error: infeasible design: {exc}", file=sys.stderr)
        return 2
    except CalibrationError as exc:
        print(f"error: calibration: {exc}", file=sys.stderr)
        return 1
    except FlowTubeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
