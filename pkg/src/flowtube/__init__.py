"""Flow-tube reactor design, residence-time analysis, kinetics fitting,
and time-of-flight mass-spectrum processing."""

from .errors import (
    BackDiffusionError,
    CalibrationError,
    DegenerateInputError,
    FlowTubeError,
    InfeasibleDesignError,
    InvalidSpecError,
    SingularGeometryError,
)
from .physchem import (
    AIR,
    SCCM_TO_M3S,
    STANDARD_PRESSURE_PA,
    STANDARD_TEMPERATURE_K,
    GasProperties,
    m3s_to_sccm,
    sccm_to_m3s,
)
from .trace import TimeSeries
from .reactor import (
    FlowBalance,
    PressureDrop,
    ReactorSpec,
    RegimeReport,
    RestrictorSpec,
    capillary_pressure_drop,
    flow_balance,
    pipe_reynolds,
    regime_report,
    residence_time,
    restrictor_length_for_dp,
    reynolds_number,
)
from .fitting import LeastSquaresResult, ModelFit, damped_gauss_newton, fit_model
from .rtd import (
    AsymGaussParams,
    RtdFit,
    SymGaussParams,
    asym_mean,
    asym_mode,
    eval_asym_gaussian,
    eval_laminar_rtd,
    eval_sym_gaussian,
    fit_rtd,
    initial_peak_guess,
    regression_through_origin,
)
from .kinetics import (
    KineticFit,
    KineticModel,
    KineticSolution,
    ReactionConditions,
    eval_intermediate,
    eval_kinetic,
    eval_product,
    eval_reactant,
    fit_kinetic,
    ode_oracle,
    pseudo_first_order_k,
    uncertainty_on_k,
)
from .massspec import (
    ATOMIC_MASS,
    ELECTRON_MASS,
    PROTON_MASS,
    CalibrationParams,
    Composition,
    ElementBounds,
    FormulaAssignment,
    MassSpectrum,
    Peak,
    PeakIntegral,
    SpeciesVerdict,
    TraceClassification,
    WorkflowConfig,
    WorkflowReferences,
    assign_formula,
    calibrate,
    calibrate_spectrum,
    classify_trace,
    detect_peaks,
    integrate_peak,
    monoisotopic_mass,
    parse_formula,
    run_workflow,
)
from .simulate import (
    NoiseSpec,
    PulseSpec,
    geometric_mass_axis,
    make_rng,
    synth_kinetic_dataset,
    synth_ms_dataset,
    synth_pulse_response,
    synth_spectrum,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
