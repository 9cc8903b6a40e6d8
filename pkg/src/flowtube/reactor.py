"""Dual-arm flow-tube design calculations.

Residence time, flow balance and regime diagnostics for a cylindrical
reaction tube fed by two inlet arms and drained through an exhaust arm
plus the instrument sampling line, and the pressure drop across the
capillary restrictor feeding the detector.

All of this assumes incompressible flow, which is adequate for
order-of-magnitude restrictor sizing but not for an exact treatment of a
full 1 bar drop.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import (
    BackDiffusionError,
    InfeasibleDesignError,
    InvalidSpecError,
    SingularGeometryError,
)
from .physchem import GasProperties, sccm_to_m3s

RE_LAMINAR_THRESHOLD = 2300.0
SYMMETRY_RATIO_THRESHOLD = 10.0


@dataclass(frozen=True)
class ReactorSpec:
    """Tube geometry plus the four controlled flows.

    Lengths in m, flows in sccm.  The instrument draw plus the pump draw
    set the flow through the reaction tube; whatever the inlet arms
    deliver beyond that leaves through the exhaust arm.
    """

    internal_radius_m: float
    fixed_length_m: float
    variable_length_m: float
    inlet_length_a_m: float
    inlet_length_b_m: float
    flow_a_sccm: float
    flow_b_sccm: float
    sampling_flow_sccm: float
    pump_flow_sccm: float

    def __post_init__(self) -> None:
        if not self.internal_radius_m > 0.0:
            raise InvalidSpecError("internal_radius_m must be positive")
        for name in (
            "fixed_length_m",
            "variable_length_m",
            "inlet_length_a_m",
            "inlet_length_b_m",
            "flow_a_sccm",
            "flow_b_sccm",
            "sampling_flow_sccm",
            "pump_flow_sccm",
        ):
            value = getattr(self, name)
            if not value >= 0.0:
                raise InvalidSpecError(f"{name} must be non-negative, got {value!r}")

    @property
    def reactor_flow_sccm(self) -> float:
        return self.sampling_flow_sccm + self.pump_flow_sccm

    @property
    def exhaust_flow_sccm(self) -> float:
        return self.flow_a_sccm + self.flow_b_sccm - self.reactor_flow_sccm

    @property
    def cross_section_m2(self) -> float:
        return math.pi * self.internal_radius_m**2


@dataclass(frozen=True)
class FlowBalance:
    reactor_sccm: float
    exhaust_sccm: float
    operable: bool


@dataclass(frozen=True)
class RestrictorSpec:
    """Capillary restrictor between the reactor and the detector inlet.

    length_m may be left None while the length is still the unknown being
    designed.  The contraction-loss coefficient defaults to
    0.5 * (1 - radius/upstream_radius), the sudden-shrinkage estimate.
    """

    radius_m: float
    length_m: float | None = None
    upstream_radius_m: float = 1.98e-3
    shrinkage_coefficient: float | None = None

    def __post_init__(self) -> None:
        if not self.radius_m > 0.0:
            raise SingularGeometryError("restrictor radius must be positive")
        if self.length_m is not None and not self.length_m > 0.0:
            raise InvalidSpecError("restrictor length must be positive when set")
        if not self.radius_m < self.upstream_radius_m:
            raise InvalidSpecError("restrictor must be narrower than the upstream tube")
        kappa = self.kappa
        if not 0.0 <= kappa <= 1.0:
            raise InvalidSpecError(f"shrinkage coefficient must be in [0, 1], got {kappa!r}")

    @property
    def kappa(self) -> float:
        if self.shrinkage_coefficient is not None:
            return self.shrinkage_coefficient
        return 0.5 * (1.0 - self.radius_m / self.upstream_radius_m)


@dataclass(frozen=True)
class PressureDrop:
    total_pa: float
    regular_pa: float
    singular_pa: float


@dataclass(frozen=True)
class RegimeReport:
    reynolds: float
    radial_diffusion_time_s: float
    residence_time_s: float
    taylor_aris_ratio: float
    laminar: bool
    symmetric_rtd_expected: bool


def flow_balance(spec: ReactorSpec) -> FlowBalance:
    """Derived reactor/exhaust flows plus the back-diffusion operability flag.

    Diagnostic only: never raises.  Mass balance holds exactly,
    Q_A + Q_B = Q_exhaust + Q_sampling + Q_pump.
    """
    reactor = spec.reactor_flow_sccm
    exhaust = spec.exhaust_flow_sccm
    return FlowBalance(
        reactor_sccm=reactor,
        exhaust_sccm=exhaust,
        operable=exhaust >= 0.0 and reactor > 0.0,
    )


def residence_time(spec: ReactorSpec) -> float:
    """Expected transit time from the inlet arms to the sampling point, s.

    Plug-flow sum of three sections: the reaction tube (fixed + variable
    length, carried by the reactor draw) and the two inlet arms at their
    own feed flows.  A zero-length section contributes nothing whatever
    its flow; a finite section with no flow cannot be transited.
    """
    exhaust = spec.exhaust_flow_sccm
    if exhaust < 0.0:
        raise BackDiffusionError(
            f"exhaust flow is {exhaust:g} sccm; the reactor draw exceeds the "
            "inlet supply and would pull gas back through the exhaust arm"
        )
    area = spec.cross_section_m2
    total = 0.0
    sections = (
        (spec.fixed_length_m + spec.variable_length_m, spec.reactor_flow_sccm, "reaction tube"),
        (spec.inlet_length_a_m, spec.flow_a_sccm, "inlet arm A"),
        (spec.inlet_length_b_m, spec.flow_b_sccm, "inlet arm B"),
    )
    for length, q_sccm, label in sections:
        if length == 0.0:
            continue
        if q_sccm <= 0.0:
            raise InvalidSpecError(f"{label} has finite length but zero flow")
        total += area * length / sccm_to_m3s(q_sccm)
    return total


def capillary_pressure_drop(
    rest: RestrictorSpec, q0_sccm: float, gas: GasProperties
) -> PressureDrop:
    """Pressure drop across the restrictor at sampling flow q0, Pa.

    Sum of the laminar (Hagen-Poiseuille) friction loss, linear in length
    and flow, and the singular sudden-contraction loss, quadratic in flow
    and independent of length.
    """
    if rest.length_m is None:
        raise InvalidSpecError("restrictor length is not set")
    q = sccm_to_m3s(q0_sccm)
    r4 = rest.radius_m**4
    regular = 8.0 * gas.dynamic_viscosity * rest.length_m * q / (math.pi * r4)
    singular = rest.kappa * gas.density * q * q / (2.0 * math.pi**2 * r4)
    return PressureDrop(total_pa=regular + singular, regular_pa=regular, singular_pa=singular)


def restrictor_length_for_dp(
    rest: RestrictorSpec, q0_sccm: float, gas: GasProperties, target_dp_pa: float
) -> float:
    """Capillary length that produces the target pressure drop, m.

    Closed-form inversion of capillary_pressure_drop; the contraction
    loss does not depend on length, so the friction term absorbs the
    remainder.  Round-trips through capillary_pressure_drop to better
    than 1 ppm.
    """
    if not target_dp_pa > 0.0:
        raise InvalidSpecError("target pressure drop must be positive")
    q = sccm_to_m3s(q0_sccm)
    if q <= 0.0:
        raise InvalidSpecError("length is undefined at zero sampling flow")
    r4 = rest.radius_m**4
    singular = rest.kappa * gas.density * q * q / (2.0 * math.pi**2 * r4)
    if target_dp_pa < singular:
        raise InfeasibleDesignError(
            f"contraction loss alone is {singular:g} Pa, already above the "
            f"{target_dp_pa:g} Pa target; no length can meet it"
        )
    return (target_dp_pa - singular) * math.pi * r4 / (8.0 * gas.dynamic_viscosity * q)


def pipe_reynolds(q_sccm: float, radius_m: float, gas: GasProperties) -> float:
    """Reynolds number of a circular duct at the given volumetric flow."""
    if not radius_m > 0.0:
        raise SingularGeometryError("radius must be positive")
    velocity = sccm_to_m3s(q_sccm) / (math.pi * radius_m**2)
    return gas.density * velocity * 2.0 * radius_m / gas.dynamic_viscosity


def reynolds_number(spec: ReactorSpec, gas: GasProperties) -> float:
    """Reynolds number in the reaction tube at the reactor draw."""
    return pipe_reynolds(spec.reactor_flow_sccm, spec.internal_radius_m, gas)


def regime_report(
    spec: ReactorSpec,
    gas: GasProperties,
    laminar_threshold: float = RE_LAMINAR_THRESHOLD,
    symmetry_threshold: float = SYMMETRY_RATIO_THRESHOLD,
) -> RegimeReport:
    """Flow-regime diagnostics for an operable reactor spec.

    The tube is laminar below the usual transition Reynolds number, and
    the residence-time distribution is expected to look symmetric once
    the residence time exceeds the radial diffusion time r^2/D by the
    symmetry threshold (default 10).
    """
    tau = residence_time(spec)
    reynolds = reynolds_number(spec, gas)
    t_diff = spec.internal_radius_m**2 / gas.molecular_diffusivity
    ratio = tau / t_diff
    return RegimeReport(
        reynolds=reynolds,
        radial_diffusion_time_s=t_diff,
        residence_time_s=tau,
        taylor_aris_ratio=ratio,
        laminar=reynolds < laminar_threshold,
        symmetric_rtd_expected=ratio > symmetry_threshold,
    )
