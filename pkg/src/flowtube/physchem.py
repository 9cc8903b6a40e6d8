"""Gas properties and flow-unit conversions.

Everything internal runs in SI.  Flows cross the API boundary in sccm
(standard cm^3/min, referenced to 293.15 K / 101325 Pa) and are converted
once, at that boundary.
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidSpecError

STANDARD_TEMPERATURE_K = 293.15
STANDARD_PRESSURE_PA = 101325.0

# 1 sccm = 1e-6 m^3 / 60 s
SCCM_TO_M3S = 1e-6 / 60.0


@dataclass(frozen=True)
class GasProperties:
    """Carrier-gas transport properties.

    Attributes
    ----------
    dynamic_viscosity : float
        Pa s.
    density : float
        kg/m^3.
    molecular_diffusivity : float
        Tracer diffusivity in the carrier, m^2/s.
    temperature : float
        K.
    pressure : float
        Pa.
    """

    dynamic_viscosity: float
    density: float
    molecular_diffusivity: float
    temperature: float = STANDARD_TEMPERATURE_K
    pressure: float = STANDARD_PRESSURE_PA

    def __post_init__(self) -> None:
        for name in (
            "dynamic_viscosity",
            "density",
            "molecular_diffusivity",
            "temperature",
            "pressure",
        ):
            value = getattr(self, name)
            # "not > 0" also rejects NaN
            if not value > 0.0:
                raise InvalidSpecError(f"{name} must be positive, got {value!r}")


#: Dry air near room temperature.
AIR = GasProperties(
    dynamic_viscosity=1.81e-5,
    density=1.20,
    molecular_diffusivity=1.0e-5,
)


def sccm_to_m3s(q_sccm: float) -> float:
    """Volumetric flow in m^3/s for a flow given in sccm."""
    if not q_sccm >= 0.0:
        raise InvalidSpecError(f"flow must be non-negative, got {q_sccm!r}")
    return q_sccm * SCCM_TO_M3S


def m3s_to_sccm(q_m3s: float) -> float:
    """Inverse of sccm_to_m3s."""
    if not q_m3s >= 0.0:
        raise InvalidSpecError(f"flow must be non-negative, got {q_m3s!r}")
    return q_m3s / SCCM_TO_M3S
