"""Gas properties and flow-unit conversions."""
import math

import pytest

from flowtube import (
    AIR,
    GasProperties,
    InvalidSpecError,
    SCCM_TO_M3S,
    m3s_to_sccm,
    sccm_to_m3s,
)


def test_sccm_conversion_factor():
    assert SCCM_TO_M3S == 1e-6 / 60.0
    assert sccm_to_m3s(60.0) == pytest.approx(1e-6, rel=1e-15)


def test_conversion_roundtrip():
    for q in (0.0, 1.0, 62.0, 917.0, 1e4):
        assert m3s_to_sccm(sccm_to_m3s(q)) == pytest.approx(q, rel=1e-12, abs=1e-15)


def test_negative_flow_rejected():
    with pytest.raises(InvalidSpecError):
        sccm_to_m3s(-1.0)
    with pytest.raises(InvalidSpecError):
        m3s_to_sccm(-1e-9)


def test_air_defaults():
    assert AIR.dynamic_viscosity == 1.81e-5
    assert AIR.density == 1.20
    assert AIR.molecular_diffusivity == 1.0e-5


def test_air_is_at_standard_conditions():
    assert AIR.temperature == 293.15
    assert AIR.pressure == 101325.0


def test_gas_properties_must_be_positive():
    with pytest.raises(InvalidSpecError):
        GasProperties(dynamic_viscosity=0.0, density=1.2, molecular_diffusivity=1e-5)
    # NaN must not slip through the positivity check
    with pytest.raises(InvalidSpecError):
        GasProperties(dynamic_viscosity=1.81e-5, density=math.nan, molecular_diffusivity=1e-5)
    with pytest.raises(InvalidSpecError):
        GasProperties(
            dynamic_viscosity=1.81e-5,
            density=1.2,
            molecular_diffusivity=1e-5,
            pressure=-5.0,
        )
