"""Frozen reference numbers shared across the test modules.

Two kinds of entries live here.  Bench characterization data for the
dual-arm flow tube (residence-time settings with their fitted pulse
parameters, the mass-spec species inventory with the rates each trace
was fitted to) are re-typed verbatim and treated as ground truth.
Everything else was computed once, independently of the package (exact
rational arithmetic for the plug-flow times, closed forms elsewhere),
and frozen as full-precision literals so that any later drift in the
package shows up as a diff against these constants.
"""
from typing import NamedTuple

from flowtube import ReactorSpec

# --- flow-tube geometry used for every residence-time row ----------------
TUBE_RADIUS_M = 1.98e-3
BASE_LENGTH_M = 0.07
INLET_A_LENGTH_M = 0.065
INLET_A_FLOW_SCCM = 1600.0
INLET_B_LENGTH_M = 0.060
INLET_B_FLOW_SCCM = 100.0


def rtd_reactor(extension_cm: float, flow_sccm: float) -> ReactorSpec:
    """The tube as configured for one residence-time table row."""
    return ReactorSpec(
        internal_radius_m=TUBE_RADIUS_M,
        fixed_length_m=BASE_LENGTH_M,
        variable_length_m=extension_cm / 100.0,
        inlet_length_a_m=INLET_A_LENGTH_M,
        inlet_length_b_m=INLET_B_LENGTH_M,
        flow_a_sccm=INLET_A_FLOW_SCCM,
        flow_b_sccm=INLET_B_FLOW_SCCM,
        sampling_flow_sccm=flow_sccm,
        pump_flow_sccm=0.0,
    )


class RtdRow(NamedTuple):
    tau_s: float           # expected plug-flow residence time as published
    extension_cm: float    # variable tube length
    flow_sccm: float       # reactor draw
    acetone_mu: float      # symmetric-Gaussian fit, acetone tracer
    acetone_sigma: float
    acetonitrile_mu: float  # same fit, acetonitrile tracer
    acetonitrile_sigma: float
    exploratory: bool      # repeated nominal setting, excluded from fits


RTD_SYM_TABLE = (
    RtdRow(0.68, 0, 252, 1.18, 0.13, 1.18, 0.13, False),
    RtdRow(0.95, 0, 109, 1.43, 0.17, 1.44, 0.17, False),
    RtdRow(1.31, 0, 62, 1.89, 0.23, 1.90, 0.23, False),
    RtdRow(1.56, 30, 252, 2.05, 0.20, 2.05, 0.19, False),
    RtdRow(2.75, 100, 347, 3.37, 0.24, 3.37, 0.23, True),
    RtdRow(2.75, 100, 347, 3.53, 0.28, 3.53, 0.27, True),
    RtdRow(2.98, 30, 109, 3.63, 0.28, 3.64, 0.27, False),
    RtdRow(3.61, 100, 252, 4.26, 0.28, 4.25, 0.27, False),
    RtdRow(4.70, 300, 537, 5.53, 0.29, 5.52, 0.28, False),
    RtdRow(4.90, 30, 62, 5.79, 0.36, 5.81, 0.36, False),
    RtdRow(5.52, 100, 157, 6.27, 0.40, 6.24, 0.35, False),
    RtdRow(6.17, 700, 917, 6.38, 0.26, 6.38, 0.25, False),
    RtdRow(7.02, 300, 347, 7.66, 0.33, 7.66, 0.31, False),
    RtdRow(7.71, 100, 109, 8.29, 0.42, 8.29, 0.39, False),
    RtdRow(9.48, 300, 252, 9.97, 0.35, 9.95, 0.39, False),
    RtdRow(10.21, 700, 537, 9.96, 0.43, 9.96, 0.34, False),
    RtdRow(13.28, 100, 62, 14.72, 0.61, 14.74, 0.58, False),
    RtdRow(14.95, 700, 347, 15.09, 0.50, 15.08, 0.47, False),
    RtdRow(15.54, 300, 157, 15.55, 0.57, 15.52, 0.52, False),
    RtdRow(21.23, 700, 252, 20.55, 0.61, 20.51, 0.55, False),
    RtdRow(21.24, 300, 109, 21.65, 0.69, 21.60, 0.61, False),
    RtdRow(33.80, 700, 157, 32.54, 0.87, 32.46, 0.78, False),
    RtdRow(37.21, 300, 62, 39.91, 1.18, 39.78, 1.06, False),
    RtdRow(48.30, 700, 109, 46.99, 1.28, 46.84, 1.14, False),
    RtdRow(85.08, 700, 62, 88.03, 2.34, 87.56, 1.96, False),
)

# plug-flow times recomputed from the geometry above with exact rational
# arithmetic (pi applied last); rows as (published tau, extension cm,
# flow sccm, exact tau).  Two rows disagree with the published column far
# beyond rounding; see the residence-time acceptance test.
PLUG_FLOW_TAUS = (
    (0.68, 0, 252, 0.6786794390522481),
    (0.95, 0, 109, 0.9479807963910982),
    (1.31, 0, 62, 1.3077377641692778),
    (1.56, 30, 252, 1.5584151418474927),
    (2.98, 30, 109, 2.9818651734957005),
    (3.61, 100, 252, 3.6111317817030635),
    (4.7, 300, 537, 4.698105038322514),
    (4.9, 30, 62, 4.883437717466079),
    (5.52, 100, 157, 5.509754588266474),
    (6.17, 700, 917, 6.170871670116199),
    (7.02, 300, 347, 7.011339851056251),
    (7.71, 100, 109, 7.727595386739773),
    (9.48, 300, 252, 9.476036467004693),
    (10.21, 700, 537, 10.20259658653857),
    (13.28, 100, 62, 13.226737608491948),
    (14.95, 700, 347, 15.529818125961214),
    (15.54, 300, 157, 14.923486949387563),
    (21.23, 700, 252, 21.205845837607956),
    (21.24, 300, 109, 21.286824567437122),
    (33.8, 700, 157, 33.75095167162974),
    (37.21, 300, 62, 37.064737297137285),
    (48.3, 700, 109, 48.40528292883182),
    (85.08, 700, 62, 84.74073667442796),
)

# no-intercept regression slopes of (expected tau, fitted mu) over the
# non-exploratory rows, frozen from an independent sum computation
SLOPE_ACETONE = 1.0207710660994271
SLOPE_ACETONITRILE = 1.0167017390512785

# asymmetric fits of the longest-residence setting (tau = 85.08 s):
# (location, width, skewness, published distribution mean)
ASYM_LONGEST_ACETONE = (85.45, 4.40, 4.70, 88.89)
ASYM_LONGEST_ACETONITRILE = (85.42, 3.59, 4.00, 88.20)

# closed-form skew-normal mean shift for width 1 s, skewness 3:
# width * skewness * sqrt(2/pi) / sqrt(1 + skewness^2)
ASYM_SHIFT_S = 0.7569397566060481

# --- capillary restrictor design (65 um bore, 50 sccm, air) ---------------
CAPILLARY_RADIUS_M = 65e-6
CAPILLARY_FLOW_SCCM = 50.0
CAPILLARY_TARGET_DP_PA = 1.0e5
CAPILLARY_KAPPA = 0.48358585858585856
CAPILLARY_SINGULAR_PA = 1143.6922513127543
CAPILLARY_LENGTH_M = 0.04594310775991076

# --- tube flow regime ------------------------------------------------------
REYNOLDS_AT_62_SCCM = 22.02713649578104
REYNOLDS_AT_917_SCCM = 325.7884543005035
RADIAL_DIFFUSION_TIME_S = 0.39203999999999994  # r^2/D, D = 1e-5 m^2/s

# --- exact ion masses (charge +1, electron mass subtracted) ----------------
MASS_H3O = 19.017841
MASS_C3H7O = 59.049141
MASS_C6H13 = 85.101176

# --- bimolecular pipeline (alkene + ozone) ---------------------------------
ORGANIC_0_CM3 = 1.96e13
OXIDANT_0_CM3 = 1.85e14
K_PUBLISHED_CM3S = 2.11e-15   # published rate coefficient
K_INJECTED_CM3S = 2.1e-15     # truth injected into end-to-end simulations
REFERENCE_K_PRIME = 0.39      # published decay rate of the anchor reactant

# --- mass-spec species inventory -------------------------------------------
# detected ion formula -> fitted rate (1/s); growth traces
PRODUCT_IONS = {
    "C5H11O2": 0.15, "C6H13O2": 0.19, "C2H5O3": 0.20, "CH3O2": 0.21,
    "C2H7O3": 0.22, "C2H5O2": 0.22, "C4H9O3": 0.23, "C3H7O3": 0.25,
    "CH7O2": 0.26, "HNO2": 0.26, "C2H7O2": 0.27, "CH5O": 0.27,
    "C2H3O": 0.27, "C6H11O2": 0.28, "C3H7O2": 0.30, "C4H7O2": 0.31,
    "C2H5O": 0.31, "C3H5O2": 0.31, "C3H9O2": 0.31, "C6H13O": 0.31,
    "CH5O2": 0.32, "C3H5O": 0.33, "C3H10NO": 0.33, "CH3O": 0.35,
    "C3H7O": 0.36, "C3H6O": 0.43, "C6H11O": 0.42, "C4H9O": 0.47,
    "C5H9O": 0.54,
}
# decay traces; C6H13 anchors the rate ratios
REACTANT_IONS = {
    "C3H5": 0.19, "C6H12": 0.25, "C3H7": 0.31, "C5H9": 0.34, "C6H13": 0.39,
}
# the one grow-then-decay trace: (ion formula, growth rate, decay rate)
INTERMEDIATE_ION = ("CH4O2", 0.93, 0.39)
# constant-level calibration ions: (formula, apex counts)
CALIBRANT_IONS = (("H3O", 15000.0), ("C3H3", 13000.0), ("C8H15O", 11000.0))
KINETIC_REFERENCE_ION = "C6H13"

# dataset design for the workflow acceptance run
MS_REACTION_TIMES = (0.4, 0.8, 1.3, 1.9, 2.6, 3.4, 4.3, 5.3, 6.5, 7.8, 9.1, 10.5, 12.0)
MS_CALIBRATION = {"a": 0.097, "b": -1.2, "c": 0.5004}
MS_PRODUCT_APEX = 9000.0
MS_REACTANT_APEX = 12000.0
MS_INTERMEDIATE_APEX = (6000.0, 9000.0)   # growth and decay components
MS_SAMPLES_PER_SIGMA = 6.0
MS_REPEATS = 2
ACCEPTANCE_SEED = 2026
