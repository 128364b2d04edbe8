"""Heating-rate <-> spectral-density conversion and calibration."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapnoise.core import (
    BE9,
    CA40,
    IonSpecies,
    Measurement,
    MeasurementMethod,
    ModeDirection,
    SpectralDensityPoint,
    apply_method_calibration,
    heating_rate_prefactor,
    heating_rate_to_SE,
    normalize_heating_rate,
    SE_to_heating_rate,
)
from trapnoise.errors import InvalidInputError

W_1MHZ = 2 * math.pi * 1e6

# independent hand computation of e^2 / (4 m hbar omega) for a mass-40
# singly charged ion at 2pi x 1 MHz
HAND_PREFACTOR = 1.458e14


def meas(nbardot, omega=W_1MHZ, d=100e-6, sigma=0.0, method=MeasurementMethod.SIDEBAND,
         direction=ModeDirection.NORMAL):
    return Measurement(d, omega, direction, method, nbardot, sigma)


def test_prefactor_matches_hand_computation():
    pref = heating_rate_prefactor(CA40, W_1MHZ)
    assert abs(pref - HAND_PREFACTOR) / HAND_PREFACTOR < 1e-3


def test_zero_heating_rate_gives_zero_se():
    assert heating_rate_to_SE(meas(0.0), CA40).S_E == 0.0


def test_reference_value():
    # nbardot = 14.58 /s at 2pi x 1 MHz for the mass-40 ion -> ~1.0e-13
    p = heating_rate_to_SE(meas(14.58), CA40)
    assert abs(p.S_E - 1.0e-13) < 1e-3 * 1.0e-13


def test_fields_copied_through():
    m = meas(42.0, d=77e-6, sigma=4.2, direction=ModeDirection.PLANAR_X)
    p = heating_rate_to_SE(m, CA40)
    assert p.distance == m.distance
    assert p.angular_frequency == m.secular_frequency
    assert p.direction is m.direction
    assert p.S_E_sigma == pytest.approx(4.2 / 42.0 * p.S_E)


@settings(max_examples=200)
@given(
    nbardot=st.floats(1e-3, 1e3),
    freq_mhz=st.floats(0.1, 10.0),
    d_um=st.floats(20.0, 500.0),
)
def test_round_trip_identity(nbardot, freq_mhz, d_um):
    m = meas(nbardot, omega=2 * math.pi * freq_mhz * 1e6, d=d_um * 1e-6, sigma=0.1 * nbardot)
    back = SE_to_heating_rate(heating_rate_to_SE(m, CA40), CA40)
    assert back.heating_rate == pytest.approx(m.heating_rate, rel=1e-12)
    assert back.heating_rate_sigma == pytest.approx(m.heating_rate_sigma, rel=1e-12)
    assert back.distance == m.distance


def test_zero_se_gives_zero_rate():
    p = SpectralDensityPoint(1e-4, W_1MHZ, ModeDirection.NORMAL, 0.0)
    assert SE_to_heating_rate(p, CA40).heating_rate == 0.0


def test_doubling_omega_at_fixed_se_halves_rate():
    p1 = SpectralDensityPoint(1e-4, W_1MHZ, ModeDirection.NORMAL, 1e-13)
    p2 = SpectralDensityPoint(1e-4, 2 * W_1MHZ, ModeDirection.NORMAL, 1e-13)
    r1 = SE_to_heating_rate(p1, CA40).heating_rate
    r2 = SE_to_heating_rate(p2, CA40).heating_rate
    assert r2 == pytest.approx(r1 / 2, rel=1e-12)


def test_se_linear_in_rate_and_omega():
    base = heating_rate_to_SE(meas(10.0), CA40).S_E
    assert heating_rate_to_SE(meas(30.0), CA40).S_E == pytest.approx(3 * base, rel=1e-12)
    assert heating_rate_to_SE(meas(10.0, omega=3 * W_1MHZ), CA40).S_E == pytest.approx(
        3 * base, rel=1e-12
    )


class TestNormalization:
    def test_same_reference_is_identity(self):
        m = meas(10.0)
        assert normalize_heating_rate(m, CA40, CA40, W_1MHZ) == pytest.approx(10.0, rel=1e-12)

    def test_frequency_rescaling(self):
        m = meas(10.0, omega=2 * W_1MHZ)
        assert normalize_heating_rate(m, CA40, CA40, W_1MHZ) == pytest.approx(20.0, rel=1e-12)

    def test_mass_rescaling(self):
        # lighter ion datum referenced to the mass-40 convention: factor 9/40
        m = meas(40.0)
        assert normalize_heating_rate(m, BE9, CA40, W_1MHZ) == pytest.approx(
            40.0 * 9 / 40, rel=1e-12
        )

    def test_matches_double_conversion(self):
        # the ratio formula must equal applying the conversion twice
        m = meas(17.0, omega=1.7 * W_1MHZ)
        se = heating_rate_to_SE(m, BE9)
        fixed_se = SpectralDensityPoint(m.distance, W_1MHZ, m.direction, se.S_E)
        expected = SE_to_heating_rate(fixed_se, CA40).heating_rate
        assert normalize_heating_rate(m, BE9, CA40, W_1MHZ) == pytest.approx(
            expected, rel=1e-12
        )

    @given(f1=st.floats(0.2, 5.0), f2=st.floats(0.2, 5.0))
    def test_transitive(self, f1, f2):
        m = meas(25.0, omega=1.3 * W_1MHZ)
        via = normalize_heating_rate(m, CA40, BE9, f1 * W_1MHZ)
        m_via = meas(via, omega=f1 * W_1MHZ)
        two_step = normalize_heating_rate(m_via, BE9, CA40, f2 * W_1MHZ)
        direct = normalize_heating_rate(m, CA40, CA40, f2 * W_1MHZ)
        assert two_step == pytest.approx(direct, rel=1e-12)


class TestMethodCalibration:
    def test_sideband_unchanged(self):
        m = meas(100.0)
        assert apply_method_calibration(m) is m

    def test_rabi_scaled(self):
        m = meas(100.0, sigma=10.0, method=MeasurementMethod.RABI)
        out = apply_method_calibration(m)
        assert out.heating_rate == pytest.approx(85.0)
        assert out.heating_rate_sigma == pytest.approx(8.5)

    def test_rabi_zero(self):
        m = meas(0.0, method=MeasurementMethod.RABI)
        assert apply_method_calibration(m).heating_rate == 0.0

    def test_factor_is_configurable(self):
        m = meas(100.0, method=MeasurementMethod.RABI)
        assert apply_method_calibration(m, factor=0.9).heating_rate == pytest.approx(90.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"distance": -1e-4},
        {"distance": 0.0},
        {"secular_frequency": 0.0},
        {"heating_rate": -1.0},
        {"heating_rate_sigma": -0.1},
    ],
)
def test_measurement_invariants(kwargs):
    good = dict(
        distance=1e-4,
        secular_frequency=W_1MHZ,
        direction=ModeDirection.NORMAL,
        method=MeasurementMethod.SIDEBAND,
        heating_rate=1.0,
        heating_rate_sigma=0.1,
    )
    good.update(kwargs)
    with pytest.raises(InvalidInputError):
        Measurement(**good)


def test_ion_species_invariants():
    with pytest.raises(InvalidInputError):
        IonSpecies("bad", -1.0, 1.6e-19)
    with pytest.raises(InvalidInputError):
        IonSpecies("bad", 1e-26, 0.0)


def test_negative_se_rejected():
    with pytest.raises(InvalidInputError):
        SpectralDensityPoint(1e-4, W_1MHZ, ModeDirection.NORMAL, -1e-13)
