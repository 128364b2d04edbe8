"""Electrode-correlated noise simulation and the joint amplitude fit."""

import math

import numpy as np
import pytest

from trapnoise.core import ModeDirection, SpectralDensityPoint
from trapnoise.errors import FitError, InvalidInputError
from trapnoise.geometry import default_trap_geometry, field_above_polygon
from trapnoise.technical_noise import (
    ElectrodeNoiseSpec,
    fit_electrode_amplitudes,
    technical_SE,
    trap_axis,
)

W_1MHZ = 2 * math.pi * 1e6
GEOMETRY = default_trap_geometry()


def se_point(d, direction, value, sigma=0.0):
    return SpectralDensityPoint(d, W_1MHZ, direction, value, sigma)


def synthetic_data(spec, distances, sigma_rel=0.0):
    data = []
    for d in distances:
        s = technical_SE(GEOMETRY, spec, d)
        for direction, val in ((ModeDirection.PLANAR_Y, s.Sy), (ModeDirection.NORMAL, s.Sz)):
            data.append(se_point(d, direction, val, sigma_rel * val))
    return data


def test_zero_amplitudes():
    s = technical_SE(GEOMETRY, ElectrodeNoiseSpec({"DC9": 0.0, "RF1": 0.0}), 1e-4)
    assert (s.Sx, s.Sy, s.Sz) == (0.0, 0.0, 0.0)


def test_single_electrode_term():
    a = 3e-6
    s = technical_SE(GEOMETRY, ElectrodeNoiseSpec({"RF1": a}), 1e-4)
    e = field_above_polygon(GEOMETRY.electrode("RF1").shape, trap_axis(1e-4), 1.0)
    assert s.Sx == pytest.approx(a**2 * e.Ex**2, rel=1e-12)
    assert s.Sy == pytest.approx(a**2 * e.Ey**2, rel=1e-12)
    assert s.Sz == pytest.approx(a**2 * e.Ez**2, rel=1e-12)


def test_quadratic_in_amplitude():
    s1 = technical_SE(GEOMETRY, ElectrodeNoiseSpec({"DC1": 1e-6}), 1e-4)
    s3 = technical_SE(GEOMETRY, ElectrodeNoiseSpec({"DC1": 3e-6}), 1e-4)
    assert s3.Sy == pytest.approx(9 * s1.Sy, rel=1e-12)
    assert s3.Sz == pytest.approx(9 * s1.Sz, rel=1e-12)


def test_unknown_electrode():
    with pytest.raises(InvalidInputError):
        technical_SE(GEOMETRY, ElectrodeNoiseSpec({"DC99": 1e-6}), 1e-4)


def test_negative_amplitude_rejected():
    with pytest.raises(InvalidInputError):
        ElectrodeNoiseSpec({"DC1": -1e-6})


@pytest.mark.parametrize("name", ["DC9", "RF1"])
def test_polarization_ratio_varies_with_distance(name):
    # correlated single-electrode noise: the normal/planar ratio is not a
    # constant, unlike the small-patch factor 2
    spec = ElectrodeNoiseSpec({name: 3e-6})
    ratios = []
    for d in np.linspace(50e-6, 300e-6, 11):
        s = technical_SE(GEOMETRY, spec, float(d))
        assert s.Sy > 0
        ratios.append(s.Sz / s.Sy)
    assert max(ratios) / min(ratios) > 2.0


def test_amplitude_round_trip():
    truth = ElectrodeNoiseSpec({"DC1": 2e-6, "DC9": 5e-6})
    data = synthetic_data(truth, np.linspace(50e-6, 300e-6, 8))
    fitted, report = fit_electrode_amplitudes(GEOMETRY, data)
    # DC1 and DC9 are non-degenerate on this layout: direct comparison
    assert fitted.amplitudes["DC9"] ** 2 == pytest.approx(25e-12, rel=1e-6)
    assert fitted.amplitudes["DC1"] ** 2 == pytest.approx(4e-12, rel=1e-6)
    others = sum(
        fitted.amplitudes[n] ** 2 for n in GEOMETRY.names if n not in ("DC1", "DC9")
    )
    assert others <= 1e-6 * 25e-12
    assert report.chi2 < 1e-20


def test_degenerate_groups_share_power():
    # mirror-symmetric electrodes are indistinguishable on the axis; the fit
    # reports the group and splits the recovered power equally
    truth = ElectrodeNoiseSpec({"RF1": 4e-6})
    data = synthetic_data(truth, np.linspace(50e-6, 300e-6, 8))
    fitted, report = fit_electrode_amplitudes(GEOMETRY, data)
    groups = {frozenset(grp) for grp in report.degenerate_groups}
    assert frozenset({"RF1", "RF2", "RF3", "RF4"}) in groups
    rf_sum = sum(fitted.amplitudes[f"RF{i}"] ** 2 for i in range(1, 5))
    assert rf_sum == pytest.approx(16e-12, rel=1e-6)
    assert fitted.amplitudes["RF1"] == pytest.approx(fitted.amplitudes["RF4"], rel=1e-9)


def test_power_law_data_is_not_reproduced():
    # d^-2.6 with a constant 2:1 normal:planar ratio cannot be assembled
    # from electrode-correlated noise on this layout
    data = []
    for d in np.linspace(50e-6, 300e-6, 8):
        base = 1e-12 * (d / 1e-4) ** -2.6
        data.append(se_point(float(d), ModeDirection.PLANAR_Y, base, 0.05 * base))
        data.append(se_point(float(d), ModeDirection.NORMAL, 2 * base, 0.1 * base))
    _, report = fit_electrode_amplitudes(GEOMETRY, data)
    assert report.weighted
    assert report.reduced_chi2 > 3.0


def test_all_zero_data():
    data = [
        se_point(float(d), direction, 0.0)
        for d in np.linspace(50e-6, 300e-6, 5)
        for direction in (ModeDirection.PLANAR_Y, ModeDirection.NORMAL)
    ]
    fitted, report = fit_electrode_amplitudes(GEOMETRY, data)
    assert all(a == 0.0 for a in fitted.amplitudes.values())
    assert report.chi2 == 0.0


def test_chi2_monotone_in_electrode_set():
    data = []
    for d in np.linspace(50e-6, 300e-6, 8):
        base = 1e-12 * (d / 1e-4) ** -2.6
        data.append(se_point(float(d), ModeDirection.PLANAR_Y, base, 0.05 * base))
        data.append(se_point(float(d), ModeDirection.NORMAL, 2 * base, 0.1 * base))
    subsets = [["DC9"], ["DC9", "DC1"], ["DC9", "DC1", "RF1"], None]
    chi2s = [fit_electrode_amplitudes(GEOMETRY, data, electrodes=s)[1].chi2 for s in subsets]
    assert all(a >= b - 1e-9 * abs(a) for a, b in zip(chi2s, chi2s[1:]))


def test_fitted_amplitudes_nonnegative():
    rng = np.random.default_rng(9)
    data = []
    for d in np.linspace(60e-6, 250e-6, 6):
        base = 1e-13 * (d / 1e-4) ** -3.0 * (1 + 0.2 * rng.standard_normal())
        data.append(se_point(float(d), ModeDirection.PLANAR_Y, abs(base)))
        data.append(se_point(float(d), ModeDirection.NORMAL, 2 * abs(base)))
    fitted, _ = fit_electrode_amplitudes(GEOMETRY, data)
    assert all(a >= 0.0 for a in fitted.amplitudes.values())


def test_insufficient_data_rejected():
    data = synthetic_data(ElectrodeNoiseSpec({"DC9": 1e-6}), [1e-4, 2e-4])
    with pytest.raises(FitError):
        fit_electrode_amplitudes(GEOMETRY, data)
    one_direction = [
        se_point(float(d), ModeDirection.NORMAL, 1e-13) for d in np.linspace(5e-5, 3e-4, 6)
    ]
    with pytest.raises(FitError):
        fit_electrode_amplitudes(GEOMETRY, one_direction)


def test_path_must_match_distance():
    with pytest.raises(InvalidInputError):
        technical_SE(GEOMETRY, ElectrodeNoiseSpec({"DC9": 1e-6}), 1e-4, path=lambda d: (0, 0, 2 * d))
