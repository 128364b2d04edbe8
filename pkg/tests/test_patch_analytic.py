"""Exponential-correlation patch model: quadrature, exponents, zeta fit."""

import math

import numpy as np
import pytest

from trapnoise.core import ModeDirection, SpectralDensityPoint
from trapnoise.errors import FitError, InvalidInputError
from trapnoise.patch_analytic import (
    AnalyticPatchParams,
    analytic_SE,
    autocorrelation,
    fit_zeta,
    local_exponent,
    shape_integral,
)

W_1MHZ = 2 * math.pi * 1e6


def brute_force_integral(rho, n=10_000_001, k_max=60.0):
    """Trapezoid oracle on a uniform grid, independent of the quadrature path."""
    k = np.linspace(0.0, k_max, n)
    f = k**3 * np.exp(-2.0 * k) / (1.0 + (rho * k) ** 2) ** 1.5
    return float(np.trapezoid(f, k))


class TestAutocorrelation:
    def test_zero_separation(self):
        assert autocorrelation(1e-4, 0.0, 0.0) == 1.0

    def test_one_correlation_length(self):
        assert autocorrelation(1e-4, 1e-4, 0.0) == pytest.approx(math.exp(-1))

    def test_radial_symmetry(self):
        z = 7e-5
        a, b = 3e-5, 4e-5
        assert autocorrelation(z, a, b) == pytest.approx(
            autocorrelation(z, math.hypot(a, b), 0.0), rel=1e-12
        )

    def test_positive_zeta_required(self):
        with pytest.raises(InvalidInputError):
            autocorrelation(0.0, 1e-5, 0.0)


class TestSpectralDensity:
    def test_small_zeta_limit(self):
        # S -> (3/4) A zeta^2 / d^4 since the bare integral is 3/8
        zeta, d, amp = 1e-7, 1e-4, 2.0
        expected = 0.75 * amp * zeta**2 / d**4
        val = analytic_SE(AnalyticPatchParams(zeta, amp), d, ModeDirection.PLANAR_Y)
        assert val == pytest.approx(expected, rel=5e-3)

    def test_large_zeta_limit(self):
        # S -> A / (zeta d)
        zeta, d, amp = 1e-1, 1e-4, 2.0
        expected = amp / (zeta * d)
        val = analytic_SE(AnalyticPatchParams(zeta, amp), d, ModeDirection.PLANAR_Y)
        assert val == pytest.approx(expected, rel=5e-3)

    def test_normal_is_twice_planar(self):
        for zeta, d in [(1e-6, 1e-4), (1e-4, 1e-4), (1e-2, 1e-4)]:
            params = AnalyticPatchParams(zeta, 1.0)
            planar = analytic_SE(params, d, ModeDirection.PLANAR_Y)
            assert analytic_SE(params, d, ModeDirection.NORMAL) == 2.0 * planar
            assert analytic_SE(params, d, ModeDirection.PLANAR_X) == planar

    @pytest.mark.parametrize("rho", [1e-3, 1e-1, 1.0, 1e1, 1e3])
    def test_quadrature_against_brute_force(self, rho):
        assert shape_integral(rho) == pytest.approx(brute_force_integral(rho), rel=1e-7)

    def test_shape_depends_only_on_ratio(self):
        # S * d^4 / (A zeta^2) is a function of zeta/d alone:
        # same ratio at 100x different absolute scale must agree
        amp = 1.0
        s1 = analytic_SE(AnalyticPatchParams(1e-5, amp), 1e-4, ModeDirection.PLANAR_Y)
        s2 = analytic_SE(AnalyticPatchParams(1e-3, amp), 1e-2, ModeDirection.PLANAR_Y)
        shape1 = s1 * (1e-4) ** 4 / (amp * (1e-5) ** 2)
        shape2 = s2 * (1e-2) ** 4 / (amp * (1e-3) ** 2)
        assert shape1 == pytest.approx(shape2, rel=1e-9)

    def test_strictly_decreasing_in_distance(self):
        params = AnalyticPatchParams(106e-6, 1.0)
        d = np.geomspace(2e-5, 1e-3, 25)
        values = [analytic_SE(params, float(di), ModeDirection.PLANAR_Y) for di in d]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_linear_in_amplitude(self):
        s1 = analytic_SE(AnalyticPatchParams(1e-4, 1.0), 1e-4, ModeDirection.PLANAR_Y)
        s5 = analytic_SE(AnalyticPatchParams(1e-4, 5.0), 1e-4, ModeDirection.PLANAR_Y)
        assert s5 == pytest.approx(5 * s1, rel=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(InvalidInputError):
            analytic_SE(AnalyticPatchParams(1e-4, 1.0), 0.0, ModeDirection.PLANAR_Y)
        with pytest.raises(InvalidInputError):
            AnalyticPatchParams(-1e-4, 1.0)


class TestLocalExponent:
    def test_small_zeta_gives_four(self):
        params = AnalyticPatchParams(zeta=1.0, amplitude=1.0)
        assert local_exponent(params, 1e4) == pytest.approx(4.0, abs=0.01)

    def test_large_zeta_gives_one(self):
        params = AnalyticPatchParams(zeta=1.0, amplitude=1.0)
        assert local_exponent(params, 1e-4) == pytest.approx(1.0, abs=0.01)

    def test_monotone_crossover(self):
        params = AnalyticPatchParams(zeta=1e-4, amplitude=1.0)
        d = np.geomspace(1e-7, 1e-1, 25)
        betas = [local_exponent(params, float(di)) for di in d]
        assert all(b2 >= b1 - 1e-6 for b1, b2 in zip(betas, betas[1:]))
        assert all(1.0 < b < 4.0 for b in betas)


class TestZetaFit:
    @staticmethod
    def model_data(zeta=106e-6, amp=3.3e-3, noise=0.0, seed=0):
        rng = np.random.default_rng(seed)
        truth = AnalyticPatchParams(zeta, amp)
        data = []
        for d in np.arange(50e-6, 300.1e-6, 25e-6):
            for direction in (ModeDirection.PLANAR_Y, ModeDirection.NORMAL):
                val = analytic_SE(truth, float(d), direction)
                if noise:
                    val *= max(1.0 + noise * rng.standard_normal(), 0.05)
                data.append(
                    SpectralDensityPoint(float(d), W_1MHZ, direction, val, noise * val)
                )
        return data

    def test_noiseless_round_trip(self):
        params, report = fit_zeta(self.model_data())
        assert params.zeta == pytest.approx(106e-6, rel=1e-3)
        assert params.amplitude == pytest.approx(3.3e-3, rel=1e-2)
        assert not report.at_boundary

    def test_recovery_with_multiplicative_noise(self):
        params, report = fit_zeta(self.model_data(noise=0.15, seed=42))
        assert params.zeta == pytest.approx(106e-6, rel=0.10)
        assert math.isfinite(report.zeta_sigma)

    def test_pure_power_law_hits_boundary(self):
        data = [
            SpectralDensityPoint(float(d), W_1MHZ, ModeDirection.PLANAR_Y, 1e-12 * (d / 1e-4) ** -4)
            for d in np.arange(50e-6, 300.1e-6, 25e-6)
        ]
        params, report = fit_zeta(data)
        assert report.at_boundary
        assert params.zeta <= 1.1 * report.zeta_bounds[0]

    def test_joint_polarization_is_fixed(self):
        # scaling the normal series away from exactly 2x the planar one
        # shows up as residual, not as a different polarization
        data = self.model_data()
        boosted = [
            SpectralDensityPoint(p.distance, p.angular_frequency, p.direction,
                                 p.S_E * (3.0 if p.direction is ModeDirection.NORMAL else 1.0))
            for p in data
        ]
        _, clean = fit_zeta(data)
        _, off = fit_zeta(boosted)
        assert off.chi2 > 100 * max(clean.chi2, 1e-30)

    def test_insufficient_distances(self):
        data = self.model_data()
        short = [p for p in data if p.distance < 1e-4]
        with pytest.raises(FitError):
            fit_zeta(short)
