import math

import numpy as np
import pytest

from ringlink import PolMode, coupling_fwhm_hz
from ringlink.fitting import (
    MeasuredTrace,
    Port,
    fit_resonance,
    fit_thermal_rates,
    initial_guess,
    regress_thermal_rates,
)
from ringlink.ring import drop_amplitude, through_amplitude

T_TRUE, A_TRUE = 0.9965, 0.9982
FSR = 49e9
F0_TRUE = 193.4e12
FWHM_TRUE = coupling_fwhm_hz(T_TRUE, A_TRUE, FSR)


def synthetic_trace(port=Port.DROP, scale=0.8, n=401, span_fwhm=10.0, noise=0.0, seed=None,
                    t=T_TRUE, a=A_TRUE, f0=F0_TRUE, fsr=FSR):
    f = np.linspace(f0 - span_fwhm * FWHM_TRUE, f0 + span_fwhm * FWHM_TRUE, n)
    phi = 2 * np.pi * (f - f0) / fsr
    amp_fn = drop_amplitude if port is Port.DROP else through_amplitude
    power = scale * np.abs(amp_fn(t, a, phi)) ** 2
    if noise:
        rng = np.random.default_rng(seed)
        power = power + noise * rng.standard_normal(n)
    return MeasuredTrace(freq_hz=f, power=power, port=port, pol=PolMode.TE)


class TestInitialGuess:
    def test_center_within_tenth_of_linewidth(self):
        trace = synthetic_trace()
        t, a, f0, scale = initial_guess(trace, FSR)
        assert abs(f0 - F0_TRUE) < 0.1 * FWHM_TRUE
        assert 0.99 < t < 1.0
        assert scale == pytest.approx(0.8, rel=0.05)

    def test_through_port_notch_guessed(self):
        trace = synthetic_trace(port=Port.THROUGH)
        _, _, f0, scale = initial_guess(trace, FSR)
        assert abs(f0 - F0_TRUE) < 0.1 * FWHM_TRUE
        assert scale == pytest.approx(0.8, rel=0.05)

    def test_flat_trace_rejected(self):
        f = np.linspace(F0_TRUE - 1e9, F0_TRUE + 1e9, 50)
        trace = MeasuredTrace(freq_hz=f, power=np.full(50, 0.5), port=Port.DROP, pol=PolMode.TE)
        with pytest.raises(ValueError, match="extremum"):
            initial_guess(trace, FSR)


class TestFitRoundTrip:
    def test_noiseless_drop_recovery(self):
        result = fit_resonance(synthetic_trace(), FSR)
        assert abs(result.t - T_TRUE) / T_TRUE < 1e-4
        assert abs(result.a - A_TRUE) / A_TRUE < 1e-4
        assert abs(result.f0_hz - F0_TRUE) < 0.01 * FWHM_TRUE
        assert result.amplitude_scale == pytest.approx(0.8, rel=1e-4)
        assert result.converged
        assert result.identifiability_note is not None  # drop trace pins a

    def test_noiseless_through_recovery(self):
        result = fit_resonance(synthetic_trace(port=Port.THROUGH), FSR)
        assert abs(result.t - T_TRUE) / T_TRUE < 1e-4
        assert abs(result.a - A_TRUE) / A_TRUE < 1e-4

    def test_drop_and_through_agree(self):
        drop = fit_resonance(synthetic_trace(), FSR)
        through = fit_resonance(synthetic_trace(port=Port.THROUGH), FSR)
        assert drop.t == pytest.approx(through.t, rel=1e-4)
        assert drop.a == pytest.approx(through.a, rel=1e-4)

    def test_recovery_across_linewidth_regimes(self):
        for ratio in (1 / 500, 1 / 150, 1 / 20):
            from ringlink import solve_coupling_from_fwhm

            t, a = solve_coupling_from_fwhm(ratio * FSR, FSR)
            f = np.linspace(F0_TRUE - 10 * ratio * FSR, F0_TRUE + 10 * ratio * FSR, 401)
            phi = 2 * np.pi * (f - F0_TRUE) / FSR
            power = 0.9 * np.abs(drop_amplitude(t, a, phi)) ** 2
            trace = MeasuredTrace(freq_hz=f, power=power, port=Port.DROP, pol=PolMode.TE)
            result = fit_resonance(trace, FSR)
            assert abs(result.t - t) / t < 1e-4
            assert abs(result.a - a) / a < 1e-4

    def test_monte_carlo_at_40db_snr(self):
        errors_t, errors_a = [], []
        seeds = np.random.default_rng(20240817).integers(0, 2**32, 100)
        peak = synthetic_trace().power.max()
        for seed in seeds:
            trace = synthetic_trace(noise=peak / 100.0, seed=int(seed))
            result = fit_resonance(trace, FSR)
            errors_t.append(abs(result.t - T_TRUE) / T_TRUE)
            errors_a.append(abs(result.a - A_TRUE) / A_TRUE)
        assert float(np.median(errors_t)) < 0.01
        assert float(np.median(errors_a)) < 0.01

    def test_scale_invariance(self):
        trace = synthetic_trace(scale=0.8)
        scaled_trace = MeasuredTrace(
            freq_hz=trace.freq_hz, power=trace.power * 8.0, port=trace.port, pol=trace.pol
        )
        base = fit_resonance(trace, FSR)
        scaled = fit_resonance(scaled_trace, FSR)
        assert scaled.t == pytest.approx(base.t, rel=1e-10)
        assert scaled.a == pytest.approx(base.a, rel=1e-10)
        assert scaled.f0_hz == pytest.approx(base.f0_hz, abs=1e-3)
        assert scaled.amplitude_scale == pytest.approx(8.0 * base.amplitude_scale, rel=1e-9)

    def test_accepted_steps_never_increase_cost(self):
        result = fit_resonance(synthetic_trace(noise=1e-3, seed=7), FSR)
        history = np.asarray(result.cost_history)
        assert np.all(np.diff(history) <= 0.0)

    def test_out_of_bounds_guess_rejected(self):
        with pytest.raises(ValueError, match="bounds"):
            fit_resonance(synthetic_trace(), FSR, guess=(1.5, 0.99, F0_TRUE, 1.0))

    def test_fit_reports_derived_linewidth(self):
        result = fit_resonance(synthetic_trace(), FSR)
        assert result.fwhm_hz == pytest.approx(FWHM_TRUE, rel=1e-3)
        assert result.q == pytest.approx(F0_TRUE / FWHM_TRUE, rel=1e-3)
        assert result.covariance is not None and result.covariance.shape == (4, 4)


class TestTraceValidation:
    def test_too_few_samples(self):
        f = np.linspace(F0_TRUE - 1e9, F0_TRUE + 1e9, 10)
        with pytest.raises(ValueError, match="20 samples"):
            MeasuredTrace(freq_hz=f, power=np.ones(10), port=Port.DROP, pol=PolMode.TE)

    def test_non_monotonic_frequencies(self):
        f = np.linspace(F0_TRUE - 1e9, F0_TRUE + 1e9, 30)
        f[10] = f[9]
        with pytest.raises(ValueError, match="increasing"):
            MeasuredTrace(freq_hz=f, power=np.ones(30), port=Port.DROP, pol=PolMode.TE)


class TestThermalRates:
    def test_exact_rate_recovery_on_linear_data(self):
        temps = np.array([23.0, 24.0, 25.5, 27.0, 28.5, 30.0])
        rate_te, rate_tm = 1.77e9, 1.67e9
        centers = {
            PolMode.TE: [(t, F0_TRUE - rate_te * (t - 23.0)) for t in temps],
            PolMode.TM: [(t, F0_TRUE + 16.6e9 - rate_tm * (t - 23.0)) for t in temps],
        }
        rates = regress_thermal_rates(centers)
        assert rates.redshift_rate_hz_per_c.te == pytest.approx(rate_te, rel=1e-10)
        assert rates.redshift_rate_hz_per_c.tm == pytest.approx(rate_tm, rel=1e-10)
        assert rates.interval_slope_hz_per_c == pytest.approx(0.10e9, rel=1e-6)

    def test_rates_from_traces(self):
        temps = [23.0, 26.0, 29.0]
        pairs = []
        for temp in temps:
            for pol, rate, f_anchor in (
                (PolMode.TE, 1.77e9, F0_TRUE),
                (PolMode.TM, 1.67e9, F0_TRUE + 16.6e9),
            ):
                f0 = f_anchor - rate * (temp - 23.0)
                f = np.linspace(f0 - 10 * FWHM_TRUE, f0 + 10 * FWHM_TRUE, 201)
                phi = 2 * np.pi * (f - f0) / FSR
                power = np.abs(drop_amplitude(T_TRUE, A_TRUE, phi)) ** 2
                pairs.append(
                    (temp, MeasuredTrace(freq_hz=f, power=power, port=Port.DROP, pol=pol))
                )
        rates = fit_thermal_rates(pairs, FSR)
        assert rates.redshift_rate_hz_per_c.te == pytest.approx(1.77e9, rel=1e-6)
        assert rates.redshift_rate_hz_per_c.tm == pytest.approx(1.67e9, rel=1e-6)
        assert rates.interval_slope_hz_per_c == pytest.approx(0.10e9, rel=1e-3)

    def test_needs_three_temperatures(self):
        centers = {
            PolMode.TE: [(23.0, F0_TRUE), (24.0, F0_TRUE - 1.77e9)],
            PolMode.TM: [(23.0, F0_TRUE), (24.0, F0_TRUE - 1.67e9), (25.0, F0_TRUE - 3.3e9)],
        }
        with pytest.raises(ValueError, match=">= 3 temperatures"):
            regress_thermal_rates(centers)

    def test_identical_temperatures_rejected(self):
        centers = {
            PolMode.TE: [(23.0, F0_TRUE)] * 3,
            PolMode.TM: [(23.0, F0_TRUE)] * 3,
        }
        with pytest.raises(ValueError, match="rank-deficient"):
            regress_thermal_rates(centers)
