import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import jv

from oracles import fft_modulator_lines
from ringlink import (
    JonesVector,
    ModulatorDrive,
    OpticalSpectrum,
    SpectralLine,
    cw_carrier,
    intensity_modulate,
    phase_modulate,
    photodetect,
)

F_C = 193.4e12
F_RF = 16.6e9


def line_order(spec, n):
    return spec.line_at(F_C + n * F_RF)


class TestCwCarrier:
    def test_equal_split_at_45_degrees(self):
        spec = cw_carrier(F_C, 1e-3, math.pi / 4)
        (line,) = spec.lines
        assert abs(line.field.e_te) ** 2 == pytest.approx(0.5e-3, rel=1e-12)
        assert abs(line.field.e_tm) ** 2 == pytest.approx(0.5e-3, rel=1e-12)

    def test_zero_angle_is_pure_te(self):
        (line,) = cw_carrier(F_C, 2e-3, 0.0).lines
        assert line.field.e_tm == 0.0
        assert line.power_w == pytest.approx(2e-3, rel=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(angle=st.floats(min_value=0.0, max_value=2 * math.pi), power=st.floats(min_value=0.0, max_value=1.0))
    def test_total_power_is_exact(self, angle, power):
        spec = cw_carrier(F_C, power, angle)
        assert spec.total_power_w == pytest.approx(power, rel=1e-12, abs=1e-15)

    def test_negative_power_rejected(self):
        with pytest.raises(ValueError):
            cw_carrier(F_C, -1.0)


class TestPhaseModulation:
    def test_matches_fft_oracle_line_by_line(self):
        for m in (0.05, 0.2, 0.5):
            spec = phase_modulate(cw_carrier(F_C, 1.0, 0.0), ModulatorDrive(F_RF, m))
            oracle = fft_modulator_lines(
                lambda t: np.exp(1j * m * np.cos(2 * np.pi * F_RF * t)), F_RF
            )
            for ln in spec.lines:
                n = round((ln.freq_hz - F_C) / F_RF)
                assert abs(ln.field.e_te - oracle[n]) <= 1e-9 * abs(oracle[n])

    def test_frozen_small_signal_amplitudes(self):
        spec = phase_modulate(cw_carrier(F_C, 1.0, 0.0), ModulatorDrive(F_RF, 0.2))
        assert line_order(spec, 0).field.e_te == pytest.approx(0.9900249722395764, rel=1e-12)
        upper = line_order(spec, 1).field.e_te
        lower = line_order(spec, -1).field.e_te
        assert abs(upper) == pytest.approx(0.09950083263923599, rel=1e-12)
        # the Bessel coefficients of the counter-phase pair flip sign...
        assert jv(-1, 0.2) == pytest.approx(-jv(1, 0.2), rel=1e-15)
        # ...which lands both tones in quadrature with the carrier
        assert upper == pytest.approx(lower, rel=1e-12)
        assert upper.real == pytest.approx(0.0, abs=1e-15)

    def test_zero_index_is_identity(self):
        before = cw_carrier(F_C, 1e-3, 0.3)
        after = phase_modulate(before, ModulatorDrive(F_RF, 0.0))
        assert len(after.lines) == 1
        assert after.lines[0] == before.lines[0]

    def test_power_conserved_to_truncation(self):
        for m in (0.05, 0.2, 0.5):
            spec = phase_modulate(cw_carrier(F_C, 1.0, 0.7), ModulatorDrive(F_RF, m))
            assert abs(spec.total_power_w - 1.0) < 1e-10

    def test_polarization_preserved_per_line(self):
        spec = phase_modulate(cw_carrier(F_C, 1e-3, 0.7), ModulatorDrive(F_RF, 0.2))
        for ln in spec.lines:
            # both components scale by the same complex factor
            assert ln.field.e_te * math.tan(0.7) == pytest.approx(ln.field.e_tm, rel=1e-12)

    def test_default_truncation_order(self):
        drive = ModulatorDrive(F_RF, 0.2)
        assert drive.order_cutoff() == 5  # |J_5(0.2)| ~ 8e-8 is the first below 1e-6
        assert len(phase_modulate(cw_carrier(F_C, 1.0, 0.0), drive).lines) == 11

    def test_multi_line_input_rejected(self):
        two = OpticalSpectrum.from_lines(
            [
                SpectralLine(F_C, JonesVector(1.0, 0.0)),
                SpectralLine(F_C + 1e9, JonesVector(1.0, 0.0)),
            ]
        )
        with pytest.raises(ValueError):
            phase_modulate(two, ModulatorDrive(F_RF, 0.2))

    def test_direct_detection_beat_cancels(self):
        spec = phase_modulate(cw_carrier(F_C, 1e-3, math.pi / 4), ModulatorDrive(F_RF, 0.2))
        pair_ref = abs(line_order(spec, 0).field.e_te) * abs(line_order(spec, 1).field.e_te) * 2
        assert abs(photodetect(spec, F_RF)) < 1e-8 * pair_ref


class TestIntensityModulation:
    def test_matches_fft_oracle_line_by_line(self):
        bias = math.pi / 2
        for m in (0.05, 0.2, 0.5):
            spec = intensity_modulate(cw_carrier(F_C, 1.0, 0.0), ModulatorDrive(F_RF, m, bias))
            oracle = fft_modulator_lines(
                lambda t: np.cos(bias / 2 + m * np.cos(2 * np.pi * F_RF * t)), F_RF
            )
            for ln in spec.lines:
                n = round((ln.freq_hz - F_C) / F_RF)
                assert abs(ln.field.e_te - oracle[n]) <= 1e-9 * abs(oracle[n])

    def test_quadrature_sidebands_are_equal_and_in_phase(self):
        spec = intensity_modulate(cw_carrier(F_C, 1.0, 0.0), ModulatorDrive(F_RF, 0.2))
        upper = line_order(spec, 1).field.e_te
        lower = line_order(spec, -1).field.e_te
        assert upper == pytest.approx(lower, rel=1e-14)
        expected = -math.sin(math.pi / 4) * jv(1, 0.2)
        assert upper == pytest.approx(expected, rel=1e-12)
        assert upper.imag == pytest.approx(0.0, abs=1e-15)

    def test_static_interferometer_power(self):
        for bias in (0.0, math.pi / 2, 2.2):
            spec = intensity_modulate(cw_carrier(F_C, 1e-3, 0.4), ModulatorDrive(F_RF, 0.0, bias))
            assert spec.total_power_w == pytest.approx(
                1e-3 * math.cos(bias / 2) ** 2, rel=1e-12, abs=1e-18
            )

    @settings(max_examples=60, deadline=None)
    @given(
        m=st.floats(min_value=0.0, max_value=0.5),
        bias=st.floats(min_value=0.0, max_value=math.pi),
    )
    def test_never_gains_power(self, m, bias):
        spec = intensity_modulate(cw_carrier(F_C, 1.0, 0.0), ModulatorDrive(F_RF, m, bias))
        assert spec.total_power_w <= 1.0 + 1e-12

    def test_detectable_beat_unlike_phase_modulation(self):
        spec = intensity_modulate(cw_carrier(F_C, 1e-3, math.pi / 4), ModulatorDrive(F_RF, 0.2))
        pair_ref = abs(line_order(spec, 0).field.e_te) * abs(line_order(spec, 1).field.e_te) * 2
        assert abs(photodetect(spec, F_RF)) > 0.5 * pair_ref


class TestSpectrumContainer:
    def test_lines_sorted_and_merged(self):
        spec = OpticalSpectrum.from_lines(
            [
                SpectralLine(F_C + 5e9, JonesVector(1.0, 0.0)),
                SpectralLine(F_C, JonesVector(0.5, 0.0)),
                SpectralLine(F_C + 500.0, JonesVector(0.25, 0.0)),  # within merge tolerance
            ]
        )
        assert len(spec.lines) == 2
        assert spec.lines[0].field.e_te == pytest.approx(0.75)
        assert list(spec.freqs) == sorted(spec.freqs)

    def test_line_lookup_tolerance(self):
        spec = cw_carrier(F_C, 1.0, 0.0)
        assert spec.line_at(F_C + 999.0) is not None
        assert spec.line_at(F_C + 5e9) is None

    def test_drive_validation(self):
        with pytest.raises(ValueError):
            ModulatorDrive(rf_freq_hz=0.0)
        with pytest.raises(ValueError):
            ModulatorDrive(rf_freq_hz=F_RF, mod_index_rad=-0.1)
        with pytest.raises(ValueError):
            ModulatorDrive(rf_freq_hz=F_RF, max_order=0)
