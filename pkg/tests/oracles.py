"""Independent reference computations used to check the package.

Everything here deliberately avoids the code paths it validates: modulator
spectra come from an FFT of the exact time-domain field, photocurrents from
an FFT of |E(t)|^2, linewidths from dense scans of the analytic curve, and
resonances from grid maxima.
"""

from __future__ import annotations

import numpy as np

from ringlink import OpticalSpectrum, PolMode, RingModel, drop_transfer


def fft_modulator_lines(field_of_t, rf_freq_hz: float, n: int = 2**14) -> dict[int, complex]:
    """Tone amplitudes of a periodic modulated field, by FFT over one RF period.

    Returns ``{order: amplitude}`` where order n maps to the tone at
    ``f_carrier + n * f_RF``.
    """
    t = np.arange(n) / (n * rf_freq_hz)
    coeffs = np.fft.fft(field_of_t(t)) / n
    return {k: complex(coeffs[k % n]) for k in range(-n // 4, n // 4)}


def beat_from_time_domain(spec: OpticalSpectrum, rf_freq_hz: float, n: int = 2**16) -> complex:
    """Photocurrent component at +f_RF from the sampled |E(t)|^2.

    Valid for spectra whose line offsets are integer multiples of f_RF
    (the modulated-comb case).
    """
    t = np.arange(n) / (n * rf_freq_hz)
    base = min(ln.freq_hz for ln in spec.lines)
    e_te = sum(ln.field.e_te * np.exp(2j * np.pi * (ln.freq_hz - base) * t) for ln in spec.lines)
    e_tm = sum(ln.field.e_tm * np.exp(2j * np.pi * (ln.freq_hz - base) * t) for ln in spec.lines)
    current = np.abs(e_te) ** 2 + np.abs(e_tm) ** 2
    return complex(np.fft.fft(current)[1] / n)


def scan_fwhm(ring: RingModel, pol: PolMode, f0: float, span: float, n: int = 2_000_001) -> float:
    """Half-power full width of |D|^2 from a dense frequency scan."""
    f = np.linspace(f0 - span / 2, f0 + span / 2, n)
    mag = np.abs(drop_transfer(ring, pol, f)) ** 2
    above = mag >= mag.max() / 2.0
    return float(f[above][-1] - f[above][0])


def grid_resonances(ring: RingModel, pol: PolMode, band, n: int = 500_001) -> np.ndarray:
    """Resonance frequencies as interior maxima of |D|^2 on a dense grid."""
    f = np.linspace(band[0], band[1], n)
    mag = np.abs(drop_transfer(ring, pol, f)) ** 2
    peaks = (mag[1:-1] > mag[:-2]) & (mag[1:-1] > mag[2:]) & (mag[1:-1] > 0.5 * mag.max())
    return f[1:-1][peaks]
