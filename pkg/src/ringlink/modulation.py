"""Electro-optic modulation of a CW carrier into discrete optical tone spectra.

Both modulators are exact Bessel expansions of the time-domain field over one
RF period, truncated where the Bessel envelope falls below 1e-6 (a -120 dB
floor).  Modulators are polarization-transparent: each tone keeps the carrier
polarization scaled by a complex factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import jv

from .polarization import JonesVector

__all__ = [
    "MERGE_TOL_HZ",
    "BESSEL_TRUNCATION",
    "SpectralLine",
    "OpticalSpectrum",
    "ModulatorDrive",
    "cw_carrier",
    "phase_modulate",
    "intensity_modulate",
]

MERGE_TOL_HZ = 1e3  # lines closer than this are one tone and add coherently
BESSEL_TRUNCATION = 1e-6

_I_POW = (1 + 0j, 1j, -1 + 0j, -1j)  # i**n without complex-power roundoff


@dataclass(frozen=True)
class SpectralLine:
    """One optical tone: frequency [Hz] plus a Jones field amplitude [sqrt(W)]."""

    freq_hz: float
    field: JonesVector

    def __post_init__(self) -> None:
        if self.freq_hz <= 0:
            raise ValueError(f"line frequency must be positive, got {self.freq_hz}")

    @property
    def power_w(self) -> float:
        return self.field.power


@dataclass(frozen=True)
class OpticalSpectrum:
    """Sorted tuple of spectral lines with unique frequencies.

    Build through :meth:`from_lines`, which sorts and coherently merges lines
    that fall within :data:`MERGE_TOL_HZ` of each other.
    """

    lines: tuple[SpectralLine, ...]

    @classmethod
    def from_lines(cls, lines: Iterable[SpectralLine]) -> "OpticalSpectrum":
        ordered = sorted(lines, key=lambda ln: ln.freq_hz)
        merged: list[SpectralLine] = []
        for ln in ordered:
            if merged and ln.freq_hz - merged[-1].freq_hz <= MERGE_TOL_HZ:
                prev = merged[-1]
                merged[-1] = SpectralLine(
                    prev.freq_hz,
                    JonesVector(
                        prev.field.e_te + ln.field.e_te,
                        prev.field.e_tm + ln.field.e_tm,
                    ),
                )
            else:
                merged.append(ln)
        return cls(tuple(merged))

    @property
    def freqs(self) -> np.ndarray:
        return np.array([ln.freq_hz for ln in self.lines], dtype=float)

    @property
    def total_power_w(self) -> float:
        return sum(ln.power_w for ln in self.lines)

    def line_at(self, freq_hz: float, tol_hz: float = MERGE_TOL_HZ) -> SpectralLine | None:
        """The line within ``tol_hz`` of ``freq_hz``, or None."""
        freqs = self.freqs
        if freqs.size == 0:
            return None
        i = int(np.argmin(np.abs(freqs - freq_hz)))
        if abs(freqs[i] - freq_hz) <= tol_hz:
            return self.lines[i]
        return None

    def map_fields(self, fn) -> "OpticalSpectrum":
        """New spectrum with ``fn(freq_hz, field) -> JonesVector`` applied per line."""
        return OpticalSpectrum(
            tuple(SpectralLine(ln.freq_hz, fn(ln.freq_hz, ln.field)) for ln in self.lines)
        )


@dataclass(frozen=True)
class ModulatorDrive:
    """Sinusoidal RF drive of an electro-optic modulator.

    ``mod_index_rad`` is the peak phase deviation m; ``bias_rad`` only
    matters for the intensity modulator (quadrature by default).  When
    ``max_order`` is None the expansion keeps orders up to the smallest n
    with ``|J_n(m)| < 1e-6``.
    """

    rf_freq_hz: float
    mod_index_rad: float = 0.2
    bias_rad: float = 0.5 * math.pi
    max_order: int | None = None

    def __post_init__(self) -> None:
        if self.rf_freq_hz <= 0:
            raise ValueError("rf_freq_hz must be positive")
        if self.mod_index_rad < 0:
            raise ValueError("mod_index_rad must be non-negative")
        if self.max_order is not None and self.max_order < 1:
            raise ValueError("max_order must be >= 1")

    def order_cutoff(self) -> int:
        if self.max_order is not None:
            return self.max_order
        n = 1
        while abs(jv(n, self.mod_index_rad)) >= BESSEL_TRUNCATION:
            n += 1
            if n > 512:  # J_n decays superexponentially past n ~ m; this is unreachable
                break
        return n


def cw_carrier(freq_hz: float, power_w: float, pol_angle_from_te_rad: float = 0.25 * math.pi) -> OpticalSpectrum:
    """Single-line CW spectrum, linearly polarized at the given angle from the TE axis."""
    if power_w < 0:
        raise ValueError("power_w must be non-negative")
    amp = math.sqrt(power_w)
    field = JonesVector(
        amp * math.cos(pol_angle_from_te_rad), amp * math.sin(pol_angle_from_te_rad)
    )
    return OpticalSpectrum.from_lines([SpectralLine(freq_hz, field)])


def _single_carrier(spec: OpticalSpectrum, what: str) -> SpectralLine:
    if len(spec.lines) != 1:
        raise ValueError(f"{what} expects a single-carrier input, got {len(spec.lines)} lines")
    return spec.lines[0]


def phase_modulate(spec: OpticalSpectrum, drive: ModulatorDrive) -> OpticalSpectrum:
    """Phase-modulate a single carrier: E(t) = E0 * exp(i*m*cos(Omega*t)).

    The tone at ``f_c + n*f_RF`` carries the factor ``i^n * J_n(m)``
    (Jacobi-Anger expansion).  Total power is conserved up to the Bessel
    truncation; the first-order pair beats to zero on a square-law detector,
    which is why direct detection of a phase-modulated signal needs a filter
    to break the sideband balance first.
    """
    carrier = _single_carrier(spec, "phase_modulate")
    m = drive.mod_index_rad
    n_max = drive.order_cutoff()

    lines = []
    for n in range(-n_max, n_max + 1):
        factor = _I_POW[n % 4] * jv(n, m)
        if factor == 0:
            continue
        lines.append(
            SpectralLine(carrier.freq_hz + n * drive.rf_freq_hz, carrier.field.scaled(factor))
        )
    return OpticalSpectrum.from_lines(lines)


def intensity_modulate(spec: OpticalSpectrum, drive: ModulatorDrive) -> OpticalSpectrum:
    """Push-pull Mach-Zehnder intensity modulation of a single carrier.

    Field transmission ``cos(bias/2 + m*cos(Omega*t))``, expanded exactly:
    the tone at ``f_c + n*f_RF`` carries

    ``A_n = J_n(m)/2 * [i^n e^{i bias/2} + (-i)^n e^{-i bias/2}]``.

    At quadrature bias this gives the carrier plus two equal, in-phase
    first-order sidebands (classic double-sideband output), unlike phase
    modulation where the pair is counter-phased on detection.
    """
    carrier = _single_carrier(spec, "intensity_modulate")
    m = drive.mod_index_rad
    n_max = drive.order_cutoff()
    e_plus = np.exp(0.5j * drive.bias_rad)

    lines = []
    for n in range(-n_max, n_max + 1):
        i_n = _I_POW[n % 4]
        factor = 0.5 * jv(n, m) * (i_n * e_plus + np.conj(i_n * e_plus))
        if factor == 0:
            continue
        lines.append(
            SpectralLine(carrier.freq_hz + n * drive.rf_freq_hz, carrier.field.scaled(factor))
        )
    return OpticalSpectrum.from_lines(lines)
