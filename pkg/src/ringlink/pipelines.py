"""End-to-end link simulations.

Two pipelines are modeled:

* an orthogonally polarized optical single-sideband generator: a 45-degree
  launched, intensity-modulated carrier feeds the ring's drop port, where
  the carrier and one first-order sideband exit on orthogonal resonances;
  an optional polarizer projects both onto one axis with a
  ``cot^2(theta)``-tunable carrier-to-sideband ratio;

* a dual-channel RF equalizer: a phase-modulated carrier feeds the through
  port, where the TE and TM notches unbalance the counter-phased sideband
  pairs (phase-to-intensity conversion); square-law photodetection maps the
  two optical notches onto two RF passbands whose extinction ratio follows
  ``cot^2(theta)`` of the input polarization angle.

The photodetector is an ideal square-law device: orthogonal polarization
components do not beat (the photocurrent is |E_TE|^2 + |E_TM|^2), and S21
is reported in dB normalized to the response maximum unless an absolute
reference is configured.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .modulation import (
    MERGE_TOL_HZ,
    ModulatorDrive,
    OpticalSpectrum,
    cw_carrier,
    intensity_modulate,
    phase_modulate,
)
from .polarization import JonesVector, PolarizerAngle, apply_jones, polarizer_matrix
from .ring import (
    PolMode,
    RingModel,
    coupling_fwhm_hz,
    drop_transfer,
    find_resonances,
    through_transfer,
)

__all__ = [
    "OssbConfig",
    "OssbReport",
    "EqualizerConfig",
    "RfResponse",
    "ThetaExtinction",
    "TrackingPoint",
    "PassbandMetrics",
    "passband_metrics",
    "simulate_ossb",
    "project_field",
    "photodetect",
    "photodetect_per_pol",
    "simulate_equalizer",
    "equalizer_beat",
    "equalizer_er_curve",
    "passband_center_tracking",
    "default_rf_grid",
]

PAIR_TOL_HZ = MERGE_TOL_HZ  # lines this close in spacing beat at the same RF


# ---------------------------------------------------------------------------
# OSSB generator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OssbConfig:
    """Single-sideband generator configuration.

    The carrier should sit within one linewidth of a TE resonance and the RF
    drive should equal the TE/TM resonance interval, so that the carrier and
    one sideband drop on orthogonal resonances.  A misaligned carrier is
    warned about, not rejected.  ``polarizer_theta`` absent means the
    orthogonally polarized output is kept (no projection).
    """

    ring: RingModel
    carrier_freq_hz: float
    carrier_power_w: float
    drive: ModulatorDrive
    launch_angle_rad: float = 0.25 * math.pi
    polarizer_theta: PolarizerAngle | None = None


@dataclass(frozen=True)
class OssbReport:
    """Drop-port (and optionally projected) spectra plus the headline ratios."""

    drop_spectrum: OpticalSpectrum
    projected_spectrum: OpticalSpectrum | None
    ocsr_db: float
    unused_sideband_suppression_db: float
    selected_sideband: str  # "upper" or "lower"
    carrier_power_w: float
    selected_sideband_power_w: float


def _apply_drop(ring: RingModel, spec: OpticalSpectrum) -> OpticalSpectrum:
    return spec.map_fields(
        lambda f, v: JonesVector(
            drop_transfer(ring, PolMode.TE, f) * v.e_te,
            drop_transfer(ring, PolMode.TM, f) * v.e_tm,
        )
    )


def _apply_through(ring: RingModel, spec: OpticalSpectrum) -> OpticalSpectrum:
    return spec.map_fields(
        lambda f, v: JonesVector(
            through_transfer(ring, PolMode.TE, f) * v.e_te,
            through_transfer(ring, PolMode.TM, f) * v.e_tm,
        )
    )


def _warn_if_carrier_off_resonance(cfg: OssbConfig) -> None:
    fsr = cfg.ring.fsr_hint[PolMode.TE]
    res = find_resonances(
        cfg.ring, PolMode.TE, (cfg.carrier_freq_hz - 0.6 * fsr, cfg.carrier_freq_hz + 0.6 * fsr)
    )
    fwhm = coupling_fwhm_hz(cfg.ring.t, cfg.ring.a, fsr)
    dist = min((abs(r - cfg.carrier_freq_hz) for r in res), default=math.inf)
    if dist > fwhm:
        warnings.warn(
            f"carrier is {dist / 1e9:.3f} GHz from the nearest TE resonance "
            f"(> FWHM {fwhm / 1e9:.3f} GHz); the generator is misaligned",
            stacklevel=3,
        )


def simulate_ossb(cfg: OssbConfig) -> OssbReport:
    """Run the single-sideband generator chain.

    Carrier -> intensity modulator (double sideband) -> ring drop port
    -> optional polarizer.  OCSR is the carrier-to-selected-sideband power
    ratio in dB; suppression is the selected-to-rejected sideband ratio,
    both on the same (projected, if a polarizer is present) line set.
    """
    _warn_if_carrier_off_resonance(cfg)

    carrier = cw_carrier(cfg.carrier_freq_hz, cfg.carrier_power_w, cfg.launch_angle_rad)
    dsb = intensity_modulate(carrier, cfg.drive)
    dropped = _apply_drop(cfg.ring, dsb)

    projected = None
    measured = dropped
    if cfg.polarizer_theta is not None:
        mat = polarizer_matrix(cfg.polarizer_theta)
        projected = dropped.map_fields(lambda _f, v: apply_jones(mat, v))
        measured = projected

    f_rf = cfg.drive.rf_freq_hz
    line_c = measured.line_at(cfg.carrier_freq_hz)
    line_up = measured.line_at(cfg.carrier_freq_hz + f_rf)
    line_lo = measured.line_at(cfg.carrier_freq_hz - f_rf)
    if line_c is None or line_up is None or line_lo is None:
        raise ValueError("zero sideband power: OCSR is undefined (is mod_index_rad zero?)")

    p_c, p_up, p_lo = line_c.power_w, line_up.power_w, line_lo.power_w
    if p_up >= p_lo:
        selected, p_sel, p_rej = "upper", p_up, p_lo
    else:
        selected, p_sel, p_rej = "lower", p_lo, p_up
    if p_sel <= 0.0:
        raise ValueError("zero sideband power: OCSR is undefined")

    return OssbReport(
        drop_spectrum=dropped,
        projected_spectrum=projected,
        ocsr_db=10.0 * math.log10(p_c / p_sel),
        unused_sideband_suppression_db=10.0 * math.log10(p_sel / max(p_rej, 1e-300)),
        selected_sideband=selected,
        carrier_power_w=p_c,
        selected_sideband_power_w=p_sel,
    )


def project_field(spec: OpticalSpectrum, theta: "PolarizerAngle | float") -> np.ndarray:
    """Scalar field along the polarizer axis, one complex amplitude per line.

    The squared magnitude of each output equals the closed-form projected
    intensity for that line.
    """
    th = theta.theta_rad if isinstance(theta, PolarizerAngle) else float(theta)
    axis_te, axis_tm = math.sin(th), math.cos(th)
    return np.array(
        [axis_te * ln.field.e_te + axis_tm * ln.field.e_tm for ln in spec.lines],
        dtype=complex,
    )


# ---------------------------------------------------------------------------
# Photodetection
# ---------------------------------------------------------------------------

def _beat_sum(spec: OpticalSpectrum, rf_freq_hz: float, pols: tuple[PolMode, ...]) -> complex:
    freqs = spec.freqs
    total = 0.0 + 0.0j
    for i, ln in enumerate(spec.lines):
        target = ln.freq_hz + rf_freq_hz
        j = int(np.searchsorted(freqs, target))
        for cand in (j - 1, j):
            if 0 <= cand < len(freqs) and abs(freqs[cand] - target) <= PAIR_TOL_HZ:
                partner = spec.lines[cand]
                for pol in pols:
                    total += np.conj(ln.field.component(pol)) * partner.field.component(pol)
                break
    return complex(total)


def photodetect(
    spec: OpticalSpectrum, rf_freq_hz: float, responsivity_a_per_w: float = 1.0
) -> complex:
    """Complex beat amplitude [A] of the photocurrent at ``rf_freq_hz``.

    Sums ``E*(f) E(f + f_RF)`` over line pairs whose spacing matches the RF
    frequency within 1 kHz, separately per polarization (orthogonal
    components produce no interference term).  No pairs means zero.
    """
    if rf_freq_hz <= 0:
        raise ValueError("rf_freq_hz must be positive")
    return responsivity_a_per_w * _beat_sum(spec, rf_freq_hz, (PolMode.TE, PolMode.TM))


def photodetect_per_pol(
    spec: OpticalSpectrum, rf_freq_hz: float, responsivity_a_per_w: float = 1.0
) -> dict[PolMode, complex]:
    """Per-polarization beat amplitudes; their sum is :func:`photodetect`."""
    if rf_freq_hz <= 0:
        raise ValueError("rf_freq_hz must be positive")
    return {
        pol: responsivity_a_per_w * _beat_sum(spec, rf_freq_hz, (pol,))
        for pol in PolMode
    }


# ---------------------------------------------------------------------------
# RF equalizer
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EqualizerConfig:
    """Dual-channel RF equalizer configuration.

    ``input_angle_rad`` is the launch polarization measured from the TE axis,
    so the TE channel carries cos^2 and the TM channel sin^2 of the optical
    power.  The RF grid must be strictly increasing and positive.
    """

    ring: RingModel
    carrier_freq_hz: float
    carrier_power_w: float
    input_angle_rad: float
    rf_grid_hz: tuple[float, ...]
    mod_index_rad: float = 0.2
    pd_responsivity_a_per_w: float = 1.0

    def __post_init__(self) -> None:
        grid = np.asarray(self.rf_grid_hz, dtype=float)
        if grid.size == 0:
            raise ValueError("rf_grid_hz must not be empty")
        if grid[0] <= 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("rf_grid_hz must be strictly increasing and positive")
        object.__setattr__(self, "rf_grid_hz", tuple(float(f) for f in grid))


@dataclass(frozen=True)
class RfResponse:
    """Sampled |S21| response: one dB point per RF grid frequency."""

    rf_hz: tuple[float, ...]
    s21_db: tuple[float, ...]
    reference_beat_a: float  # beat amplitude that maps to 0 dB

    @classmethod
    def from_beats(
        cls, rf_hz: Sequence[float], beats: Sequence[complex], reference: float | None = None
    ) -> "RfResponse":
        mags = np.abs(np.asarray(beats, dtype=complex))
        ref = float(np.max(mags)) if reference is None else float(reference)
        if ref <= 0:
            raise ValueError("response is identically zero; no reference available")
        floor = 1e-20 * ref  # keeps the dB scale finite on exact nulls
        s21 = 20.0 * np.log10(np.maximum(mags, floor) / ref)
        return cls(tuple(float(f) for f in rf_hz), tuple(float(v) for v in s21), ref)


def _equalizer_spectrum(cfg: EqualizerConfig, rf_freq_hz: float) -> OpticalSpectrum:
    carrier = cw_carrier(cfg.carrier_freq_hz, cfg.carrier_power_w, cfg.input_angle_rad)
    drive = ModulatorDrive(rf_freq_hz=rf_freq_hz, mod_index_rad=cfg.mod_index_rad)
    return _apply_through(cfg.ring, phase_modulate(carrier, drive))


def equalizer_beat(cfg: EqualizerConfig, rf_freq_hz: float) -> complex:
    """Photocurrent beat amplitude at one RF frequency (one S21 sample)."""
    return photodetect(
        _equalizer_spectrum(cfg, rf_freq_hz), rf_freq_hz, cfg.pd_responsivity_a_per_w
    )


def simulate_equalizer(cfg: EqualizerConfig, reference: float | None = None) -> RfResponse:
    """S21 response over the configured RF grid.

    Each grid point is independent: the carrier is phase-modulated at that
    RF frequency, filtered by the through port, and photodetected.  The
    default 0 dB reference is the grid maximum.
    """
    beats = [equalizer_beat(cfg, f) for f in cfg.rf_grid_hz]
    return RfResponse.from_beats(cfg.rf_grid_hz, beats, reference)


def default_rf_grid(
    ring: RingModel, carrier_freq_hz: float, points: int = 201, pad_fwhms: float = 5.0
) -> tuple[float, ...]:
    """RF grid spanning both passbands plus a surrounding margin in linewidths."""
    centers = [
        _nearest_resonance_distance(ring, pol, carrier_freq_hz) for pol in PolMode
    ]
    fwhm = coupling_fwhm_hz(ring.t, ring.a, min(ring.fsr_hint.te, ring.fsr_hint.tm))
    lo = max(min(centers) - pad_fwhms * fwhm, fwhm * 0.1)
    hi = max(centers) + pad_fwhms * fwhm
    return tuple(np.linspace(lo, hi, points))


def _nearest_resonance_distance(ring: RingModel, pol: PolMode, f: float) -> float:
    fsr = ring.fsr_hint[pol]
    res = find_resonances(ring, pol, (f - 1.1 * fsr, f + 1.1 * fsr))
    if not res:
        raise ValueError(f"no {pol.value} resonance within one FSR of {f}")
    return min(abs(r - f) for r in res)


@dataclass(frozen=True)
class ThetaExtinction:
    theta_rad: float
    er_db: float


@dataclass(frozen=True)
class PassbandMetrics:
    """Peak position, half-power width, and peak beat of one RF passband."""

    center_hz: float
    bw3db_hz: float
    peak_beat_a: float


def passband_metrics(cfg: EqualizerConfig, pol: PolMode) -> PassbandMetrics:
    """Center frequency and 3 dB (half-power) bandwidth of one passband.

    Measured on the polarization-isolated response, so the other channel's
    floor cannot skew the crossing search.  The width is found by bisection
    on the continuous beat magnitude, not on a sampled grid.
    """
    fwhm = coupling_fwhm_hz(cfg.ring.t, cfg.ring.a, cfg.ring.fsr_hint[pol])
    dist = _nearest_resonance_distance(cfg.ring, pol, cfg.carrier_freq_hz)
    center, peak = _refine_passband_peak(cfg, pol, dist, 3.0 * fwhm)

    iso = replace(
        cfg,
        input_angle_rad=0.0 if pol is PolMode.TE else 0.5 * math.pi,
        carrier_power_w=1.0,
    )
    target = peak / math.sqrt(2.0)

    def excess(f):
        return abs(equalizer_beat(iso, f)) - target

    width = 0.0
    for sign in (+1.0, -1.0):
        step = 0.25 * fwhm
        prev, cur = center, center + sign * step
        while excess(cur) > 0.0:
            prev = cur
            step *= 2.0
            cur = center + sign * (abs(cur - center) + step)
            if abs(cur - center) > 25.0 * fwhm:
                raise ValueError("half-power point not found near the passband")
        crossing = brentq(excess, min(prev, cur), max(prev, cur), xtol=1.0, rtol=1e-13)
        width += abs(crossing - center)
    return PassbandMetrics(center_hz=center, bw3db_hz=width, peak_beat_a=peak)


def _refine_passband_peak(
    cfg: EqualizerConfig, pol: PolMode, center_guess_hz: float, half_span_hz: float
) -> tuple[float, float]:
    """Locate the per-polarization passband peak near a geometric guess.

    Returns (peak RF frequency, per-unit-input-angle beat magnitude), i.e.
    the beat of a pure-polarization launch at unit power.
    """
    iso = replace(
        cfg,
        input_angle_rad=0.0 if pol is PolMode.TE else 0.5 * math.pi,
        carrier_power_w=1.0,
    )

    def neg_mag(f):
        return -abs(equalizer_beat(iso, f))

    lo = max(center_guess_hz - half_span_hz, 1.0)
    hi = center_guess_hz + half_span_hz
    res = minimize_scalar(neg_mag, bounds=(lo, hi), method="bounded", options={"xatol": 10.0})
    return float(res.x), float(-res.fun)


def equalizer_er_curve(
    cfg: EqualizerConfig, theta_list_rad: Sequence[float]
) -> list[ThetaExtinction]:
    """Extinction ratio between the TE and TM passbands versus input angle.

    ER compares the peak beat of each passband's own polarization channel on
    a power-dB scale (the beat amplitude is proportional to the optical
    power in that channel): ``ER_db = 10*log10(|I_te,peak| / |I_tm,peak|)``,
    which follows ``cot^2(theta)`` for symmetric notches.  The passbands
    must be spectrally resolvable: a carrier equidistant from both
    resonances within one linewidth is rejected.
    """
    fwhm = coupling_fwhm_hz(cfg.ring.t, cfg.ring.a, min(cfg.ring.fsr_hint.te, cfg.ring.fsr_hint.tm))
    d_te = _nearest_resonance_distance(cfg.ring, PolMode.TE, cfg.carrier_freq_hz)
    d_tm = _nearest_resonance_distance(cfg.ring, PolMode.TM, cfg.carrier_freq_hz)
    if abs(d_te - d_tm) <= fwhm:
        raise ValueError(
            f"passbands are unresolvable: TE and TM offsets differ by "
            f"{abs(d_te - d_tm):.3e} Hz (< FWHM {fwhm:.3e} Hz)"
        )

    span = max(3.0 * fwhm, 0.45 * abs(d_te - d_tm))
    _, peak_te = _refine_passband_peak(cfg, PolMode.TE, d_te, span)
    _, peak_tm = _refine_passband_peak(cfg, PolMode.TM, d_tm, span)

    out = []
    for theta in theta_list_rad:
        c, s = math.cos(theta), math.sin(theta)
        if abs(c) < 1e-12 or abs(s) < 1e-12:
            raise ValueError("theta must lie strictly between 0 and 90 degrees")
        er = (c * c * peak_te) / (s * s * peak_tm)
        out.append(ThetaExtinction(theta_rad=float(theta), er_db=10.0 * math.log10(er)))
    return out


@dataclass(frozen=True)
class TrackingPoint:
    offset_hz: float
    f_center_te_hz: float
    f_center_tm_hz: float


def passband_center_tracking(
    cfg: EqualizerConfig, carrier_offsets_hz: Sequence[float]
) -> list[TrackingPoint]:
    """Passband center frequencies as the carrier is detuned.

    Each center equals the carrier-to-resonance distance of its
    polarization, so a resonance above the carrier yields slope -1 of
    center versus carrier offset (and +1 below).  Offsets must keep the
    carrier strictly between its neighbouring resonances.
    """
    fwhm = coupling_fwhm_hz(cfg.ring.t, cfg.ring.a, min(cfg.ring.fsr_hint.te, cfg.ring.fsr_hint.tm))
    out = []
    for off in carrier_offsets_hz:
        shifted = replace(cfg, carrier_freq_hz=cfg.carrier_freq_hz + float(off))
        centers = {}
        for pol in PolMode:
            dist = _nearest_resonance_distance(shifted.ring, pol, shifted.carrier_freq_hz)
            if dist < 2.0 * fwhm:
                raise ValueError(
                    f"offset {off:.3e} Hz pushes the carrier within two linewidths of a "
                    f"{pol.value} resonance"
                )
            centers[pol], _ = _refine_passband_peak(shifted, pol, dist, 3.0 * fwhm)
        out.append(
            TrackingPoint(
                offset_hz=float(off),
                f_center_te_hz=centers[PolMode.TE],
                f_center_tm_hz=centers[PolMode.TM],
            )
        )
    return out
