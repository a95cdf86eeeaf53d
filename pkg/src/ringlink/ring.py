"""Add-drop micro-ring resonator model with separate TE and TM resonance combs.

The ring is a symmetric add-drop resonator described by a self-coupling
amplitude ``t`` (identical at both couplers), the cross-coupling amplitude
``k = sqrt(1 - t^2)``, and the round-trip amplitude transmission ``a``.
Each polarization mode carries its own single-pass phase function, so the
TE and TM resonance combs can have different anchor frequencies, free
spectral ranges, and thermal tuning rates.

Two parameterizations are supported:

* physical: ring radius and per-polarization effective indices, from which
  the phase walk ``phi(f) = 2*pi*f*n_eff*L/c`` follows directly;
* spectral: anchor resonance frequency and FSR per polarization, which is
  the robust path when a measured device is being reproduced (the TE/TM
  resonance interval is the residual of a huge index walk modulo the FSR
  and is hypersensitive to the 4th decimal of ``n_eff``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "C_VACUUM",
    "DEFAULT_ROUND_TRIP_A",
    "PolMode",
    "PerPol",
    "PhysicalRingParams",
    "SpectralRingParams",
    "RingModel",
    "ResonanceMetrics",
    "ModeInterval",
    "ring_from_physical",
    "ring_from_spectral",
    "drop_amplitude",
    "through_amplitude",
    "drop_transfer",
    "through_transfer",
    "find_resonances",
    "resonance_metrics",
    "mode_interval",
    "at_temperature",
    "coupling_fwhm_hz",
    "solve_coupling_from_fwhm",
]

C_VACUUM = 299792458.0  # speed of light in vacuum [m/s]

# Default round-trip amplitude transmission used when only a target FWHM is
# given and (t, a) must be disambiguated: one equation, two unknowns, so `a`
# is pinned at a value consistent with a low-loss high-Q platform and `t` is
# solved numerically.
DEFAULT_ROUND_TRIP_A = 0.9982


class PolMode(Enum):
    """Waveguide polarization mode; every per-polarization quantity is indexed by this."""

    TE = "te"
    TM = "tm"


@dataclass(frozen=True)
class PerPol:
    """A pair of floats indexed by :class:`PolMode`."""

    te: float
    tm: float

    @classmethod
    def uniform(cls, value: float) -> "PerPol":
        return cls(float(value), float(value))

    def __getitem__(self, pol: PolMode) -> float:
        return self.te if pol is PolMode.TE else self.tm


@dataclass(frozen=True)
class PhysicalRingParams:
    """Geometric/material description of the ring.

    Parameters
    ----------
    radius_m : float
        Ring radius [m].
    n_eff : PerPol
        Effective refractive index per polarization at ``wavelength_ref_m``.
    t : float
        Self-coupling amplitude, 0 <= t < 1.
    a : float
        Round-trip amplitude transmission, 0 < a <= 1.
    dn_dlambda : PerPol
        First-order dispersion of the effective index [1/m]; default 0.
        With zero dispersion the same index sets both the phase walk and
        the FSR.
    wavelength_ref_m : float
        Wavelength at which ``n_eff`` is quoted [m].
    t_ref_c : float
        Chip temperature at which the phase model is anchored [degC].
    thermal_rate_hz_per_c : PerPol
        Resonance redshift rate [Hz/degC]; positive rates shift the comb to
        lower optical frequency as the chip heats.
    """

    radius_m: float
    n_eff: PerPol
    t: float
    a: float
    dn_dlambda: PerPol = PerPol(0.0, 0.0)
    wavelength_ref_m: float = 1.55e-6
    t_ref_c: float = 25.0
    thermal_rate_hz_per_c: PerPol = PerPol(0.0, 0.0)

    def __post_init__(self) -> None:
        if self.radius_m <= 0:
            raise ValueError(f"radius_m must be positive, got {self.radius_m}")
        for pol in PolMode:
            if self.n_eff[pol] < 1.0:
                raise ValueError(f"n_eff[{pol.value}] must be >= 1, got {self.n_eff[pol]}")
        _check_coupling(self.t, self.a)
        if self.wavelength_ref_m <= 0:
            raise ValueError("wavelength_ref_m must be positive")


@dataclass(frozen=True)
class SpectralRingParams:
    """Spectral description of the ring: anchor resonance and FSR per polarization.

    Exactly one of ``(t, a)`` or ``fwhm_hz`` must be supplied.  When only the
    drop-port FWHM is given, the couplings are solved with ``a`` pinned at
    :data:`DEFAULT_ROUND_TRIP_A` (see :func:`solve_coupling_from_fwhm`).
    """

    f0_hz: PerPol
    fsr_hz: PerPol
    t: float | None = None
    a: float | None = None
    fwhm_hz: float | None = None
    t_ref_c: float = 25.0
    thermal_rate_hz_per_c: PerPol = PerPol(0.0, 0.0)

    def __post_init__(self) -> None:
        for pol in PolMode:
            if self.f0_hz[pol] <= 0:
                raise ValueError(f"f0_hz[{pol.value}] must be positive")
            if self.fsr_hz[pol] <= 0:
                raise ValueError(f"fsr_hz[{pol.value}] must be positive")
        has_ta = self.t is not None or self.a is not None
        if has_ta and self.fwhm_hz is not None:
            raise ValueError("give either coupling (t, a) or fwhm_hz, not both")
        if not has_ta and self.fwhm_hz is None:
            raise ValueError("one of coupling (t, a) or fwhm_hz is required")
        if has_ta:
            if self.t is None or self.a is None:
                raise ValueError("both t and a are required when either is given")
            _check_coupling(self.t, self.a)
        else:
            fsr_min = min(self.fsr_hz.te, self.fsr_hz.tm)
            if not 0 < self.fwhm_hz < fsr_min:
                raise ValueError(
                    f"fwhm_hz={self.fwhm_hz} is infeasible: must lie in (0, fsr)"
                )


def _check_coupling(t: float, a: float) -> None:
    if not 0.0 <= t < 1.0:
        raise ValueError(f"self-coupling t must satisfy 0 <= t < 1, got {t}")
    if not 0.0 < a <= 1.0:
        raise ValueError(f"round-trip transmission a must satisfy 0 < a <= 1, got {a}")


PhaseFn = Callable[[PolMode, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class RingModel:
    """Canonical ring model: shared couplings plus per-polarization phase functions.

    ``base_phase(pol, f)`` is the single-pass phase at the reference
    temperature; it must be strictly increasing in frequency.  Evaluating the
    model at a different temperature shifts each comb rigidly to lower
    frequency by ``thermal_rate * (T - T_ref)``.
    """

    t: float
    a: float
    base_phase: PhaseFn
    fsr_hint: PerPol
    thermal_rate_hz_per_c: PerPol = PerPol(0.0, 0.0)
    t_ref_c: float = 25.0
    temperature_c: float = 25.0

    def __post_init__(self) -> None:
        _check_coupling(self.t, self.a)
        for pol in PolMode:
            if self.fsr_hint[pol] <= 0:
                raise ValueError("fsr_hint must be positive for both polarizations")

    @property
    def k(self) -> float:
        """Cross-coupling amplitude, k = sqrt(1 - t^2) (lossless coupler)."""
        return math.sqrt(1.0 - self.t * self.t)

    def single_pass_phase(self, pol: PolMode, f):
        """Single-pass phase [rad] at the model's evaluation temperature."""
        shift = self.thermal_rate_hz_per_c[pol] * (self.temperature_c - self.t_ref_c)
        return self.base_phase(pol, np.asarray(f, dtype=float) + shift)


def ring_from_physical(p: PhysicalRingParams) -> RingModel:
    """Build a :class:`RingModel` from geometry and effective indices.

    The phase walk is ``phi(f) = 2*pi*f*n(lambda(f))*L/c`` with ``L = 2*pi*R``
    and ``n(lambda) = n_eff + dn_dlambda*(lambda - lambda_ref)``.  The FSR
    hint used for numeric bracketing is ``c/(n_g*L)`` with the group index
    ``n_g = n_eff - lambda_ref*dn_dlambda``.
    """
    circumference = 2.0 * math.pi * p.radius_m

    def base_phase(pol: PolMode, f: np.ndarray) -> np.ndarray:
        lam = C_VACUUM / f
        n = p.n_eff[pol] + p.dn_dlambda[pol] * (lam - p.wavelength_ref_m)
        return 2.0 * math.pi * f * n * circumference / C_VACUUM

    hints = {}
    for pol in PolMode:
        n_g = p.n_eff[pol] - p.wavelength_ref_m * p.dn_dlambda[pol]
        if n_g <= 0:
            raise ValueError(f"group index for {pol.value} is non-positive; check dn_dlambda")
        hints[pol] = C_VACUUM / (n_g * circumference)

    return RingModel(
        t=p.t,
        a=p.a,
        base_phase=base_phase,
        fsr_hint=PerPol(hints[PolMode.TE], hints[PolMode.TM]),
        thermal_rate_hz_per_c=p.thermal_rate_hz_per_c,
        t_ref_c=p.t_ref_c,
        temperature_c=p.t_ref_c,
    )


def ring_from_spectral(p: SpectralRingParams) -> RingModel:
    """Build a :class:`RingModel` anchored at measured resonance frequencies.

    The phase is ``phi(f) = 2*pi*(f - f0)/fsr`` per polarization, so ``f0``
    is exactly resonant.  If ``fwhm_hz`` was given instead of couplings,
    ``(t, a)`` are solved via :func:`solve_coupling_from_fwhm` against the
    narrower of the two FSRs, and both combs share the solved couplings.
    """
    if p.fwhm_hz is not None:
        fsr_ref = min(p.fsr_hz.te, p.fsr_hz.tm)
        t, a = solve_coupling_from_fwhm(p.fwhm_hz, fsr_ref)
    else:
        t, a = p.t, p.a

    def base_phase(pol: PolMode, f: np.ndarray) -> np.ndarray:
        return 2.0 * math.pi * (f - p.f0_hz[pol]) / p.fsr_hz[pol]

    return RingModel(
        t=t,
        a=a,
        base_phase=base_phase,
        fsr_hint=p.fsr_hz,
        thermal_rate_hz_per_c=p.thermal_rate_hz_per_c,
        t_ref_c=p.t_ref_c,
        temperature_c=p.t_ref_c,
    )


# ---------------------------------------------------------------------------
# Complex transfer functions
# ---------------------------------------------------------------------------

def drop_amplitude(t: float, a: float, phi):
    """Drop-port complex amplitude at single-pass phase ``phi``.

    ``D = -k^2 * sqrt(a) * exp(i*phi/2) / (1 - t^2 * a * exp(i*phi))``

    The half-phase factor is kept literally: it alternates the drop-port
    sign between adjacent resonances but never affects magnitudes.
    """
    phi = np.asarray(phi, dtype=float)
    k2 = 1.0 - t * t
    return -k2 * math.sqrt(a) * np.exp(0.5j * phi) / (1.0 - t * t * a * np.exp(1j * phi))


def through_amplitude(t: float, a: float, phi):
    """Through-port complex amplitude, ``T = t*(1 - a*e^{i*phi}) / (1 - t^2*a*e^{i*phi})``."""
    phi = np.asarray(phi, dtype=float)
    loop = a * np.exp(1j * phi)
    return t * (1.0 - loop) / (1.0 - t * t * loop)


def _scalarize(value, f):
    if np.ndim(f) == 0:
        return complex(value)
    return value


def drop_transfer(m: RingModel, pol: PolMode, f):
    """Drop-port complex transfer at optical frequency ``f`` [Hz] (scalar or array)."""
    if np.any(np.asarray(f) <= 0):
        raise ValueError("optical frequency must be positive")
    out = drop_amplitude(m.t, m.a, m.single_pass_phase(pol, f))
    return _scalarize(out, f)


def through_transfer(m: RingModel, pol: PolMode, f):
    """Through-port complex transfer at optical frequency ``f`` [Hz] (scalar or array)."""
    if np.any(np.asarray(f) <= 0):
        raise ValueError("optical frequency must be positive")
    out = through_amplitude(m.t, m.a, m.single_pass_phase(pol, f))
    return _scalarize(out, f)


# ---------------------------------------------------------------------------
# Resonance geometry
# ---------------------------------------------------------------------------

def find_resonances(m: RingModel, pol: PolMode, band: Sequence[float]) -> list[float]:
    """All resonance frequencies of ``pol`` inside ``band = (f_lo, f_hi)``, ascending.

    Resonances are the roots of ``sin(phi/2)`` (i.e. ``phi = 0 mod 2*pi``),
    bracketed on a grid of 32 points per FSR and refined by bisection plus
    Newton iteration to a relative tolerance of 1e-12.  A degenerate or
    rootless band returns an empty list.
    """
    f_lo, f_hi = float(band[0]), float(band[1])
    if not f_hi > f_lo or f_lo <= 0:
        return []

    fsr = m.fsr_hint[pol]
    n_pts = max(int(math.ceil((f_hi - f_lo) / fsr * 32.0)), 8) + 1
    grid = np.linspace(f_lo, f_hi, n_pts)

    def g(f):
        return np.sin(0.5 * m.single_pass_phase(pol, f))

    vals = g(grid)
    roots: list[float] = []
    for i in range(n_pts - 1):
        lo, hi = grid[i], grid[i + 1]
        glo, ghi = vals[i], vals[i + 1]
        if glo == 0.0:
            roots.append(float(lo))
            continue
        if ghi == 0.0:
            continue  # picked up as the left endpoint of the next cell
        if (glo < 0.0) == (ghi < 0.0):
            continue
        roots.append(_refine_root(g, float(lo), float(hi)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))

    # drop duplicates from roots landing on shared cell edges
    out: list[float] = []
    for r in sorted(roots):
        if not out or r - out[-1] > 0.25 * fsr:
            out.append(r)
    return [r for r in out if f_lo <= r <= f_hi]


def _refine_root(g, lo: float, hi: float) -> float:
    """Bisection to a narrow bracket, then Newton with a numeric derivative."""
    glo = g(lo)
    scale = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0:
            return mid
        if (glo < 0.0) != (gm < 0.0):
            hi = mid
        else:
            lo, glo = mid, gm
        if hi - lo <= 1e-9 * scale:
            break

    x = 0.5 * (lo + hi)
    h = max(1e-10 * scale, 1.0)
    for _ in range(60):
        gx = g(x)
        dg = (g(x + h) - g(x - h)) / (2.0 * h)
        if dg == 0.0:
            break
        x_next = x - gx / dg
        if abs(x_next - x) <= 1e-13 * abs(x):
            x = x_next
            break
        x = x_next
    return float(x)


@dataclass(frozen=True)
class ResonanceMetrics:
    """Scalar figures of merit of one resonance.

    ``drop_loss_db`` is the on-resonance drop transmission in dB (<= 0);
    ``notch_depth_db`` is the through-port anti-resonance-to-resonance
    contrast in dB (>= 0).
    """

    fwhm_hz: float
    q: float
    bw20db_hz: float
    notch_depth_db: float
    drop_loss_db: float


def resonance_metrics(m: RingModel, pol: PolMode, f0: float) -> ResonanceMetrics:
    """FWHM, Q, -20 dB bandwidth and port contrasts at the resonance ``f0``.

    ``f0`` must be a resonance of ``pol`` (phase within 1e-6 rad of a comb
    line); widths are found numerically on the analytic drop-port power
    curve.
    """
    phi0 = float(m.single_pass_phase(pol, f0))
    if abs(math.sin(0.5 * phi0)) > 1e-6:
        raise ValueError(
            f"f0={f0} is not a resonance of {pol.value}: single-pass phase is "
            f"{phi0:.6e} rad away from the comb"
        )

    fsr = m.fsr_hint[pol]
    peak = abs(drop_transfer(m, pol, f0)) ** 2

    fwhm = _width_at_level(m, pol, f0, 0.5 * peak, fsr)
    bw20 = _width_at_level(m, pol, f0, 0.01 * peak, fsr)

    t_res = abs(through_transfer(m, pol, f0)) ** 2
    t_anti = abs(through_transfer(m, pol, f0 + 0.5 * fsr)) ** 2
    notch_db = 10.0 * math.log10(t_anti / t_res) if t_res > 0 else math.inf

    return ResonanceMetrics(
        fwhm_hz=fwhm,
        q=f0 / fwhm,
        bw20db_hz=bw20,
        notch_depth_db=notch_db,
        drop_loss_db=10.0 * math.log10(peak),
    )


def _width_at_level(m: RingModel, pol: PolMode, f0: float, level: float, fsr: float) -> float:
    """Full width of |D|^2 around f0 at an absolute power ``level``."""

    def excess(f):
        return abs(drop_transfer(m, pol, f)) ** 2 - level

    est = coupling_fwhm_hz(m.t, m.a, fsr)
    width = 0.0
    for sign in (+1.0, -1.0):
        step = max(0.25 * est, 1.0)
        prev = f0
        cur = f0 + sign * step
        while excess(cur) > 0.0:
            prev = cur
            step *= 2.0
            cur = f0 + sign * min(abs(cur - f0) + step, 0.49 * fsr)
            if abs(cur - f0) >= 0.489 * fsr:
                if excess(cur) > 0.0:
                    raise ValueError("level is not reached within half an FSR of f0")
                break
        crossing = brentq(excess, min(prev, cur), max(prev, cur), xtol=1e-6, rtol=1e-14)
        width += abs(crossing - f0)
    return width


@dataclass(frozen=True)
class ModeInterval:
    """Nearest TE/TM resonance pair and the complementary operating frequency."""

    delta_hz: float
    f_te_hz: float
    f_tm_hz: float
    fsr_hz: float
    complement_hz: float  # fsr - delta


def mode_interval(m: RingModel, band: Sequence[float]) -> ModeInterval:
    """Nearest TE-TM resonance spacing within ``band``.

    Also reports ``fsr - delta``: with adjacent combs, RF operation is
    possible at both the direct interval and its FSR complement.
    """
    r_te = find_resonances(m, PolMode.TE, band)
    r_tm = find_resonances(m, PolMode.TM, band)
    if not r_te or not r_tm:
        raise ValueError("band must contain at least one resonance of each polarization")

    te = np.asarray(r_te)
    tm = np.asarray(r_tm)
    d = np.abs(te[:, None] - tm[None, :])
    i, j = np.unravel_index(np.argmin(d), d.shape)

    fsr = 0.5 * (m.fsr_hint.te + m.fsr_hint.tm)
    delta = float(d[i, j])
    return ModeInterval(
        delta_hz=delta,
        f_te_hz=float(te[i]),
        f_tm_hz=float(tm[j]),
        fsr_hz=fsr,
        complement_hz=fsr - delta,
    )


def at_temperature(m: RingModel, temperature_c: float) -> RingModel:
    """Model evaluated at a different chip temperature.

    Each comb shifts rigidly to lower optical frequency by
    ``thermal_rate * (T - T_ref)`` (linear redshift model); ``T = T_ref``
    returns an identical model.
    """
    return replace(m, temperature_c=float(temperature_c))


# ---------------------------------------------------------------------------
# Coupling <-> linewidth
# ---------------------------------------------------------------------------

def coupling_fwhm_hz(t: float, a: float, fsr_hz: float) -> float:
    """Drop-port FWHM implied by couplings (exact for this lineshape).

    The drop power is ``k^4*a / (1 - 2*t^2*a*cos(phi) + (t^2*a)^2)``; its
    numerator is phase-independent, so the half-power points sit exactly
    where the denominator doubles.
    """
    x = t * t * a
    if x <= 0.0:
        return 0.5 * fsr_hz
    c = 1.0 - (1.0 - x) ** 2 / (2.0 * x)
    if c <= -1.0:
        return 0.5 * fsr_hz  # never drops to half: flat, maximally wide response
    return fsr_hz * math.acos(c) / math.pi


def solve_coupling_from_fwhm(
    fwhm_hz: float, fsr_hz: float, a: float = DEFAULT_ROUND_TRIP_A
) -> tuple[float, float]:
    """Solve the self-coupling ``t`` that yields a target drop-port FWHM.

    ``a`` is pinned (tie-break for the one-equation/two-unknown problem) and
    ``t`` is found by root-finding on the exact FWHM expression.  Raises for
    targets below the minimum width reachable with the pinned ``a`` (i.e.
    at ``t -> 1``) or at/above the FSR.
    """
    if not 0.0 < fwhm_hz < fsr_hz:
        raise ValueError(f"fwhm_hz={fwhm_hz} is infeasible: must lie in (0, fsr)")
    _check_coupling(0.0, a)

    x_hi = a * (1.0 - 1e-12)  # t < 1 bound
    w_min = coupling_fwhm_hz(math.sqrt(x_hi / a), a, fsr_hz)
    if fwhm_hz < w_min:
        raise ValueError(
            f"fwhm_hz={fwhm_hz:.6g} is below the {w_min:.6g} Hz minimum for pinned "
            f"a={a}; pass explicit (t, a) instead"
        )

    x_lo = 3.0 - 2.0 * math.sqrt(2.0) + 1e-9  # below this the response never halves

    def err(x):
        return coupling_fwhm_hz(math.sqrt(x / a), a, fsr_hz) - fwhm_hz

    if err(x_lo) < 0.0:
        raise ValueError(f"fwhm_hz={fwhm_hz:.6g} is too wide for this lineshape")
    x = brentq(err, x_lo, x_hi, xtol=1e-15, rtol=8.9e-16)
    return math.sqrt(x / a), a
