"""Ring parameter extraction from sampled transmission traces.

A single resonance is fitted at a time: the model is the magnitude-squared
drop- or through-port transfer with the local phase ``2*pi*(f - f0)/fsr``,
scaled by a free amplitude.  The optimizer is a damped least-squares loop
(Levenberg-style lambda schedule) over the parameters ``(t, a, f0, scale)``,
with the frequency axis reparameterized to units of the FSR around the
initial center for conditioning.

Identifiability: a drop-port power trace with a free amplitude scale
determines only ``t^2 * a`` (the lineshape) and one overall amplitude, so
``(t, a, scale)`` are exactly degenerate along one direction.  Drop-port
fits therefore hold ``a`` at its initial value (the same pinned-``a``
tie-break used when building a ring from a linewidth) and record the
caveat on the result.  Through-port traces separate the numerator and
denominator shapes, so all four parameters stay free there; the classic
undercoupled/overcoupled branch swap is probed from a second symmetric
initial guess, and the alternate branch is attached whenever its residual
is within 1% of the winner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .ring import (
    PerPol,
    PolMode,
    coupling_fwhm_hz,
    drop_amplitude,
    solve_coupling_from_fwhm,
    through_amplitude,
)

__all__ = [
    "Port",
    "MeasuredTrace",
    "FitResult",
    "ThermalRates",
    "initial_guess",
    "fit_resonance",
    "fit_thermal_rates",
    "regress_thermal_rates",
]

_T_BOUNDS = (0.0, 1.0 - 1e-9)
_A_BOUNDS = (1e-6, 1.0)


class Port(Enum):
    THROUGH = "through"
    DROP = "drop"


@dataclass(frozen=True)
class MeasuredTrace:
    """Sampled power transmission of one resonance.

    ``power`` is linear transmission (roughly 0..1); frequencies must be
    strictly increasing and the trace needs at least 20 samples.
    """

    freq_hz: np.ndarray
    power: np.ndarray
    port: Port
    pol: PolMode

    def __post_init__(self) -> None:
        f = np.asarray(self.freq_hz, dtype=float)
        p = np.asarray(self.power, dtype=float)
        if f.shape != p.shape or f.ndim != 1:
            raise ValueError("freq_hz and power must be 1-D arrays of equal length")
        if f.size < 20:
            raise ValueError(f"trace needs >= 20 samples, got {f.size}")
        if np.any(np.diff(f) <= 0):
            raise ValueError("freq_hz must be strictly increasing")
        object.__setattr__(self, "freq_hz", f)
        object.__setattr__(self, "power", p)


@dataclass(frozen=True)
class FitResult:
    """Extracted resonance parameters and diagnostics."""

    t: float
    a: float
    f0_hz: float
    amplitude_scale: float
    rms_residual: float
    fwhm_hz: float
    q: float
    covariance: np.ndarray | None
    n_iterations: int
    converged: bool
    pinned: tuple[str, ...]
    cost_history: tuple[float, ...] = ()  # accepted-step costs, non-increasing
    alternate: "FitResult | None" = None
    identifiability_note: str | None = None


def _model_power(trace_port: Port, t: float, a: float, phi: np.ndarray) -> np.ndarray:
    amp = drop_amplitude(t, a, phi) if trace_port is Port.DROP else through_amplitude(t, a, phi)
    return np.abs(amp) ** 2


def initial_guess(trace: MeasuredTrace, fsr_hz: float) -> tuple[float, float, float, float]:
    """Moment-style starting point ``(t, a, f0, scale)`` for :func:`fit_resonance`.

    ``f0`` comes from the extremum, the linewidth from the half-depth
    crossings, ``(t, a)`` from the linewidth via the pinned-``a`` tie-break,
    and the amplitude scale from the off-resonance baseline (through port)
    or the peak (drop port).
    """
    f, p = trace.freq_hz, trace.power
    n_edge = max(2, f.size // 10)
    baseline = float(np.median(np.concatenate([p[:n_edge], p[-n_edge:]])))

    if trace.port is Port.DROP:
        idx = int(np.argmax(p))
        depth = p[idx] - baseline
    else:
        idx = int(np.argmin(p))
        depth = baseline - p[idx]

    span = float(np.max(p) - np.min(p))
    if span <= 0 or depth < 0.05 * span or idx in (0, f.size - 1):
        raise ValueError("no resolvable extremum in trace")

    f0 = float(f[idx])
    half = baseline + 0.5 * (p[idx] - baseline)
    fwhm = _half_crossing_width(f, p, idx, half, trace.port)

    try:
        t, a = solve_coupling_from_fwhm(fwhm, fsr_hz)
    except ValueError:
        t, a = 0.99999, 0.9982  # target narrower than the tie-break allows; let LM move it

    phi0 = np.array([0.0])
    if trace.port is Port.DROP:
        scale = float(p[idx] / _model_power(Port.DROP, t, a, phi0)[0])
    else:
        phi_edge = 2.0 * math.pi * (f[0] - f0) / fsr_hz
        m_edge = _model_power(Port.THROUGH, t, a, np.array([phi_edge]))[0]
        scale = float(baseline / m_edge) if m_edge > 0 else float(baseline)
    return t, a, f0, max(scale, 1e-12)


def _half_crossing_width(f, p, idx, level, port: Port) -> float:
    above = p > level if port is Port.DROP else p < level
    left = idx
    while left > 0 and above[left - 1]:
        left -= 1
    right = idx
    while right < f.size - 1 and above[right + 1]:
        right += 1
    f_left = _interp_crossing(f, p, left - 1, left, level) if left > 0 else f[0]
    f_right = _interp_crossing(f, p, right, right + 1, level) if right < f.size - 1 else f[-1]
    width = f_right - f_left
    if width <= 0:
        raise ValueError("no resolvable extremum in trace")
    return float(width)


def _interp_crossing(f, p, i, j, level) -> float:
    if p[j] == p[i]:
        return float(f[i])
    frac = (level - p[i]) / (p[j] - p[i])
    return float(f[i] + frac * (f[j] - f[i]))


def fit_resonance(
    trace: MeasuredTrace,
    fsr_hz: float,
    guess: tuple[float, float, float, float] | None = None,
    max_iterations: int = 200,
) -> FitResult:
    """Least-squares fit of ``(t, a, f0, scale)`` against one resonance trace.

    Minimizes ``sum((scale*|H(f_i)|^2 - power_i)^2)`` by damped least
    squares: lambda starts at 1e-3, multiplies by 10 on a rejected step,
    divides by 10 on an accepted one, and iteration stops when the relative
    cost change of an accepted step falls below 1e-12 (or the damping is
    exhausted).  Raises on non-convergence; parameters that end on a bound
    are flagged in ``pinned``.
    """
    if guess is None:
        guess = initial_guess(trace, fsr_hz)
    t0, a0, f0_anchor, s0 = guess
    if not (_T_BOUNDS[0] <= t0 <= _T_BOUNDS[1]) or not (_A_BOUNDS[0] <= a0 <= _A_BOUNDS[1]):
        raise ValueError(f"initial guess (t={t0}, a={a0}) is outside the model bounds")

    primary = _fit_branch(trace, fsr_hz, (t0, a0, f0_anchor, s0), max_iterations)

    # Swapped-branch start for the under/overcoupled ambiguity: exchange the
    # roles of t^2 and a while keeping the loaded linewidth (t^2*a) fixed.
    t_alt = math.sqrt(min(max(a0, _T_BOUNDS[0] + 1e-12), _T_BOUNDS[1] ** 2))
    a_alt = min(max(t0 * t0, _A_BOUNDS[0]), _A_BOUNDS[1])
    try:
        secondary = _fit_branch(trace, fsr_hz, (t_alt, a_alt, f0_anchor, s0), max_iterations)
    except ValueError:
        secondary = None

    best, other = primary, secondary
    if secondary is not None and secondary.rms_residual < primary.rms_residual:
        best, other = secondary, primary

    if trace.port is Port.DROP:
        note = (
            "drop-port trace without absolute depth calibration determines only "
            "t^2*a; round-trip transmission a was held at its initial value"
        )
        best = _with_alternate(best, best.alternate, note)
    if other is not None and _near_degenerate(best, other):
        note = (
            "coupling branches are nearly degenerate (residuals within 1%): "
            "(t, a) are not separately identifiable without absolute depth calibration"
        )
        best = _with_alternate(best, other, note)
    return best


def _near_degenerate(best: FitResult, other: FitResult) -> bool:
    ref = max(best.rms_residual, 1e-300)
    same_params = math.isclose(best.t, other.t, rel_tol=1e-4) and math.isclose(
        best.a, other.a, rel_tol=1e-4
    )
    return not same_params and abs(other.rms_residual - best.rms_residual) / ref < 0.01


def _with_alternate(best: FitResult, other: FitResult, note: str) -> FitResult:
    return FitResult(
        t=best.t,
        a=best.a,
        f0_hz=best.f0_hz,
        amplitude_scale=best.amplitude_scale,
        rms_residual=best.rms_residual,
        fwhm_hz=best.fwhm_hz,
        q=best.q,
        covariance=best.covariance,
        n_iterations=best.n_iterations,
        converged=best.converged,
        pinned=best.pinned,
        cost_history=best.cost_history,
        alternate=other,
        identifiability_note=note,
    )


def _fit_branch(trace, fsr_hz, guess, max_iterations) -> FitResult:
    t0, a0, f0_anchor, s0 = guess
    f = trace.freq_hz
    y = trace.power

    # params p = (t, a, delta, s): delta = (f0 - anchor)/fsr, s = scale/s0;
    # a is frozen at a0 for drop traces (see module docstring)
    lo = np.array([_T_BOUNDS[0], _A_BOUNDS[0], -0.45, 1e-9])
    hi = np.array([_T_BOUNDS[1], _A_BOUNDS[1], 0.45, 1e9])
    if trace.port is Port.DROP:
        lo[1] = hi[1] = a0

    def residuals(p):
        t, a, delta, s = p
        phi = 2.0 * math.pi * ((f - f0_anchor) / fsr_hz - delta)
        return s * s0 * _model_power(trace.port, t, a, phi) - y

    p, cost, n_iter, converged, jtj, history = _levenberg(
        residuals, np.array([t0, a0, 0.0, 1.0]), lo, hi, max_iterations
    )
    if not converged:
        raise ValueError(f"fit did not converge within {max_iterations} iterations")

    t, a, delta, s = p
    pinned = tuple(
        name
        for name, val, b_lo, b_hi in (
            ("t", t, *_T_BOUNDS),
            ("a", a, *_A_BOUNDS),
        )
        if val <= b_lo + 1e-12 or val >= b_hi - 1e-12
    )

    n_free = max(f.size - 4, 1)
    sigma2 = cost / n_free
    cov = None
    try:
        cov = sigma2 * np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        pass

    fwhm = coupling_fwhm_hz(t, a, fsr_hz)
    f0 = f0_anchor + delta * fsr_hz
    return FitResult(
        t=float(t),
        a=float(a),
        f0_hz=float(f0),
        amplitude_scale=float(s * s0),
        rms_residual=math.sqrt(cost / f.size),
        fwhm_hz=fwhm,
        q=f0 / fwhm if fwhm > 0 else math.inf,
        covariance=cov,
        n_iterations=n_iter,
        converged=converged,
        pinned=pinned,
        cost_history=history,
    )


def _levenberg(residuals, p0, lo, hi, max_iterations):
    """Damped least squares: lambda x10 on reject, /10 on accept, bounds clipped."""
    p = np.clip(p0, lo, hi)
    r = residuals(p)
    cost = float(r @ r)
    history = [cost]
    lam = 1e-3
    n_iter = 0
    converged = False
    jtj = None
    stalled = 0

    while n_iter < max_iterations:
        n_iter += 1
        jac = _jacobian(residuals, p, lo, hi)
        jtj = jac.T @ jac
        grad = jac.T @ r

        damped = jtj + lam * np.diag(np.maximum(np.diag(jtj), 1e-30))
        try:
            step = np.linalg.solve(damped, -grad)
        except np.linalg.LinAlgError:
            lam = min(lam * 10.0, 1e12)
            continue

        candidate = np.clip(p + step, lo, hi)
        rc = residuals(candidate)
        cost_c = float(rc @ rc)

        if cost_c <= cost:
            rel_change = (cost - cost_c) / max(cost, 1e-300)
            p, r, cost = candidate, rc, cost_c
            history.append(cost)
            lam = max(lam / 10.0, 1e-14)
            stalled = 0
            if rel_change < 1e-12:
                converged = True
                break
        else:
            lam = min(lam * 10.0, 1e12)
            stalled += 1
            if stalled >= 25:  # damping exhausted: the cost is stationary
                converged = True
                break

    jac = _jacobian(residuals, p, lo, hi)
    jtj = jac.T @ jac
    return p, cost, n_iter, converged, jtj, tuple(history)


def _jacobian(residuals, p, lo, hi):
    n = p.size
    r0 = residuals(p)
    jac = np.empty((r0.size, n))
    for i in range(n):
        h = 1e-7 * max(abs(p[i]), 1e-3)
        p_up, p_dn = p.copy(), p.copy()
        p_up[i] = min(p[i] + h, hi[i])
        p_dn[i] = max(p[i] - h, lo[i])
        denom = p_up[i] - p_dn[i]
        if denom == 0.0:
            jac[:, i] = 0.0
        else:
            jac[:, i] = (residuals(p_up) - residuals(p_dn)) / denom
    return jac


# ---------------------------------------------------------------------------
# Thermal tuning rates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThermalRates:
    """Per-polarization redshift rates [Hz/degC] plus the interval slope.

    Rates are positive for combs that move to lower optical frequency with
    rising temperature; ``interval_slope_hz_per_c = rate_te - rate_tm`` is
    the drift of the TE/TM spacing.
    """

    redshift_rate_hz_per_c: PerPol
    interval_slope_hz_per_c: float


def regress_thermal_rates(
    centers_by_pol: Mapping[PolMode, Sequence[tuple[float, float]]],
) -> ThermalRates:
    """Linear regression of resonance center vs temperature, per polarization.

    Input: ``{pol: [(temperature_c, f0_hz), ...]}`` with at least three
    points and two distinct temperatures per polarization.
    """
    rates: dict[PolMode, float] = {}
    for pol in PolMode:
        pts = list(centers_by_pol.get(pol, ()))
        if len(pts) < 3:
            raise ValueError(f"need >= 3 temperatures for {pol.value}, got {len(pts)}")
        temps = np.array([p[0] for p in pts], dtype=float)
        f0s = np.array([p[1] for p in pts], dtype=float)
        if np.unique(temps).size < 2:
            raise ValueError(f"temperatures for {pol.value} are rank-deficient (all equal)")
        t_c = temps - temps.mean()
        slope = float((t_c @ (f0s - f0s.mean())) / (t_c @ t_c))
        rates[pol] = -slope  # redshift-positive convention
    return ThermalRates(
        redshift_rate_hz_per_c=PerPol(rates[PolMode.TE], rates[PolMode.TM]),
        interval_slope_hz_per_c=rates[PolMode.TE] - rates[PolMode.TM],
    )


def fit_thermal_rates(
    traces_by_temperature: Sequence[tuple[float, MeasuredTrace]], fsr_hz: float
) -> ThermalRates:
    """Extract thermal rates from raw traces taken at several temperatures.

    Each trace is fitted with :func:`fit_resonance`; the recovered centers
    are grouped by polarization and regressed against temperature.
    """
    centers: dict[PolMode, list[tuple[float, float]]] = {pol: [] for pol in PolMode}
    for temp_c, trace in traces_by_temperature:
        result = fit_resonance(trace, fsr_hz)
        centers[trace.pol].append((float(temp_c), result.f0_hz))
    return regress_thermal_rates(centers)
