"""Command-line front-end: JSON experiment configs in, result envelopes out.

Usage::

    ringlink <subcommand> --config <path> --out <path> [--csv]

Subcommands: ``spectrum``, ``ossb``, ``equalizer``, ``fit``, ``sweep-theta``,
``sweep-temp``, ``sweep-carrier``, and ``run`` (dispatches on whichever
experiment section the config contains).

Exit codes: 0 success; 1 config parse/validation error (the message names
the offending key, and no output file is written); 2 domain error from the
model modules, propagated verbatim; 64 unknown subcommand.

Set ``RINGLINK_THREADS`` to evaluate sweep and RF-grid points on a thread
pool; output assembly is ordered by grid index, so results are identical to
a serial run.
"""

from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from .fitting import FitResult, Port, fit_resonance, regress_thermal_rates
from .io import config_sha256, dumps_canonical, load_trace
from .modulation import ModulatorDrive, OpticalSpectrum
from .pipelines import (
    EqualizerConfig,
    OssbConfig,
    default_rf_grid,
    equalizer_beat,
    equalizer_er_curve,
    passband_center_tracking,
    passband_metrics,
    RfResponse,
    simulate_ossb,
)
from .polarization import PolarizerAngle
from .ring import (
    PerPol,
    PhysicalRingParams,
    PolMode,
    RingModel,
    SpectralRingParams,
    at_temperature,
    drop_transfer,
    find_resonances,
    mode_interval,
    resonance_metrics,
    ring_from_physical,
    ring_from_spectral,
    through_transfer,
)

SCHEMA_VERSION = 1
EXPERIMENT_SECTIONS = ("spectrum", "ossb", "equalizer", "fit", "sweep")
SUBCOMMANDS = (
    "run",
    "spectrum",
    "ossb",
    "equalizer",
    "fit",
    "sweep-theta",
    "sweep-temp",
    "sweep-carrier",
)

_USAGE = (
    "usage: ringlink <subcommand> --config <path> --out <path> [--csv]\n"
    "subcommands: " + " | ".join(SUBCOMMANDS) + "\n"
)


class ConfigError(Exception):
    """Config file problems: unreadable, unparseable, or schema violations."""


# ---------------------------------------------------------------------------
# Config parsing helpers
# ---------------------------------------------------------------------------

def _section(config: dict, name: str) -> dict:
    value = config[name]
    if not isinstance(value, dict):
        raise ConfigError(f"section '{name}' must be an object")
    return value


def _get(section: dict, key: str, kind: str, *, ctx: str, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"missing required key '{ctx}.{key}'")
        return default
    value = section[key]
    if kind == "number":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"key '{ctx}.{key}' must be a number")
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"key '{ctx}.{key}' must be an integer")
        return int(value)
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"key '{ctx}.{key}' must be a string")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"key '{ctx}.{key}' must be a boolean")
        return value
    if kind == "list":
        if not isinstance(value, list):
            raise ConfigError(f"key '{ctx}.{key}' must be a list")
        return value
    raise AssertionError(kind)


def _reject_unknown(section: dict, allowed: set[str], ctx: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key '{ctx}.{key}'")


def _per_pol(section: dict, stem_te: str, stem_tm: str, ctx: str, default=None) -> PerPol:
    te = _get(section, stem_te, "number", ctx=ctx, default=default)
    tm = _get(section, stem_tm, "number", ctx=ctx, default=default)
    if te is None or tm is None:
        raise ConfigError(f"missing required key '{ctx}.{stem_te if te is None else stem_tm}'")
    return PerPol(te, tm)


def build_ring(section: dict) -> RingModel:
    """Construct the ring model from the config's ``ring`` section."""
    ctx = "ring"
    kind = _get(section, "kind", "str", ctx=ctx, required=True)
    common = {
        "t_ref_c",
        "thermal_rate_te_hz_per_c",
        "thermal_rate_tm_hz_per_c",
        "temperature_c",
        "kind",
        "t",
        "a",
    }
    t_ref = _get(section, "t_ref_c", "number", ctx=ctx, default=25.0)
    rates = PerPol(
        _get(section, "thermal_rate_te_hz_per_c", "number", ctx=ctx, default=0.0),
        _get(section, "thermal_rate_tm_hz_per_c", "number", ctx=ctx, default=0.0),
    )

    try:
        if kind == "spectral":
            _reject_unknown(
                section,
                common | {"f0_te_hz", "f0_tm_hz", "fsr_te_hz", "fsr_tm_hz", "fsr_hz", "fwhm_hz"},
                ctx,
            )
            if "fsr_hz" in section:
                fsr = PerPol.uniform(_get(section, "fsr_hz", "number", ctx=ctx, required=True))
            else:
                fsr = _per_pol(section, "fsr_te_hz", "fsr_tm_hz", ctx)
            params = SpectralRingParams(
                f0_hz=_per_pol(section, "f0_te_hz", "f0_tm_hz", ctx),
                fsr_hz=fsr,
                t=_get(section, "t", "number", ctx=ctx),
                a=_get(section, "a", "number", ctx=ctx),
                fwhm_hz=_get(section, "fwhm_hz", "number", ctx=ctx),
                t_ref_c=t_ref,
                thermal_rate_hz_per_c=rates,
            )
            model = ring_from_spectral(params)
        elif kind == "physical":
            _reject_unknown(
                section,
                common
                | {
                    "radius_m",
                    "n_eff_te",
                    "n_eff_tm",
                    "dn_dlambda_te_per_m",
                    "dn_dlambda_tm_per_m",
                    "wavelength_ref_m",
                },
                ctx,
            )
            params = PhysicalRingParams(
                radius_m=_get(section, "radius_m", "number", ctx=ctx, required=True),
                n_eff=_per_pol(section, "n_eff_te", "n_eff_tm", ctx),
                t=_get(section, "t", "number", ctx=ctx, required=True),
                a=_get(section, "a", "number", ctx=ctx, required=True),
                dn_dlambda=PerPol(
                    _get(section, "dn_dlambda_te_per_m", "number", ctx=ctx, default=0.0),
                    _get(section, "dn_dlambda_tm_per_m", "number", ctx=ctx, default=0.0),
                ),
                wavelength_ref_m=_get(
                    section, "wavelength_ref_m", "number", ctx=ctx, default=1.55e-6
                ),
                t_ref_c=t_ref,
                thermal_rate_hz_per_c=rates,
            )
            model = ring_from_physical(params)
        else:
            raise ConfigError(f"key 'ring.kind' must be 'spectral' or 'physical', got '{kind}'")
    except ValueError as exc:
        # parameter-range problems in the config are config errors, not domain errors
        raise ConfigError(f"ring section invalid: {exc}") from exc

    temp = _get(section, "temperature_c", "number", ctx=ctx)
    if temp is not None:
        model = at_temperature(model, temp)
    return model


def _parallel_map(fn: Callable, items: Sequence) -> list:
    threads = int(os.environ.get("RINGLINK_THREADS", "1") or "1")
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Experiment runners: each returns (outputs, derived, csv_table)
# ---------------------------------------------------------------------------

def _spectrum_lines(spec: OpticalSpectrum) -> list[dict]:
    return [
        {
            "freq_hz": ln.freq_hz,
            "e_te_re": ln.field.e_te.real,
            "e_te_im": ln.field.e_te.imag,
            "e_tm_re": ln.field.e_tm.real,
            "e_tm_im": ln.field.e_tm.imag,
            "power_w": ln.power_w,
        }
        for ln in spec.lines
    ]


def _run_spectrum(config: dict, ring: RingModel):
    sec = _section(config, "spectrum")
    ctx = "spectrum"
    _reject_unknown(sec, {"port", "pol", "band_lo_hz", "band_hi_hz", "points"}, ctx)
    port = _get(sec, "port", "str", ctx=ctx, default="both")
    pol = _get(sec, "pol", "str", ctx=ctx, default="both")
    lo = _get(sec, "band_lo_hz", "number", ctx=ctx, required=True)
    hi = _get(sec, "band_hi_hz", "number", ctx=ctx, required=True)
    points = _get(sec, "points", "int", ctx=ctx, default=2001)
    if port not in ("drop", "through", "both"):
        raise ConfigError("key 'spectrum.port' must be 'drop', 'through', or 'both'")
    if pol not in ("te", "tm", "both"):
        raise ConfigError("key 'spectrum.pol' must be 'te', 'tm', or 'both'")
    if not hi > lo:
        raise ConfigError("key 'spectrum.band_hi_hz' must exceed band_lo_hz")
    if points < 2:
        raise ConfigError("key 'spectrum.points' must be >= 2")

    pols = [PolMode.TE, PolMode.TM] if pol == "both" else [PolMode(pol)]
    ports = ["drop", "through"] if port == "both" else [port]
    freqs = np.linspace(lo, hi, points)

    curves = []
    for p in pols:
        for prt in ports:
            fn = drop_transfer if prt == "drop" else through_transfer
            power = np.abs(fn(ring, p, freqs)) ** 2
            curves.append({"pol": p.value, "port": prt, "power_linear": list(power)})

    outputs: dict[str, Any] = {"freq_hz": list(freqs), "curves": curves}
    derived: dict[str, Any] = {}
    found: dict[PolMode, list[float]] = {}
    for p in pols:
        res = find_resonances(ring, p, (lo, hi))
        found[p] = res
        outputs[f"resonances_{p.value}_hz"] = res
        if res:
            center = res[int(np.argmin(np.abs(np.asarray(res) - 0.5 * (lo + hi))))]
            metrics = resonance_metrics(ring, p, center)
            derived[f"fwhm_{p.value}_hz"] = metrics.fwhm_hz
            derived[f"q_{p.value}"] = metrics.q
            derived[f"bw20db_{p.value}_hz"] = metrics.bw20db_hz
    if len(pols) == 2 and all(found.get(p) for p in pols):
        interval = mode_interval(ring, (lo, hi))
        derived.update(
            delta_hz=interval.delta_hz,
            f_te_hz=interval.f_te_hz,
            f_tm_hz=interval.f_tm_hz,
            complement_hz=interval.complement_hz,
        )

    columns = ["freq_hz"] + [f"{c['pol']}_{c['port']}_power" for c in curves]
    rows = [
        [freqs[i]] + [c["power_linear"][i] for c in curves] for i in range(len(freqs))
    ]
    return outputs, derived, (columns, rows)


def _ossb_config(sec: dict, ring: RingModel, ctx: str, allow_polarizer: bool = True) -> OssbConfig:
    allowed = {
        "carrier_freq_hz",
        "carrier_power_w",
        "rf_freq_hz",
        "mod_index_rad",
        "bias_rad",
        "max_order",
        "launch_angle_from_te_deg",
    }
    if allow_polarizer:
        allowed = allowed | {"polarizer_angle_from_te_deg"}
    _reject_unknown(sec, allowed, ctx)
    drive = ModulatorDrive(
        rf_freq_hz=_get(sec, "rf_freq_hz", "number", ctx=ctx, required=True),
        mod_index_rad=_get(sec, "mod_index_rad", "number", ctx=ctx, default=0.2),
        bias_rad=_get(sec, "bias_rad", "number", ctx=ctx, default=0.5 * math.pi),
        max_order=_get(sec, "max_order", "int", ctx=ctx),
    )
    theta_deg = _get(sec, "polarizer_angle_from_te_deg", "number", ctx=ctx)
    return OssbConfig(
        ring=ring,
        carrier_freq_hz=_get(sec, "carrier_freq_hz", "number", ctx=ctx, required=True),
        carrier_power_w=_get(sec, "carrier_power_w", "number", ctx=ctx, default=1e-3),
        drive=drive,
        launch_angle_rad=math.radians(
            _get(sec, "launch_angle_from_te_deg", "number", ctx=ctx, default=45.0)
        ),
        polarizer_theta=None if theta_deg is None else PolarizerAngle.from_te_degrees(theta_deg),
    )


def _run_ossb(config: dict, ring: RingModel):
    cfg = _ossb_config(_section(config, "ossb"), ring, "ossb")
    report = simulate_ossb(cfg)
    outputs = {
        "drop_spectrum": _spectrum_lines(report.drop_spectrum),
        "projected_spectrum": (
            None
            if report.projected_spectrum is None
            else _spectrum_lines(report.projected_spectrum)
        ),
    }
    derived = {
        "ocsr_db": report.ocsr_db,
        "suppression_db": report.unused_sideband_suppression_db,
        "selected_sideband": report.selected_sideband,
        "carrier_power_w": report.carrier_power_w,
        "selected_sideband_power_w": report.selected_sideband_power_w,
    }
    columns = ["spectrum", "freq_hz", "e_te_re", "e_te_im", "e_tm_re", "e_tm_im", "power_w"]
    rows = []
    for name, spec in (("drop", report.drop_spectrum), ("projected", report.projected_spectrum)):
        if spec is None:
            continue
        for ln in _spectrum_lines(spec):
            rows.append([name] + [ln[c] for c in columns[1:]])
    return outputs, derived, (columns, rows)


def _equalizer_config(sec: dict, ring: RingModel, ctx: str, require_angle: bool = True) -> EqualizerConfig:
    allowed = {
        "carrier_freq_hz",
        "carrier_power_w",
        "input_angle_from_te_deg",
        "mod_index_rad",
        "pd_responsivity_a_per_w",
        "rf_grid_hz",
        "rf_start_hz",
        "rf_stop_hz",
        "rf_points",
    }
    _reject_unknown(sec, allowed, ctx)
    carrier = _get(sec, "carrier_freq_hz", "number", ctx=ctx, required=True)
    angle_deg = _get(
        sec, "input_angle_from_te_deg", "number", ctx=ctx, required=require_angle, default=45.0
    )

    if "rf_grid_hz" in sec:
        grid = tuple(float(v) for v in _get(sec, "rf_grid_hz", "list", ctx=ctx))
    elif "rf_start_hz" in sec or "rf_stop_hz" in sec:
        start = _get(sec, "rf_start_hz", "number", ctx=ctx, required=True)
        stop = _get(sec, "rf_stop_hz", "number", ctx=ctx, required=True)
        points = _get(sec, "rf_points", "int", ctx=ctx, default=201)
        if not stop > start > 0:
            raise ConfigError(f"key '{ctx}.rf_stop_hz' must exceed a positive rf_start_hz")
        grid = tuple(np.linspace(start, stop, points))
    else:
        points = _get(sec, "rf_points", "int", ctx=ctx, default=201)
        grid = default_rf_grid(ring, carrier, points)

    return EqualizerConfig(
        ring=ring,
        carrier_freq_hz=carrier,
        carrier_power_w=_get(sec, "carrier_power_w", "number", ctx=ctx, default=1e-3),
        input_angle_rad=math.radians(angle_deg),
        rf_grid_hz=grid,
        mod_index_rad=_get(sec, "mod_index_rad", "number", ctx=ctx, default=0.2),
        pd_responsivity_a_per_w=_get(
            sec, "pd_responsivity_a_per_w", "number", ctx=ctx, default=1.0
        ),
    )


def _run_equalizer(config: dict, ring: RingModel):
    cfg = _equalizer_config(_section(config, "equalizer"), ring, "equalizer")
    beats = _parallel_map(lambda f: equalizer_beat(cfg, f), cfg.rf_grid_hz)
    response = RfResponse.from_beats(cfg.rf_grid_hz, beats)

    outputs = {"rf_hz": list(response.rf_hz), "s21_db": list(response.s21_db)}
    derived: dict[str, Any] = {}
    active = []
    for pol, weight in ((PolMode.TE, math.cos(cfg.input_angle_rad)), (PolMode.TM, math.sin(cfg.input_angle_rad))):
        if abs(weight) < 1e-9:
            continue
        metrics = passband_metrics(cfg, pol)
        active.append(pol)
        derived[f"f_center_{pol.value}_hz"] = metrics.center_hz
        derived[f"bw3db_{pol.value}_hz"] = metrics.bw3db_hz
    if len(active) == 2:
        er = equalizer_er_curve(cfg, [cfg.input_angle_rad])
        derived["er_db"] = er[0].er_db

    columns = ["rf_hz", "s21_db"]
    rows = [[f, s] for f, s in zip(response.rf_hz, response.s21_db)]
    return outputs, derived, (columns, rows)


def _run_fit(config: dict, ring: RingModel | None):
    sec = _section(config, "fit")
    ctx = "fit"
    _reject_unknown(sec, {"trace_path", "fsr_hz", "port", "pol"}, ctx)
    trace_path = _get(sec, "trace_path", "str", ctx=ctx, required=True)
    if not Path(trace_path).exists():
        raise ConfigError(f"key 'fit.trace_path' points to a missing file: {trace_path}")

    port_str = _get(sec, "port", "str", ctx=ctx)
    pol_str = _get(sec, "pol", "str", ctx=ctx)
    trace, sidecar = load_trace(
        trace_path,
        port=None if port_str is None else Port(port_str),
        pol=None if pol_str is None else PolMode(pol_str),
    )
    fsr = _get(sec, "fsr_hz", "number", ctx=ctx)
    if fsr is None:
        fsr = sidecar.get("fsr_hz")
        if fsr is None:
            raise ConfigError("missing required key 'fit.fsr_hz' (and no fsr_hz in sidecar)")

    result = fit_resonance(trace, float(fsr))
    outputs = _fit_result_dict(result)
    derived = {"fwhm_hz": result.fwhm_hz, "q": result.q, "t": result.t, "a": result.a}
    columns = ["parameter", "value"]
    rows = [
        ["t", result.t],
        ["a", result.a],
        ["f0_hz", result.f0_hz],
        ["amplitude_scale", result.amplitude_scale],
        ["rms_residual", result.rms_residual],
        ["fwhm_hz", result.fwhm_hz],
        ["q", result.q],
    ]
    return outputs, derived, (columns, rows)


def _fit_result_dict(result: FitResult) -> dict:
    return {
        "t": result.t,
        "a": result.a,
        "f0_hz": result.f0_hz,
        "amplitude_scale": result.amplitude_scale,
        "rms_residual": result.rms_residual,
        "fwhm_hz": result.fwhm_hz,
        "q": result.q,
        "n_iterations": result.n_iterations,
        "converged": result.converged,
        "pinned": list(result.pinned),
        "identifiability_note": result.identifiability_note,
        "covariance": None if result.covariance is None else [list(r) for r in result.covariance],
        "alternate": None if result.alternate is None else _fit_result_dict(result.alternate),
    }


def _sweep_grid(sec: dict, ctx: str, stem: str) -> np.ndarray:
    start = _get(sec, f"{stem}_start" + _SWEEP_UNIT[stem], "number", ctx=ctx, required=True)
    stop = _get(sec, f"{stem}_stop" + _SWEEP_UNIT[stem], "number", ctx=ctx, required=True)
    points = _get(sec, f"{stem}_points", "int", ctx=ctx, required=True)
    if points < 1:
        raise ConfigError(f"key '{ctx}.{stem}_points' must be >= 1")
    if points == 1:
        return np.array([start])
    return np.linspace(start, stop, points)


_SWEEP_UNIT = {"theta": "_deg", "temp": "_c", "offset": "_hz"}


def _run_sweep(config: dict, ring: RingModel):
    sec = _section(config, "sweep")
    ctx = "sweep"
    kind = _get(sec, "kind", "str", ctx=ctx, required=True)
    if kind == "theta":
        return _run_sweep_theta(sec, ring)
    if kind == "temperature":
        return _run_sweep_temp(sec, ring)
    if kind == "carrier":
        return _run_sweep_carrier(sec, ring)
    raise ConfigError("key 'sweep.kind' must be 'theta', 'temperature', or 'carrier'")


def _run_sweep_theta(sec: dict, ring: RingModel):
    ctx = "sweep"
    _reject_unknown(
        sec,
        {"kind", "pipeline", "theta_start_deg", "theta_stop_deg", "theta_points", "base"},
        ctx,
    )
    pipeline = _get(sec, "pipeline", "str", ctx=ctx, required=True)
    thetas = _sweep_grid(sec, ctx, "theta")
    base = sec.get("base")
    if not isinstance(base, dict):
        raise ConfigError("missing required key 'sweep.base'")

    if pipeline == "ossb":
        cfg0 = _ossb_config(base, ring, "sweep.base", allow_polarizer=False)

        def one(theta_deg: float) -> dict:
            cfg = replace(cfg0, polarizer_theta=PolarizerAngle.from_te_degrees(theta_deg))
            report = simulate_ossb(cfg)
            return {
                "theta_deg": float(theta_deg),
                "ocsr_db": report.ocsr_db,
                "suppression_db": report.unused_sideband_suppression_db,
            }

        records = _parallel_map(one, list(thetas))
        ocsr = [r["ocsr_db"] for r in records]
        # endpoint-to-endpoint swing: a grid crossing 90 degrees dips to the
        # polarization-leak floor in between, which is not the tuning range
        derived = {"ocsr_swing_db": abs(ocsr[0] - ocsr[-1])} if len(ocsr) > 1 else {}
        columns = ["theta_deg", "ocsr_db", "suppression_db"]
    elif pipeline == "equalizer":
        cfg = _equalizer_config(base, ring, "sweep.base", require_angle=False)
        curve = equalizer_er_curve(cfg, [math.radians(t) for t in thetas])
        records = [
            {"theta_deg": float(t), "er_db": pt.er_db} for t, pt in zip(thetas, curve)
        ]
        ers = [r["er_db"] for r in records]
        derived = {"er_span_db": abs(ers[0] - ers[-1])} if len(ers) > 1 else {}
        columns = ["theta_deg", "er_db"]
    else:
        raise ConfigError("key 'sweep.pipeline' must be 'ossb' or 'equalizer'")

    rows = [[r[c] for c in columns] for r in records]
    return {"records": records}, derived, (columns, rows)


def _run_sweep_temp(sec: dict, ring: RingModel):
    ctx = "sweep"
    _reject_unknown(
        sec,
        {"kind", "temp_start_c", "temp_stop_c", "temp_points", "band_lo_hz", "band_hi_hz"},
        ctx,
    )
    temps = _sweep_grid(sec, ctx, "temp")
    lo = _get(sec, "band_lo_hz", "number", ctx=ctx, required=True)
    hi = _get(sec, "band_hi_hz", "number", ctx=ctx, required=True)

    def one(temp_c: float) -> dict:
        interval = mode_interval(at_temperature(ring, temp_c), (lo, hi))
        return {
            "temp_c": float(temp_c),
            "f_te_hz": interval.f_te_hz,
            "f_tm_hz": interval.f_tm_hz,
            "delta_hz": interval.delta_hz,
        }

    records = _parallel_map(one, list(temps))
    derived: dict[str, Any] = {}
    if len(records) >= 3 and np.unique(temps).size >= 2:
        rates = regress_thermal_rates(
            {
                PolMode.TE: [(r["temp_c"], r["f_te_hz"]) for r in records],
                PolMode.TM: [(r["temp_c"], r["f_tm_hz"]) for r in records],
            }
        )
        derived = {
            "rate_te_hz_per_c": rates.redshift_rate_hz_per_c.te,
            "rate_tm_hz_per_c": rates.redshift_rate_hz_per_c.tm,
            "interval_slope_hz_per_c": rates.interval_slope_hz_per_c,
        }
    columns = ["temp_c", "f_te_hz", "f_tm_hz", "delta_hz"]
    rows = [[r[c] for c in columns] for r in records]
    return {"records": records}, derived, (columns, rows)


def _run_sweep_carrier(sec: dict, ring: RingModel):
    ctx = "sweep"
    _reject_unknown(
        sec,
        {"kind", "offset_start_hz", "offset_stop_hz", "offset_points", "base"},
        ctx,
    )
    offsets = _sweep_grid(sec, ctx, "offset")
    base = sec.get("base")
    if not isinstance(base, dict):
        raise ConfigError("missing required key 'sweep.base'")
    cfg = _equalizer_config(base, ring, "sweep.base", require_angle=False)

    points = _parallel_map(
        lambda off: passband_center_tracking(cfg, [off])[0], list(offsets)
    )
    records = [
        {
            "offset_hz": p.offset_hz,
            "f_center_te_hz": p.f_center_te_hz,
            "f_center_tm_hz": p.f_center_tm_hz,
        }
        for p in points
    ]
    derived: dict[str, Any] = {}
    if len(records) > 1:
        off = np.array([r["offset_hz"] for r in records])
        for pol in PolMode:
            centers = np.array([r[f"f_center_{pol.value}_hz"] for r in records])
            o_c = off - off.mean()
            slope = float((o_c @ (centers - centers.mean())) / (o_c @ o_c))
            derived[f"slope_{pol.value}"] = slope
            derived[f"coverage_{pol.value}_hz"] = float(centers.max() - centers.min())
    columns = ["offset_hz", "f_center_te_hz", "f_center_tm_hz"]
    rows = [[r[c] for c in columns] for r in records]
    return {"records": records}, derived, (columns, rows)


_RUNNERS = {
    "spectrum": _run_spectrum,
    "ossb": _run_ossb,
    "equalizer": _run_equalizer,
    "fit": _run_fit,
    "sweep": _run_sweep,
}


# ---------------------------------------------------------------------------
# Envelope assembly and entry points
# ---------------------------------------------------------------------------

def _load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config root must be a JSON object")
    return config


def _validate_top_level(config: dict) -> str:
    _reject_unknown(
        config,
        {"schema_version", "ring", "output", "description"} | set(EXPERIMENT_SECTIONS),
        "config",
    )
    version = _get(config, "schema_version", "int", ctx="config", required=True)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"key 'config.schema_version' must be {SCHEMA_VERSION}, got {version}"
        )
    present = [name for name in EXPERIMENT_SECTIONS if name in config]
    if len(present) != 1:
        raise ConfigError(
            "config must contain exactly one experiment section out of "
            + ", ".join(EXPERIMENT_SECTIONS)
            + f" (found {len(present)})"
        )
    if "ring" not in config and present[0] != "fit":
        raise ConfigError("missing required key 'config.ring'")
    out_sec = config.get("output", {})
    if not isinstance(out_sec, dict):
        raise ConfigError("section 'output' must be an object")
    _reject_unknown(out_sec, {"timestamp"}, "output")
    _get(out_sec, "timestamp", "bool", ctx="output", default=False)
    return present[0]


def execute_config(config: dict) -> tuple[dict, tuple[list, list]]:
    """Validate and run a parsed config; returns (envelope, csv table)."""
    experiment = _validate_top_level(config)
    ring = build_ring(_section(config, "ring")) if "ring" in config else None
    if experiment != "fit" and ring is None:
        raise ConfigError("missing required key 'config.ring'")

    outputs, derived, table = _RUNNERS[experiment](config, ring)

    envelope = {
        "tool": {"name": "ringlink", "version": __version__},
        "experiment": experiment,
        "config_sha256": config_sha256(config),
        "config": config,
        "outputs": outputs,
        "derived": derived,
    }
    if config.get("output", {}).get("timestamp", False):
        envelope["timestamp_utc"] = datetime.now(timezone.utc).isoformat()
    return envelope, table


def run(config_path: str | Path, output_path: str | Path, csv: bool = False) -> int:
    """Execute a config file and write the result envelope (the CLI core).

    Returns the process exit status; nothing is written unless the run
    succeeds.
    """
    config = _load_config(config_path)
    envelope, table = execute_config(config)

    out = Path(output_path)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps_canonical(envelope))
    if csv:
        _write_csv(out.with_suffix(".csv"), table)
    return 0


def _write_csv(path: Path, table: tuple[list, list]) -> None:
    columns, rows = table
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, str):
                cells.append(cell)
            elif isinstance(cell, bool):
                cells.append("true" if cell else "false")
            elif isinstance(cell, (int, np.integer)):
                cells.append(str(int(cell)))
            else:
                cells.append(format(float(cell), ".16e"))
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


_CMD_SECTION = {
    "spectrum": ("spectrum", None),
    "ossb": ("ossb", None),
    "equalizer": ("equalizer", None),
    "fit": ("fit", None),
    "sweep-theta": ("sweep", "theta"),
    "sweep-temp": ("sweep", "temperature"),
    "sweep-carrier": ("sweep", "carrier"),
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    if not argv or argv[0] in ("-h", "--help"):
        stream = sys.stderr if not argv else sys.stdout
        print(_USAGE, end="", file=stream)
        return 64 if not argv else 0
    cmd = argv[0]
    if cmd not in SUBCOMMANDS:
        print(f"unknown subcommand '{cmd}'\n" + _USAGE, end="", file=sys.stderr)
        return 64

    config_path = output_path = None
    csv = False
    args = argv[1:]
    i = 0
    try:
        while i < len(args):
            flag = args[i]
            if flag == "--csv":
                csv = True
                i += 1
            elif flag in ("--config", "--out"):
                if i + 1 >= len(args):
                    raise ConfigError(f"flag {flag} needs a value")
                if flag == "--config":
                    config_path = args[i + 1]
                else:
                    output_path = args[i + 1]
                i += 2
            else:
                raise ConfigError(f"unknown flag '{flag}'")
        if config_path is None:
            raise ConfigError("flag --config is required")
        if output_path is None:
            raise ConfigError("flag --out is required")

        config = _load_config(config_path)
        experiment = _validate_top_level(config)
        if cmd != "run":
            want_section, want_kind = _CMD_SECTION[cmd]
            if experiment != want_section:
                raise ConfigError(
                    f"subcommand '{cmd}' needs a '{want_section}' section, "
                    f"config has '{experiment}'"
                )
            if want_kind is not None:
                kind = config["sweep"].get("kind")
                if kind != want_kind:
                    raise ConfigError(
                        f"subcommand '{cmd}' needs sweep kind '{want_kind}', got '{kind}'"
                    )

        envelope, table = execute_config(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # domain errors from the model modules
        print(str(exc), file=sys.stderr)
        return 2

    out = Path(output_path)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps_canonical(envelope))
    if csv:
        _write_csv(out.with_suffix(".csv"), table)
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
