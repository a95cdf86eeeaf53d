"""Deterministic serialization and trace-file handling.

Output JSON is byte-stable: floats are rendered with 17 significant digits
in lowercase scientific notation, dict keys keep construction order, and no
timestamps are emitted unless explicitly enabled, so identical configs
produce identical bytes.

Trace files are two-column numeric text (freq_hz, power_linear) with ``#``
comments; an optional JSON sidecar at ``<path>.json`` carries the port and
polarization metadata plus, optionally, the FSR used for fitting.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .fitting import MeasuredTrace, Port
from .ring import C_VACUUM, PolMode

__all__ = [
    "dumps_canonical",
    "config_sha256",
    "load_trace",
    "save_trace",
    "db_to_linear",
    "linear_to_db",
    "wavelength_to_frequency",
    "frequency_to_wavelength",
]


def _format_scalar(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v) or math.isinf(v):
            raise ValueError("non-finite floats are not representable in output JSON")
        return format(v, ".16e")
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _write(obj: Any, out: list[str], indent: str) -> None:
    pad = indent + "  "
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, val) in enumerate(obj.items()):
            out.append(f"{pad}{json.dumps(str(key))}: ")
            _write(val, out, pad)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(indent + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        out.append("[\n")
        for i, val in enumerate(seq):
            out.append(pad)
            _write(val, out, pad)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(indent + "]")
    else:
        out.append(_format_scalar(obj))


def dumps_canonical(obj: Any) -> str:
    """Serialize to deterministic, human-readable JSON (trailing newline included)."""
    out: list[str] = []
    _write(obj, out, "")
    out.append("\n")
    return "".join(out)


def config_sha256(config: Any) -> str:
    """Hash of the canonical serialization of a config object."""
    return hashlib.sha256(dumps_canonical(config).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Trace files
# ---------------------------------------------------------------------------

def save_trace(path: str | Path, trace: MeasuredTrace) -> None:
    """Write the two-column trace file plus its metadata sidecar."""
    path = Path(path)
    rows = "\n".join(
        f"{format(f, '.16e')} {format(p, '.16e')}"
        for f, p in zip(trace.freq_hz, trace.power)
    )
    path.write_text("# freq_hz power_linear\n" + rows + "\n")
    sidecar = {"port": trace.port.value, "pol": trace.pol.value}
    Path(str(path) + ".json").write_text(dumps_canonical(sidecar))


def load_trace(
    path: str | Path, port: Port | None = None, pol: PolMode | None = None
) -> tuple[MeasuredTrace, dict]:
    """Load a trace file and its sidecar.

    Explicit ``port``/``pol`` arguments override the sidecar.  Returns the
    trace plus the raw sidecar dict (which may carry extras such as
    ``fsr_hz``).
    """
    path = Path(path)
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] < 2:
        raise ValueError(f"trace file {path} must have two columns: freq_hz power_linear")

    sidecar: dict = {}
    sidecar_path = Path(str(path) + ".json")
    if sidecar_path.exists():
        sidecar = json.loads(sidecar_path.read_text())

    if port is None:
        port = Port(sidecar.get("port", "drop"))
    if pol is None:
        pol = PolMode(sidecar.get("pol", "te"))

    trace = MeasuredTrace(freq_hz=data[:, 0], power=data[:, 1], port=port, pol=pol)
    return trace, sidecar


# ---------------------------------------------------------------------------
# Unit helpers for raw instrument exports
# ---------------------------------------------------------------------------

def db_to_linear(value_db):
    """Power dB -> linear ratio."""
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    """Linear power ratio -> dB."""
    return 10.0 * np.log10(np.asarray(value, dtype=float))


def wavelength_to_frequency(wavelength_m):
    """Vacuum wavelength [m] -> optical frequency [Hz]."""
    return C_VACUUM / np.asarray(wavelength_m, dtype=float)


def frequency_to_wavelength(freq_hz):
    """Optical frequency [Hz] -> vacuum wavelength [m]."""
    return C_VACUUM / np.asarray(freq_hz, dtype=float)
