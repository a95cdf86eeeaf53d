"""Jones-calculus primitives in the ring's (TE, TM) eigenbasis.

Vectors are ordered ``(e_te, e_tm)``.  The ring acts as a diagonal operator
(no polarization mode coupling); an ideal linear polarizer is the projector
onto its transmission axis.

Angle conventions: the polarizer angle ``theta`` is measured between the
transmission axis and the TM axis, which puts ``sin^2(theta)`` in the TE-TE
slot of the projector.  Schematics often quote the same angle from the TE
axis instead; :meth:`PolarizerAngle.from_te_degrees` does that mapping
(``theta_from_tm = 90 deg - theta_from_te``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ring import PolMode, RingModel, drop_transfer, through_transfer

__all__ = [
    "JonesVector",
    "PolarizerAngle",
    "polarizer_matrix",
    "apply_jones",
    "ring_drop_operator",
    "ring_through_operator",
    "output_intensity_closed_form",
    "ocsr_theory",
    "ocsr_theory_db",
]


@dataclass(frozen=True)
class JonesVector:
    """Two-component complex field amplitude [sqrt(W)] in the (TE, TM) basis."""

    e_te: complex
    e_tm: complex

    def __post_init__(self) -> None:
        for c in (self.e_te, self.e_tm):
            if not (math.isfinite(c.real) and math.isfinite(c.imag)):
                raise ValueError("field components must be finite")

    @property
    def power(self) -> float:
        """Total optical power |e_te|^2 + |e_tm|^2 [W]."""
        return abs(self.e_te) ** 2 + abs(self.e_tm) ** 2

    def component(self, pol: PolMode) -> complex:
        return self.e_te if pol is PolMode.TE else self.e_tm

    def as_array(self) -> np.ndarray:
        return np.array([self.e_te, self.e_tm], dtype=complex)

    @classmethod
    def from_array(cls, v) -> "JonesVector":
        return cls(complex(v[0]), complex(v[1]))

    def scaled(self, factor: complex) -> "JonesVector":
        return JonesVector(self.e_te * factor, self.e_tm * factor)


@dataclass(frozen=True)
class PolarizerAngle:
    """Polarizer transmission-axis angle, stored in radians from the TM axis.

    Normalized into [0, pi); the projector is invariant under a half-turn.
    """

    theta_rad: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta_rad", float(self.theta_rad) % math.pi)

    @classmethod
    def from_tm_degrees(cls, deg: float) -> "PolarizerAngle":
        return cls(math.radians(deg))

    @classmethod
    def from_te_degrees(cls, deg: float) -> "PolarizerAngle":
        """Angle quoted from the TE axis instead of the TM axis."""
        return cls(0.5 * math.pi - math.radians(deg))

    @classmethod
    def from_te_radians(cls, rad: float) -> "PolarizerAngle":
        return cls(0.5 * math.pi - rad)

    @property
    def theta_from_te_rad(self) -> float:
        return (0.5 * math.pi - self.theta_rad) % math.pi


def _theta_rad(theta: "PolarizerAngle | float") -> float:
    return theta.theta_rad if isinstance(theta, PolarizerAngle) else float(theta)


def polarizer_matrix(theta: "PolarizerAngle | float") -> np.ndarray:
    """Projector onto a transmission axis at ``theta`` from the TM axis.

    ``[[sin^2,  cos*sin], [sin*cos, cos^2]]`` in the (TE, TM) basis; it is
    Hermitian and idempotent with eigenvalues {0, 1}.
    """
    th = _theta_rad(theta)
    s, c = math.sin(th), math.cos(th)
    return np.array([[s * s, c * s], [s * c, c * c]], dtype=float)


def apply_jones(matrix: np.ndarray, v: JonesVector) -> JonesVector:
    """Apply a 2x2 operator to a Jones vector."""
    return JonesVector.from_array(np.asarray(matrix) @ v.as_array())


def ring_drop_operator(m: RingModel, f: float) -> np.ndarray:
    """Drop-port Jones operator diag(D_TE(f), D_TM(f)); off-diagonals are exactly zero."""
    return np.diag(
        [drop_transfer(m, PolMode.TE, f), drop_transfer(m, PolMode.TM, f)]
    ).astype(complex)


def ring_through_operator(m: RingModel, f: float) -> np.ndarray:
    """Through-port Jones operator diag(T_TE(f), T_TM(f))."""
    return np.diag(
        [through_transfer(m, PolMode.TE, f), through_transfer(m, PolMode.TM, f)]
    ).astype(complex)


def output_intensity_closed_form(
    theta: "PolarizerAngle | float", d_te: complex, d_tm: complex, e0: float
) -> float:
    """Polarizer output intensity [W] for a 45-degree launch through the drop port.

    Closed form for ``|P(theta) . diag(d_te, d_tm) . E0*(1/sqrt(2), 1/sqrt(2))|^2``:

    ``(E0^2/2) * [|d_te|^2 sin^2(theta) + |d_tm|^2 cos^2(theta)
    + |d_te||d_tm| sin(2 theta) cos(arg d_te - arg d_tm)]``
    """
    th = _theta_rad(theta)
    mte, mtm = abs(d_te), abs(d_tm)
    cross = mte * mtm * math.sin(2.0 * th) * math.cos(
        math.atan2(d_te.imag, d_te.real) - math.atan2(d_tm.imag, d_tm.real)
    )
    return 0.5 * e0 * e0 * (
        mte * mte * math.sin(th) ** 2 + mtm * mtm * math.cos(th) ** 2 + cross
    )


def ocsr_theory(theta: "PolarizerAngle | float") -> float:
    """Ideal carrier-to-sideband power ratio after the polarizer: cot^2(theta).

    ``theta`` is measured between the polarizer axis and the carrier's
    polarization axis (so the carrier passes with cos^2 and the orthogonal
    sideband with sin^2).  Diverges in the carrier-only limit theta -> 0.
    """
    th = _theta_rad(theta)
    s = math.sin(th)
    if abs(s) < 1e-12:
        raise ValueError("ocsr diverges at theta = 0 (carrier-only limit)")
    return (math.cos(th) / s) ** 2


def ocsr_theory_db(theta: "PolarizerAngle | float") -> float:
    """``10*log10(cot^2 theta)``; convenience for comparing against sweeps."""
    return 10.0 * math.log10(ocsr_theory(theta))
