import math

import pytest

from ringlink import (
    C_VACUUM,
    EqualizerConfig,
    PerPol,
    PolMode,
    SpectralRingParams,
    ring_from_spectral,
)

# TE resonance anchor at 1550.47 nm; the adjacent TM resonance sits 16.6 GHz
# above, and both combs repeat every 49 GHz.
F_TE = C_VACUUM / 1550.47e-9
DELTA = 16.6e9
FSR = 49.0e9
FWHM = 140e6

# equalizer carrier at 1550.0 nm with the TE resonance 5.9 GHz above and the
# TM resonance 10.7 GHz below (4.8 GHz passband separation)
F_CARRIER_EQ = C_VACUUM / 1550.0e-9
D_TE_EQ = 5.9e9
D_TM_EQ = 10.7e9

# narrow-line couplings (about 1 MHz FWHM at 49 GHz FSR) for law checks where
# the 140 MHz device's cross-polarization leakage would mask the cot^2 law
LAW_A = 0.99999
LAW_T = math.sqrt((1.0 - math.pi * 1e6 / FSR) / LAW_A)


@pytest.fixture(scope="session")
def device_ring():
    """The measured device: 140 MHz linewidth, 49 GHz FSR, 16.6 GHz interval."""
    return ring_from_spectral(
        SpectralRingParams(
            f0_hz=PerPol(F_TE, F_TE + DELTA),
            fsr_hz=PerPol.uniform(FSR),
            fwhm_hz=FWHM,
        )
    )


@pytest.fixture(scope="session")
def law_ring():
    return ring_from_spectral(
        SpectralRingParams(
            f0_hz=PerPol(F_TE, F_TE + DELTA),
            fsr_hz=PerPol.uniform(FSR),
            t=LAW_T,
            a=LAW_A,
        )
    )


@pytest.fixture(scope="session")
def equalizer_ring():
    """Device-linewidth ring positioned for the equalizer geometry."""
    return ring_from_spectral(
        SpectralRingParams(
            f0_hz=PerPol(F_CARRIER_EQ + D_TE_EQ, F_CARRIER_EQ - D_TM_EQ),
            fsr_hz=PerPol.uniform(FSR),
            fwhm_hz=FWHM,
        )
    )


@pytest.fixture()
def equalizer_cfg(equalizer_ring):
    import numpy as np

    return EqualizerConfig(
        ring=equalizer_ring,
        carrier_freq_hz=F_CARRIER_EQ,
        carrier_power_w=1e-3,
        input_angle_rad=math.radians(45.0),
        rf_grid_hz=tuple(np.linspace(1e9, 15e9, 141)),
    )


def pol_fractions(line):
    """(TE, TM) power fractions of one spectral line."""
    p = line.power_w
    return abs(line.field.e_te) ** 2 / p, abs(line.field.e_tm) ** 2 / p


__all__ = ["F_TE", "DELTA", "FSR", "FWHM", "F_CARRIER_EQ", "D_TE_EQ", "D_TM_EQ",
           "LAW_A", "LAW_T", "pol_fractions", "PolMode"]
