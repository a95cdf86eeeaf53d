"""ringlink: dual-polarization micro-ring link simulator and fitting toolkit.

Frequency-domain models of an add-drop micro-ring supporting both TE and TM
resonance combs, the optical/RF pipelines built on it (orthogonally
polarized single-sideband generation and dual-channel RF equalization), and
least-squares extraction of ring parameters from measured spectra.
"""

__version__ = "0.1.0"

from .fitting import (
    FitResult,
    MeasuredTrace,
    Port,
    ThermalRates,
    fit_resonance,
    fit_thermal_rates,
    initial_guess,
    regress_thermal_rates,
)
from .modulation import (
    ModulatorDrive,
    OpticalSpectrum,
    SpectralLine,
    cw_carrier,
    intensity_modulate,
    phase_modulate,
)
from .pipelines import (
    EqualizerConfig,
    OssbConfig,
    OssbReport,
    PassbandMetrics,
    RfResponse,
    ThetaExtinction,
    TrackingPoint,
    default_rf_grid,
    equalizer_beat,
    equalizer_er_curve,
    passband_center_tracking,
    passband_metrics,
    photodetect,
    photodetect_per_pol,
    project_field,
    simulate_equalizer,
    simulate_ossb,
)
from .polarization import (
    JonesVector,
    PolarizerAngle,
    apply_jones,
    ocsr_theory,
    ocsr_theory_db,
    output_intensity_closed_form,
    polarizer_matrix,
    ring_drop_operator,
    ring_through_operator,
)
from .ring import (
    C_VACUUM,
    DEFAULT_ROUND_TRIP_A,
    ModeInterval,
    PerPol,
    PhysicalRingParams,
    PolMode,
    ResonanceMetrics,
    RingModel,
    SpectralRingParams,
    at_temperature,
    coupling_fwhm_hz,
    drop_transfer,
    find_resonances,
    mode_interval,
    resonance_metrics,
    ring_from_physical,
    ring_from_spectral,
    solve_coupling_from_fwhm,
    through_transfer,
)

__all__ = [
    "__version__",
    # ring
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
    "drop_transfer",
    "through_transfer",
    "find_resonances",
    "resonance_metrics",
    "mode_interval",
    "at_temperature",
    "coupling_fwhm_hz",
    "solve_coupling_from_fwhm",
    # polarization
    "JonesVector",
    "PolarizerAngle",
    "polarizer_matrix",
    "apply_jones",
    "ring_drop_operator",
    "ring_through_operator",
    "output_intensity_closed_form",
    "ocsr_theory",
    "ocsr_theory_db",
    # modulation
    "SpectralLine",
    "OpticalSpectrum",
    "ModulatorDrive",
    "cw_carrier",
    "phase_modulate",
    "intensity_modulate",
    # pipelines
    "OssbConfig",
    "OssbReport",
    "EqualizerConfig",
    "RfResponse",
    "ThetaExtinction",
    "TrackingPoint",
    "PassbandMetrics",
    "simulate_ossb",
    "project_field",
    "photodetect",
    "photodetect_per_pol",
    "simulate_equalizer",
    "equalizer_beat",
    "equalizer_er_curve",
    "passband_center_tracking",
    "passband_metrics",
    "default_rf_grid",
    # fitting
    "Port",
    "MeasuredTrace",
    "FitResult",
    "ThermalRates",
    "initial_guess",
    "fit_resonance",
    "fit_thermal_rates",
    "regress_thermal_rates",
]
