"""Virtual ODMR scanning spin microscope.

A photoluminescent nanoprobe in a scanning tip reads out the magnetic
field of individual sample spins through the shift of its optically
detected magnetic resonance. This package simulates that instrument end
to end: dipole-field magnetostatics, the probe's rate-equation
photoluminescence, sweep synthesis in both measurement modes with photon
shot noise, Lorentzian fitting, raster-scan imaging, and the single-spin
detectability arithmetic.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .constants import CONST, ELECTRON_MOMENT, PhysicalConstants
from .errors import (DomainError, FitError, FitNonConvergenceError,
                     OdmrScanscopeError, ScanError, SceneError,
                     SceneInvariantError, SceneSyntaxError,
                     SceneUnknownKeyError, SteadyStateError)
from .noise import NoiseSpec
from .physics import (Sample, SpinDipole, dipole_field, total_field, vec3,
                      zeeman_frequency)
from .probe import (CENTER, EDGE, LINEWIDTH_PRESETS_T, LevelScheme, OdmrLine,
                    Populations, Probe, ProbeGeometry, SensingPoint,
                    odmr_contrast, pl_intensity, rf_mixing_rate,
                    sensing_position, steady_state, volume_average)
from .scanner import (DetectabilityReport, Modality, ScanImage, ScanSpec,
                      detectability_report, lateral_resolution, scan)
from .scene import SceneConfig, parse_scene
from .spectroscopy import (FitResult, Spectrum, SweepMode, SweepSpec,
                           add_shot_noise, fit_lorentzian, lorentzian_model,
                           resonance_shift, spectrum_from_csv,
                           spectrum_to_csv, sweep)

__version__ = "0.1.0"
