"""The nanoprobe's spectroscopic engine.

Level scheme: ground state 1, optically pumped state 2, and a luminescent
manifold split into a bright and a dark magnetic sublevel (3b, 3d). CW
rate equations:

    dn1/dt  = -P n1 + k_r n3b + k_d n3d
    dn2/dt  =  P n1 - k23 n2
    dn3b/dt =  bb k23 n2 - k_r n3b + W (n3d - n3b)
    dn3d/dt =  bd k23 n2 - k_d n3d + W (n3b - n3d)

with n1 + n2 + n3b + n3d = 1. The rf drive enters as the incoherent
sublevel mixing rate W with a unit-peak Lorentzian dependence on the
detuning between the rf frequency and the Zeeman resonance of the local
static field; W_peak = W0 * rf_amplitude_scale, the scale standing in for
the quadratic drive-amplitude dependence (B1^2).

Detected signal is the photon emission rate k_r * n3b. Mixing the
long-lived dark sublevel into the bright one changes that rate: the ODMR
contrast. Its sign follows sign(k_r - k_d).

The stationary populations have a closed algebraic form (solve the 3b/3d
pair, then close with conservation); that is the production path used in
sweep synthesis. The test suite holds it against an independent dense
linear solve of the same 4x4 system.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constants import gyromagnetic_ratio
from .errors import DomainError, SteadyStateError
from .physics import vec3

# field-domain ODMR linewidths quoted for candidate probe materials:
# quantum-dot spectra at ~4 K span 0.1 - 0.002 T; dye molecules reach 1e-3 T
LINEWIDTH_PRESETS_T = {
    "quantum_dot_broad": 0.1,
    "quantum_dot_narrow": 0.002,
    "dye_molecule": 1e-3,
}


@dataclass(frozen=True)
class LevelScheme:
    """Rates (1/s) and branching of the four-level luminescence cycle."""

    pump_rate: float = 1e6            # P, optical 1 -> 2
    nonradiative_rate: float = 1e9    # k23, 2 -> manifold 3
    branching_bright: float = 0.7     # bb, share of 3 feeding the bright sublevel
    branching_dark: float = 0.3       # bd = 1 - bb
    radiative_rate: float = 1e8       # k_r, 3b -> 1, photon emitting
    dark_decay_rate: float = 1e5      # k_d, 3d -> 1, non-emitting

    def __post_init__(self):
        rates = (self.pump_rate, self.nonradiative_rate,
                 self.radiative_rate, self.dark_decay_rate)
        if not all(math.isfinite(r) and r >= 0.0 for r in rates):
            raise DomainError(f"rates must be finite and >= 0: {rates}")
        if self.radiative_rate <= 0.0:
            raise DomainError("radiative_rate must be > 0 (probe must emit)")
        for name in ("branching_bright", "branching_dark"):
            b = getattr(self, name)
            if not (math.isfinite(b) and 0.0 <= b <= 1.0):
                raise DomainError(f"{name} must be in [0, 1], got {b}")
        if abs(self.branching_bright + self.branching_dark - 1.0) > 1e-9:
            raise DomainError(
                "branching_bright + branching_dark must equal 1, got "
                f"{self.branching_bright + self.branching_dark}")


@dataclass(frozen=True)
class OdmrLine:
    """ODMR line parameters: g-factor, field-domain width, rf drive."""

    rf_frequency: float               # Hz
    g_factor: float = 2.0023
    linewidth_fwhm: float = LINEWIDTH_PRESETS_T["quantum_dot_narrow"]  # T
    max_rf_rate: float = 1e8          # W0 (1/s), mixing rate at exact resonance
    rf_amplitude_scale: float = 1.0   # multiplies W0; proportional to B1^2

    def __post_init__(self):
        if not (math.isfinite(self.linewidth_fwhm) and self.linewidth_fwhm > 0.0):
            raise DomainError(f"linewidth_fwhm must be > 0, got {self.linewidth_fwhm}")
        if not (math.isfinite(self.max_rf_rate) and self.max_rf_rate >= 0.0):
            raise DomainError(f"max_rf_rate must be >= 0, got {self.max_rf_rate}")
        if not (math.isfinite(self.rf_amplitude_scale) and self.rf_amplitude_scale >= 0.0):
            raise DomainError("rf_amplitude_scale must be >= 0")
        if not (math.isfinite(self.g_factor) and self.g_factor > 0.0):
            raise DomainError(f"g_factor must be > 0, got {self.g_factor}")
        if not (math.isfinite(self.rf_frequency) and self.rf_frequency >= 0.0):
            raise DomainError(f"rf_frequency must be >= 0, got {self.rf_frequency}")

    @property
    def gamma(self) -> float:
        """Zeeman slope g*mu_B/h in Hz/T."""
        return gyromagnetic_ratio(self.g_factor)

    @property
    def fwhm_freq(self) -> float:
        """Linewidth converted to the frequency domain, Hz."""
        return self.gamma * self.linewidth_fwhm

    @property
    def w_peak(self) -> float:
        """Mixing rate at exact resonance, W0 * scale."""
        return self.max_rf_rate * self.rf_amplitude_scale


@dataclass(frozen=True)
class Populations:
    """Stationary occupation probabilities; sums to 1."""

    n1: float
    n2: float
    n3_bright: float
    n3_dark: float

    def as_array(self) -> np.ndarray:
        return np.array([self.n1, self.n2, self.n3_bright, self.n3_dark])


@dataclass(frozen=True)
class SensingPoint:
    """Where inside the probe the field is sampled."""

    kind: str           # "edge" | "center" | "volume_average"
    n_points: int = 1

    def __post_init__(self):
        if self.kind not in ("edge", "center", "volume_average"):
            raise DomainError(f"unknown sensing point kind: {self.kind!r}")
        if self.n_points < 1:
            raise DomainError("n_points must be >= 1")


EDGE = SensingPoint("edge")
CENTER = SensingPoint("center")


def volume_average(n_points: int) -> SensingPoint:
    return SensingPoint("volume_average", n_points)


@dataclass(frozen=True)
class ProbeGeometry:
    """Probe sphere diameter and gap between its near edge and the surface."""

    diameter: float = 1e-9       # m
    standoff: float = 5e-10      # m, probe edge to sample surface
    sensing_point: SensingPoint = EDGE

    def __post_init__(self):
        if not (1e-10 <= self.diameter <= 1e-7):
            raise DomainError(f"diameter out of range [1e-10, 1e-7] m: {self.diameter}")
        if not (math.isfinite(self.standoff) and self.standoff > 0.0):
            raise DomainError(f"standoff must be > 0, got {self.standoff}")


@dataclass(frozen=True)
class Probe:
    """Geometry plus spectroscopy: everything the instrument tip brings."""

    geometry: ProbeGeometry
    scheme: LevelScheme
    line: OdmrLine

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha1(repr(self).encode())
        return h.hexdigest()[:12]


_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def sensing_position(geometry: ProbeGeometry, tip_xy):
    """Field evaluation point(s) for a tip at lateral position (x, y).

    The surface is the z = 0 plane; the probe edge sits at z = standoff.
    Edge and center return a single (3,) point; volume_average returns a
    deterministic quasi-uniform (n, 3) point set inside the probe sphere
    (n = 1 degenerates to the center).
    """
    t = np.asarray(tip_xy, dtype=np.float64).ravel()
    x, y = float(t[0]), float(t[1])
    kind = geometry.sensing_point.kind
    if kind == "edge":
        return vec3(x, y, geometry.standoff)
    radius = 0.5 * geometry.diameter
    cz = geometry.standoff + radius
    if kind == "center":
        return vec3(x, y, cz)
    n = geometry.sensing_point.n_points
    if n == 1:
        return vec3(x, y, cz).reshape(1, 3)
    k = np.arange(n)
    r = radius * ((k + 0.5) / n) ** (1.0 / 3.0)
    cos_t = 1.0 - 2.0 * (k + 0.5) / n
    sin_t = np.sqrt(1.0 - cos_t**2)
    phi = _GOLDEN_ANGLE * k
    pts = np.empty((n, 3))
    pts[:, 0] = x + r * sin_t * np.cos(phi)
    pts[:, 1] = y + r * sin_t * np.sin(phi)
    pts[:, 2] = cz + r * cos_t
    return pts


def rf_mixing_rate(line: OdmrLine, local_field: float) -> float:
    """Sublevel mixing rate W (1/s) for a local static field magnitude (T).

    Unit-peak Lorentzian in the rf detuning from the Zeeman resonance of
    the local field: W = W_peak at exact resonance, half that at one
    half-width detuning.
    """
    if not (math.isfinite(local_field) and local_field >= 0.0):
        raise DomainError(f"local field magnitude must be >= 0, got {local_field}")
    det = line.rf_frequency - line.gamma * local_field
    hw2 = (0.5 * line.fwhm_freq) ** 2
    return line.w_peak * hw2 / (det * det + hw2)


def steady_state(scheme: LevelScheme, W: float) -> Populations:
    """Unique stationary solution of the rate equations under mixing rate W.

    P = 0 returns the all-ground solution. Degenerate pumped systems with
    no unique stationary point (k23 = 0, or k_d = 0 with no mixing) raise
    SteadyStateError.
    """
    if not (math.isfinite(W) and W >= 0.0):
        raise DomainError(f"mixing rate must be >= 0, got {W}")
    P = scheme.pump_rate
    if P == 0.0:
        return Populations(1.0, 0.0, 0.0, 0.0)
    k23 = scheme.nonradiative_rate
    k_r, k_d = scheme.radiative_rate, scheme.dark_decay_rate
    if k23 == 0.0:
        raise SteadyStateError("k23 = 0 with P > 0: population trapped in level 2")
    D = k_r * k_d + W * (k_r + k_d)
    if D == 0.0:
        raise SteadyStateError(
            "k_d = 0 with W = 0 and P > 0: population trapped in the dark sublevel")
    fb = (scheme.branching_bright * k_d + W) / D
    fd = (scheme.branching_dark * k_r + W) / D
    n1 = 1.0 / (1.0 + P / k23 + P * (fb + fd))
    flow = P * n1
    return Populations(n1, flow / k23, flow * fb, flow * fd)


def pl_intensity(scheme: LevelScheme, line: OdmrLine, local_field: float) -> float:
    """Photon emission rate k_r * n3b (1/s) at the given local field."""
    pops = steady_state(scheme, rf_mixing_rate(line, local_field))
    return scheme.radiative_rate * pops.n3_bright


def odmr_contrast(scheme: LevelScheme, line: OdmrLine,
                  local_field_at_resonance: float | None = None) -> float:
    """(I_on - I_off) / I_off between driven-at-resonance and undriven PL.

    With no field given, I_on uses the exact-resonance mixing rate W_peak;
    otherwise the actual mixing rate at that field.
    """
    off = scheme.radiative_rate * steady_state(scheme, 0.0).n3_bright
    if off == 0.0:
        raise DomainError("undriven PL baseline is zero; contrast undefined")
    if local_field_at_resonance is None:
        w_on = line.w_peak
    else:
        w_on = rf_mixing_rate(line, local_field_at_resonance)
    on = scheme.radiative_rate * steady_state(scheme, w_on).n3_bright
    return (on - off) / off
