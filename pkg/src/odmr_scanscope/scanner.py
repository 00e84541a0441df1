"""Raster scanning, image output, and the single-spin detectability report.

The probe is rastered over an nx x ny grid of commanded tip positions; at
each pixel the configured sweep is synthesized, optionally corrupted by
shot noise, fitted, and the fitted center is recorded relative to a
spin-free reference fitted once per scan. Pixels are independent work
units: the noise stream is addressed by commanded position, so any subset
of the scan (down to a 1x1 scan at one pixel) reproduces bit-exactly, and
rows may be evaluated by a thread pool without changing the result.

Modalities only differ here by their positioning error: AFM/NSOM and STM
position exactly, a cantilevered fiber wanders by tens of nanometers rms.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import ELECTRON_MOMENT
from .errors import DomainError, ScanError
from .noise import NoiseSpec, jitter_displacement, position_words
from .physics import Sample, SpinDipole, fingerprint, total_field
from .probe import (LevelScheme, OdmrLine, Probe, ProbeGeometry, odmr_contrast,
                    pl_intensity, sensing_position, steady_state)
from .spectroscopy import (Spectrum, SweepMode, SweepSpec, add_shot_noise,
                           fit_lorentzian, sweep, _spin_field_at_probe)

MODALITY_JITTER_DEFAULTS = {
    "afm_nsom": 0.0,
    "stm": 0.0,
    "fiber": 2e-8,  # cantilevered-fiber positioning accuracy, tens of nm
}


@dataclass(frozen=True)
class Modality:
    """Scan platform; sets the positioning jitter."""

    kind: str = "afm_nsom"
    positioning_jitter_rms: float | None = None  # m; None = platform default

    def __post_init__(self):
        if self.kind not in MODALITY_JITTER_DEFAULTS:
            raise DomainError(f"unknown modality kind: {self.kind!r}")
        rms = self.positioning_jitter_rms
        if rms is None:
            object.__setattr__(self, "positioning_jitter_rms",
                               MODALITY_JITTER_DEFAULTS[self.kind])
        elif not (math.isfinite(rms) and rms >= 0.0):
            raise DomainError(f"positioning_jitter_rms must be >= 0, got {rms}")


@dataclass(frozen=True)
class ScanSpec:
    """Raster geometry plus the per-pixel sweep and noise configuration."""

    x_range: float            # m, full span
    y_range: float
    nx: int
    ny: int
    sweep: SweepSpec
    noise: NoiseSpec = field(default_factory=lambda: NoiseSpec(enabled=False))
    center: tuple = (0.0, 0.0)
    observable: str = "shift"  # "shift" | "contrast"

    def __post_init__(self):
        if not (self.x_range > 0.0 and self.y_range > 0.0):
            raise DomainError("scan ranges must be > 0")
        if self.nx < 1 or self.ny < 1:
            raise DomainError("nx and ny must be >= 1")
        if self.observable not in ("shift", "contrast"):
            raise DomainError(f"unknown observable: {self.observable!r}")
        object.__setattr__(self, "center",
                           (float(self.center[0]), float(self.center[1])))


@dataclass(frozen=True, eq=False)
class ScanImage:
    """Per-pixel observable values with convergence flags and metadata."""

    values: np.ndarray      # (ny, nx)
    converged: np.ndarray   # (ny, nx) bool
    x_axis: np.ndarray      # (nx,) commanded tip x, m
    y_axis: np.ndarray      # (ny,)
    units: str              # "T", "Hz", or "" (contrast)
    metadata: dict

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        c = np.asarray(self.converged, dtype=bool)
        if v.shape != c.shape or v.ndim != 2:
            raise DomainError("values and converged must be matching 2-D arrays")
        if v.shape != (self.y_axis.shape[0], self.x_axis.shape[0]):
            raise DomainError("grid dimensions do not match axes")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "converged", c)


def pixel_axes(spec: ScanSpec) -> tuple[np.ndarray, np.ndarray]:
    """Commanded pixel coordinates; symmetric about the scan center.

    Offsets are (i - (n-1)/2) * pitch with pitch = range/(n-1), so mirror
    pixel pairs are exact float negations of each other and a single-pixel
    scan sits exactly at the center.
    """
    def axis(center: float, rng: float, n: int) -> np.ndarray:
        if n == 1:
            return np.array([center])
        pitch = rng / (n - 1)
        return center + (np.arange(n) - (n - 1) / 2.0) * pitch

    return axis(spec.center[0], spec.x_range, spec.nx), \
        axis(spec.center[1], spec.y_range, spec.ny)


def scan_height(probe: Probe) -> float:
    """z of the probe's (first) sensing point above the surface, m."""
    pts = np.atleast_2d(sensing_position(probe.geometry, (0.0, 0.0)))
    return float(pts[0, 2])


def scan(sample: Sample, probe: Probe, spec: ScanSpec, modality: Modality,
         threads: int = 1) -> ScanImage:
    """Raster the probe and image the configured observable.

    Shift maps record the fitted resonance center at each pixel minus the
    spin-free reference center (fit once, noiseless: the calibration of
    the instrument). Contrast maps record the relative PL change the fixed
    rf drive produces at each pixel's local field; no sweep or fit runs.
    Raises ScanError if the reference fit fails or more than half the
    pixels fail to fit.
    """
    xs, ys = pixel_axes(spec)
    rms = modality.positioning_jitter_rms
    seed = int(spec.noise.rng_seed)
    values = np.zeros((spec.ny, spec.nx))
    flags = np.ones((spec.ny, spec.nx), dtype=bool)

    if spec.observable == "shift":
        ref_spectrum = sweep(sample.without_spins(), probe, spec.sweep, spec.center)
        ref_fit = fit_lorentzian(ref_spectrum)
        if not ref_fit.converged:
            raise ScanError("reference (spin-free) resonance fit did not converge")
        ref_center = ref_fit.center

        def do_pixel(ix: int, iy: int):
            cx, cy = float(xs[ix]), float(ys[iy])
            px, py = cx, cy
            if rms > 0.0:
                dx, dy = jitter_displacement(rms, seed, position_words(cx, cy))
                px, py = cx + dx, cy + dy
            spectrum = sweep(sample, probe, spec.sweep, (px, py))
            if spec.noise.enabled:
                spectrum = add_shot_noise(spectrum, spec.noise)
            fit = fit_lorentzian(spectrum)
            return fit.center - ref_center, fit.converged

    else:  # contrast
        baseline = probe.scheme.radiative_rate * steady_state(probe.scheme, 0.0).n3_bright
        if baseline == 0.0:
            raise ScanError("undriven PL baseline is zero; contrast map undefined")

        def do_pixel(ix: int, iy: int):
            cx, cy = float(xs[ix]), float(ys[iy])
            px, py = cx, cy
            if rms > 0.0:
                dx, dy = jitter_displacement(rms, seed, position_words(cx, cy))
                px, py = cx + dx, cy + dy
            spin_field = _spin_field_at_probe(sample, probe, (px, py))
            local = float(np.linalg.norm(sample.bias_field + spin_field))
            driven = pl_intensity(probe.scheme, probe.line, local)
            return (driven - baseline) / baseline, True

    def do_row(iy: int):
        row_vals = np.empty(spec.nx)
        row_flags = np.empty(spec.nx, dtype=bool)
        for ix in range(spec.nx):
            row_vals[ix], row_flags[ix] = do_pixel(ix, iy)
        return iy, row_vals, row_flags

    if threads > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as pool:
            for iy, row_vals, row_flags in pool.map(do_row, range(spec.ny)):
                values[iy], flags[iy] = row_vals, row_flags
    else:
        for iy in range(spec.ny):
            _, values[iy], flags[iy] = do_row(iy)

    n_failed = int((~flags).sum())
    if n_failed > 0.5 * flags.size:
        raise ScanError(f"{n_failed}/{flags.size} pixel fits failed")

    units = "" if spec.observable == "contrast" else \
        ("T" if spec.sweep.mode is SweepMode.FIELD else "Hz")
    meta = {
        "observable": spec.observable,
        "mode": spec.sweep.mode.value,
        "units": units,
        "seed": seed if spec.noise.enabled else None,
        "noise_enabled": bool(spec.noise.enabled),
        "jitter_rms_m": rms,
        "modality": modality.kind,
        "scan_height_m": scan_height(probe),
        "probe": probe.fingerprint(),
        "sample": fingerprint(sample),
        "ref_center": ref_center if spec.observable == "shift" else None,
        "failed_pixels": n_failed,
        "spec": {
            "x_range": spec.x_range, "y_range": spec.y_range,
            "nx": spec.nx, "ny": spec.ny, "center": list(spec.center),
            "observable": spec.observable,
            "sweep": {"mode": spec.sweep.mode.value, "start": spec.sweep.start,
                      "stop": spec.sweep.stop, "points": int(spec.sweep.points),
                      "dwell_time": spec.sweep.dwell_time},
        },
    }
    return ScanImage(values, flags, xs, ys, units, meta)


def lateral_resolution(image: ScanImage) -> float:
    """FWHM (m) of the |value| profile through the image's dominant peak.

    Linear interpolation between pixels on both flanks; raises DomainError
    when there is no peak 3x above the off-peak RMS or the half-max
    crossings are outside the scanned window.
    """
    a = np.abs(image.values)
    iy, ix = np.unravel_index(int(np.argmax(a)), a.shape)
    peak = float(a[iy, ix])

    yy, xx = np.mgrid[0:a.shape[0], 0:a.shape[1]]
    dist = np.maximum(np.abs(yy - iy), np.abs(xx - ix))
    horizon = max(2, max(a.shape) // 4)
    off = a[dist > horizon]
    if off.size == 0:
        off = np.delete(a.ravel(), iy * a.shape[1] + ix)
    rms_off = float(np.sqrt(np.mean(off**2)))
    if not (peak > 0.0 and peak > 3.0 * rms_off):
        raise DomainError("no dominant peak above 3x the off-peak RMS")

    profile = a[iy, :]
    x = image.x_axis
    half = 0.5 * peak

    def flank(direction: int):
        j = ix
        while 0 <= j + direction < profile.shape[0]:
            p0, p1 = profile[j], profile[j + direction]
            if p1 <= half:
                if p0 == p1:
                    return float(x[j + direction])
                t = (p0 - half) / (p0 - p1)
                return float(x[j] + t * (x[j + direction] - x[j]))
            j += direction
        return None

    left, right = flank(-1), flank(+1)
    if left is None or right is None:
        raise DomainError("half-maximum crossing outside the scanned window")
    return right - left


@dataclass(frozen=True)
class DetectabilityReport:
    """Can this probe see one electron spin? The numbers behind the verdict."""

    field_T: float                        # single-spin field at the sensing point
    linewidth_T: float
    ratio: float                          # field / linewidth
    contrast: float
    photon_budget: float
    min_detectable_field_T: float | None  # shot-noise floor, None without contrast
    detectable: bool
    verdict: str
    sensitivity_model: str = "linewidth / (|contrast| * sqrt(photon_budget))"

    def to_json_dict(self) -> dict:
        return {
            "field_T": self.field_T,
            "linewidth_T": self.linewidth_T,
            "ratio": self.ratio,
            "contrast": self.contrast,
            "photon_budget": self.photon_budget,
            "min_detectable_field_T": self.min_detectable_field_T,
            "detectable": self.detectable,
            "verdict": self.verdict,
            "sensitivity_model": self.sensitivity_model,
        }


def detectability_report(geometry: ProbeGeometry, line: OdmrLine,
                         scheme: LevelScheme, photon_budget: float,
                         spin_moment: float = ELECTRON_MOMENT,
                         threshold: float = 1.0) -> DetectabilityReport:
    """Single-spin detectability: field vs linewidth vs shot-noise floor.

    Evaluates the field of one spin of moment ``spin_moment`` J/T sitting
    on the surface directly under the tip, oriented perpendicular to it,
    at the probe's sensing point. Detectable means that field exceeds both
    ``threshold`` linewidths and the shot-noise-limited minimum detectable
    field linewidth/(|contrast| sqrt(N)).
    """
    if not (math.isfinite(photon_budget) and photon_budget > 0.0):
        raise DomainError(f"photon_budget must be > 0, got {photon_budget}")
    probe_sample = Sample(
        spins=(SpinDipole((0.0, 0.0, 0.0), (0.0, 0.0, spin_moment)),),
        bias_field=(0.0, 0.0, 0.0))
    pts = np.atleast_2d(sensing_position(geometry, (0.0, 0.0)))
    acc = np.zeros(3)
    for p in pts:
        acc += total_field(probe_sample, p)
    field_vec = acc / pts.shape[0]
    field_mag = float(np.linalg.norm(field_vec))

    ratio = field_mag / line.linewidth_fwhm
    contrast = odmr_contrast(scheme, line)
    if contrast == 0.0:
        return DetectabilityReport(
            field_T=field_mag, linewidth_T=line.linewidth_fwhm, ratio=ratio,
            contrast=0.0, photon_budget=photon_budget,
            min_detectable_field_T=None, detectable=False,
            verdict="no ODMR contrast")
    db_min = line.linewidth_fwhm / (abs(contrast) * math.sqrt(photon_budget))
    detectable = field_mag > max(threshold * line.linewidth_fwhm, db_min)
    return DetectabilityReport(
        field_T=field_mag, linewidth_T=line.linewidth_fwhm, ratio=ratio,
        contrast=contrast, photon_budget=photon_budget,
        min_detectable_field_T=db_min, detectable=detectable,
        verdict="detectable" if detectable else "not detectable")


# ---------------------------------------------------------------------------
# image output


def image_to_matrix_csv(image: ScanImage, path=None) -> str:
    """Plain matrix CSV, row-major: ny rows of nx comma-separated values."""
    lines = [",".join(f"{v:.17g}" for v in row) for row in image.values]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def image_to_pgm(image: ScanImage, pgm_path, meta_path=None) -> None:
    """16-bit binary PGM (P5), min-max normalized; companion JSON metadata.

    The metadata file records the normalization (min, max), units, the
    scan spec echo and seed, so the PGM values can be mapped back to
    physical numbers.
    """
    v = image.values
    vmin, vmax = float(v.min()), float(v.max())
    if vmax > vmin:
        norm = np.round((v - vmin) / (vmax - vmin) * 65535.0).astype(np.uint16)
    else:
        norm = np.zeros_like(v, dtype=np.uint16)
    ny, nx = v.shape
    with open(pgm_path, "wb") as f:
        f.write(f"P5\n{nx} {ny}\n65535\n".encode("ascii"))
        f.write(norm.astype(">u2").tobytes())
    if meta_path is not None:
        meta = {
            "min": vmin,
            "max": vmax,
            "units": image.units,
            "nx": nx,
            "ny": ny,
            "seed": image.metadata.get("seed"),
            "observable": image.metadata.get("observable"),
            "mode": image.metadata.get("mode"),
            "ref_center": image.metadata.get("ref_center"),
            "failed_pixels": image.metadata.get("failed_pixels"),
            "spec": image.metadata.get("spec"),
            "x_axis_m": [float(x) for x in image.x_axis],
            "y_axis_m": [float(y) for y in image.y_axis],
        }
        Path(meta_path).write_text(json.dumps(meta, indent=2) + "\n")


def report_to_json(report: DetectabilityReport, path=None) -> str:
    text = json.dumps(report.to_json_dict(), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
