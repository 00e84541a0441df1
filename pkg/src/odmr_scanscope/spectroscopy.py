"""ODMR spectrum synthesis, shot noise, and Lorentzian line fitting.

Two measurement modes, mirroring how a real bench is run: sweep the
permanent field with the rf frequency fixed, or hold the field and sweep
the rf frequency around the resonance. Either way each point records the
expected photon count (PL rate times dwell time) at the probe's local
field, which is the uniform bias plus the superposed dipole fields of the
sample spins at the probe's sensing point.

Fitting is a damped Gauss-Newton (Levenberg-Marquardt style) loop on

    I(x) = offset + amplitude * (G/2)^2 / ((x - center)^2 + (G/2)^2)

with the analytic Jacobian from the kernel backend. Dips are just
negative amplitudes; there is no separate mode.
"""

import io
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import _kernels
from .constants import CONST
from .errors import DomainError, FitNonConvergenceError
from .noise import NoiseSpec, poisson_counts, position_words
from .physics import EXCLUSION_RADIUS, Sample, fingerprint
from .probe import Probe, sensing_position, steady_state

FIT_MAX_ITER = 200
FIT_XTOL = 1e-10


class SweepMode(str, Enum):
    FIELD = "field"          # permanent field varied, rf frequency fixed
    FREQUENCY = "frequency"  # permanent field fixed, rf frequency varied


@dataclass(frozen=True)
class SweepSpec:
    """One sweep: mode, window, sampling."""

    mode: SweepMode
    start: float          # T (field mode) or Hz (frequency mode)
    stop: float
    points: int = 201
    dwell_time: float = 1e-3  # s per point

    def __post_init__(self):
        object.__setattr__(self, "mode", SweepMode(self.mode))
        if not (math.isfinite(self.start) and math.isfinite(self.stop)
                and self.start < self.stop):
            raise DomainError(f"need start < stop, got [{self.start}, {self.stop}]")
        if int(self.points) < 3:
            raise DomainError(f"points must be >= 3, got {self.points}")
        if not (math.isfinite(self.dwell_time) and self.dwell_time > 0.0):
            raise DomainError(f"dwell_time must be > 0, got {self.dwell_time}")

    @property
    def span(self) -> float:
        return self.stop - self.start


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sampled PL intensity (expected or drawn photon counts) vs abscissa."""

    abscissa: np.ndarray
    intensity: np.ndarray
    mode: SweepMode
    metadata: dict

    def __post_init__(self):
        a = np.asarray(self.abscissa, dtype=np.float64)
        y = np.asarray(self.intensity, dtype=np.float64)
        if a.shape != y.shape or a.ndim != 1:
            raise DomainError("abscissa and intensity must be equal-length 1-D arrays")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(y)):
            raise DomainError("spectrum contains non-finite values")
        if np.any(np.diff(a) <= 0.0):
            raise DomainError("abscissa must be strictly increasing")
        if np.any(y < 0.0):
            raise DomainError("intensities must be >= 0")
        a = a.copy(); a.setflags(write=False)
        y = y.copy(); y.setflags(write=False)
        object.__setattr__(self, "abscissa", a)
        object.__setattr__(self, "intensity", y)
        object.__setattr__(self, "mode", SweepMode(self.mode))

    def __len__(self) -> int:
        return self.abscissa.shape[0]


@dataclass(frozen=True)
class FitResult:
    """Lorentzian parameters recovered from a spectrum."""

    center: float
    fwhm: float
    amplitude: float
    offset: float
    residual_norm: float
    converged: bool
    iterations: int

    def to_json_dict(self) -> dict:
        return {
            "center": self.center,
            "fwhm": self.fwhm,
            "amplitude": self.amplitude,
            "offset": self.offset,
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FitResult":
        return cls(**{k: d[k] for k in (
            "center", "fwhm", "amplitude", "offset",
            "residual_norm", "converged", "iterations")})


def lorentzian_model(x, center, fwhm, amplitude, offset):
    """Evaluate the fit model; thin wrapper over the kernel backend."""
    return _kernels.lorentzian_model(
        np.asarray(x, dtype=np.float64), center, fwhm, amplitude, offset)


def _spin_field_at_probe(sample: Sample, probe: Probe, tip_xy) -> np.ndarray:
    """Spin-only field (T) averaged over the probe's sensing point set."""
    pts = sensing_position(probe.geometry, tip_xy)
    pts = np.atleast_2d(pts)
    if len(sample.spins) == 0:
        return np.zeros(3)
    pos = sample.positions_array()
    mom = sample.moments_array()
    acc = np.zeros(3)
    for p in pts:
        if np.any(np.linalg.norm(pos - p, axis=1) < EXCLUSION_RADIUS):
            raise DomainError("probe sensing point coincides with a sample spin")
        acc += _kernels.dipole_field_sum(pos, mom, p, CONST.mu0_over_4pi)
    return acc / pts.shape[0]


def _bias_direction(sample: Sample) -> np.ndarray:
    b = np.linalg.norm(sample.bias_field)
    if b == 0.0:
        return np.array([0.0, 0.0, 1.0])  # sweep along z when no bias is set
    return sample.bias_field / b


def sweep(sample: Sample, probe: Probe, spec: SweepSpec, tip_position) -> Spectrum:
    """Synthesize one noiseless sweep at a tip position.

    Field mode sweeps the bias magnitude along the bias axis over
    [start, stop] with the rf frequency fixed at the line's rf_frequency;
    frequency mode sweeps the rf over [start, stop] with the field fixed.
    Intensities are expected photon counts, PL rate * dwell_time.
    """
    tip = np.asarray(tip_position, dtype=np.float64).ravel()
    if tip.shape[0] not in (2, 3) or not np.all(np.isfinite(tip)):
        raise DomainError(f"tip position must be (x, y[, z]) finite, got {tip}")
    x, y = float(tip[0]), float(tip[1])
    steady_state(probe.scheme, 0.0)  # reject schemes with no undriven steady state

    spin_field = _spin_field_at_probe(sample, probe, (x, y))
    line = probe.line
    grid = np.linspace(spec.start, spec.stop, int(spec.points))

    if spec.mode is SweepMode.FIELD:
        b_mags = _kernels.swept_field_magnitudes(grid, _bias_direction(sample), spin_field)
        rf = np.full(grid.shape, line.rf_frequency)
    else:
        b_fixed = float(np.linalg.norm(sample.bias_field + spin_field))
        b_mags = np.full(grid.shape, b_fixed)
        rf = grid

    s = probe.scheme
    rates = _kernels.pl_rate_curve(
        b_mags, rf, line.gamma, line.fwhm_freq, line.w_peak,
        s.pump_rate, s.nonradiative_rate, s.branching_bright, s.branching_dark,
        s.radiative_rate, s.dark_decay_rate)

    meta = {
        "mode": spec.mode.value,
        "dwell_time_s": spec.dwell_time,
        "probe": probe.fingerprint(),
        "sample": fingerprint(sample),
        "tip_xy": (x, y),
        "stream": position_words(x, y),
        "seed": None,
        "noisy": False,
    }
    return Spectrum(grid, rates * spec.dwell_time, spec.mode, meta)


def add_shot_noise(spectrum: Spectrum, noise: NoiseSpec) -> Spectrum:
    """Replace expected counts by Poisson draws from the addressed stream.

    Disabled noise is the identity. Draw i of this spectrum is keyed by
    (seed, spectrum stream id, i), so re-running any subset of an
    acquisition reproduces it exactly.
    """
    if not noise.enabled:
        return spectrum
    stream = tuple(spectrum.metadata.get("stream", (0, 0)))
    means = spectrum.intensity * noise.photon_rate_scale
    counts = poisson_counts(means, int(noise.rng_seed), stream)
    meta = dict(spectrum.metadata)
    meta.update(seed=int(noise.rng_seed), noisy=True,
                photon_rate_scale=noise.photon_rate_scale)
    return Spectrum(spectrum.abscissa, counts, spectrum.mode, meta)


# ---------------------------------------------------------------------------
# fitting


def _initial_guess(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Seed (center, fwhm, amplitude, offset) from the data itself.

    Offset from the edge median, extremum for center/amplitude, half-max
    crossings for the width; falls back to a quarter of the span when the
    crossings are not resolved.
    """
    n = x.shape[0]
    span = float(x[-1] - x[0])
    k = max(2, n // 10)
    offset = float(np.median(np.concatenate([y[:k], y[-k:]])))
    resid = y - offset
    idx = int(np.argmax(np.abs(resid)))
    amplitude = float(resid[idx])
    center = float(x[idx])
    fallback = span / 4.0
    if amplitude == 0.0:
        return center, fallback, 0.0, offset

    half = 0.5 * abs(amplitude)
    a = np.abs(resid)

    def crossing(direction: int):
        j = idx
        while 0 <= j + direction < n:
            if a[j + direction] <= half:
                x0, x1 = x[j], x[j + direction]
                a0, a1 = a[j], a[j + direction]
                if a0 == a1:
                    return float(x1)
                return float(x0 + (x1 - x0) * (a0 - half) / (a0 - a1))
            j += direction
        return None

    left, right = crossing(-1), crossing(+1)
    if left is not None and right is not None:
        fwhm = right - left
    elif left is not None:
        fwhm = 2.0 * (center - left)
    elif right is not None:
        fwhm = 2.0 * (right - center)
    else:
        fwhm = fallback
    dx = span / (n - 1)
    fwhm = min(max(fwhm, dx), span)
    return center, fwhm, amplitude, offset


def fit_lorentzian(spectrum: Spectrum, initial_guess: FitResult | None = None) -> FitResult:
    """Least-squares Lorentzian fit by damped Gauss-Newton iteration.

    Self-seeds when no guess is given. Converged means the relative
    parameter step fell below FIT_XTOL or the residual went stationary
    within FIT_MAX_ITER iterations; otherwise the best parameters seen are
    returned with converged=False.
    """
    if len(spectrum) < 5:
        raise DomainError(f"need >= 5 points to fit, got {len(spectrum)}")
    x = np.asarray(spectrum.abscissa, dtype=np.float64)
    y = np.asarray(spectrum.intensity, dtype=np.float64)

    if initial_guess is not None:
        p = np.array([initial_guess.center, abs(initial_guess.fwhm),
                      initial_guess.amplitude, initial_guess.offset])
        if p[1] == 0.0 or not np.all(np.isfinite(p)):
            raise DomainError(f"unusable initial guess: {p}")
    else:
        p = np.array(_initial_guess(x, y))

    model = _kernels.lorentzian_model(x, *p)
    r = model - y
    sse = float(r @ r)
    best_p, best_sse = p.copy(), sse
    lam = 1e-3
    converged = False
    iterations = 0
    sse_floor = 1e-30 * max(float(y @ y), 1.0)

    for iterations in range(1, FIT_MAX_ITER + 1):
        model, jac = _kernels.lorentzian_model_jac(x, *p)
        r = model - y
        grad = jac.T @ r
        hess = jac.T @ jac
        diag = np.diag(hess).copy()
        dmax = float(diag.max())
        if dmax <= 0.0:  # degenerate flat model: nothing to move
            converged = True
            break
        diag = np.maximum(diag, 1e-12 * dmax)

        accepted = False
        for _ in range(25):
            try:
                step = np.linalg.solve(hess + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            candidate = p + step
            new_model = _kernels.lorentzian_model(x, *candidate)
            new_r = new_model - y
            new_sse = float(new_r @ new_r)
            if np.isfinite(new_sse) and new_sse <= sse:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break  # damping exhausted; report best-so-far

        rel_step = float(np.max(np.abs(step) / (np.abs(p) + 1e-300)))
        sse_drop = sse - new_sse
        lam_used = lam
        p, sse = candidate, new_sse
        lam = max(lam / 3.0, 1e-14)
        if sse < best_sse:
            best_p, best_sse = p.copy(), sse
        # residual stationarity only counts in the near-full-step regime;
        # a tiny drop under heavy damping is a choked step, not a minimum
        stationary = sse_drop <= 1e-14 * sse and lam_used <= 1e-2
        if rel_step < FIT_XTOL or sse <= sse_floor or stationary:
            converged = True
            break

    c, w, a, o = best_p
    return FitResult(center=float(c), fwhm=float(abs(w)), amplitude=float(a),
                     offset=float(o), residual_norm=float(math.sqrt(best_sse)),
                     converged=bool(converged), iterations=int(iterations))


def resonance_shift(spectrum_with_sample: Spectrum, spectrum_reference: Spectrum) -> float:
    """Fitted line-center displacement between a measurement and a reference."""
    if spectrum_with_sample.mode != spectrum_reference.mode:
        raise DomainError("spectra have different sweep modes")
    if not np.array_equal(spectrum_with_sample.abscissa, spectrum_reference.abscissa):
        raise DomainError("spectra have different abscissas")
    f_with = fit_lorentzian(spectrum_with_sample)
    f_ref = fit_lorentzian(spectrum_reference)
    if not (f_with.converged and f_ref.converged):
        raise FitNonConvergenceError(
            "resonance_shift requires both fits to converge", fits=(f_with, f_ref))
    return f_with.center - f_ref.center


# ---------------------------------------------------------------------------
# serialization


def spectrum_to_csv(spectrum: Spectrum, path=None) -> str:
    """Two-column CSV with '#'-prefixed metadata header; returns the text."""
    buf = io.StringIO()
    m = spectrum.metadata
    buf.write("# odmr-scanscope spectrum\n")
    buf.write(f"# mode: {spectrum.mode.value}\n")
    buf.write(f"# seed: {m.get('seed') if m.get('seed') is not None else 'none'}\n")
    buf.write(f"# probe: {m.get('probe', 'unknown')}\n")
    buf.write(f"# sample: {m.get('sample', 'unknown')}\n")
    buf.write(f"# dwell_time_s: {m.get('dwell_time_s', 'none')}\n")
    buf.write(f"# noisy: {str(bool(m.get('noisy', False))).lower()}\n")
    stream = m.get("stream", (0, 0))
    buf.write(f"# stream: {stream[0]},{stream[1]}\n")
    for xi, yi in zip(spectrum.abscissa, spectrum.intensity):
        buf.write(f"{xi:.17g},{yi:.17g}\n")
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def spectrum_from_csv(source) -> Spectrum:
    """Parse a spectrum CSV produced by spectrum_to_csv."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        text = Path(source).read_text()
    else:
        text = source
    meta: dict = {}
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if ":" in body:
                key, _, val = body.partition(":")
                meta[key.strip()] = val.strip()
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise DomainError(f"line {lineno}: expected 2 columns, got {len(parts)}")
        rows.append((float(parts[0]), float(parts[1])))
    if not rows:
        raise DomainError("spectrum CSV contains no data rows")
    mode = SweepMode(meta.get("mode", "frequency"))
    seed = meta.get("seed")
    stream = tuple(int(w) for w in meta.get("stream", "0,0").split(","))
    metadata = {
        "mode": mode.value,
        "seed": None if seed in (None, "none") else int(seed),
        "probe": meta.get("probe"),
        "sample": meta.get("sample"),
        "dwell_time_s": None if meta.get("dwell_time_s") in (None, "none")
        else float(meta["dwell_time_s"]),
        "noisy": meta.get("noisy") == "true",
        "stream": stream,
    }
    arr = np.array(rows)
    return Spectrum(arr[:, 0], arr[:, 1], mode, metadata)


def fit_result_to_json(fit: FitResult, path=None) -> str:
    text = json.dumps(fit.to_json_dict(), indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text
