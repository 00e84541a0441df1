"""Scene files: the strict JSON configuration of the batch front-end.

Human-scale units in the file (positions in nm, fields in T, frequencies
in Hz, spin moments in Bohr magnetons with a one-electron default of
g_e/2), SI internally. Parsing is strict: unknown keys are rejected and
every invariant of the inner types is re-validated here with a path to
the offending key, because a silently ignored typo in a physics config is
worse than a crash.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .constants import CONST, gyromagnetic_ratio
from .errors import (DomainError, SceneInvariantError, SceneSyntaxError,
                     SceneUnknownKeyError)
from .noise import NoiseSpec
from .physics import Sample, SpinDipole
from .probe import (LINEWIDTH_PRESETS_T, LevelScheme, OdmrLine, Probe,
                    ProbeGeometry, SensingPoint)
from .scanner import MODALITY_JITTER_DEFAULTS, Modality, ScanSpec
from .spectroscopy import SweepSpec

NM = 1e-9
DEFAULT_MOMENT_BOHR = CONST.g_electron / 2.0  # one unpaired electron, in mu_B
DEFAULT_BIAS_T = (0.0, 0.0, 0.2)


# ---------------------------------------------------------------------------
# strict-dict plumbing


class _Node:
    """A JSON object being consumed key by key; leftovers are unknown keys."""

    def __init__(self, data, path: str):
        if not isinstance(data, dict):
            raise SceneInvariantError(path or "scene", "expected a JSON object")
        self._d = dict(data)
        self._path = path

    def _sub(self, key: str) -> str:
        return f"{self._path}.{key}" if self._path else key

    def has(self, key: str) -> bool:
        return key in self._d

    def raw(self, key: str, default=None):
        return self._d.pop(key, default)

    def child(self, key: str) -> "_Node":
        return _Node(self._d.pop(key, {}), self._sub(key))

    def number(self, key: str, default=None, minimum=None, maximum=None,
               exclusive_min=None) -> float:
        if key not in self._d:
            if default is None:
                raise SceneInvariantError(self._sub(key), "required key missing")
            return default
        v = self._d.pop(key)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SceneInvariantError(self._sub(key), f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            raise SceneInvariantError(self._sub(key), "must be finite")
        if minimum is not None and v < minimum:
            raise SceneInvariantError(self._sub(key), f"must be >= {minimum}, got {v}")
        if exclusive_min is not None and v <= exclusive_min:
            raise SceneInvariantError(self._sub(key), f"must be > {exclusive_min}, got {v}")
        if maximum is not None and v > maximum:
            raise SceneInvariantError(self._sub(key), f"must be <= {maximum}, got {v}")
        return v

    def integer(self, key: str, default=None, minimum=None) -> int:
        if key not in self._d:
            if default is None:
                raise SceneInvariantError(self._sub(key), "required key missing")
            return default
        v = self._d.pop(key)
        if isinstance(v, bool) or not isinstance(v, int):
            raise SceneInvariantError(self._sub(key), f"expected an integer, got {v!r}")
        if minimum is not None and v < minimum:
            raise SceneInvariantError(self._sub(key), f"must be >= {minimum}, got {v}")
        return v

    def boolean(self, key: str, default: bool) -> bool:
        if key not in self._d:
            return default
        v = self._d.pop(key)
        if not isinstance(v, bool):
            raise SceneInvariantError(self._sub(key), f"expected true/false, got {v!r}")
        return v

    def string(self, key: str, default=None, choices=None) -> str:
        if key not in self._d:
            if default is None:
                raise SceneInvariantError(self._sub(key), "required key missing")
            return default
        v = self._d.pop(key)
        if not isinstance(v, str):
            raise SceneInvariantError(self._sub(key), f"expected a string, got {v!r}")
        if choices is not None and v not in choices:
            raise SceneInvariantError(
                self._sub(key), f"must be one of {sorted(choices)}, got {v!r}")
        return v

    def vector(self, key: str, length: int, default=None) -> tuple:
        if key not in self._d:
            if default is None:
                raise SceneInvariantError(self._sub(key), "required key missing")
            return tuple(default)
        v = self._d.pop(key)
        if (not isinstance(v, list) or len(v) != length
                or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in v)):
            raise SceneInvariantError(
                self._sub(key), f"expected a list of {length} numbers, got {v!r}")
        out = tuple(float(c) for c in v)
        if any(not math.isfinite(c) for c in out):
            raise SceneInvariantError(self._sub(key), "components must be finite")
        return out

    def list_of(self, key: str):
        v = self._d.pop(key, [])
        if not isinstance(v, list):
            raise SceneInvariantError(self._sub(key), f"expected a list, got {v!r}")
        return [(item, f"{self._sub(key)}[{i}]") for i, item in enumerate(v)]

    def done(self):
        if self._d:
            raise SceneUnknownKeyError(self._sub(sorted(self._d)[0]))


def _rebuild(section_path: str):
    """Context for re-raising DomainError as SceneInvariantError."""
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type is not None and issubclass(exc_type, DomainError):
                raise SceneInvariantError(section_path, str(exc)) from exc
            return False
    return _Ctx()


# ---------------------------------------------------------------------------
# resolved configuration records


@dataclass(frozen=True)
class SpinConfig:
    position_nm: tuple = (0.0, 0.0, 0.0)
    moment_direction: tuple = (0.0, 0.0, 1.0)
    moment_magnitude_bohr: float = DEFAULT_MOMENT_BOHR


@dataclass(frozen=True)
class SampleConfig:
    spins: tuple = ()
    bias_field_T: tuple = DEFAULT_BIAS_T


@dataclass(frozen=True)
class GeometryConfig:
    diameter_nm: float = 1.0
    standoff_nm: float = 0.5
    sensing_kind: str = "edge"
    sensing_n_points: int = 1


@dataclass(frozen=True)
class SchemeConfig:
    pump_rate: float = 1e6
    nonradiative_rate: float = 1e9
    branching_bright: float = 0.7
    branching_dark: float = 1.0 - 0.7  # same float the parser resolves
    radiative_rate: float = 1e8
    dark_decay_rate: float = 1e5


_DEFAULT_BIAS_MAG = float(np.linalg.norm(DEFAULT_BIAS_T))
_DEFAULT_RF_HZ = _DEFAULT_BIAS_MAG * gyromagnetic_ratio(2.0023)


@dataclass(frozen=True)
class LineConfig:
    g_factor: float = 2.0023
    linewidth_T: float = LINEWIDTH_PRESETS_T["quantum_dot_narrow"]
    max_rf_rate: float = 1e8
    rf_amplitude_scale: float = 1.0
    rf_frequency_hz: float = _DEFAULT_RF_HZ  # resolved: resonance with |bias|


@dataclass(frozen=True)
class SweepConfig:
    mode: str = "field"
    start: float = 0.85 * _DEFAULT_BIAS_MAG   # resolved around the anchor
    stop: float = 1.15 * _DEFAULT_BIAS_MAG
    points: int = 201
    dwell_time_s: float = 1e-3
    tip_nm: tuple = (0.0, 0.0)


@dataclass(frozen=True)
class ScanConfig:
    x_range_nm: float = 10.0
    y_range_nm: float = 10.0
    nx: int = 33
    ny: int = 33
    center_nm: tuple = (0.0, 0.0)
    observable: str = "shift"


@dataclass(frozen=True)
class NoiseConfig:
    enabled: bool = True
    rng_seed: int = 0
    photon_rate_scale: float = 1.0


@dataclass(frozen=True)
class ModalityConfig:
    kind: str = "afm_nsom"
    positioning_jitter_rms_nm: float = 0.0  # resolved per platform default


@dataclass(frozen=True)
class SceneConfig:
    """A fully resolved, validated scene: defaults applied, units as in file."""

    sample: SampleConfig = field(default_factory=SampleConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    scheme: SchemeConfig = field(default_factory=SchemeConfig)
    line: LineConfig = field(default_factory=LineConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    scan: ScanConfig = field(default_factory=ScanConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    modality: ModalityConfig = field(default_factory=ModalityConfig)

    # -- domain object builders ------------------------------------------

    def build_sample(self) -> Sample:
        spins = []
        for s in self.sample.spins:
            d = np.asarray(s.moment_direction, dtype=np.float64)
            n = np.linalg.norm(d)
            moment = (d / n) * (s.moment_magnitude_bohr * CONST.bohr_magneton)
            pos = np.asarray(s.position_nm, dtype=np.float64) * NM
            spins.append(SpinDipole(pos, moment))
        return Sample(spins=tuple(spins), bias_field=self.sample.bias_field_T)

    def build_probe(self) -> Probe:
        g = self.geometry
        geometry = ProbeGeometry(
            diameter=g.diameter_nm * NM, standoff=g.standoff_nm * NM,
            sensing_point=SensingPoint(g.sensing_kind, g.sensing_n_points))
        s = self.scheme
        scheme = LevelScheme(
            pump_rate=s.pump_rate, nonradiative_rate=s.nonradiative_rate,
            branching_bright=s.branching_bright, branching_dark=s.branching_dark,
            radiative_rate=s.radiative_rate, dark_decay_rate=s.dark_decay_rate)
        ln = self.line
        line = OdmrLine(
            rf_frequency=ln.rf_frequency_hz, g_factor=ln.g_factor,
            linewidth_fwhm=ln.linewidth_T, max_rf_rate=ln.max_rf_rate,
            rf_amplitude_scale=ln.rf_amplitude_scale)
        return Probe(geometry=geometry, scheme=scheme, line=line)

    def build_sweep_spec(self) -> SweepSpec:
        return SweepSpec(mode=self.sweep.mode, start=self.sweep.start,
                         stop=self.sweep.stop, points=self.sweep.points,
                         dwell_time=self.sweep.dwell_time_s)

    def sweep_tip_m(self) -> tuple:
        return (self.sweep.tip_nm[0] * NM, self.sweep.tip_nm[1] * NM)

    def build_noise(self) -> NoiseSpec:
        return NoiseSpec(enabled=self.noise.enabled, rng_seed=self.noise.rng_seed,
                         photon_rate_scale=self.noise.photon_rate_scale)

    def build_scan_spec(self) -> ScanSpec:
        sc = self.scan
        return ScanSpec(
            x_range=sc.x_range_nm * NM, y_range=sc.y_range_nm * NM,
            nx=sc.nx, ny=sc.ny, sweep=self.build_sweep_spec(),
            noise=self.build_noise(),
            center=(sc.center_nm[0] * NM, sc.center_nm[1] * NM),
            observable=sc.observable)

    def build_modality(self) -> Modality:
        return Modality(kind=self.modality.kind,
                        positioning_jitter_rms=self.modality.positioning_jitter_rms_nm * NM)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        g = self.geometry
        sensing = (g.sensing_kind if g.sensing_kind != "volume_average"
                   else {"volume_average": g.sensing_n_points})
        return {
            "sample": {
                "spins": [
                    {"position_nm": list(s.position_nm),
                     "moment_direction": list(s.moment_direction),
                     "moment_magnitude_bohr": s.moment_magnitude_bohr}
                    for s in self.sample.spins],
                "bias_field_T": list(self.sample.bias_field_T),
            },
            "probe": {
                "geometry": {"diameter_nm": g.diameter_nm,
                             "standoff_nm": g.standoff_nm,
                             "sensing_point": sensing},
                "scheme": {"pump_rate": self.scheme.pump_rate,
                           "nonradiative_rate": self.scheme.nonradiative_rate,
                           "branching_bright": self.scheme.branching_bright,
                           "branching_dark": self.scheme.branching_dark,
                           "radiative_rate": self.scheme.radiative_rate,
                           "dark_decay_rate": self.scheme.dark_decay_rate},
                "line": {"g_factor": self.line.g_factor,
                         "linewidth_T": self.line.linewidth_T,
                         "max_rf_rate": self.line.max_rf_rate,
                         "rf_amplitude_scale": self.line.rf_amplitude_scale,
                         "rf_frequency_hz": self.line.rf_frequency_hz},
            },
            "sweep": {"mode": self.sweep.mode, "start": self.sweep.start,
                      "stop": self.sweep.stop, "points": self.sweep.points,
                      "dwell_time_s": self.sweep.dwell_time_s,
                      "tip_nm": list(self.sweep.tip_nm)},
            "scan": {"x_range_nm": self.scan.x_range_nm,
                     "y_range_nm": self.scan.y_range_nm,
                     "nx": self.scan.nx, "ny": self.scan.ny,
                     "center_nm": list(self.scan.center_nm),
                     "observable": self.scan.observable},
            "noise": {"enabled": self.noise.enabled,
                      "rng_seed": self.noise.rng_seed,
                      "photon_rate_scale": self.noise.photon_rate_scale},
            "modality": {"kind": self.modality.kind,
                         "positioning_jitter_rms_nm":
                             self.modality.positioning_jitter_rms_nm},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


# ---------------------------------------------------------------------------
# parsing


def _parse_sensing(raw, path: str) -> tuple[str, int]:
    if raw is None:
        return "edge", 1
    if isinstance(raw, str):
        if raw not in ("edge", "center"):
            raise SceneInvariantError(
                path, f"expected 'edge', 'center' or {{'volume_average': n}}, got {raw!r}")
        return raw, 1
    if isinstance(raw, dict):
        node = _Node(raw, path)
        n = node.integer("volume_average", minimum=1)
        node.done()
        return "volume_average", n
    raise SceneInvariantError(path, f"unrecognized sensing point: {raw!r}")


def _parse_spin(raw, path: str) -> SpinConfig:
    node = _Node(raw, path)
    pos = node.vector("position_nm", 3, default=(0.0, 0.0, 0.0))
    direction = node.vector("moment_direction", 3, default=(0.0, 0.0, 1.0))
    if all(c == 0.0 for c in direction):
        raise SceneInvariantError(f"{path}.moment_direction", "must not be the zero vector")
    mag = node.number("moment_magnitude_bohr", default=DEFAULT_MOMENT_BOHR,
                      exclusive_min=0.0)
    node.done()
    return SpinConfig(pos, direction, mag)


def parse_scene(source) -> SceneConfig:
    """Parse and validate a scene from a file path or raw JSON text.

    Raises SceneSyntaxError for malformed JSON, SceneUnknownKeyError for
    keys outside the schema, SceneInvariantError (with the offending key
    path) for value violations.
    """
    if isinstance(source, Path):
        text = source.read_text()
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        text = Path(source).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneSyntaxError(f"scene is not valid JSON: {exc}") from exc

    root = _Node(raw, "")

    # sample ---------------------------------------------------------------
    sample_node = root.child("sample")
    spins = tuple(_parse_spin(item, p) for item, p in sample_node.list_of("spins"))
    bias = sample_node.vector("bias_field_T", 3, default=DEFAULT_BIAS_T)
    sample_node.done()
    sample_cfg = SampleConfig(spins=spins, bias_field_T=bias)

    # probe ----------------------------------------------------------------
    probe_node = root.child("probe")
    geo_node = probe_node.child("geometry")
    sensing_kind, sensing_n = _parse_sensing(
        geo_node.raw("sensing_point"), geo_node._sub("sensing_point"))
    geometry_cfg = GeometryConfig(
        diameter_nm=geo_node.number("diameter_nm", default=1.0, minimum=0.1, maximum=100.0),
        standoff_nm=geo_node.number("standoff_nm", default=0.5, exclusive_min=0.0),
        sensing_kind=sensing_kind, sensing_n_points=sensing_n)
    geo_node.done()

    scheme_node = probe_node.child("scheme")
    bb = scheme_node.number("branching_bright", default=0.7, minimum=0.0, maximum=1.0)
    bd = scheme_node.number("branching_dark", default=1.0 - bb, minimum=0.0, maximum=1.0)
    if abs(bb + bd - 1.0) > 1e-9:
        raise SceneInvariantError(
            "probe.scheme.branching",
            f"branching_bright + branching_dark must equal 1, got {bb + bd}")
    scheme_cfg = SchemeConfig(
        pump_rate=scheme_node.number("pump_rate", default=1e6, minimum=0.0),
        nonradiative_rate=scheme_node.number("nonradiative_rate", default=1e9, minimum=0.0),
        branching_bright=bb, branching_dark=bd,
        radiative_rate=scheme_node.number("radiative_rate", default=1e8, exclusive_min=0.0),
        dark_decay_rate=scheme_node.number("dark_decay_rate", default=1e5, minimum=0.0))
    scheme_node.done()

    line_node = probe_node.child("line")
    lw_raw = line_node.raw("linewidth_T", LINEWIDTH_PRESETS_T["quantum_dot_narrow"])
    if isinstance(lw_raw, str):
        if lw_raw not in LINEWIDTH_PRESETS_T:
            raise SceneInvariantError(
                "probe.line.linewidth_T",
                f"unknown preset {lw_raw!r}; presets: {sorted(LINEWIDTH_PRESETS_T)}")
        linewidth = LINEWIDTH_PRESETS_T[lw_raw]
    elif isinstance(lw_raw, bool) or not isinstance(lw_raw, (int, float)):
        raise SceneInvariantError("probe.line.linewidth_T",
                                  f"expected a number or preset name, got {lw_raw!r}")
    else:
        linewidth = float(lw_raw)
        if not (math.isfinite(linewidth) and linewidth > 0.0):
            raise SceneInvariantError("probe.line.linewidth_T",
                                      f"must be > 0, got {linewidth}")
    g_factor = line_node.number("g_factor", default=2.0023, exclusive_min=0.0)
    rf_default = float(np.linalg.norm(bias)) * gyromagnetic_ratio(g_factor)
    line_cfg = LineConfig(
        g_factor=g_factor, linewidth_T=linewidth,
        max_rf_rate=line_node.number("max_rf_rate", default=1e8, minimum=0.0),
        rf_amplitude_scale=line_node.number("rf_amplitude_scale", default=1.0, minimum=0.0),
        rf_frequency_hz=line_node.number("rf_frequency_hz", default=rf_default, minimum=0.0))
    line_node.done()
    probe_node.done()

    # sweep ------------------------------------------------------------------
    sweep_node = root.child("sweep")
    mode = sweep_node.string("mode", default="field", choices={"field", "frequency"})
    if mode == "field":
        anchor, what = float(np.linalg.norm(bias)), "bias field magnitude"
    else:
        anchor, what = line_cfg.rf_frequency_hz, "rf frequency"
    have_defaults = anchor > 0.0
    start = sweep_node.number("start", default=(0.85 * anchor if have_defaults else None))
    stop = sweep_node.number("stop", default=(1.15 * anchor if have_defaults else None))
    if start >= stop:
        raise SceneInvariantError("sweep.start", f"need start < stop, got [{start}, {stop}]")
    sweep_cfg = SweepConfig(
        mode=mode, start=start, stop=stop,
        points=sweep_node.integer("points", default=201, minimum=3),
        dwell_time_s=sweep_node.number("dwell_time_s", default=1e-3, exclusive_min=0.0),
        tip_nm=sweep_node.vector("tip_nm", 2, default=(0.0, 0.0)))
    sweep_node.done()

    # scan -------------------------------------------------------------------
    scan_node = root.child("scan")
    scan_cfg = ScanConfig(
        x_range_nm=scan_node.number("x_range_nm", default=10.0, exclusive_min=0.0),
        y_range_nm=scan_node.number("y_range_nm", default=10.0, exclusive_min=0.0),
        nx=scan_node.integer("nx", default=33, minimum=1),
        ny=scan_node.integer("ny", default=33, minimum=1),
        center_nm=scan_node.vector("center_nm", 2, default=(0.0, 0.0)),
        observable=scan_node.string("observable", default="shift",
                                    choices={"shift", "contrast"}))
    scan_node.done()

    # noise ------------------------------------------------------------------
    noise_node = root.child("noise")
    noise_cfg = NoiseConfig(
        enabled=noise_node.boolean("enabled", default=True),
        rng_seed=noise_node.integer("rng_seed", default=0, minimum=0),
        photon_rate_scale=noise_node.number("photon_rate_scale", default=1.0,
                                            exclusive_min=0.0))
    noise_node.done()

    # modality ---------------------------------------------------------------
    modality_node = root.child("modality")
    kind = modality_node.string("kind", default="afm_nsom",
                                choices=set(MODALITY_JITTER_DEFAULTS))
    jitter_nm = modality_node.number(
        "positioning_jitter_rms_nm",
        default=MODALITY_JITTER_DEFAULTS[kind] / NM, minimum=0.0)
    modality_cfg = ModalityConfig(kind=kind, positioning_jitter_rms_nm=jitter_nm)
    modality_node.done()

    root.done()

    config = SceneConfig(sample=sample_cfg, geometry=geometry_cfg,
                         scheme=scheme_cfg, line=line_cfg, sweep=sweep_cfg,
                         scan=scan_cfg, noise=noise_cfg, modality=modality_cfg)

    # re-validate every inner-type invariant by constructing the domain objects
    with _rebuild("sample"):
        config.build_sample()
    with _rebuild("probe"):
        config.build_probe()
    with _rebuild("sweep"):
        config.build_sweep_spec()
    with _rebuild("noise"):
        config.build_noise()
    with _rebuild("scan"):
        config.build_scan_spec()
    with _rebuild("modality"):
        config.build_modality()
    return config
