"""Batch front-end: odmr-scanscope <sweep|scan|fit|report>.

Each subcommand reads a JSON scene file, runs the corresponding pipeline,
and writes the documented output files into --out (default: cwd):

    sweep   spectrum.csv, plus spectrum_noisy.csv when noise is enabled
    scan    scan.csv (matrix), scan.pgm (16-bit P5), scan_meta.json
    fit     fit.json from an input spectrum CSV (--input)
    report  report.json with the single-spin detectability numbers

Exit codes: 0 success; 2 scene syntax error; 3 unknown scene key;
4 scene invariant violation; 5 domain error; 6 fit failure; 7 scan
failure; 8 I/O error; 1 anything unexpected. Failures emit a one-line
machine-readable JSON object on stderr.
"""

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .errors import (DomainError, FitError, ScanError, SceneInvariantError,
                     SceneSyntaxError, SceneUnknownKeyError)
from .noise import NoiseSpec
from .scanner import (detectability_report, image_to_matrix_csv, image_to_pgm,
                      report_to_json, scan)
from .scene import parse_scene
from .spectroscopy import (add_shot_noise, fit_lorentzian, fit_result_to_json,
                           spectrum_from_csv, spectrum_to_csv, sweep)

DEFAULT_PHOTON_BUDGET = 1e6

EXIT_CODES = (
    (SceneSyntaxError, 2),
    (SceneUnknownKeyError, 3),
    (SceneInvariantError, 4),
    (FitError, 6),
    (ScanError, 7),
    (DomainError, 5),
    (OSError, 8),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odmr-scanscope",
        description="Virtual ODMR scanning spin microscope (batch runner).")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scene_required=True):
        p.add_argument("--scene", required=scene_required,
                       help="scene JSON file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scene's noise seed (u64)")
        p.add_argument("--no-noise", action="store_true",
                       help="disable shot noise regardless of the scene")
        p.add_argument("--threads", type=int, default=None,
                       help="scan worker threads (default: "
                            "$ODMR_SCANSCOPE_THREADS or 1)")

    common(sub.add_parser("sweep", help="synthesize one spectrum"))
    common(sub.add_parser("scan", help="raster-scan an image"))
    fit_p = sub.add_parser("fit", help="fit a Lorentzian to a spectrum CSV")
    fit_p.add_argument("--input", required=True, help="spectrum CSV to fit")
    fit_p.add_argument("--out", default=".", help="output directory")
    common(sub.add_parser("report", help="single-spin detectability report"))
    return parser


def _resolve_noise(config, args) -> NoiseSpec:
    noise = config.build_noise()
    if args.seed is not None:
        noise = NoiseSpec(enabled=noise.enabled, rng_seed=args.seed,
                          photon_rate_scale=noise.photon_rate_scale)
    if args.no_noise:
        noise = NoiseSpec(enabled=False, rng_seed=noise.rng_seed,
                          photon_rate_scale=noise.photon_rate_scale)
    return noise


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("ODMR_SCANSCOPE_THREADS", "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"ODMR_SCANSCOPE_THREADS is not an integer: {env!r}")
    return 1


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_sweep(args) -> int:
    config = parse_scene(args.scene)
    out = _out_dir(args)
    sample = config.build_sample()
    probe = config.build_probe()
    spectrum = sweep(sample, probe, config.build_sweep_spec(), config.sweep_tip_m())
    path = out / "spectrum.csv"
    spectrum_to_csv(spectrum, path)
    print(f"wrote {path}")
    noise = _resolve_noise(config, args)
    if noise.enabled:
        noisy = add_shot_noise(spectrum, noise)
        npath = out / "spectrum_noisy.csv"
        spectrum_to_csv(noisy, npath)
        print(f"wrote {npath}")
    return 0


def cmd_scan(args) -> int:
    config = parse_scene(args.scene)
    out = _out_dir(args)
    sample = config.build_sample()
    probe = config.build_probe()
    spec = config.build_scan_spec()
    noise = _resolve_noise(config, args)
    if noise != spec.noise:
        spec = replace(spec, noise=noise)
    image = scan(sample, probe, spec, config.build_modality(),
                 threads=_resolve_threads(args))
    csv_path, pgm_path, meta_path = out / "scan.csv", out / "scan.pgm", out / "scan_meta.json"
    image_to_matrix_csv(image, csv_path)
    image_to_pgm(image, pgm_path, meta_path)
    for p in (csv_path, pgm_path, meta_path):
        print(f"wrote {p}")
    return 0


def cmd_fit(args) -> int:
    spectrum = spectrum_from_csv(Path(args.input))
    fit = fit_lorentzian(spectrum)
    out = _out_dir(args)
    path = out / "fit.json"
    text = fit_result_to_json(fit, path)
    sys.stdout.write(text)
    print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    config = parse_scene(args.scene)
    out = _out_dir(args)
    probe = config.build_probe()
    sample = config.build_sample()
    kwargs = {}
    if sample.spins:
        kwargs["spin_moment"] = float(np.linalg.norm(sample.spins[0].moment))
    report = detectability_report(probe.geometry, probe.line, probe.scheme,
                                  photon_budget=DEFAULT_PHOTON_BUDGET, **kwargs)
    path = out / "report.json"
    text = report_to_json(report, path)
    sys.stdout.write(text)
    print(f"wrote {path}")
    return 0


COMMANDS = {"sweep": cmd_sweep, "scan": cmd_scan, "fit": cmd_fit,
            "report": cmd_report}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # map to documented exit codes
        code = 1
        for cls, c in EXIT_CODES:
            if isinstance(exc, cls):
                code = c
                break
        payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        path = getattr(exc, "path", None)
        if path is not None:
            payload["path"] = path
        print(json.dumps(payload), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
