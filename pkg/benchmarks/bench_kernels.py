#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the three hot kernels at scan-realistic sizes plus one end-to-end
pixel (sweep synthesis + Lorentzian fit). Run from a checkout with the
extension built:

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from odmr_scanscope import (LevelScheme, OdmrLine, Probe, ProbeGeometry,
                            Sample, SpinDipole, SweepSpec, fit_lorentzian,
                            sweep, zeeman_frequency)
from odmr_scanscope._kernels import available_backends, get_backend


def timeit(fn, repeat, number):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def bench_kernels(repeat):
    rng = np.random.default_rng(0)
    positions = rng.uniform(-5e-9, 5e-9, (100, 3))
    moments = rng.normal(size=(100, 3)) * 1e-23
    point = np.array([0.0, 0.0, 2e-8])
    b_values = np.linspace(0.18, 0.205, 200)
    direction = np.array([0.0, 0.0, 1.0])
    extra = np.array([1e-4, -2e-4, 1.4e-2])
    nu = np.full(200, 5.605e9)
    x = np.linspace(0.18, 0.205, 200)

    cases = {
        "dipole_field_sum (100 spins)":
            lambda k: k.dipole_field_sum(positions, moments, point, 1e-7),
        "swept_field_magnitudes (200 pts)":
            lambda k: k.swept_field_magnitudes(b_values, direction, extra),
        "pl_rate_curve (200 pts)":
            lambda k: k.pl_rate_curve(b_values, nu, 2.8025e10, 5.605e7, 1e5,
                                      1e6, 1e9, 0.7, 0.3, 1e8, 1e5),
        "lorentzian_model_jac (200 pts)":
            lambda k: k.lorentzian_model_jac(x, 0.1925, 2.24e-3, 100.0, 175.0),
    }

    backends = {name: get_backend(name) for name in available_backends()}
    results = {}
    for label, fn in cases.items():
        results[label] = {
            name: timeit(lambda k=kernel: fn(k), repeat, 2000)
            for name, kernel in backends.items()
        }
    return results


def bench_pixel(repeat):
    """One scan pixel end to end: 200-point sweep synthesis plus the fit."""
    import odmr_scanscope.spectroscopy as spectroscopy
    from odmr_scanscope import _kernels

    line = OdmrLine(rf_frequency=zeeman_frequency(0.2), rf_amplitude_scale=1e-3)
    probe = Probe(geometry=ProbeGeometry(), scheme=LevelScheme(), line=line)
    rng = np.random.default_rng(1)
    spins = tuple(
        SpinDipole(p, m) for p, m in zip(rng.uniform(-5e-8, 5e-8, (100, 3)),
                                         rng.normal(size=(100, 3)) * 1e-23))
    sample = Sample(spins=spins, bias_field=(0, 0, 0.2))
    spec = SweepSpec(mode="field", start=0.18, stop=0.205, points=200)

    def one_pixel():
        s = sweep(sample, probe, spec, (1e-9, -1e-9))
        fit_lorentzian(s)

    results = {}
    saved = (_kernels.dipole_field_sum, _kernels.swept_field_magnitudes,
             _kernels.pl_rate_curve, _kernels.lorentzian_model,
             _kernels.lorentzian_model_jac)
    try:
        for name in available_backends():
            impl = get_backend(name)
            _kernels.dipole_field_sum = impl.dipole_field_sum
            _kernels.swept_field_magnitudes = impl.swept_field_magnitudes
            _kernels.pl_rate_curve = impl.pl_rate_curve
            _kernels.lorentzian_model = impl.lorentzian_model
            _kernels.lorentzian_model_jac = impl.lorentzian_model_jac
            results[name] = timeit(one_pixel, repeat, 50)
    finally:
        (_kernels.dipole_field_sum, _kernels.swept_field_magnitudes,
         _kernels.pl_rate_curve, _kernels.lorentzian_model,
         _kernels.lorentzian_model_jac) = saved
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = available_backends()
    print(f"backends available: {', '.join(backends)}")
    if len(backends) < 2:
        print("compiled extension not built; benchmarking the fallback only")

    rows = bench_kernels(args.repeat)
    rows["scan pixel: sweep + fit"] = bench_pixel(args.repeat)

    width = max(len(k) for k in rows)
    header = f"{'case':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, times in rows.items():
        line = f"{label:<{width}}  "
        for b in backends:
            line += f"{times[b] * 1e6:>10.1f}us"
        if len(backends) == 2:
            line += f"{times['pure'] / times['compiled']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
