"""Kernel backend selection.

Imports the compiled Cython kernels when the extension is available,
otherwise the numpy fallback. Set ODMR_SCANSCOPE_PURE=1 to force the
fallback (used by the benchmark and the backend-equivalence tests).
"""

import os

from . import _core_py

if os.environ.get("ODMR_SCANSCOPE_PURE", "") not in ("", "0"):
    _impl = _core_py
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _core_py

BACKEND = _impl.BACKEND
dipole_field_sum = _impl.dipole_field_sum
swept_field_magnitudes = _impl.swept_field_magnitudes
pl_rate_curve = _impl.pl_rate_curve
lorentzian_model = _impl.lorentzian_model
lorentzian_model_jac = _impl.lorentzian_model_jac


def available_backends():
    """Names of importable kernel backends (for benchmarks/tests)."""
    names = ["pure"]
    try:
        from . import _core  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the kernel module for ``name`` ('pure' or 'compiled')."""
    if name == "pure":
        return _core_py
    if name == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown kernel backend: {name!r}")
