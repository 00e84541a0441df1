# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: hot inner loops of sweep synthesis and line fitting.

Signature-compatible with ``_core_py``; selected at import by the package
when the extension built. Plain float64 math, validation happens upstream.
"""

import numpy as np

from libc.math cimport sqrt

BACKEND = "compiled"


def dipole_field_sum(positions, moments, point, double mu0_over_4pi):
    """Superposed point-dipole field at ``point``.

    positions, moments: (N, 3) arrays in m and J/T; returns (3,) in T.
    """
    cdef const double[:, ::1] pos = np.ascontiguousarray(positions, dtype=np.float64)
    cdef const double[:, ::1] mom = np.ascontiguousarray(moments, dtype=np.float64)
    cdef double px = point[0], py = point[1], pz = point[2]
    cdef Py_ssize_t n = pos.shape[0], i
    cdef double dx, dy, dz, r2, r, inv_r3, inv_r5, mdotd
    cdef double bx = 0.0, by = 0.0, bz = 0.0
    with nogil:
        for i in range(n):
            dx = px - pos[i, 0]
            dy = py - pos[i, 1]
            dz = pz - pos[i, 2]
            r2 = dx * dx + dy * dy + dz * dz
            r = sqrt(r2)
            inv_r3 = 1.0 / (r2 * r)
            inv_r5 = inv_r3 / r2
            mdotd = mom[i, 0] * dx + mom[i, 1] * dy + mom[i, 2] * dz
            bx += 3.0 * dx * mdotd * inv_r5 - mom[i, 0] * inv_r3
            by += 3.0 * dy * mdotd * inv_r5 - mom[i, 1] * inv_r3
            bz += 3.0 * dz * mdotd * inv_r5 - mom[i, 2] * inv_r3
    out = np.empty(3)
    out[0] = mu0_over_4pi * bx
    out[1] = mu0_over_4pi * by
    out[2] = mu0_over_4pi * bz
    return out


def swept_field_magnitudes(bias_values, bias_dir, extra):
    """|b*dir + extra| for each swept bias magnitude b. Returns (M,)."""
    cdef const double[::1] b = np.ascontiguousarray(bias_values, dtype=np.float64)
    cdef double dx = bias_dir[0], dy = bias_dir[1], dz = bias_dir[2]
    cdef double ex = extra[0], ey = extra[1], ez = extra[2]
    cdef Py_ssize_t m = b.shape[0], i
    cdef double vx, vy, vz
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(m):
            vx = b[i] * dx + ex
            vy = b[i] * dy + ey
            vz = b[i] * dz + ez
            out[i] = sqrt(vx * vx + vy * vy + vz * vz)
    return out_arr


def pl_rate_curve(field_mags, rf_freqs, double gamma, double fwhm_freq,
                  double w_peak, double pump, double k23, double beta_b,
                  double beta_d, double k_r, double k_d):
    """Photon emission rate per sweep point.

    For each point: resonance at nu0 = gamma*B, unit-peak Lorentzian
    mixing rate W, then the stationary bright-level population of the
    four-level scheme. Returns (M,) rates in photons/s.
    """
    cdef const double[::1] B = np.ascontiguousarray(field_mags, dtype=np.float64)
    cdef const double[::1] nu = np.ascontiguousarray(rf_freqs, dtype=np.float64)
    cdef Py_ssize_t m = B.shape[0], i
    cdef double hw2 = (0.5 * fwhm_freq) ** 2
    cdef double det, W, D, fb, fd, n1
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    if pump == 0.0:
        out_arr[:] = 0.0
        return out_arr
    with nogil:
        for i in range(m):
            det = nu[i] - gamma * B[i]
            W = w_peak * hw2 / (det * det + hw2)
            D = k_r * k_d + W * (k_r + k_d)
            fb = (beta_b * k_d + W) / D
            fd = (beta_d * k_r + W) / D
            n1 = 1.0 / (1.0 + pump / k23 + pump * (fb + fd))
            out[i] = k_r * pump * n1 * fb
    return out_arr


def lorentzian_model(x, double center, double fwhm, double amplitude,
                     double offset):
    """offset + amplitude*(G/2)^2 / ((x-center)^2 + (G/2)^2)."""
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0], i
    cdef double q = (0.5 * fwhm) ** 2
    cdef double d
    out_arr = np.empty(m)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(m):
            d = xv[i] - center
            out[i] = offset + amplitude * q / (d * d + q)
    return out_arr


def lorentzian_model_jac(x, double center, double fwhm, double amplitude,
                         double offset):
    """Model values and analytic Jacobian.

    Returns (model (M,), jac (M, 4)) with columns d/d(center), d/d(fwhm),
    d/d(amplitude), d/d(offset).
    """
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t m = xv.shape[0], i
    cdef double q = (0.5 * fwhm) ** 2
    cdef double d, u, u2q
    model_arr = np.empty(m)
    jac_arr = np.empty((m, 4))
    cdef double[::1] model = model_arr
    cdef double[:, ::1] jac = jac_arr
    with nogil:
        for i in range(m):
            d = xv[i] - center
            u = q / (d * d + q)
            model[i] = offset + amplitude * u
            u2q = u * u / q
            jac[i, 0] = amplitude * 2.0 * d * u2q
            jac[i, 1] = amplitude * (0.5 * fwhm) * d * d * u2q / q
            jac[i, 2] = u
            jac[i, 3] = 1.0
    return model_arr, jac_arr
