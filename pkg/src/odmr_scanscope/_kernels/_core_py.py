"""Pure numpy kernels.

Reference implementation of the hot inner loops; the Cython module
``_core`` mirrors these signatures operation for operation.  Inputs are
assumed validated by the calling layer: these functions do plain float64
math with no domain checks.
"""

import numpy as np

BACKEND = "pure"


def dipole_field_sum(positions, moments, point, mu0_over_4pi):
    """Superposed point-dipole field at ``point``.

    positions, moments: (N, 3) arrays in m and J/T; returns (3,) in T.
    """
    positions = np.asarray(positions, dtype=np.float64)
    moments = np.asarray(moments, dtype=np.float64)
    if positions.shape[0] == 0:
        return np.zeros(3)
    d = np.asarray(point, dtype=np.float64) - positions      # (N, 3)
    r2 = np.einsum("ij,ij->i", d, d)                          # (N,)
    r = np.sqrt(r2)
    inv_r5 = 1.0 / (r2 * r2 * r)
    mdotd = np.einsum("ij,ij->i", moments, d)                 # (N,)
    field = 3.0 * d * (mdotd * inv_r5)[:, None] - moments * (1.0 / (r2 * r))[:, None]
    return mu0_over_4pi * field.sum(axis=0)


def swept_field_magnitudes(bias_values, bias_dir, extra):
    """|b*dir + extra| for each swept bias magnitude b. Returns (M,)."""
    b = np.asarray(bias_values, dtype=np.float64)
    dx, dy, dz = (float(v) for v in bias_dir)
    ex, ey, ez = (float(v) for v in extra)
    return np.sqrt((b * dx + ex) ** 2 + (b * dy + ey) ** 2 + (b * dz + ez) ** 2)


def pl_rate_curve(field_mags, rf_freqs, gamma, fwhm_freq, w_peak,
                  pump, k23, beta_b, beta_d, k_r, k_d):
    """Photon emission rate per sweep point.

    For each point: resonance at nu0 = gamma*B, unit-peak Lorentzian
    mixing rate W, then the stationary bright-level population of the
    four-level scheme. Returns (M,) rates in photons/s.
    """
    B = np.asarray(field_mags, dtype=np.float64)
    nu = np.asarray(rf_freqs, dtype=np.float64)
    if pump == 0.0:
        return np.zeros(np.broadcast(B, nu).shape)
    hw2 = (0.5 * fwhm_freq) ** 2
    W = w_peak * hw2 / ((nu - gamma * B) ** 2 + hw2)
    D = k_r * k_d + W * (k_r + k_d)
    fb = (beta_b * k_d + W) / D
    fd = (beta_d * k_r + W) / D
    n1 = 1.0 / (1.0 + pump / k23 + pump * (fb + fd))
    return k_r * pump * n1 * fb


def lorentzian_model(x, center, fwhm, amplitude, offset):
    """offset + amplitude*(G/2)^2 / ((x-center)^2 + (G/2)^2)."""
    d = np.asarray(x, dtype=np.float64) - center
    q = (0.5 * fwhm) ** 2
    return offset + amplitude * q / (d * d + q)


def lorentzian_model_jac(x, center, fwhm, amplitude, offset):
    """Model values and analytic Jacobian.

    Returns (model (M,), jac (M, 4)) with columns d/d(center), d/d(fwhm),
    d/d(amplitude), d/d(offset).
    """
    x = np.asarray(x, dtype=np.float64)
    d = x - center
    q = (0.5 * fwhm) ** 2
    u = q / (d * d + q)
    model = offset + amplitude * u
    jac = np.empty((x.shape[0], 4))
    u2_over_q = u * u / q
    jac[:, 0] = amplitude * 2.0 * d * u2_over_q
    jac[:, 1] = amplitude * (0.5 * fwhm) * d * d * u2_over_q / q
    jac[:, 2] = u
    jac[:, 3] = 1.0
    return model, jac
