"""Independent oracles the test suite holds the implementation against.

Each function here deliberately takes a different route than the
production code: dense linear algebra instead of the closed form, plain
term-by-term loops instead of vectorized kernels, exhaustive search
instead of Gauss-Newton, finite differences instead of analytic
derivatives. Keep it that way; the point is two independent paths to the
same numbers.
"""

import math

import numpy as np

MU0_OVER_4PI = 1.0e-7
BOHR_MAGNETON = 9.274e-24
G_ELECTRON = 2.0023
PLANCK_H = 6.626e-34


def dipole_field_reference(moment, displacement):
    """Plain-float dipole formula, one term, no vectorization."""
    mx, my, mz = (float(c) for c in moment)
    dx, dy, dz = (float(c) for c in displacement)
    r = math.sqrt(dx * dx + dy * dy + dz * dz)
    nx, ny, nz = dx / r, dy / r, dz / r
    mdotn = mx * nx + my * ny + mz * nz
    pref = MU0_OVER_4PI / r**3
    return (pref * (3.0 * nx * mdotn - mx),
            pref * (3.0 * ny * mdotn - my),
            pref * (3.0 * nz * mdotn - mz))


def dipole_sum_reference(positions, moments, point):
    """Term-by-term superposition of dipole_field_reference."""
    total = [0.0, 0.0, 0.0]
    for pos, mom in zip(positions, moments):
        d = (point[0] - pos[0], point[1] - pos[1], point[2] - pos[2])
        f = dipole_field_reference(mom, d)
        total = [t + c for t, c in zip(total, f)]
    return np.array(total)


def steady_state_dense(pump, k23, beta_b, beta_d, k_r, k_d, W):
    """Dense 4x4 solve of the rate equations with the conservation row."""
    A = np.array([
        [-pump, 0.0, k_r, k_d],
        [pump, -k23, 0.0, 0.0],
        [0.0, beta_b * k23, -(k_r + W), W],
        [1.0, 1.0, 1.0, 1.0],
    ])
    rhs = np.array([0.0, 0.0, 0.0, 1.0])
    return np.linalg.solve(A, rhs)


def rate_equation_residuals(pump, k23, beta_b, beta_d, k_r, k_d, W, n):
    """All four dn/dt values for the candidate populations ``n``."""
    n1, n2, n3b, n3d = n
    return np.array([
        -pump * n1 + k_r * n3b + k_d * n3d,
        pump * n1 - k23 * n2,
        beta_b * k23 * n2 - k_r * n3b + W * (n3d - n3b),
        beta_d * k23 * n2 - k_d * n3d + W * (n3b - n3d),
    ])


def lorentzian_reference(x, center, fwhm, amplitude, offset):
    """The fit model, straight from the formula."""
    x = np.asarray(x, dtype=float)
    q = (0.5 * fwhm) ** 2
    return offset + amplitude * q / ((x - center) ** 2 + q)


def numerical_jacobian(x, center, fwhm, amplitude, offset, rel_step=1e-6):
    """Central-difference Jacobian of the Lorentzian model, (M, 4)."""
    p = np.array([center, fwhm, amplitude, offset], dtype=float)
    jac = np.empty((len(x), 4))
    for k in range(4):
        h = rel_step * max(abs(p[k]), 1e-30)
        hi, lo = p.copy(), p.copy()
        hi[k] += h
        lo[k] -= h
        jac[:, k] = (lorentzian_reference(x, *hi) - lorentzian_reference(x, *lo)) / (2 * h)
    return jac


def grid_search_center(x, y, center_refine=10, n_widths=160):
    """Exhaustive Lorentzian fit: scan centers on a grid finer than the
    abscissa by ``center_refine``, profile the width over a log grid and
    amplitude/offset by an exact 2x2 linear solve. Returns the center.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(x)
    dx = (x[-1] - x[0]) / (n - 1)
    span = x[-1] - x[0]
    centers = np.arange(x[0], x[-1] + dx / (2 * center_refine), dx / center_refine)
    widths = np.geomspace(dx / 2, 2 * span, n_widths)

    sum_y = float(y.sum())
    best_sse, best_center = np.inf, centers[0]
    for c in centers:
        d2 = (x - c) ** 2
        u = (0.5 * widths[:, None]) ** 2 / (d2[None, :] + (0.5 * widths[:, None]) ** 2)
        s_u = u.sum(axis=1)
        s_uu = (u * u).sum(axis=1)
        s_uy = u @ y
        det = s_uu * n - s_u * s_u
        ok = det > 1e-300
        amp = np.where(ok, (s_uy * n - s_u * sum_y) / np.where(ok, det, 1.0), 0.0)
        off = (sum_y - amp * s_u) / n
        resid = y[None, :] - (off[:, None] + amp[:, None] * u)
        sse = (resid * resid).sum(axis=1)
        k = int(np.argmin(sse))
        if sse[k] < best_sse:
            best_sse, best_center = float(sse[k]), float(c)
    return best_center


def shift_profile(x, height, moment_z, resonant_field):
    """Field-sweep shift a scan should record for a spin under the tip.

    Exact resonance condition |b z + Bs(x)| = B_res solved for the swept
    bias b, minus the spin-free center B_res. 1-D lateral profile at the
    sensing height; bias along +z, moment (0, 0, moment_z).
    """
    x = np.asarray(x, dtype=float)
    h = height
    r2 = x * x + h * h
    r = np.sqrt(r2)
    bz = MU0_OVER_4PI * moment_z * (3.0 * h * h / r2 - 1.0) / (r2 * r)
    bx = MU0_OVER_4PI * moment_z * (3.0 * x * h / r2) / (r2 * r)
    return -bz + np.sqrt(resonant_field**2 - bx**2) - resonant_field


def profile_fwhm(x, values):
    """FWHM of |values| by dense linear interpolation around the peak."""
    p = np.abs(np.asarray(values, dtype=float))
    i = int(np.argmax(p))
    half = p[i] / 2.0

    def walk(direction):
        j = i
        while 0 <= j + direction < len(p):
            if p[j + direction] <= half:
                t = (p[j] - half) / (p[j] - p[j + direction])
                return x[j] + t * (x[j + direction] - x[j])
            j += direction
        raise ValueError("half-max crossing not inside the profile")

    return walk(+1) - walk(-1)


def dense_shift_fwhm(height, moment_z=9.28e-24, resonant_field=0.2,
                     half_window=5e-9, n=400001):
    """FWHM of the dense shift profile; the lateral-resolution oracle."""
    x = np.linspace(-half_window, half_window, n)
    return float(profile_fwhm(x, shift_profile(x, height, moment_z, resonant_field)))
