"""Fundamental constants, SI units throughout.

The values are the rounded ones every downstream number in this package is
calibrated against; do not swap in full-precision CODATA values without
re-deriving the frozen expectations in the test suite.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    mu0_over_4pi: float = 1.0e-7      # N/A^2
    bohr_magneton: float = 9.274e-24  # J/T
    g_electron: float = 2.0023        # dimensionless
    planck_h: float = 6.626e-34       # J*s


CONST = PhysicalConstants()

# magnetic moment of one unpaired electron, |m| = (1/2) g_e mu_B
ELECTRON_MOMENT = 0.5 * CONST.g_electron * CONST.bohr_magneton  # J/T


def gyromagnetic_ratio(g_factor: float) -> float:
    """Zeeman slope g*mu_B/h in Hz/T for the given g-factor."""
    return (g_factor * CONST.bohr_magneton) / CONST.planck_h
