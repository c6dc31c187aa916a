"""Physical constants (CODATA 2018) and unit conversions.

All internal quantities are SI; conversions happen only at config ingestion.
"""

import math

HBAR = 1.054571817e-34     # J s
C_LIGHT = 299792458.0      # m / s
EPS0 = 8.8541878128e-12    # F / m
BOHR_RADIUS = 5.29177210903e-11  # m
EV = 1.602176634e-19       # J


def omega_from_ev(energy_ev):
    """Photon energy in eV -> angular frequency in rad/s."""
    return energy_ev * EV / HBAR


def alpha_si_from_au(alpha_au):
    """Polarizability in atomic units -> SI (C m^2 / V)."""
    return 4.0 * math.pi * EPS0 * BOHR_RADIUS**3 * alpha_au


def alpha_au_from_si(alpha_si):
    """Polarizability in SI (C m^2 / V) -> atomic units."""
    return alpha_si / (4.0 * math.pi * EPS0 * BOHR_RADIUS**3)
