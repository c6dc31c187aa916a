"""Diffraction-channel kinematics and polarization algebra at imaginary frequency.

A channel is labelled by the Brillouin-zone integer j on top of (kx0, ky, xi);
its transverse x-wavevector is kxj = kx0 + 2 pi j / d and the vacuum decay
constant is kappa_j = sqrt(kxj^2 + ky^2 + xi^2/c^2).

The polarization basis follows waveguide conventions: H has E_y = 0, E has
H_y = 0. The scalar products of the corresponding unit vectors, analytically
continued to omega = i xi, are real closed forms implemented here; the
complex unit-vector construction lives only in the test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .constants import C_LIGHT
from .errors import InputError, SingularNodeError


class Polarization(IntEnum):
    H = 0
    E = 1


@dataclass(frozen=True)
class DiffractionChannel:
    j: int
    kx0: float
    ky: float
    xi: float
    d: float
    kxj: float
    kappa: float


def make_channel(j, kx0, ky, xi, d) -> DiffractionChannel:
    """Build the channel (j, kx0, ky, xi) for period d.

    kx0 must already lie in the first Brillouin zone [-pi/d, pi/d]; values
    outside are rejected rather than folded. kappa is computed hypot-style.
    """
    if d <= 0.0:
        raise InputError("period d must be > 0")
    if xi < 0.0:
        raise InputError("xi must be >= 0")
    zone = math.pi / d
    if abs(kx0) > zone * (1.0 + 1e-12):
        raise InputError(f"kx0={kx0} outside first Brillouin zone [-{zone}, {zone}]")
    kxj = kx0 + 2.0 * math.pi * j / d
    kappa = math.hypot(kxj, ky, xi / C_LIGHT)
    return DiffractionChannel(j=int(j), kx0=float(kx0), ky=float(ky), xi=float(xi),
                              d=float(d), kxj=kxj, kappa=kappa)


@dataclass(frozen=True)
class PolarizationOverlap:
    """2x2 real matrix O[p][p'] = eps_hat_p^+ (j) . eps_hat_p'^- (j')."""

    matrix: np.ndarray
    j_out: int
    j_in: int

    def __getitem__(self, pols):
        p, pp = pols
        return self.matrix[int(p), int(pp)]


def polarization_overlap(out_ch: DiffractionChannel, in_ch: DiffractionChannel) -> PolarizationOverlap:
    """Overlap matrix between the outgoing channel j and incoming channel j'.

    Closed forms (c = speed of light):

        O[H][H] = -(kxj kxj' + kappa_j kappa_j') / (xi^2/c^2 + ky^2)
        O[E][E] = 1 + (c^2 ky^2 / xi^2) (1 - O[H][H])
        O[E][H] = -O[H][E]
                = c^3 ky (kxj' kappa_j + kxj kappa_j') / (xi (xi^2 + c^2 ky^2))

    For ky = 0 the cross terms vanish identically and O[E][E] = 1.
    """
    for name in ("kx0", "ky", "xi"):
        if getattr(out_ch, name) != getattr(in_ch, name):
            raise InputError(f"channels disagree on {name}")
    o_hh, o_ee, o_eh = overlap_blocks(
        np.array([out_ch.kxj]), np.array([out_ch.kappa]),
        np.array([in_ch.kxj]), np.array([in_ch.kappa]),
        out_ch.ky, out_ch.xi,
    )
    matrix = np.array([[o_hh[0, 0], -o_eh[0, 0]],
                       [o_eh[0, 0], o_ee[0, 0]]])
    return PolarizationOverlap(matrix=matrix, j_out=out_ch.j, j_in=in_ch.j)


def overlap_blocks(kxj_out, kappa_out, kxj_in, kappa_in, ky, xi):
    """Vectorized overlap blocks over channel grids.

    Inputs may carry leading batch dimensions; the last axis indexes zones.
    Returns (O_HH, O_EE, O_EH) with shape (..., n_out, n_in); O_HE = -O_EH.
    """
    if xi == 0.0 and ky == 0.0:
        raise SingularNodeError("overlaps are singular at xi = 0 with ky = 0; "
                                "quadrature rules must not place nodes there")
    xic = xi / C_LIGHT
    denom = xic**2 + ky**2
    kx_o = np.asarray(kxj_out)[..., :, None]
    kx_i = np.asarray(kxj_in)[..., None, :]
    ka_o = np.asarray(kappa_out)[..., :, None]
    ka_i = np.asarray(kappa_in)[..., None, :]

    o_hh = -(kx_o * kx_i + ka_o * ka_i) / denom
    if ky == 0.0:
        o_ee = np.ones_like(o_hh)
        o_eh = np.zeros_like(o_hh)
    else:
        o_ee = 1.0 + (C_LIGHT**2 * ky**2 / xi**2) * (1.0 - o_hh)
        o_eh = (C_LIGHT**3 * ky / (xi * (xi**2 + C_LIGHT**2 * ky**2))) * (
            kx_i * ka_o + kx_o * ka_i
        )
    return o_hh, o_ee, o_eh
