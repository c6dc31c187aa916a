"""Planar-interface reflection at imaginary frequency and the PFA reference.

Fresnel coefficients in the TE/TM basis, their expression in the waveguide
H/E basis used by the grating modules, and the plane Casimir-Polder potential
U0(z) evaluated through the shared integrator with a trivial (j-diagonal)
reflection operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C_LIGHT
from .errors import AmbiguousBranchError, InputError, SingularNodeError

EDGE_REL_TOL = 1e-12


@dataclass(frozen=True)
class FresnelPair:
    """TE/TM reflection amplitudes at one (k, xi) node for permittivity eps."""

    r_te: float
    r_tm: float
    k: float
    xi: float
    eps: float


def fresnel(eps, k, xi) -> FresnelPair:
    """Fresnel amplitudes at imaginary frequency.

    With kappa = sqrt(k^2 + xi^2/c^2) and kappa_t = sqrt(k^2 + eps xi^2/c^2):

        r_TE = (kappa - kappa_t) / (kappa + kappa_t)
        r_TM = (eps kappa - kappa_t) / (eps kappa + kappa_t)
    """
    if eps < 1.0:
        raise InputError("eps must be >= 1")
    if k <= 0.0 and xi <= 0.0:
        raise InputError("need xi > 0 or k > 0")
    xic = xi / C_LIGHT
    kappa = math.hypot(k, xic)
    kappa_t = math.sqrt(k * k + eps * xic * xic)
    r_te = (kappa - kappa_t) / (kappa + kappa_t)
    r_tm = (eps * kappa - kappa_t) / (eps * kappa + kappa_t)
    return FresnelPair(r_te=r_te, r_tm=r_tm, k=k, xi=xi, eps=eps)


def fresnel_he(eps, kx, ky, xi):
    """Plane reflection operator in the H/E basis at one node, as a 2x2 array
    ordered [H, E] on both indices (incident downward -> reflected upward,
    amplitudes referenced at the interface).

    Obtained by rotating diag(r_TE, r_TM) from the TE/TM eigenbasis with the
    branch-free coefficients u = kappa ky / (kappa_y k), v = (xi/c) kx /
    (kappa_y k) (u^2 + v^2 = 1); at ky = 0 it reduces exactly to
    diag(r_TM, r_TE).
    """
    if xi == 0.0 and ky == 0.0:
        raise SingularNodeError("plane H/E basis is singular at xi = 0 with ky = 0")
    k = math.hypot(kx, ky)
    pair = fresnel(eps, k, xi)
    return _he_from_tetm(pair.r_te, pair.r_tm, kx, ky, xi, k)


def _he_from_tetm(r_te, r_tm, kx, ky, xi, k):
    xic = xi / C_LIGHT
    kappa_y = math.hypot(ky, xic)
    if k == 0.0:
        u, v = 0.0, 1.0  # normal incidence; result is direction-independent
    else:
        kappa = math.hypot(k, xic)
        u = kappa * ky / (kappa_y * k)
        v = xic * kx / (kappa_y * k)
    cross = (r_te + r_tm) * u * v
    return np.array([[-r_te * u * u + r_tm * v * v, cross],
                     [-cross, r_te * v * v - r_tm * u * u]])


def fresnel_he_grid(eps, kx, ky, xi):
    """Vectorized fresnel_he over an array of kx at fixed (ky, xi).

    Returns an array of shape kx.shape + (2, 2).
    """
    kx = np.asarray(kx, dtype=float)
    xic = xi / C_LIGHT
    k = np.hypot(kx, ky)
    kappa = np.hypot(k, xic)
    kappa_t = np.sqrt(k * k + eps * xic * xic)
    r_te = (kappa - kappa_t) / (kappa + kappa_t)
    r_tm = (eps * kappa - kappa_t) / (eps * kappa + kappa_t)
    kappa_y = math.hypot(ky, xic)
    safe_k = np.where(k > 0.0, k, 1.0)
    u = np.where(k > 0.0, kappa * ky / (kappa_y * safe_k), 0.0)
    v = np.where(k > 0.0, xic * kx / (kappa_y * safe_k), 1.0)
    cross = (r_te + r_tm) * u * v
    out = np.empty(kx.shape + (2, 2))
    out[..., 0, 0] = -r_te * u * u + r_tm * v * v
    out[..., 0, 1] = cross
    out[..., 1, 0] = -cross
    out[..., 1, 1] = r_te * v * v - r_tm * u * u
    return out


def local_height(geom, x_a):
    """Surface height h(x_a): 0 over grooves, a over ridges (origin at a
    groove midpoint). Raises AmbiguousBranchError exactly on a groove edge."""
    xm = x_a - geom.d * round(x_a / geom.d)
    half_groove = 0.5 * geom.s
    if abs(abs(xm) - half_groove) <= EDGE_REL_TOL * geom.d:
        raise AmbiguousBranchError(
            f"x_A={x_a} is on a groove edge; local height is ambiguous (0 or {geom.a})")
    return 0.0 if abs(xm) < half_groove else geom.a


def plane_potential(p, df, z, quad=None):
    """Plane-surface Casimir-Polder potential U0(z) in J (z > 0).

    Evaluated with the shared integrator (single zone, the Brillouin integral
    and zone sum collapsed to a 2-D transverse k-integral).
    """
    from .potential import plane_potential_values

    return float(plane_potential_values(p, df, [z], quad=quad)[0])


def pfa_potential(p, df, geom, x_a, z_a, quad=None):
    """Proximity-force approximation U0(z_a - h(x_a)).

    Raises RegionError when the atom sits at or below the local surface and
    AmbiguousBranchError on a groove edge (both PFA branches reported there).
    """
    from .errors import RegionError
    from .potential import plane_potential_values

    try:
        h = local_height(geom, x_a)
    except AmbiguousBranchError:
        if z_a <= geom.a:
            raise RegionError(f"z_A={z_a} is at or below the local surface")
        both = plane_potential_values(p, df, [z_a, z_a - geom.a], quad=quad)
        raise AmbiguousBranchError(
            f"x_A={x_a} is on a groove edge; groove branch U0(z_A)={both[0]:.6e} J, "
            f"plateau branch U0(z_A - a)={both[1]:.6e} J",
            groove_value=float(both[0]), plateau_value=float(both[1]))
    if z_a <= h:
        raise RegionError(f"z_A={z_a} is at or below the local surface height {h}")
    return float(plane_potential_values(p, df, [z_a - h], quad=quad)[0])


class PlanePotential:
    """Callable U0(z) with per-z memoization, shared by PFA/rho scans."""

    def __init__(self, p, df, quad=None):
        self.p = p
        self.df = df
        self.quad = quad
        self._cache = {}

    def __call__(self, z):
        key = float(z)
        if key not in self._cache:
            self._cache[key] = plane_potential(self.p, self.df, key, quad=self.quad)
        return self._cache[key]
