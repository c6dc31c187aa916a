"""Geometry diagnostics: PFA ratio rho, plateau aperture angle, sinusoidal
fit of the lateral profile, spatial average and lateral stiffness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousBranchError, InputError, RegionError
from .plane import local_height
from .potential import PotentialField, evaluate


@dataclass(frozen=True)
class RhoPoint:
    """Exact-to-PFA ratio at one lateral position."""

    x_a: float
    z_a: float
    u: float
    u_ref: float
    rho: float
    branch: str


def rho(field: PotentialField, plane_ref, x_a) -> RhoPoint:
    """rho = U(x_A, z_A)/U0(z_A) above grooves, U(x_A, z_A)/U0(z_A - a)
    above plateaus; plane_ref is a callable z -> U0(z).

    On a groove edge the PFA branch is ambiguous and both values are
    reported in the raised error.
    """
    geom = field.geometry
    u = evaluate(field, x_a)
    try:
        h = local_height(geom, x_a)
    except AmbiguousBranchError:
        groove_ref = plane_ref(field.z_a)
        plateau_ref = plane_ref(field.z_a - geom.a)
        raise AmbiguousBranchError(
            f"x_A={x_a} is on a groove edge; rho would be "
            f"{u / groove_ref:.6f} (groove branch) or {u / plateau_ref:.6f} "
            "(plateau branch)",
            groove_value=u / groove_ref, plateau_value=u / plateau_ref)
    if field.z_a <= h:
        raise RegionError(f"z_A={field.z_a} at or below local surface")
    u_ref = plane_ref(field.z_a - h)
    branch = "groove" if h == 0.0 else "plateau"
    return RhoPoint(x_a=float(x_a), z_a=field.z_a, u=float(u),
                    u_ref=float(u_ref), rho=float(u / u_ref), branch=branch)


def aperture_angle(geom, z_a):
    """Angular aperture of the plateau seen from the atom above its midpoint:
    theta = 2 arctan(d / (4 (z_A - a))), in degrees."""
    if z_a <= geom.a:
        raise InputError("aperture angle defined for z_A > a")
    return math.degrees(2.0 * math.atan(geom.d / (4.0 * (z_a - geom.a))))


@dataclass(frozen=True)
class SineFit:
    """Sinusoid of period d pinned to the groove/plateau midpoint values.

    fit(x) = mean - amplitude cos(2 pi x / d) with mean = (U(0) + U(d/2))/2
    and amplitude = (U(d/2) - U(0))/2 (signed), so fit(0) = U(0) and
    fit(d/2) = U(d/2) by construction. residual = max |fit - data| /
    |amplitude| over the grid (0 for a flat profile by convention).
    """

    mean: float
    amplitude: float
    residual: float

    def __call__(self, x_a, period):
        return self.mean - self.amplitude * np.cos(2.0 * np.pi * np.asarray(x_a) / period)


def sine_fit(field: PotentialField, x_grid) -> SineFit:
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size < 2 or x_grid.max() - x_grid.min() < field.period * (1.0 - 1e-9):
        raise InputError("x grid must span one period")
    u0 = evaluate(field, 0.0)
    u_half = evaluate(field, 0.5 * field.period)
    mean = 0.5 * (u0 + u_half)
    amplitude = 0.5 * (u_half - u0)
    data = evaluate(field, x_grid)
    if amplitude == 0.0:
        return SineFit(mean=mean, amplitude=0.0, residual=0.0)
    fit = mean - amplitude * np.cos(2.0 * np.pi * x_grid / field.period)
    residual = float(np.max(np.abs(fit - data)) / abs(amplitude))
    return SineFit(mean=float(mean), amplitude=float(amplitude), residual=residual)


def spatial_average(field: PotentialField):
    """<U> over one period; identically the m = 0 Fourier coefficient."""
    return field.coefficient(0)


def stiffness(field: PotentialField, x_a):
    """Lateral stiffness |d^2 U / d x^2| from the Fourier series (exact given
    the coefficients, no finite differences)."""
    m = np.arange(-2 * field.n_max, 2 * field.n_max + 1)
    k_m = 2.0 * np.pi * m / field.period
    x_red = x_a - field.period * math.floor(x_a / field.period)
    second = -np.sum(k_m**2 * field.coefficients * np.cos(k_m * x_red))
    return abs(float(second))
