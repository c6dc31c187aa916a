"""Quadrature rules for the xi, ky and kx0 integrals.

Semi-infinite and infinite axes use Gauss-Legendre nodes under rational maps
(open at the endpoints, so xi = 0 is never sampled):

    xi = s t/(1-t),   t in (0,1)      (scale s ~ c/z_A)
    ky = s u/(1-u^2), u in (-1,1)     (scale s ~ 1/z_A)

The Brillouin interval uses a plain Gauss-Legendre rule. Weights returned
here already include one 1/(2 pi) measure factor per axis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InputError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts, mapping scales and rule kinds for the three integrals.

    xi_scale / ky_scale of None are resolved at run time from the smallest
    atom height in the scan (c/z_min and 1/z_min respectively). refine is the
    factor used by doubling/convergence runs. half_domain enables the
    (kx0, ky) -> (-kx0, -ky) symmetry reduction of the kx0 integral.
    """

    n_xi: int = 40
    n_ky: int = 40
    n_kx0: int = 16
    xi_scale: float | None = None
    ky_scale: float | None = None
    xi_rule: str = "rational-gauss"
    ky_rule: str = "rational-gauss"
    kx0_rule: str = "gauss"
    half_domain: bool = False
    refine: int = 2

    def __post_init__(self):
        for name in ("n_xi", "n_ky", "n_kx0"):
            if getattr(self, name) < 4:
                raise InputError(f"{name} must be >= 4")
        if self.xi_rule != "rational-gauss" or self.ky_rule != "rational-gauss":
            raise InputError("only 'rational-gauss' rules are implemented for xi/ky")
        if self.kx0_rule != "gauss":
            raise InputError("only the 'gauss' rule is implemented for kx0")
        if self.refine < 2:
            raise InputError("refine must be >= 2")

    def refined(self, axis):
        """Spec with one axis node count multiplied by the refinement factor."""
        if axis == "xi":
            return replace(self, n_xi=self.n_xi * self.refine)
        if axis == "ky":
            return replace(self, n_ky=self.n_ky * self.refine)
        if axis == "kx0":
            return replace(self, n_kx0=self.n_kx0 * self.refine)
        raise InputError(f"unknown quadrature axis {axis!r}")

    def key_data(self, xi_scale, ky_scale):
        return {
            "n_xi": self.n_xi, "n_ky": self.n_ky, "n_kx0": self.n_kx0,
            "xi_scale": float(xi_scale).hex(), "ky_scale": float(ky_scale).hex(),
            "rules": [self.xi_rule, self.ky_rule, self.kx0_rule],
            "half_domain": self.half_domain,
        }


def xi_nodes(n, scale):
    """Nodes/weights for Int_0^inf dxi/(2 pi) under xi = scale * t/(1-t)."""
    t, wt = np.polynomial.legendre.leggauss(n)
    t = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    xi = scale * t / (1.0 - t)
    w = scale * wt / (1.0 - t) ** 2 / TWO_PI
    return xi, w


def ky_nodes(n, scale):
    """Nodes/weights for Int_-inf^inf dky/(2 pi) under ky = scale * u/(1-u^2)."""
    u, wu = np.polynomial.legendre.leggauss(n)
    ky = scale * u / (1.0 - u**2)
    w = scale * wu * (1.0 + u**2) / (1.0 - u**2) ** 2 / TWO_PI
    return ky, w


def kx0_nodes(n, d, half_domain=False):
    """Nodes/weights for Int_{-pi/d}^{pi/d} dkx0/(2 pi).

    With half_domain=True only kx0 > 0 nodes are kept with doubled weights
    (valid when the integrand is even under (kx0, ky) -> (-kx0, -ky) and the
    ky rule is symmetric, which holds for the potential kernels).
    """
    x, wx = np.polynomial.legendre.leggauss(n)
    zone = np.pi / d
    kx0 = zone * x
    w = zone * wx / TWO_PI
    if half_domain:
        keep = kx0 > 0.0
        kx0 = kx0[keep]
        w = 2.0 * w[keep]
    return kx0, w


def kx_nodes_plane(n, scale):
    """Transverse kx rule for the plane (no Brillouin folding): rational map."""
    return ky_nodes(n, scale)
