"""Imaginary-frequency response functions: dielectric function of the grating
medium and dynamic polarizability of the atom.

Two routes for eps(i xi): a parametric single-resonance model, or tabulated
Im eps(omega) data transformed with the Kramers-Kronig relation

    eps(i xi) = 1 + (2/pi) Int_0^inf  w Im eps(w) / (w^2 + xi^2) dw.

The tabulated route integrates the piecewise-linear interpolant of the samples
exactly, segment by segment, and attaches analytic tails: Im eps ~ w below the
first sample and Im eps ~ w^-3 above the last (standard dielectric
asymptotics; override by extending the table).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InputError

_TAIL_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class DielectricFunction:
    """eps(i xi) of the grating medium.

    kind is either "parametric-lorentz" (eps_inf + (eps_static - eps_inf) /
    (1 + xi^2/omega0^2)) or "tabulated-kk" (Kramers-Kronig transform of
    (omega, Im eps) samples).
    """

    kind: str
    eps_static: float = 0.0
    eps_inf: float = 1.0
    omega0: float = 0.0
    omega: np.ndarray | None = field(default=None, repr=False)
    im_eps: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "parametric-lorentz":
            if self.eps_inf < 1.0 or self.eps_static < self.eps_inf:
                raise InputError(
                    "parametric dielectric needs eps_static >= eps_inf >= 1, got "
                    f"eps_static={self.eps_static}, eps_inf={self.eps_inf}"
                )
            if self.eps_static > self.eps_inf and self.omega0 <= 0.0:
                raise InputError("parametric dielectric needs omega0 > 0")
        elif self.kind == "tabulated-kk":
            w = np.asarray(self.omega, dtype=float)
            g = np.asarray(self.im_eps, dtype=float)
            if w.size == 0 or g.size == 0:
                raise InputError("tabulated dielectric data is empty")
            if w.shape != g.shape or w.ndim != 1:
                raise InputError("tabulated dielectric needs two equal-length columns")
            if np.any(np.diff(w) <= 0.0) or w[0] <= 0.0:
                raise InputError("tabulated frequencies must be positive and strictly increasing")
            if np.any(g < 0.0):
                raise InputError("Im eps(omega) must be non-negative")
            object.__setattr__(self, "omega", w)
            object.__setattr__(self, "im_eps", g)
        else:
            raise InputError(f"unknown dielectric kind {self.kind!r}")

    @classmethod
    def parametric_lorentz(cls, eps_static, eps_inf, omega0):
        return cls(kind="parametric-lorentz", eps_static=float(eps_static),
                   eps_inf=float(eps_inf), omega0=float(omega0))

    @classmethod
    def vacuum(cls):
        return cls(kind="parametric-lorentz", eps_static=1.0, eps_inf=1.0, omega0=1.0)

    @classmethod
    def from_table(cls, omega, im_eps):
        return cls(kind="tabulated-kk", omega=np.asarray(omega, dtype=float),
                   im_eps=np.asarray(im_eps, dtype=float))

    def __call__(self, xi):
        return eps_imag_freq(self, xi)

    def key_data(self):
        """Stable description used in content hashes and manifests."""
        if self.kind == "parametric-lorentz":
            return {"kind": self.kind, "eps_static": self.eps_static.hex(),
                    "eps_inf": self.eps_inf.hex(), "omega0": self.omega0.hex()}
        return {"kind": self.kind,
                "omega": [v.hex() for v in self.omega.tolist()],
                "im_eps": [v.hex() for v in self.im_eps.tolist()]}


def eps_imag_freq(df: DielectricFunction, xi):
    """Dielectric function at imaginary frequency i*xi (xi in rad/s, xi >= 0).

    Parametric kind evaluates the closed form; tabulated kind evaluates the
    Kramers-Kronig integral of the piecewise-linear data with analytic tails.
    Accepts scalars or arrays.
    """
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0.0):
        raise InputError("xi must be >= 0")
    if df.kind == "parametric-lorentz":
        if df.eps_static == df.eps_inf:
            out = np.full_like(xi_arr, df.eps_inf, dtype=float)
        else:
            out = df.eps_inf + (df.eps_static - df.eps_inf) / (1.0 + (xi_arr / df.omega0) ** 2)
    else:
        out = 1.0 + (2.0 / np.pi) * _kk_integral(df.omega, df.im_eps, xi_arr)
    return out if out.ndim else float(out)


def _kk_integral(w, g, xi):
    """Int_0^inf w' Im eps(w') / (w'^2 + xi^2) dw' for array xi.

    Piecewise-linear Im eps between samples is integrated in closed form:
    with Im eps = A + B w on [w0, w1],

        Int = (A/2) ln((w1^2+xi^2)/(w0^2+xi^2)) + B [(w1-w0) - xi (atan(w1/xi) - atan(w0/xi))].

    Below w[0] the data is extended as Im eps = g[0] w / w[0]; above w[-1] as
    Im eps = g[-1] (w[-1]/w)^3. Both tail integrals are analytic.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    xi2 = xi[:, None] ** 2

    w0 = w[:-1][None, :]
    w1 = w[1:][None, :]
    g0 = g[:-1][None, :]
    g1 = g[1:][None, :]
    slope = (g1 - g0) / (w1 - w0)
    intercept = g0 - slope * w0

    log_term = 0.5 * np.log((w1**2 + xi2) / (w0**2 + xi2))
    with np.errstate(invalid="ignore", divide="ignore"):
        atan_term = np.where(
            xi[:, None] > 0.0,
            xi[:, None] * (np.arctan(w1 / xi[:, None]) - np.arctan(w0 / xi[:, None])),
            0.0,
        )
    segments = np.sum(intercept * log_term + slope * ((w1 - w0) - atan_term), axis=1)

    # Low tail: Im eps = c_low * w, c_low = g[0]/w[0].
    c_low = g[0] / w[0]
    with np.errstate(invalid="ignore", divide="ignore"):
        low = c_low * np.where(xi > 0.0, w[0] - xi * np.arctan(w[0] / xi), w[0])

    # High tail: Im eps = c_high / w^3, c_high = g[-1] w[-1]^3.
    c_high = g[-1] * w[-1] ** 3
    wn = w[-1]
    r = xi / wn
    small = r < _TAIL_SERIES_CUTOFF
    high = np.empty_like(xi)
    # (1/xi^2)(1/wn - atan(xi/wn)/xi); series for xi << wn avoids cancellation
    high[small] = (1.0 / (3.0 * wn**3)) * (1.0 - 0.6 * r[small] ** 2)
    nx = ~small
    high[nx] = (1.0 / xi[nx] ** 2) * (1.0 / wn - np.arctan(r[nx]) / xi[nx])
    high *= c_high

    return segments + low + high


@dataclass(frozen=True)
class Polarizability:
    """Atomic dynamic polarizability alpha(i xi) in SI units (C m^2 / V).

    kind "single-oscillator": alpha_static / (1 + xi^2/omega_a^2).
    kind "tabulated": monotone (PCHIP) interpolation of (xi, alpha) samples,
    constant below the first sample and ~ xi^-2 above the last.
    """

    kind: str
    alpha_static: float = 0.0
    omega_a: float = 0.0
    xi_table: np.ndarray | None = field(default=None, repr=False)
    alpha_table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "single-oscillator":
            if self.alpha_static < 0.0:
                raise InputError("alpha_static must be >= 0")
            if self.alpha_static > 0.0 and self.omega_a <= 0.0:
                raise InputError("single-oscillator polarizability needs omega_a > 0")
        elif self.kind == "tabulated":
            x = np.asarray(self.xi_table, dtype=float)
            a = np.asarray(self.alpha_table, dtype=float)
            if x.size == 0 or x.shape != a.shape or x.ndim != 1:
                raise InputError("tabulated polarizability needs two equal-length columns")
            if np.any(np.diff(x) <= 0.0) or x[0] < 0.0:
                raise InputError("tabulated xi must be non-negative and strictly increasing")
            if np.any(a < 0.0):
                raise InputError("tabulated alpha must be non-negative")
            object.__setattr__(self, "xi_table", x)
            object.__setattr__(self, "alpha_table", a)
        else:
            raise InputError(f"unknown polarizability kind {self.kind!r}")

    @classmethod
    def single_oscillator(cls, alpha_static, omega_a):
        return cls(kind="single-oscillator", alpha_static=float(alpha_static),
                   omega_a=float(omega_a))

    @classmethod
    def zero(cls):
        return cls(kind="single-oscillator", alpha_static=0.0, omega_a=1.0)

    @classmethod
    def from_table(cls, xi, alpha):
        return cls(kind="tabulated", xi_table=np.asarray(xi, dtype=float),
                   alpha_table=np.asarray(alpha, dtype=float))

    def __call__(self, xi):
        return alpha_imag_freq(self, xi)

    def static_value(self):
        if self.kind == "single-oscillator":
            return self.alpha_static
        return float(self.alpha_table[0])

    def key_data(self):
        if self.kind == "single-oscillator":
            return {"kind": self.kind, "alpha_static": self.alpha_static.hex(),
                    "omega_a": self.omega_a.hex()}
        return {"kind": self.kind,
                "xi": [v.hex() for v in self.xi_table.tolist()],
                "alpha": [v.hex() for v in self.alpha_table.tolist()]}


def alpha_imag_freq(p: Polarizability, xi):
    """alpha(i xi) in C m^2 / V for xi >= 0 (scalar or array)."""
    xi_arr = np.asarray(xi, dtype=float)
    if np.any(xi_arr < 0.0):
        raise InputError("xi must be >= 0")
    if p.kind == "single-oscillator":
        if p.alpha_static == 0.0:
            out = np.zeros_like(xi_arr)
        else:
            out = p.alpha_static / (1.0 + (xi_arr / p.omega_a) ** 2)
    else:
        interp = PchipInterpolator(p.xi_table, p.alpha_table, extrapolate=False)
        out = interp(xi_arr)
        out = np.where(xi_arr <= p.xi_table[0], p.alpha_table[0], out)
        high = xi_arr >= p.xi_table[-1]
        out = np.where(high, p.alpha_table[-1] * (p.xi_table[-1] / np.maximum(xi_arr, p.xi_table[-1])) ** 2, out)
    return out if out.ndim else float(out)


def load_two_column(path):
    """Read a two-column plain-text table ('#' comments).

    A header comment '# unit: eV' (or 'unit=eV') marks frequencies in eV;
    default is rad/s. Returns (omega_rad_s, values).
    """
    from .constants import omega_from_ev

    unit = "rad/s"
    rows = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                body = stripped.lstrip("#").strip().lower().replace("=", ":")
                if body.startswith("unit"):
                    unit = body.split(":", 1)[1].strip()
                continue
            parts = stripped.split()
            if len(parts) < 2:
                raise InputError(f"{path}:{lineno}: expected two columns, got {stripped!r}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    omega = data[:, 0]
    if unit in ("ev", "evs"):
        omega = omega_from_ev(omega)
    elif unit not in ("rad/s", "rad_s", "rads"):
        raise InputError(f"{path}: unknown frequency unit {unit!r}")
    return omega, data[:, 1]
