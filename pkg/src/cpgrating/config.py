"""Run configuration: YAML ingestion, defaults, flag overrides, hashing.

One config file per run; CLI flags override individual keys; precedence is
flags > file > defaults. The schema is documented in the README and in
configs/rb_si_base.yaml.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
import yaml

from .constants import C_LIGHT, alpha_si_from_au, omega_from_ev
from .errors import InputError
from .grating import GratingGeometry, TruncationSpec
from .materials import DielectricFunction, Polarizability, load_two_column
from .quadrature import QuadratureSpec

# Parametric defaults for the worked Rb/Si example; config inputs, not
# compiled truths (see README for provenance and validation notes).
DEFAULT_MATERIAL = {"kind": "parametric-lorentz", "eps_static": 11.87,
                    "eps_inf": 1.035, "omega0": 6.6e15}
DEFAULT_ATOM = {"kind": "single-oscillator", "alpha_static_au": 318.8,
                "wavelength_nm": 795.0}


@dataclass
class RunConfig:
    geometry: GratingGeometry
    material: DielectricFunction
    atom: Polarizability
    truncation: TruncationSpec
    quadrature: QuadratureSpec
    scan: dict
    output: str = "out.csv"
    workers: int = 1
    cache_dir: str | None = None
    convergence_check: bool = True
    convergence_tolerance: float = 0.005
    unsafe_below_top: bool = False
    raw: dict = field(default_factory=dict)

    def resolved_dict(self):
        """JSON-ready resolved configuration (for the manifest and hashing)."""
        return {
            "geometry": {"d": self.geometry.d, "a": self.geometry.a, "s": self.geometry.s},
            "material": self.material.key_data(),
            "atom": self.atom.key_data(),
            "truncation": {"n_max": self.truncation.n_max,
                           "n_field": self.truncation.field_order},
            "quadrature": {"n_xi": self.quadrature.n_xi, "n_ky": self.quadrature.n_ky,
                           "n_kx0": self.quadrature.n_kx0,
                           "xi_scale": self.quadrature.xi_scale,
                           "ky_scale": self.quadrature.ky_scale,
                           "half_domain": self.quadrature.half_domain},
            "scan": self.scan,
            "workers": self.workers,
            "convergence_check": self.convergence_check,
            "convergence_tolerance": self.convergence_tolerance,
            "unsafe_below_top": self.unsafe_below_top,
        }

    def content_hash(self):
        blob = json.dumps(self.resolved_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _require(mapping, key, context):
    if key not in mapping:
        raise InputError(f"config field '{context}.{key}' is missing")
    return mapping[key]


def material_from_dict(data) -> DielectricFunction:
    kind = data.get("kind", "parametric-lorentz")
    if kind == "parametric-lorentz":
        return DielectricFunction.parametric_lorentz(
            _require(data, "eps_static", "material"),
            _require(data, "eps_inf", "material"),
            _require(data, "omega0", "material"))
    if kind == "tabulated-kk":
        omega, im_eps = load_two_column(_require(data, "path", "material"))
        return DielectricFunction.from_table(omega, im_eps)
    raise InputError(f"material.kind {kind!r} not recognized")


def atom_from_dict(data) -> Polarizability:
    kind = data.get("kind", "single-oscillator")
    if kind == "single-oscillator":
        if "alpha_static_au" in data:
            alpha = alpha_si_from_au(float(data["alpha_static_au"]))
        else:
            alpha = float(_require(data, "alpha_static", "atom"))
        if "wavelength_nm" in data:
            omega_a = 2.0 * np.pi * C_LIGHT / (float(data["wavelength_nm"]) * 1e-9)
        elif "omega_a_ev" in data:
            omega_a = omega_from_ev(float(data["omega_a_ev"]))
        else:
            omega_a = float(_require(data, "omega_a", "atom"))
        return Polarizability.single_oscillator(alpha, omega_a)
    if kind == "tabulated":
        xi, alpha = load_two_column(_require(data, "path", "atom"))
        return Polarizability.from_table(xi, alpha)
    raise InputError(f"atom.kind {kind!r} not recognized")


def load_config(path=None, overrides=None) -> RunConfig:
    """Build a RunConfig from an optional YAML file plus override mapping."""
    raw = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as handle:
                raw = yaml.safe_load(handle) or {}
        except yaml.YAMLError as exc:
            raise InputError(f"config parse error in {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise InputError(f"config {path} must be a mapping at top level")
    merged = _deep_merge(raw, overrides or {})

    geo = merged.get("geometry", {})
    geometry = GratingGeometry(d=float(_require(geo, "d", "geometry")),
                               a=float(_require(geo, "a", "geometry")),
                               s=float(_require(geo, "s", "geometry")))
    material = material_from_dict(merged.get("material", dict(DEFAULT_MATERIAL)))
    atom = atom_from_dict(merged.get("atom", dict(DEFAULT_ATOM)))
    tr = merged.get("truncation", {})
    truncation = TruncationSpec(n_max=int(tr.get("n_max", 3)),
                                n_field=(int(tr["n_field"]) if tr.get("n_field") is not None else None))
    qd = merged.get("quadrature", {})
    quadrature = QuadratureSpec(
        n_xi=int(qd.get("n_xi", 40)), n_ky=int(qd.get("n_ky", 40)),
        n_kx0=int(qd.get("n_kx0", 16)),
        xi_scale=(float(qd["xi_scale"]) if qd.get("xi_scale") is not None else None),
        ky_scale=(float(qd["ky_scale"]) if qd.get("ky_scale") is not None else None),
        half_domain=bool(qd.get("half_domain", False)))
    scan = merged.get("scan", {})
    if not isinstance(scan, dict):
        raise InputError("config field 'scan' must be a mapping")
    conv = merged.get("convergence_check", {})
    if isinstance(conv, bool):
        conv = {"enabled": conv}
    return RunConfig(
        geometry=geometry, material=material, atom=atom, truncation=truncation,
        quadrature=quadrature, scan=scan,
        output=str(merged.get("output", "out.csv")),
        workers=int(merged.get("workers", 1)),
        cache_dir=merged.get("cache_dir"),
        convergence_check=bool(conv.get("enabled", True)),
        convergence_tolerance=float(conv.get("tolerance", 0.005)),
        unsafe_below_top=bool(merged.get("unsafe_below_top", False)),
        raw=merged)


def _deep_merge(base, override):
    out = dict(base)
    for key, value in override.items():
        if value is None:
            continue
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def grid_from_spec(spec, name):
    """Scan grid: either an explicit list or {start, stop, n} (inclusive)."""
    if isinstance(spec, (list, tuple)):
        grid = [float(v) for v in spec]
    elif isinstance(spec, dict):
        try:
            grid = np.linspace(float(spec["start"]), float(spec["stop"]),
                               int(spec["n"])).tolist()
        except KeyError as exc:
            raise InputError(f"scan grid '{name}' needs start/stop/n") from exc
    else:
        raise InputError(f"scan grid '{name}' must be a list or start/stop/n mapping")
    if not grid:
        raise InputError(f"scan grid '{name}' is empty")
    return grid
