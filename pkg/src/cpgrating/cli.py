"""Command-line front end: config ingestion, scan orchestration, CSV and
run-manifest emission.

Exit codes: 0 success, 2 config/input error, 3 region error (atom below the
corrugation top), 4 quadrature convergence error, 5 solver error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .analysis import aperture_angle, rho, sine_fit, spatial_average
from .config import RunConfig, grid_from_spec, load_config
from .constants import C_LIGHT
from .errors import (AmbiguousBranchError, ConvergenceError, CpGratingError,
                     InputError, RegionError, SolverError)
from .grating import GratingGeometry
from .materials import DielectricFunction, eps_imag_freq, load_two_column
from .plane import PlanePotential, local_height
from .potential import (check_doubling, converge_nmax, evaluate,
                        plane_potential_values, scan_fields)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGION = 3
EXIT_CONVERGENCE = 4
EXIT_SOLVER = 5

EPILOG = """exit codes:
  0  success
  2  config or input error (message names the field/line)
  3  region error: z_A at or below the corrugation top
  4  quadrature convergence error (doubling test failed)
  5  solver error (eigenproblem/matching failure)

The cache directory can also be set with CPGRATING_CACHE_DIR.
"""

# Paper-style canned parameter sets: figN recipes use s = d/2.
FIG_PAIRS_SIXTH = [(50e-9, 300e-9), (100e-9, 600e-9)]   # a/d = 1/6
FIG_PAIRS_THIRD = [(100e-9, 300e-9), (200e-9, 600e-9)]  # a/d = 1/3


def _fmt(value):
    if isinstance(value, float):
        return f"{value:.17e}"
    return str(value)


def write_csv(path, header, rows, manifest_hash):
    lines = [f"# manifest={manifest_hash} format=cpgrating-csv-1"]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def write_manifest(path, config_dict, command, diagnostics):
    manifest = {
        "schema_version": 1,
        "tool": "cpgrating",
        "tool_version": __version__,
        "command": command,
        "config": config_dict,
        "config_sha256": _hash_dict(config_dict),
        "diagnostics": diagnostics,
        "versions": {"numpy": np.__version__, "python": sys.version.split()[0]},
    }
    blob = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    manifest_hash = _hash_text(blob)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(blob)
    return manifest_hash


def _hash_dict(payload):
    import hashlib

    return hashlib.sha256(json.dumps(payload, sort_keys=True,
                                     separators=(",", ":")).encode()).hexdigest()


def _hash_text(text):
    import hashlib

    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _manifest_path(csv_path):
    root, _ = os.path.splitext(csv_path)
    return root + ".manifest.json"


def _geometry_overrides(args):
    geo = {}
    for key in ("d", "a", "s"):
        value = getattr(args, key, None)
        if value is not None:
            geo[key] = value
    return geo


def _common_overrides(args):
    over = {"geometry": _geometry_overrides(args)}
    if getattr(args, "n_max", None) is not None:
        over["truncation"] = {"n_max": args.n_max}
    quad = {}
    for key in ("n_xi", "n_ky", "n_kx0"):
        value = getattr(args, key, None)
        if value is not None:
            quad[key] = value
    if quad:
        over["quadrature"] = quad
    if getattr(args, "out", None) is not None:
        over["output"] = args.out
    if getattr(args, "workers", None) is not None:
        over["workers"] = args.workers
    cache_dir = getattr(args, "cache_dir", None) or os.environ.get("CPGRATING_CACHE_DIR")
    if cache_dir:
        over["cache_dir"] = cache_dir
    if getattr(args, "no_convergence_check", False):
        over["convergence_check"] = {"enabled": False}
    if getattr(args, "unsafe_below_top", False):
        over["unsafe_below_top"] = True
    return over


def _load(args, extra=None):
    over = _common_overrides(args)
    if extra:
        for key, value in extra.items():
            if isinstance(value, dict) and isinstance(over.get(key), dict):
                over[key].update(value)
            else:
                over[key] = value
    return load_config(getattr(args, "config", None), over)


def _doubling_diagnostics(cfg: RunConfig, observable):
    """Run the doubling guard on a scalar observable(quad) when enabled."""
    if not cfg.convergence_check:
        return {"doubling": "skipped"}
    deviations = check_doubling(observable, cfg.quadrature,
                                tolerance=cfg.convergence_tolerance)
    return {"doubling": {axis: dev for axis, dev in deviations.items()},
            "tolerance": cfg.convergence_tolerance}


def cmd_potential(args):
    cfg = _load(args)
    scan = dict(cfg.scan) if cfg.scan else {}
    kind = scan.get("kind", "point")
    if getattr(args, "z_a", None) is not None:
        scan["z_A"] = args.z_a
    if getattr(args, "x_a", None) is not None:
        scan["x_A"] = args.x_a

    plane_ref = PlanePotential(cfg.atom, cfg.material, quad=cfg.quadrature)
    geometry = cfg.geometry

    if kind == "point":
        z_list = [float(scan.get("z_A", 3.0 * geometry.a))]
        x_list = [float(scan.get("x_A", 0.0))]
    elif kind == "z-scan":
        z_list = grid_from_spec(scan.get("z_A_grid") or scan.get("z_grid"), "z_A_grid")
        x_list = [float(scan.get("x_A", 0.0))]
    elif kind == "x-scan":
        z_list = [float(scan.get("z_A", 3.0 * geometry.a))]
        x_list = grid_from_spec(scan.get("x_A_grid") or scan.get("x_grid"), "x_A_grid")
    elif kind == "rho-scan":
        return cmd_rho(args)
    else:
        raise InputError(f"scan.kind {kind!r} not recognized (point|x-scan|z-scan|rho-scan)")

    fields = scan_fields(cfg.atom, cfg.material, geometry, cfg.truncation,
                         cfg.quadrature, z_list, workers=cfg.workers,
                         cache_dir=cfg.cache_dir,
                         unsafe_below_top=cfg.unsafe_below_top)

    def observable(quad):
        f = scan_fields(cfg.atom, cfg.material, geometry, cfg.truncation, quad,
                        [min(z_list)], workers=cfg.workers,
                        unsafe_below_top=cfg.unsafe_below_top)[0]
        return evaluate(f, x_list[0])

    diagnostics = _doubling_diagnostics(cfg, observable)
    config_dict = cfg.resolved_dict()
    config_dict["scan"] = {"kind": kind, "z": z_list, "x": x_list}
    manifest_hash = write_manifest(_manifest_path(cfg.output), config_dict,
                                   "potential", diagnostics)

    rows = []
    for f in fields:
        for x in x_list:
            u = evaluate(f, x)
            try:
                h = local_height(geometry, x)
                u0 = plane_ref(f.z_a - h)
                rho_val = u / u0
                flag = "groove" if h == 0.0 else "plateau"
            except AmbiguousBranchError:
                u0 = float("nan")
                rho_val = float("nan")
                flag = "edge"
            rows.append((x, f.z_a, u, u0, rho_val, cfg.truncation.n_max, flag))
    write_csv(cfg.output, ("x_A_m", "z_A_m", "U_J", "U0_local_J", "rho",
                           "n_max", "flags"), rows, manifest_hash)
    print(f"wrote {cfg.output} ({len(rows)} rows), manifest {manifest_hash[:12]}")
    return EXIT_OK


def cmd_plane(args):
    cfg = _load(args)
    z_list = [float(v) for v in args.z]
    values = plane_potential_values(cfg.atom, cfg.material, z_list,
                                    quad=cfg.quadrature)

    def observable(quad):
        return plane_potential_values(cfg.atom, cfg.material, [min(z_list)],
                                      quad=quad)[0]

    diagnostics = _doubling_diagnostics(cfg, observable)
    config_dict = cfg.resolved_dict()
    config_dict["scan"] = {"kind": "plane", "z": z_list}
    manifest_hash = write_manifest(_manifest_path(cfg.output), config_dict,
                                   "plane", diagnostics)
    rows = [(z, u) for z, u in zip(z_list, values)]
    write_csv(cfg.output, ("z_m", "U0_J"), rows, manifest_hash)
    for z, u in rows:
        print(f"U0({z:.6e} m) = {u:.12e} J")
    return EXIT_OK


def _rho_scan(cfg, z_over_a, pairs, mode):
    """Shared rho-vs-distance driver for the fig2/fig3 recipes (s = d/2)."""
    plane_ref = PlanePotential(cfg.atom, cfg.material, quad=cfg.quadrature)
    rows = []
    for a, d in pairs:
        geom = GratingGeometry(d=d, a=a, s=0.5 * d)
        x_a = 0.5 * geom.d if mode == "plateau" else 0.0
        z_list = [f * a for f in z_over_a]
        fields = scan_fields(cfg.atom, cfg.material, geom, cfg.truncation,
                             cfg.quadrature, z_list, workers=cfg.workers,
                             cache_dir=cfg.cache_dir)
        for f in fields:
            point = rho(f, plane_ref, x_a)
            rows.append((geom.a, geom.d, point.x_a, point.z_a, point.z_a / geom.a,
                         (point.z_a - geom.a) / geom.d, point.u, point.u_ref,
                         point.rho, point.branch,
                         aperture_angle(geom, point.z_a)))
    return rows


def cmd_rho(args):
    cfg = _load(args)
    scan = dict(cfg.scan) if cfg.scan else {}
    z_grid = grid_from_spec(scan.get("z_A_grid", [float(f) for f in
                                                  np.linspace(1.5, 10.0, 8) * cfg.geometry.a]),
                            "z_A_grid")
    x_a = float(scan.get("x_A", 0.0))
    plane_ref = PlanePotential(cfg.atom, cfg.material, quad=cfg.quadrature)
    fields = scan_fields(cfg.atom, cfg.material, cfg.geometry, cfg.truncation,
                         cfg.quadrature, z_grid, workers=cfg.workers,
                         cache_dir=cfg.cache_dir)
    rows = []
    for f in fields:
        point = rho(f, plane_ref, x_a)
        rows.append((point.x_a, point.z_a, point.u, point.u_ref, point.rho,
                     point.branch, aperture_angle(cfg.geometry, point.z_a)))
    config_dict = cfg.resolved_dict()
    config_dict["scan"] = {"kind": "rho-scan", "x_A": x_a, "z_A_grid": z_grid}
    manifest_hash = write_manifest(_manifest_path(cfg.output), config_dict,
                                   "rho", {})
    write_csv(cfg.output, ("x_A_m", "z_A_m", "U_J", "U0_local_J", "rho",
                           "branch", "theta_deg"), rows, manifest_hash)
    print(f"wrote {cfg.output} ({len(rows)} rows)")
    return EXIT_OK


def cmd_converge(args):
    cfg = _load(args)
    n_list = [int(v) for v in args.nmax.split(",") if v.strip()]
    z_a = args.z_a if args.z_a is not None else 3.0 * cfg.geometry.a
    x_points = [0.0, 0.5 * cfg.geometry.d]
    rows, n_ref = converge_nmax(cfg.atom, cfg.material, cfg.geometry,
                                cfg.quadrature, z_a, x_points, n_list,
                                workers=cfg.workers, cache_dir=cfg.cache_dir)
    config_dict = cfg.resolved_dict()
    config_dict["scan"] = {"kind": "converge", "n_list": n_list, "z_A": z_a,
                           "x_points": x_points, "n_ref": n_ref}
    manifest_hash = write_manifest(_manifest_path(cfg.output), config_dict,
                                   "converge", {})
    write_csv(cfg.output, ("n_max", "x_A_m", "z_A_m", "U_J", "rel_dev_vs_ref"),
              [(r.n_max, r.x_a, r.z_a, r.u, r.rel_dev) for r in rows],
              manifest_hash)
    print(f"wrote {cfg.output}; reference n_max = {n_ref}")
    return EXIT_OK


def cmd_kk(args):
    omega, im_eps = load_two_column(args.input)
    df = DielectricFunction.from_table(omega, im_eps)
    if args.xi_grid:
        xi = np.array([float(v) for v in args.xi_grid.split(",")])
    else:
        xi = np.logspace(np.log10(args.xi_min), np.log10(args.xi_max), args.points)
    eps = eps_imag_freq(df, xi)
    config_dict = {"input": os.path.abspath(args.input),
                   "xi_min": float(xi.min()), "xi_max": float(xi.max()),
                   "points": int(xi.size)}
    manifest_hash = write_manifest(_manifest_path(args.output), config_dict,
                                   "kk", {})
    write_csv(args.output, ("xi_rad_s", "eps_i_xi"),
              list(zip(xi.tolist(), eps.tolist())), manifest_hash)
    print(f"wrote {args.output} ({xi.size} rows)")
    return EXIT_OK


def _fig_recipe(args, name):
    cfg = _load(args)
    if name in ("fig2", "fig3"):
        pairs = []
        if args.a is not None and args.d is not None:
            pairs = [(args.a, args.d)]
        else:
            pairs = FIG_PAIRS_SIXTH + FIG_PAIRS_THIRD
        z_over_a = np.linspace(1.2, 10.0, args.n_z).tolist()
        mode = "plateau" if name == "fig2" else "groove"
        rows = _rho_scan(cfg, z_over_a=z_over_a, pairs=pairs, mode=mode)
        header = ("a_m", "d_m", "x_A_m", "z_A_m", "z_over_a", "zma_over_d",
                  "U_J", "U0_local_J", "rho", "branch", "theta_deg")
    elif name == "fig4":
        a = args.a if args.a is not None else 100e-9
        d = args.d if args.d is not None else 600e-9
        geom = GratingGeometry(d=d, a=a, s=0.5 * d)
        plane_ref = PlanePotential(cfg.atom, cfg.material, quad=cfg.quadrature)
        # fixed local distance 3a: z = 3a above grooves, 4a above plateaus
        fields = scan_fields(cfg.atom, cfg.material, geom, cfg.truncation,
                             cfg.quadrature, [3.0 * a, 4.0 * a],
                             workers=cfg.workers, cache_dir=cfg.cache_dir)
        by_z = {f.z_a: f for f in fields}
        rows = []
        for x in np.linspace(0.0, d, args.n_x, endpoint=False):
            try:
                h = local_height(geom, x)
            except AmbiguousBranchError:
                continue
            f = by_z[3.0 * a if h == 0.0 else 4.0 * a]
            point = rho(f, plane_ref, x)
            rows.append((x, point.z_a, point.u, point.u_ref, point.rho,
                         abs(point.rho - 1.0), point.branch))
        header = ("x_A_m", "z_A_m", "U_J", "U0_local_J", "rho",
                  "abs_rho_minus_1", "branch")
    elif name in ("fig5a", "fig5b"):
        if name == "fig5a":
            a = args.a if args.a is not None else 100e-9
            d, z_a = 6.0 * a, 3.0 * a
        else:
            a = args.a if args.a is not None else 100e-9
            d, z_a = 2.0 * a, 2.0 * a
        geom = GratingGeometry(d=d, a=a, s=0.5 * d)
        field = scan_fields(cfg.atom, cfg.material, geom, cfg.truncation,
                            cfg.quadrature, [z_a], workers=cfg.workers,
                            cache_dir=cfg.cache_dir)[0]
        x_grid = np.linspace(0.0, d, args.n_x)
        fit = sine_fit(field, x_grid)
        u_mid = plane_potential_values(cfg.atom, cfg.material,
                                       [z_a - 0.5 * a], quad=cfg.quadrature)[0]
        rows = []
        for x in x_grid:
            u = evaluate(field, x)
            rows.append((x, z_a, u, u / u_mid, fit(x, d) / u_mid, fit.residual))
        header = ("x_A_m", "z_A_m", "U_J", "U_over_U0_mid", "sine_fit_over_U0_mid",
                  "fit_residual")
    else:
        raise InputError(f"unknown recipe {name}")

    config_dict = cfg.resolved_dict()
    config_dict["scan"] = {"kind": name}
    manifest_hash = write_manifest(_manifest_path(cfg.output), config_dict,
                                   name, {})
    write_csv(cfg.output, header, rows, manifest_hash)
    print(f"wrote {cfg.output} ({len(rows)} rows)")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cpgrating",
        description="Casimir-Polder potential of a ground-state atom above a "
                    "rectangular dielectric grating (exact scattering computation, "
                    "PFA references, geometry diagnostics).",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, geometry=True):
        p.add_argument("--config", help="YAML config file")
        if geometry:
            p.add_argument("--d", type=float, help="period (m)")
            p.add_argument("--a", type=float, help="amplitude/depth (m)")
            p.add_argument("--s", type=float, help="groove width (m)")
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--n-xi", dest="n_xi", type=int)
        p.add_argument("--n-ky", dest="n_ky", type=int)
        p.add_argument("--n-kx0", dest="n_kx0", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--cache-dir", dest="cache_dir")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--no-convergence-check", action="store_true",
                       dest="no_convergence_check")
        p.add_argument("--unsafe-below-top", action="store_true",
                       dest="unsafe_below_top",
                       help="evaluate the Rayleigh form below the corrugation "
                            "top anyway (result not guaranteed)")

    p_pot = sub.add_parser("potential", help="U(x_A, z_A) point or scan")
    add_common(p_pot)
    p_pot.add_argument("--za", dest="z_a", type=float, help="atom height (m)")
    p_pot.add_argument("--xa", dest="x_a", type=float, help="lateral position (m)")
    p_pot.set_defaults(func=cmd_potential)

    p_plane = sub.add_parser("plane", help="plane-surface potential U0(z)")
    add_common(p_plane, geometry=False)
    p_plane.add_argument("--z", type=float, nargs="+", required=True)
    p_plane.set_defaults(func=cmd_plane, d=600e-9, a=0.0, s=300e-9)

    p_rho = sub.add_parser("rho", help="PFA ratio scan over z_A")
    add_common(p_rho)
    p_rho.set_defaults(func=cmd_rho)

    p_conv = sub.add_parser("converge", help="truncation convergence table")
    add_common(p_conv)
    p_conv.add_argument("--nmax", required=True,
                        help="comma list of n_max values, e.g. 1,2,3,6")
    p_conv.add_argument("--za", dest="z_a", type=float)
    p_conv.set_defaults(func=cmd_converge)

    p_kk = sub.add_parser("kk", help="Kramers-Kronig transform of Im eps data")
    p_kk.add_argument("input", help="two-column file (omega, Im eps); "
                                    "'# unit: eV' header for eV frequencies")
    p_kk.add_argument("output", help="output CSV (xi, eps(i xi))")
    p_kk.add_argument("--xi-min", type=float, default=1e12)
    p_kk.add_argument("--xi-max", type=float, default=1e18)
    p_kk.add_argument("--points", type=int, default=200)
    p_kk.add_argument("--xi-grid", help="explicit comma list of xi values")
    p_kk.set_defaults(func=cmd_kk)

    for name, blurb in (("fig2", "rho vs z_A above the plateau midpoint"),
                        ("fig3", "rho vs z_A above the groove midpoint"),
                        ("fig4", "|rho-1| vs x_A at fixed local distance 3a"),
                        ("fig5a", "lateral profile, z_A = 3a, d = 6a"),
                        ("fig5b", "lateral profile, z_A = d = 2a")):
        p_fig = sub.add_parser(name, help=f"canned scan: {blurb}")
        add_common(p_fig)
        p_fig.add_argument("--n-z", dest="n_z", type=int, default=10)
        p_fig.add_argument("--n-x", dest="n_x", type=int, default=33)
        p_fig.set_defaults(func=lambda a, _name=name: _fig_recipe(a, _name))

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RegionError as exc:
        print(f"region error: {exc}", file=sys.stderr)
        return EXIT_REGION
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except CpGratingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
