"""Assembly of the Casimir-Polder potential: quadratures over (xi, ky, kx0),
Brillouin double sum, polarization trace, and lateral Fourier coefficients.

The potential above the corrugation top is

    U(x_A, z_A) = sum_m C_m(z_A) exp(2 pi i m x_A / d)

with real coefficients assembled node by node from

    C_m = (hbar/(eps0 c^2)) sum_nodes w (xi^2/2) alpha(i xi)
          sum_{j-j'=m} K[j,j'] exp(-(kappa_j+kappa_j') z_A) / kappa_j'

where K is the polarization-traced reflection kernel. Kernels are stored
referenced to the corrugation top (z = a), with the exponent shifted by a,
so no growing exponential is ever formed.

Reduction order is fixed: within each xi slice the (ky, kx0) nodes are
contracted in lexicographic order with a fixed einsum; across slices the
partial sums are folded with math.fsum in xi order. Output bits therefore do
not depend on the worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import cache as kernel_cache
from .channels import overlap_blocks
from .constants import C_LIGHT, EPS0, HBAR
from .errors import ConvergenceError, InputError, RegionError
from .grating import GratingGeometry, TruncationSpec, solve_reflection_batch
from .materials import alpha_imag_freq, eps_imag_freq
from .plane import fresnel_he_grid
from .quadrature import QuadratureSpec, kx0_nodes, kx_nodes_plane, ky_nodes, xi_nodes

PREFACTOR = HBAR / (EPS0 * C_LIGHT**2)


@dataclass(frozen=True)
class NodeKernel:
    """Polarization-traced kernel K[j][j'] at one quadrature node."""

    matrix: np.ndarray
    kappa: np.ndarray
    weight: float
    xi: float
    ky: float
    kx0: float
    z_reference: float = 0.0


def node_kernel(reflection, overlaps=None, weight=1.0) -> NodeKernel:
    """Contract a ReflectionMatrix with the polarization overlaps:

        K[j][j'] = sum_{p,p'} R[(j,p),(j',p')] O[p][p'](j, j').

    overlaps may be a precomputed (nj, nj, 2, 2) array; by default they are
    built from the reflection metadata.
    """
    blocks = reflection.as_blocks()
    nj = blocks.shape[0]
    if overlaps is None:
        n_max = reflection.n_max
        jz = np.arange(-n_max, n_max + 1)
        kxj = reflection.kx0 + 2.0 * np.pi * jz / reflection.geometry.d
        kappa = np.sqrt(kxj**2 + reflection.ky**2 + (reflection.xi / C_LIGHT) ** 2)
        o_hh, o_ee, o_eh = overlap_blocks(kxj, kappa, kxj, kappa,
                                          reflection.ky, reflection.xi)
        overlaps = np.empty((nj, nj, 2, 2))
        overlaps[:, :, 0, 0] = o_hh
        overlaps[:, :, 0, 1] = -o_eh
        overlaps[:, :, 1, 0] = o_eh
        overlaps[:, :, 1, 1] = o_ee
    else:
        overlaps = np.asarray(overlaps)
        if overlaps.shape != (nj, nj, 2, 2):
            raise InputError(f"overlap array must have shape {(nj, nj, 2, 2)}")
        kappa = None
    k = np.einsum("jpkq,jkpq->jk", blocks, overlaps)
    if kappa is None:
        n_max = reflection.n_max
        jz = np.arange(-n_max, n_max + 1)
        kxj = reflection.kx0 + 2.0 * np.pi * jz / reflection.geometry.d
        kappa = np.sqrt(kxj**2 + reflection.ky**2 + (reflection.xi / C_LIGHT) ** 2)
    z_ref = 0.0 if reflection.reference == "bottom" else reflection.geometry.a
    return NodeKernel(matrix=k, kappa=kappa, weight=float(weight),
                      xi=reflection.xi, ky=reflection.ky, kx0=reflection.kx0,
                      z_reference=z_ref)


def _contract_kernel(r_blocks, kxj, kappa, ky, xi):
    """K[j,j'] for batched reflection blocks (B, nj, 2, nj, 2)."""
    o_hh, o_ee, o_eh = overlap_blocks(kxj, kappa, kxj, kappa, ky, xi)
    return (r_blocks[:, :, 0, :, 0] * o_hh
            - r_blocks[:, :, 0, :, 1] * o_eh
            + r_blocks[:, :, 1, :, 0] * o_eh
            + r_blocks[:, :, 1, :, 1] * o_ee)


@dataclass
class KernelTable:
    """Reflection kernels over the full node set of one configuration.

    Arrays are indexed (i_xi, i_k, ...) with i_k running over the (ky, kx0)
    tensor grid in lexicographic order. z_reference is the plane the kernels
    are referenced to (corrugation top for gratings, the surface for planes);
    the distance exponent uses z - z_reference.
    """

    xi: np.ndarray
    w_xi: np.ndarray
    w_k: np.ndarray
    kernels: np.ndarray      # (n_xi, n_k, nj, nj)
    kappa: np.ndarray        # (n_xi, n_k, nj)
    z_reference: float
    n_max: int
    period: float | None
    meta: dict = field(default_factory=dict)

    @property
    def n_zones(self):
        return 2 * self.n_max + 1


def _grating_slice(args):
    (geom, trunc, xi, eps_s, ky_arr, wky, kx0_arr, wkx0) = args
    nj = 2 * trunc.n_max + 1
    n_k = ky_arr.size * kx0_arr.size
    kernels = np.empty((n_k, nj, nj))
    kappas = np.empty((n_k, nj))
    jz = np.arange(-trunc.n_max, trunc.n_max + 1)
    pos = 0
    for ky in ky_arr:
        r, kappa, _ = solve_reflection_batch(geom, eps_s, trunc, xi, ky, kx0_arr)
        kxj = kx0_arr[:, None] + (2.0 * np.pi / geom.d) * jz[None, :]
        kernels[pos:pos + kx0_arr.size] = _contract_kernel(r, kxj, kappa, ky, xi)
        kappas[pos:pos + kx0_arr.size] = kappa
        pos += kx0_arr.size
    return kernels, kappas


def grating_kernel_table(geom, df, trunc, quad, z_min, workers=1,
                         cache_dir=None) -> KernelTable:
    """Compute (or load) the kernel table of a grating configuration.

    z_min fixes the default quadrature scales (xi_scale = c/z_min,
    ky_scale = 1/z_min) unless the spec overrides them. The optional disk
    cache is keyed by a content hash of geometry, material, truncation and
    the realized quadrature grid.
    """
    xi_scale = quad.xi_scale if quad.xi_scale is not None else C_LIGHT / z_min
    ky_scale = quad.ky_scale if quad.ky_scale is not None else 1.0 / z_min
    xi, w_xi = xi_nodes(quad.n_xi, xi_scale)
    ky, wky = ky_nodes(quad.n_ky, ky_scale)
    kx0, wkx0 = kx0_nodes(quad.n_kx0, geom.d, half_domain=quad.half_domain)
    w_k = (wky[:, None] * wkx0[None, :]).ravel()

    key = kernel_cache.table_key(geom, df, trunc, quad, xi_scale, ky_scale)
    if cache_dir is not None:
        cached = kernel_cache.load_table(cache_dir, key)
        if cached is not None:
            return cached

    eps_values = eps_imag_freq(df, xi)
    payloads = [(geom, trunc, float(xi[i]), float(eps_values[i]), ky, wky, kx0, wkx0)
                for i in range(quad.n_xi)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_grating_slice, payloads, chunksize=1))
    else:
        results = [_grating_slice(p) for p in payloads]

    nj = 2 * trunc.n_max + 1
    kernels = np.stack([res[0] for res in results])
    kappas = np.stack([res[1] for res in results])
    table = KernelTable(
        xi=xi, w_xi=w_xi, w_k=w_k, kernels=kernels, kappa=kappas,
        z_reference=geom.a, n_max=trunc.n_max, period=geom.d,
        meta={"key": key, "geometry": geom.key_data(), "trunc": trunc.key_data(),
              "quad": quad.key_data(xi_scale, ky_scale), "n_zones": nj})
    if cache_dir is not None:
        kernel_cache.store_table(cache_dir, key, table)
    return table


def plane_kernel_table(df, quad, z_min) -> KernelTable:
    """Single-zone kernel table for a planar surface at z = 0.

    The Brillouin integral and zone sum collapse to a 2-D transverse
    k-integral; kx reuses the rational ky rule.
    """
    xi_scale = quad.xi_scale if quad.xi_scale is not None else C_LIGHT / z_min
    ky_scale = quad.ky_scale if quad.ky_scale is not None else 1.0 / z_min
    xi, w_xi = xi_nodes(quad.n_xi, xi_scale)
    ky, wky = ky_nodes(quad.n_ky, ky_scale)
    kx, wkx = kx_nodes_plane(quad.n_kx0, ky_scale)
    w_k = (wky[:, None] * wkx[None, :]).ravel()

    eps_values = eps_imag_freq(df, xi)
    n_k = ky.size * kx.size
    kernels = np.empty((quad.n_xi, n_k, 1, 1))
    kappas = np.empty((quad.n_xi, n_k, 1))
    for i in range(quad.n_xi):
        pos = 0
        for ky_val in ky:
            r = fresnel_he_grid(eps_values[i], kx, ky_val, xi[i])  # (n_kx, 2, 2)
            kappa = np.sqrt(kx**2 + ky_val**2 + (xi[i] / C_LIGHT) ** 2)
            kern = _contract_kernel(_as_plane_blocks(r), kx[:, None],
                                    kappa[:, None], ky_val, xi[i])
            kernels[i, pos:pos + kx.size, 0, 0] = kern[:, 0, 0]
            kappas[i, pos:pos + kx.size, 0] = kappa
            pos += kx.size
    return KernelTable(
        xi=xi, w_xi=w_xi, w_k=w_k, kernels=kernels, kappa=kappas,
        z_reference=0.0, n_max=0, period=None,
        meta={"kind": "plane", "quad": quad.key_data(xi_scale, ky_scale)})


def _as_plane_blocks(r):
    """(n, 2, 2) per-node matrices -> (n, 1, 2, 1, 2) composite blocks."""
    n = r.shape[0]
    out = np.empty((n, 1, 2, 1, 2))
    out[:, 0, :, 0, :] = r
    return out


def assemble_coefficients(table: KernelTable, p, z_values):
    """Lateral Fourier coefficients C_m(z) for every z in z_values.

    Returns an array of shape (4 n_max + 1, n_z) indexed by m + 2 n_max.
    """
    z_values = np.asarray(z_values, dtype=float)
    nj = table.n_zones
    n_m = 4 * table.n_max + 1
    alpha = alpha_imag_freq(p, table.xi)
    slice_sums = np.empty((table.xi.size, n_m, z_values.size))
    for i in range(table.xi.size):
        pre = table.w_xi[i] * 0.5 * table.xi[i] ** 2 * alpha[i]
        kern = table.kernels[i]
        kappa = table.kappa[i]
        for iz, z in enumerate(z_values):
            decay = np.exp(-kappa * (z - table.z_reference))
            t = kern * decay[:, :, None] * (decay / kappa)[:, None, :]
            tw = np.einsum("b,bjk->jk", table.w_k, t)
            for m in range(-2 * table.n_max, 2 * table.n_max + 1):
                slice_sums[i, m + 2 * table.n_max, iz] = pre * np.trace(tw, offset=-m)
    coeffs = np.empty((n_m, z_values.size))
    for im in range(n_m):
        for iz in range(z_values.size):
            coeffs[im, iz] = PREFACTOR * math.fsum(slice_sums[:, im, iz])
    return coeffs


@dataclass
class PotentialField:
    """Fourier representation of U(x_A, z_A) at one height z_A.

    coefficients index m runs over [-2 n_max, 2 n_max]; C_m are real with
    C_m = C_{-m} for the even lamellar profile.
    """

    z_a: float
    coefficients: np.ndarray
    geometry: GratingGeometry
    n_max: int
    meta: dict = field(default_factory=dict)

    @property
    def period(self):
        return self.geometry.d

    def coefficient(self, m):
        if abs(m) > 2 * self.n_max:
            raise InputError(f"m={m} outside [-2 n_max, 2 n_max]")
        return float(self.coefficients[m + 2 * self.n_max])

    def __call__(self, x_a):
        return evaluate(self, x_a)


def evaluate(field: PotentialField, x_a):
    """U(x_A, z_A) = sum_m C_m exp(2 pi i m x_A / d), real by the C_m pairing.

    x_A is wrapped into one period first, so periodicity holds exactly.
    """
    x = np.asarray(x_a, dtype=float)
    x_red = x - field.period * np.floor(x / field.period)
    m = np.arange(-2 * field.n_max, 2 * field.n_max + 1)
    phases = np.cos((2.0 * np.pi / field.period) * np.multiply.outer(x_red, m))
    out = phases @ field.coefficients
    return float(out) if out.ndim == 0 else out


def scan_fields(p, df, geom, trunc, quad, z_values, workers=1, cache_dir=None,
                unsafe_below_top=False, table=None):
    """PotentialField per z in z_values, sharing one kernel table.

    The kernel pass is z-independent; z enters only through the decay
    exponentials, so scans reuse all reflection solves.
    """
    z_values = [float(z) for z in z_values]
    if not z_values:
        raise InputError("empty z scan")
    for z in z_values:
        if z <= geom.a and not unsafe_below_top:
            raise RegionError(
                f"z_A={z} <= a={geom.a}: potential formula valid only above the "
                "corrugation top (pass unsafe_below_top=True to override)")
        if z <= geom.a:
            warnings.warn(f"evaluating the Rayleigh form below the corrugation top "
                          f"(z_A={z} <= a={geom.a}); results are not guaranteed")
    if quad is None:
        quad = QuadratureSpec()
    if table is None:
        table = grating_kernel_table(geom, df, trunc, quad, z_min=min(z_values),
                                     workers=workers, cache_dir=cache_dir)
    coeffs = assemble_coefficients(table, p, z_values)
    fields = []
    for iz, z in enumerate(z_values):
        fields.append(PotentialField(
            z_a=z, coefficients=coeffs[:, iz].copy(), geometry=geom,
            n_max=trunc.n_max,
            meta={"table": table.meta, "quad": table.meta.get("quad")}))
    return fields


def fourier_coefficients(p, df, geom, trunc, quad, z_a, workers=1,
                         cache_dir=None, unsafe_below_top=False) -> PotentialField:
    """Lateral Fourier coefficients C_m(z_A) of the grating potential.

    Requires z_A > a (Rayleigh region); unsafe_below_top overrides the region
    check with a warning.
    """
    return scan_fields(p, df, geom, trunc, quad, [z_a], workers=workers,
                       cache_dir=cache_dir, unsafe_below_top=unsafe_below_top)[0]


def plane_potential_values(p, df, z_values, quad=None):
    """U0(z) for every z in z_values through the shared integrator."""
    z_values = np.asarray([float(z) for z in z_values])
    if np.any(z_values <= 0.0):
        raise InputError("plane potential needs z > 0")
    if quad is None:
        quad = QuadratureSpec()
    table = plane_kernel_table(df, quad, z_min=float(z_values.min()))
    coeffs = assemble_coefficients(table, p, z_values)
    return coeffs[0]


def check_doubling(compute, quad, tolerance=0.005, axes=("xi", "ky", "kx0")):
    """Doubling guard: recompute with each axis refined and compare.

    compute(quad) must return a float (or array) observable. Raises
    ConvergenceError carrying both estimates when the relative deviation
    exceeds the tolerance; returns the per-axis deviations otherwise.
    """
    base = np.asarray(compute(quad), dtype=float)
    deviations = {}
    for axis in axes:
        fine = np.asarray(compute(quad.refined(axis)), dtype=float)
        scale = np.maximum(np.abs(fine), np.finfo(float).tiny)
        rel = float(np.max(np.abs(base - fine) / scale))
        deviations[axis] = rel
        if rel > tolerance:
            raise ConvergenceError(
                f"quadrature doubling on axis {axis!r} moved the result by "
                f"{rel:.3e} (> {tolerance})", coarse=base, fine=fine, rel_dev=rel)
    return deviations


@dataclass
class ConvergenceRow:
    n_max: int
    x_a: float
    z_a: float
    u: float
    rel_dev: float


def converge_nmax(p, df, geom, quad, z_a, x_points, n_list, workers=1,
                  cache_dir=None):
    """Truncation convergence table: U at each n_max in n_list against the
    largest entry, per x_A sample.

    Returns (rows, reference_n) with rows ordered by (n_max, x index).
    """
    n_list = [int(n) for n in n_list]
    if any(b < a for a, b in zip(n_list, n_list[1:])):
        raise InputError("n_list must be non-decreasing")
    x_points = [float(x) for x in x_points]
    values = {}
    for n in sorted(set(n_list)):
        trunc = TruncationSpec(n_max=n)
        f = fourier_coefficients(p, df, geom, trunc, quad, z_a,
                                 workers=workers, cache_dir=cache_dir)
        values[n] = np.asarray([evaluate(f, x) for x in x_points])
    n_ref = max(n_list)
    ref = values[n_ref]
    rows = []
    for n in n_list:
        for ix, x in enumerate(x_points):
            dev = abs(values[n][ix] - ref[ix]) / abs(ref[ix]) if ref[ix] != 0.0 else 0.0
            rows.append(ConvergenceRow(n_max=n, x_a=x, z_a=float(z_a),
                                       u=float(values[n][ix]), rel_dev=float(dev)))
    return rows, n_ref
