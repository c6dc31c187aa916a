"""Content-addressed disk cache of reflection-kernel tables.

Format (version 1): one NPZ file per key under the cache directory, named
<sha256>.npz, holding little-endian float64 arrays (xi, w_xi, w_k, kernels,
kappa) plus a JSON metadata string (version, key, z_reference, n_max,
period). Keys hash the exact geometry, material, truncation and realized
quadrature grid, so z-scans and x-scans of the same configuration share one
entry. The directory can also be set with the CPGRATING_CACHE_DIR
environment variable (CLI layer).
"""

from __future__ import annotations

import hashlib
import json
import os

import numpy as np

CACHE_FORMAT_VERSION = 1
ENV_CACHE_DIR = "CPGRATING_CACHE_DIR"


def table_key(geom, df, trunc, quad, xi_scale, ky_scale):
    payload = {
        "format": CACHE_FORMAT_VERSION,
        "geometry": geom.key_data(),
        "material": df.key_data(),
        "trunc": trunc.key_data(),
        "quad": quad.key_data(xi_scale, ky_scale),
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _path(cache_dir, key):
    return os.path.join(cache_dir, f"{key}.npz")


def store_table(cache_dir, key, table):
    os.makedirs(cache_dir, exist_ok=True)
    meta = dict(table.meta)
    meta.update({"version": CACHE_FORMAT_VERSION, "key": key,
                 "z_reference": table.z_reference, "n_max": table.n_max,
                 "period": table.period})
    np.savez_compressed(
        _path(cache_dir, key),
        xi=table.xi.astype("<f8"), w_xi=table.w_xi.astype("<f8"),
        w_k=table.w_k.astype("<f8"),
        kernels=table.kernels.astype("<f8"), kappa=table.kappa.astype("<f8"),
        meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"),
                           dtype=np.uint8))


def load_table(cache_dir, key):
    from .potential import KernelTable

    path = _path(cache_dir, key)
    if not os.path.exists(path):
        return None
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"].tobytes()).decode("utf-8"))
        if meta.get("version") != CACHE_FORMAT_VERSION or meta.get("key") != key:
            return None
        return KernelTable(
            xi=data["xi"].astype(float), w_xi=data["w_xi"].astype(float),
            w_k=data["w_k"].astype(float),
            kernels=data["kernels"].astype(float),
            kappa=data["kappa"].astype(float),
            z_reference=float(meta["z_reference"]), n_max=int(meta["n_max"]),
            period=meta["period"], meta=meta)
