"""Snapshot, checkpoint and diagnostics-file formats.

Field snapshots are either binary (npz, bit-exact) or CSV rows of
(wavevector, coefficient) triples with a dimension header.  History
checkpoints are npz bundles of the lag grid, kernel description and node
values; binary round-trips are bit-exact.  Diagnostics CSVs follow the fixed
column schema in :mod:`voigtflow.energy` with deterministic formatting.
"""

from __future__ import annotations

import json

import numpy as np

from .energy import CSV_COLUMNS
from .history import GridHistory, PronyHistory, SGrid
from .kernels import ExponentialSum, Tabulated
from .spectral import Grid, SpectralField

__all__ = [
    "save_field",
    "load_field",
    "save_history",
    "load_history",
    "write_diagnostics_csv",
    "kernel_to_dict",
    "kernel_from_dict",
]


def _fmt(x):
    return format(float(x), ".17g")


def kernel_to_dict(kernel):
    if isinstance(kernel, ExponentialSum):
        return {
            "variant": "exponential_sum",
            "coefficients": [[float(c), float(d)] for c, d in zip(kernel.c, kernel.d)],
            "epsilon": kernel.epsilon,
        }
    if isinstance(kernel, Tabulated):
        return {
            "variant": "tabulated",
            "s": kernel.s.tolist(),
            "mu": kernel.mu_table.tolist(),
            "epsilon": kernel.epsilon,
        }
    raise TypeError(f"unknown kernel type {type(kernel)!r}")


def kernel_from_dict(spec):
    if spec["variant"] == "exponential_sum":
        return ExponentialSum(spec["coefficients"], epsilon=spec.get("epsilon", 1.0))
    if spec["variant"] == "tabulated":
        return Tabulated(
            np.asarray(spec["s"]), np.asarray(spec["mu"]), epsilon=spec.get("epsilon", 1.0)
        )
    raise ValueError(f"unknown kernel variant {spec['variant']!r}")


def save_field(path, field, fmt="npz"):
    """Write a spectral field snapshot (binary npz or CSV triples)."""
    path = str(path)
    if fmt == "npz":
        np.savez(path, dim=field.grid.dim, n=field.grid.n, coeffs=field.coeffs)
        return path if path.endswith(".npz") else path + ".npz"
    if fmt != "csv":
        raise ValueError(f"unknown snapshot format {fmt!r}")
    g = field.grid
    with open(path, "w") as fh:
        fh.write(f"# dim={g.dim} n={g.n}\n")
        klabels = ",".join(f"k{ax}" for ax in "xyz"[: g.dim])
        comps = ",".join(f"re_u{c},im_u{c}" for c in range(g.dim))
        fh.write(f"{klabels},{comps}\n")
        it = np.ndindex(*g.shape)
        for idx in it:
            kvec = tuple(int(g.k[(ax, *idx)]) for ax in range(g.dim))
            vals = field.coeffs[(slice(None), *idx)]
            if not np.any(vals):
                continue
            row = ",".join(str(k) for k in kvec)
            row += "," + ",".join(f"{_fmt(v.real)},{_fmt(v.imag)}" for v in vals)
            fh.write(row + "\n")
    return path


def load_field(path, fmt=None):
    path = str(path)
    if fmt is None:
        fmt = "npz" if path.endswith(".npz") else "csv"
    if fmt == "npz":
        data = np.load(path)
        grid = Grid(int(data["dim"]), int(data["n"]))
        return SpectralField(grid, data["coeffs"], enforce_mask=False)
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing dimension header")
        meta = dict(tok.split("=") for tok in header[1:].split())
        grid = Grid(int(meta["dim"]), int(meta["n"]))
        fh.readline()  # column labels
        coeffs = np.zeros((grid.dim, *grid.shape), dtype=np.complex128)
        for line in fh:
            parts = line.strip().split(",")
            kvec = tuple(int(float(p)) for p in parts[: grid.dim])
            idx = tuple(k % grid.n for k in kvec)
            rest = [float(p) for p in parts[grid.dim:]]
            for c in range(grid.dim):
                coeffs[(c, *idx)] = rest[2 * c] + 1j * rest[2 * c + 1]
    return SpectralField(grid, coeffs, enforce_mask=False)


def save_history(path, eta):
    """Checkpoint a history (grid-node values or moment-closure state)."""
    path = str(path)
    kernel_json = json.dumps(kernel_to_dict(eta.kernel))
    if isinstance(eta, GridHistory):
        np.savez(
            path,
            mode="grid",
            dim=eta.grid.dim,
            n=eta.grid.n,
            kernel=kernel_json,
            nodes=eta.sgrid.nodes,
            values=eta.values,
        )
    elif isinstance(eta, PronyHistory):
        np.savez(
            path,
            mode="prony",
            dim=eta.grid.dim,
            n=eta.grid.n,
            kernel=kernel_json,
            m=eta.m,
            p0=eta.p0,
            p1=eta.p1,
            mini_nodes=eta.mini.sgrid.nodes,
            mini_values=eta.mini.flushed().values,
        )
    else:
        raise TypeError(f"unknown history type {type(eta)!r}")
    return path if path.endswith(".npz") else path + ".npz"


def load_history(path):
    data = np.load(path, allow_pickle=False)
    grid = Grid(int(data["dim"]), int(data["n"]))
    kernel = kernel_from_dict(json.loads(str(data["kernel"])))
    if str(data["mode"]) == "grid":
        sgrid = SGrid(data["nodes"])
        return GridHistory(grid, sgrid, kernel, data["values"])
    mini_nodes = data["mini_nodes"]
    eta = PronyHistory(grid, kernel, ds_min=float(mini_nodes[1]), mini_m=len(mini_nodes) - 1)
    eta.m = data["m"]
    eta.p0 = data["p0"]
    eta.p1 = data["p1"]
    eta.mini = eta.mini.copy_with(data["mini_values"])
    return eta


def write_diagnostics_csv(path, traj):
    """One row per output time, fixed schema, deterministic formatting."""
    resid_at = {}
    for i, t in enumerate(traj.t[:-1]):
        resid_at[round(float(traj.t[i + 1]) / traj.dt)] = traj.resid[i]
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for rep in traj.reports:
            step_idx = round(rep.t / traj.dt)
            residual = resid_at.get(step_idx, 0.0)
            fh.write(",".join(_fmt(v) for v in rep.as_row(residual)) + "\n")
    return path
