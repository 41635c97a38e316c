import numpy as np
import pytest

from voigtflow.history import init_history
from voigtflow.integrator import ModelConfig, solve
from voigtflow.io import (
    load_field,
    load_history,
    save_field,
    save_history,
    write_diagnostics_csv,
)
from voigtflow.energy import CSV_COLUMNS
from voigtflow.kernels import ExponentialSum
from voigtflow.spectral import Grid, SpectralField, random_divfree_field

GRID = Grid(2, 32)
KERNEL = ExponentialSum([(0.5, 1.0), (0.5, 3.0)])


def test_field_npz_roundtrip_bit_exact(tmp_path):
    u = random_divfree_field(GRID, np.random.default_rng(0), 6)
    path = save_field(tmp_path / "u.npz", u)
    back = load_field(path)
    assert np.array_equal(back.coeffs, u.coeffs)
    assert back.grid == u.grid


def test_field_csv_roundtrip(tmp_path):
    u = random_divfree_field(GRID, np.random.default_rng(1), 4)
    path = save_field(tmp_path / "u.csv", u, fmt="csv")
    back = load_field(path)
    assert np.abs(back.coeffs - u.coeffs).max() <= 1e-16 * u.max_abs()


def test_grid_history_roundtrip_bit_exact(tmp_path):
    cfg = ModelConfig(grid=GRID, kernel=KERNEL, dt=1e-3, history_mode="grid", history_m=64)
    h = init_history(GRID, cfg.sgrid(), KERNEL, "grid")
    rng = np.random.default_rng(2)
    h.values[:] = rng.standard_normal(h.values.shape) + 1j * rng.standard_normal(h.values.shape)
    h.values[0] = 0.0
    path = save_history(tmp_path / "eta.npz", h)
    back = load_history(path)
    assert np.array_equal(back.values, h.values)
    assert np.array_equal(back.sgrid.nodes, h.sgrid.nodes)
    assert back.pi(0) == h.pi(0)


def test_prony_history_roundtrip(tmp_path):
    cfg = ModelConfig(grid=GRID, kernel=KERNEL, dt=1e-3)
    traj = solve(cfg, random_divfree_field(GRID, np.random.default_rng(3), 4), eta0=None)
    h = traj.final_state.eta
    path = save_history(tmp_path / "eta_prony.npz", h)
    back = load_history(path)
    assert np.array_equal(back.m, h.m)
    assert np.array_equal(back.p0, h.p0)
    assert back.norm(0) == h.norm(0)
    u = traj.final_state.u
    assert back.capped_cross(u, 0) == pytest.approx(h.capped_cross(u, 0), rel=1e-12)


def test_diagnostics_csv_schema(tmp_path):
    cfg = ModelConfig(grid=GRID, kernel=KERNEL, dt=1e-3, t_end=0.05, stride=10)
    traj = solve(cfg, random_divfree_field(GRID, np.random.default_rng(4), 4))
    path = write_diagnostics_csv(tmp_path / "diag.csv", traj)
    lines = open(path).read().strip().split("\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert len(lines) == 1 + len(traj.reports)
    row = lines[1].split(",")
    assert len(row) == len(CSV_COLUMNS)
    assert float(row[0]) == 0.0


def test_diagnostics_csv_deterministic(tmp_path):
    cfg = ModelConfig(grid=GRID, kernel=KERNEL, dt=1e-3, t_end=0.05, stride=5)
    u0 = random_divfree_field(GRID, np.random.default_rng(5), 4)
    a = write_diagnostics_csv(tmp_path / "a.csv", solve(cfg, u0))
    b = write_diagnostics_csv(tmp_path / "b.csv", solve(cfg, u0))
    assert open(a, "rb").read() == open(b, "rb").read()
