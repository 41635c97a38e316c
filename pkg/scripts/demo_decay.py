#!/usr/bin/env python3
"""Minimal library walkthrough: one unforced damped run plus a decay fit."""

import numpy as np

from voigtflow import (
    ExponentialSum,
    Grid,
    ModelConfig,
    fit_decay,
    random_divfree_field,
    solve,
)


def main():
    grid = Grid(2, 64)
    kernel = ExponentialSum([(0.5, 1.0), (0.5, 3.0)])
    cfg = ModelConfig(grid=grid, kernel=kernel, alpha=1.0, beta=0.5, t_end=10.0)
    u0 = random_divfree_field(grid, np.random.default_rng(0), k_max=4, amplitude=1.5)
    traj = solve(cfg, u0)
    omega, r2 = fit_decay(traj.t, traj.E, (1.0, 8.0))
    print(f"E(0) = {traj.E[0]:.4f}  E({cfg.t_end:g}) = {traj.E[-1]:.3e}")
    print(f"fitted decay rate = {omega:.4f} (r^2 = {r2:.5f})")
    print(f"max energy uptick = {np.diff(traj.E).max():.3e}")


if __name__ == "__main__":
    main()
