import numpy as np
import pytest

from voigtflow.energy import balance_residual, dtu_budget, fit_decay, nu_factors, report
from voigtflow.history import GridHistory
from voigtflow.integrator import ModelConfig, State, solve
from voigtflow.kernels import ExponentialSum
from voigtflow.spectral import Grid, SpectralField, random_divfree_field, single_mode_field

GRID = Grid(2, 32)
KERNEL = ExponentialSum([(1.0, 1.0)])


def make_cfg(**kw):
    base = dict(grid=GRID, kernel=KERNEL, alpha=1.0, beta=0.5, theta=0.0, dt=1e-3, t_end=1.0)
    base.update(kw)
    return ModelConfig(**base)


# ---------------------------------------------------------------- report

def test_report_zero_state():
    cfg = make_cfg()
    state = State(SpectralField.zeros(GRID), cfg.new_history(), 0.0)
    r = report(state, cfg)
    for name in ("E", "E1", "Pi", "Pi1", "Phi", "Phi1", "Psi", "Psi1", "Lambda_eps", "Lambda1"):
        assert getattr(r, name) == 0.0


def test_report_hand_example():
    # u = unit single mode |k| = 1, eta = 0, alpha = 0.1, beta = 0.2, theta = 0
    cfg = make_cfg(alpha=0.1, beta=0.2)
    state = State(single_mode_field(GRID, (1, 0), 1.0), cfg.new_history(), 0.0)
    r = report(state, cfg)
    assert r.E == pytest.approx(0.55, rel=1e-12)
    assert r.Psi == pytest.approx(0.4, rel=1e-12)
    assert r.Phi == 0.0
    assert r.Pi == 0.0
    assert r.norm_u_minus_theta == pytest.approx(1.0, rel=1e-12)


def test_report_with_damping_exponent():
    cfg = make_cfg(alpha=0.5, beta=1.0, theta=0.5)
    u = single_mode_field(GRID, (2, 0), 1.0)  # |k|^2 = 4
    state = State(u, cfg.new_history(), 0.0)
    r = report(state, cfg)
    # ||u||_{-theta}^2 = lambda^{-theta} = 1/2; Psi = 2 beta that
    assert r.Psi == pytest.approx(2.0 * 1.0 * 0.5, rel=1e-12)
    # Psi1 = beta ||u||_{1-theta}^2 = beta lambda^{1-theta} = 2
    assert r.Psi1 == pytest.approx(2.0, rel=1e-12)


def test_norm_equivalence_bracket():
    cfg = make_cfg()
    rng = np.random.default_rng(0)
    sg = cfg.sgrid()
    for trial in range(50):
        u = random_divfree_field(GRID, rng, 5, amplitude=float(rng.uniform(0.1, 3.0)))
        h = GridHistory(GRID, sg, KERNEL)
        prof = rng.standard_normal(len(sg))
        base = random_divfree_field(GRID, rng, 5)
        h.values[:] = prof.reshape(-1, 1, 1, 1) * base.coeffs[None]
        h.values[0] = 0.0
        state = State(u, h, 0.0)
        for eps in (1e-3, 1e-2):
            r = report(state, cfg, eps=eps)
            assert 0.5 * r.E <= r.Lambda_eps <= 2.0 * r.E
            assert 0.5 * r.E1 <= r.Lambda1 <= 2.0 * r.E1


def test_nu_factors_definition():
    cfg = make_cfg(alpha=2.0)
    kappa = KERNEL.total_mass()
    delta = KERNEL.dafermos_rate()
    nu, nu1 = nu_factors(cfg)
    assert nu == pytest.approx(min(2.0 * kappa * delta / 32.0, 1.0))
    assert nu1 == pytest.approx(min(2.0 * kappa * delta / 72.0, 1.0))


# ---------------------------------------------------------------- residual

def test_residual_zero_on_rest_state():
    cfg = make_cfg(stride=1, t_end=0.05)
    traj = solve(cfg, SpectralField.zeros(GRID))
    series, peak = balance_residual(traj)
    assert peak == 0.0


def test_residual_requires_stride_one():
    cfg = make_cfg(stride=10, t_end=0.05)
    traj = solve(cfg, SpectralField.zeros(GRID))
    with pytest.raises(ValueError):
        balance_residual(traj)


def test_residual_richardson_factor():
    u0 = random_divfree_field(GRID, np.random.default_rng(3), 4, amplitude=1.0)
    f = single_mode_field(GRID, (1, 0), 1.0)
    peaks = []
    for dt in (2e-3, 1e-3):
        cfg = make_cfg(dt=dt, stride=1, t_end=1.0, forcing=f)
        _, peak = balance_residual(solve(cfg, u0))
        peaks.append(peak)
    assert 3.0 <= peaks[0] / peaks[1] <= 5.2


# ---------------------------------------------------------------- decay fit

def test_fit_exact_exponential():
    t = np.linspace(0, 10, 400)
    omega, r2 = fit_decay(t, 3.0 * np.exp(-0.7 * t), (0.0, 10.0))
    assert omega == pytest.approx(0.7, abs=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_oscillating_prefactor():
    t = np.linspace(0, 20, 2000)
    omega, _ = fit_decay(t, np.exp(-t) * (2.0 + np.cos(t)), (0.0, 20.0))
    assert 0.9 <= omega <= 1.1


def test_fit_constant_series():
    t = np.linspace(0, 5, 100)
    omega, r2 = fit_decay(t, np.full_like(t, 2.5), (0.0, 5.0))
    assert omega == pytest.approx(0.0, abs=1e-14)
    assert r2 == 1.0


def test_fit_rejects_nonpositive_energy():
    t = np.linspace(0, 5, 100)
    e = np.exp(-t)
    e[50] = 0.0
    with pytest.raises(ValueError):
        fit_decay(t, e, (0.0, 5.0))


# ---------------------------------------------------------------- budget

def test_budget_zero_on_rest():
    cfg = make_cfg(t_end=0.05)
    traj = solve(cfg, SpectralField.zeros(GRID))
    assert dtu_budget(traj).max() == 0.0


def test_budget_plateaus_on_decaying_run():
    cfg = make_cfg(t_end=6.0)
    traj = solve(cfg, random_divfree_field(GRID, np.random.default_rng(4), 4, 1.0))
    budget = dtu_budget(traj)
    total = budget[-1]
    half_idx = np.searchsorted(traj.t, 3.0)
    assert budget[half_idx] >= 0.95 * total  # almost all of it spent early
    assert np.all(np.diff(budget) >= 0.0)
