import numpy as np
import pytest

from voigtflow.history import (
    GridHistory,
    PronyHistory,
    SGrid,
    advance,
    history_norm,
    init_history,
    memory_force,
    pi_functional,
    prony_advance,
    representation_oracle,
)
from voigtflow.kernels import ExponentialSum, Tabulated
from voigtflow.spectral import Grid, SpectralField, random_divfree_field, single_mode_field

GRID = Grid(2, 32)
KERNEL = ExponentialSum([(1.0, 1.0)])


def sgrid(dt=1e-3, m=256, s_max=40.0):
    return SGrid.geometric(m, dt, s_max)


def unit_mode():
    return single_mode_field(GRID, (1, 0), amplitude=1.0)


def constant_history(field, sg=None, kernel=KERNEL):
    sg = sg or sgrid()
    h = GridHistory(GRID, sg, kernel)
    h.values[:] = field.coeffs[None]
    return h


# ---------------------------------------------------------------- init

def test_zero_history_norm():
    h = init_history(GRID, sgrid(), KERNEL)
    assert history_norm(h) == 0.0
    assert history_norm(h, order=1) == 0.0


def test_constant_past_gives_linear_history():
    c = unit_mode()
    h = init_history(GRID, sgrid(), KERNEL, past=lambda s: c)
    nodes = h.sgrid.nodes
    for i in (1, 50, 200):
        expected = nodes[i] * c.coeffs
        assert np.abs(h.values[i] - expected).max() <= 1e-13 * nodes[i]


def test_linear_past_gives_quadratic_history():
    c = unit_mode()
    h = init_history(GRID, sgrid(), KERNEL, past=lambda s: float(s) * c)
    nodes = h.sgrid.nodes
    i = 180
    expected = 0.5 * nodes[i] ** 2
    got = float(np.abs(h.values[i]).max()) * np.sqrt(2.0)  # undo pair split
    ds = np.diff(nodes).max()
    assert got == pytest.approx(expected, rel=0, abs=ds**2)


# ---------------------------------------------------------------- advance

def test_advance_zero_velocity_is_pure_shift():
    rng = np.random.default_rng(0)
    h = constant_history(unit_mode())
    # seed a nonconstant profile: eta(s) = sin(s) * e
    h.values *= np.sin(h.sgrid.nodes).reshape(-1, 1, 1, 1)
    z = SpectralField.zeros(GRID)
    dt = 1e-3
    out = advance(h, z, z, dt)
    nodes = h.sgrid.nodes
    for i in (5, 100, 200):
        target = np.sin(nodes[i] - dt)
        got = out.values[i][np.abs(unit_mode().coeffs) > 0][0]
        scale = np.abs(unit_mode().coeffs).max()
        assert abs(got) / scale == pytest.approx(abs(target), abs=5e-4)


def test_advance_constant_velocity_ramp():
    c = unit_mode()
    sg = sgrid()
    h = init_history(GRID, sg, KERNEL)
    dt = 1e-3
    n = 50
    for _ in range(n):
        h = advance(h, c, c, dt)
    nodes = sg.nodes
    for i in (1, 10, 120, 256):
        expected = min(nodes[i], n * dt)
        amp = float(np.abs(h.values[i]).max() * np.sqrt(2.0))
        assert amp == pytest.approx(expected, abs=2 * (np.diff(nodes).max() * 0 + dt + nodes[1]))


def test_advance_enforces_zero_at_origin():
    u = random_divfree_field(GRID, np.random.default_rng(1), 4)
    h = init_history(GRID, sgrid(), KERNEL)
    for _ in range(5):
        h = advance(h, u, u, 1e-3)
        assert np.abs(h.values[0]).max() == 0.0


def test_advance_rejects_nonpositive_dt():
    h = init_history(GRID, sgrid(), KERNEL)
    z = SpectralField.zeros(GRID)
    with pytest.raises(ValueError):
        advance(h, z, z, 0.0)


# ---------------------------------------------------------------- oracle

def test_oracle_at_time_zero_returns_initial():
    c = unit_mode()
    h0 = init_history(GRID, sgrid(), KERNEL, past=lambda s: c)
    out = representation_oracle([0.0], [c], h0, 0.0)
    assert np.abs(out.values - h0.values).max() <= 1e-14


def test_oracle_constant_velocity():
    c = unit_mode()
    h0 = init_history(GRID, sgrid(), KERNEL)
    t = 0.1
    times = np.linspace(0, t, 101)
    out = representation_oracle(times, [c] * len(times), h0, t)
    nodes = h0.sgrid.nodes
    for i in (1, 60, 180, 256):
        expected = min(nodes[i], t)
        amp = float(np.abs(out.values[i]).max() * np.sqrt(2.0))
        assert amp == pytest.approx(expected, rel=1e-12, abs=1e-12)


def test_oracle_cosine_path_closed_form():
    c = unit_mode()
    omega = 3.0
    t = 0.5
    dt = 1e-3
    times = np.arange(0, t + dt / 2, dt)
    fields = [float(np.cos(omega * tau)) * c for tau in times]
    h0 = init_history(GRID, sgrid(), KERNEL)
    out = representation_oracle(times, fields, h0, t)
    nodes = h0.sgrid.nodes
    for i in (10, 100, 150):
        s = nodes[i]
        if s > t:
            continue
        expected = (np.sin(omega * t) - np.sin(omega * (t - s))) / omega
        amp = out.values[i][np.abs(c.coeffs) > 0][0] * np.sqrt(2.0)
        assert amp.real == pytest.approx(expected, abs=5 * dt**2 * omega)


def test_oracle_requires_covering_path():
    c = unit_mode()
    h0 = init_history(GRID, sgrid(), KERNEL)
    with pytest.raises(ValueError):
        representation_oracle([0.0, 0.5], [c, c], h0, 1.0)


def test_transport_matches_oracle_first_order():
    rng = np.random.default_rng(7)
    base = random_divfree_field(GRID, rng, 4)
    mod = random_divfree_field(GRID, rng, 4)

    def u_at(tau):
        return float(np.cos(2.5 * tau)) * base + float(np.sin(1.7 * tau)) * mod

    errs = []
    for dt, m in ((1e-3, 256), (5e-4, 512)):
        sg = sgrid(dt, m, 40.0)
        h = init_history(GRID, sg, KERNEL)
        times = [0.0]
        fields = [u_at(0.0)]
        nsteps = int(round(0.2 / dt))
        for n in range(nsteps):
            t0, t1 = n * dt, (n + 1) * dt
            h = advance(h, u_at(t0), u_at(t1), dt)
            times.append(t1)
            fields.append(u_at(t1))
        oracle = representation_oracle(times, fields, init_history(GRID, sg, KERNEL), nsteps * dt)
        diff = GridHistory(GRID, sg, KERNEL, h.values - oracle.values)
        err = diff.norm(0)
        scale = max(f.norm(1.0) for f in fields)
        errs.append(err / scale)
        # acceptance-style bound: 5 (ds_min + dt) * path scale
        assert err <= 5.0 * (sg.nodes[1] + dt) * scale
    assert errs[1] < errs[0] / 1.3  # reduces under refinement


# ---------------------------------------------------------------- memory force

def test_memory_force_zero_history():
    h = init_history(GRID, sgrid(), KERNEL)
    assert memory_force(h).max_abs() == 0.0


def test_memory_force_constant_unit_mode_matches_mass():
    e = unit_mode()  # |k|^2 = 1, so A acts as identity
    h = constant_history(e)
    f = memory_force(h)
    kappa = KERNEL.total_mass()
    assert np.abs(f.coeffs - kappa * e.coeffs).max() <= 1e-6 * kappa


def test_grid_vs_prony_force_after_driven_run():
    dt = 1e-3
    sg = sgrid(dt, 256, 40.0)
    hg = init_history(GRID, sg, KERNEL, mode="grid")
    hp = init_history(GRID, sg, KERNEL, mode="prony")
    rng = np.random.default_rng(3)
    a = random_divfree_field(GRID, rng, 4)
    b = random_divfree_field(GRID, rng, 4)

    def u_at(tau):
        return float(np.cos(4.0 * tau)) * a + float(tau) * b

    for n in range(100):
        u0, u1 = u_at(n * dt), u_at((n + 1) * dt)
        hg = advance(hg, u0, u1, dt)
        hp = prony_advance(hp, u0, u1, dt)
    fg, fp = memory_force(hg), memory_force(hp)
    scale = max(fp.max_abs(), 1e-30)
    assert np.abs(fg.coeffs - fp.coeffs).max() <= 1e-3 * scale


# ---------------------------------------------------------------- prony closure

def test_prony_homogeneous_decay():
    k = ExponentialSum([(0.5, 1.0), (0.5, 3.0)])
    h = PronyHistory(GRID, k, ds_min=1e-3)
    h.m[:] = 1.0 + 0.5j
    z = SpectralField.zeros(GRID)
    dt = 0.05
    out = prony_advance(h, z, z, dt)
    for j, d in enumerate(h.d):
        np.testing.assert_allclose(out.m[j], h.m[j] * np.exp(-d * dt), rtol=1e-14)


def test_prony_constant_velocity_steady_state():
    c = unit_mode()
    h = init_history(GRID, sgrid(), KERNEL, mode="prony")
    dt = 1e-2
    for _ in range(3000):
        h = prony_advance(h, c, c, dt)
    for j, d in enumerate(h.d):
        steady = c.coeffs / d**2
        assert np.abs(h.m[j] - steady).max() <= 1e-10


def test_prony_requires_exponential_kernel():
    s = np.linspace(0, 20, 401)
    tab = Tabulated(s, np.exp(-s))
    with pytest.raises(ValueError):
        PronyHistory(GRID, tab, ds_min=1e-3)
    h = init_history(GRID, sgrid(), KERNEL, mode="grid")
    with pytest.raises(ValueError):
        prony_advance(h, unit_mode(), unit_mode(), 1e-3)


def test_prony_norms_track_grid_norms():
    dt = 1e-3
    sg = sgrid(dt, 256, 40.0)
    hg = init_history(GRID, sg, KERNEL, mode="grid")
    hp = init_history(GRID, sg, KERNEL, mode="prony")
    u = random_divfree_field(GRID, np.random.default_rng(11), 4)
    for n in range(200):
        w = float(np.cos(3.0 * n * dt))
        hg = advance(hg, w * u, w * u, dt)
        hp = prony_advance(hp, w * u, w * u, dt)
    for order in (0, 1):
        a, b = hg.norm(order), hp.norm(order)
        assert a == pytest.approx(b, rel=1e-2)
        assert hg.pi(order) == pytest.approx(hp.pi(order), rel=1e-2)
    # capped cross functional agrees across representations
    ca = hg.capped_cross(u, 0)
    cb = hp.capped_cross(u, 0)
    assert ca == pytest.approx(cb, rel=1e-2, abs=1e-12)


# ---------------------------------------------------------------- functionals

def test_history_norm_constant_unit_mode():
    e = unit_mode()
    h = constant_history(e)
    kappa = np.sqrt(KERNEL.total_mass())
    assert history_norm(h, 0) == pytest.approx(kappa, rel=1e-9)
    assert history_norm(h, 1) == pytest.approx(kappa, rel=1e-9)  # lambda = 1


def test_history_norm_linear_profile_gamma_integral():
    e = unit_mode()
    h = constant_history(e)
    h.values *= h.sgrid.nodes.reshape(-1, 1, 1, 1)
    # int_0^inf s^2 e^{-s} ds = Gamma(3) = 2, minus a negligible truncated tail
    assert history_norm(h) ** 2 == pytest.approx(2.0, rel=2e-3)


def test_pi_zero_history():
    h = init_history(GRID, sgrid(), KERNEL)
    assert pi_functional(h) == 0.0


def test_pi_constant_unit_mode():
    e = unit_mode()
    h = constant_history(e)
    # -(1/2) int mu' ds = mu(0)/2 = 1/2
    assert pi_functional(h) == pytest.approx(0.5, rel=1e-9)


def test_pi_dominates_dafermos_bound():
    delta = KERNEL.dafermos_rate()
    rng = np.random.default_rng(5)
    sg = sgrid()
    for trial in range(50):
        h = GridHistory(GRID, sg, KERNEL)
        profile = rng.standard_normal(len(sg))
        f = random_divfree_field(GRID, rng, 5)
        h.values[:] = profile.reshape(-1, 1, 1, 1) * f.coeffs[None]
        h.values[0] = 0.0
        lhs = h.pi()
        rhs = 0.5 * delta * h.norm_sq()
        assert lhs >= rhs - 1e-9 * max(abs(rhs), 1.0)
        assert lhs >= 0.0
