"""Time integration of the Voigt system with hereditary viscosity.

The evolution solved here is

    d_t (u + alpha A u) + int mu(s) A eta(s) ds + beta A^{-theta} u + B(u,u) = f
    d_t eta = -d_s eta + u

advanced by a second-order IMEX scheme: (I + alpha A) is inverted exactly
per mode, the damping (and, in the instantaneous limit, the Stokes term) is
Crank-Nicolson, the memory force is trapezoidal through a predictor history,
and the advection is a two-stage explicit rule.  The same substep drives the
full solve, the instantaneous-kernel reference solve, the stable/regular
splitting solve, and the perturbation-pair solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import energy
from .history import GridHistory, PronyHistory, SGrid, init_history
from .spectral import Grid, SpectralField, bilinear_B

__all__ = [
    "ModelConfig",
    "State",
    "Trajectory",
    "BlowUpError",
    "step",
    "solve",
    "solve_instantaneous",
    "solve_split",
    "solve_pair",
]


class BlowUpError(RuntimeError):
    """Nonfinite values: with the Voigt regularization this flags a bug or a
    broken configuration, not physics.  Carries the last healthy report."""

    def __init__(self, t, last_report):
        super().__init__(f"nonfinite state at t = {t:.6g}")
        self.t = t
        self.last_report = last_report


@dataclass
class ModelConfig:
    """Physical and numerical parameters of one run."""

    grid: Grid
    kernel: object
    alpha: float = 1.0
    beta: float = 0.5
    theta: float = 0.0
    forcing: SpectralField | None = None
    dt: float = 1e-3
    t_end: float = 20.0
    stride: int = 10
    history_mode: str = "prony"
    history_m: int = 256
    s_max_factor: float = 40.0
    mini_m: int = 24
    eps_report: float = 1e-2
    varrho: float = 0.0
    store_u_path: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.beta < 0 or self.theta < 0:
            raise ValueError("beta and theta must be nonnegative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.history_mode not in ("grid", "prony"):
            raise ValueError(f"unknown history mode {self.history_mode!r}")

    def sgrid(self):
        s_max = self.s_max_factor / self.kernel.dafermos_rate()
        return SGrid.geometric(self.history_m, self.dt, s_max)

    def new_history(self, past=None):
        return init_history(
            self.grid, self.sgrid(), self.kernel, self.history_mode, past, self.mini_m
        )


@dataclass
class State:
    u: SpectralField
    eta: object
    t: float = 0.0


@dataclass
class Trajectory:
    """Stride-1 scalar series plus full reports at the output stride."""

    t: np.ndarray
    E: np.ndarray
    Pi: np.ndarray
    psi_term: np.ndarray
    f_dot_u: np.ndarray
    dtu1_sq: np.ndarray
    resid: np.ndarray
    report_times: list
    reports: list
    final_state: State
    dt: float
    stride: int
    config: ModelConfig
    u_path: list | None = None
    extra: dict = dataclass_field(default_factory=dict)


class _Stepper:
    """Precomputed diagonal factors plus the generic system substep."""

    def __init__(self, cfg, instantaneous=False):
        g = cfg.grid
        self.cfg = cfg
        self.dt = cfg.dt
        lam = g.power(2.0)
        self.green = g.mask / (1.0 + cfg.alpha * lam)
        lin = cfg.beta * g.power(-2.0 * cfg.theta)
        if instantaneous:
            lin = lin + lam
        self.lin = lin
        self.dinv = 1.0 / (1.0 + 0.5 * cfg.dt * self.green * lin)
        self.damp_mult = cfg.beta * g.power(-2.0 * cfg.theta)
        self.f = np.zeros((g.dim, *g.shape)) if cfg.forcing is None else cfg.forcing.coeffs
        self.instantaneous = instantaneous

    def substep(self, u, eta, adv_n=None, adv_star=None, f_n=None, f_half=None, damped=True):
        """Advance one system by dt.

        adv_n/adv_star: advecting velocity at the two stages (None = self).
        f_n/f_half: forcing coefficients for predictor and corrector (None =
        the configured constant forcing).  Returns (u_star, u_new, eta_new).
        """
        dt, green = self.dt, self.green
        lin = self.lin if damped else 0.0
        fn = self.f if f_n is None else f_n
        fh = self.f if f_half is None else f_half
        b_n = bilinear_B(adv_n if adv_n is not None else u, u).coeffs
        mem_n = 0.0 if eta is None else eta.memory_force().coeffs
        rhs_n = fn - mem_n - lin * u.coeffs - b_n
        u_star = SpectralField(u.grid, u.coeffs + dt * green * rhs_n, False)
        b_s = bilinear_B(adv_star if adv_star is not None else u_star, u_star).coeffs
        mem_s = 0.0 if eta is None else eta.predicted_memory_force(u, u_star, dt).coeffs
        rhs_half = fh - 0.5 * (mem_n + mem_s) - 0.5 * (b_n + b_s) - 0.5 * lin * u.coeffs
        new_coeffs = u.coeffs + dt * green * rhs_half
        if damped:
            new_coeffs = self.dinv * new_coeffs
        u_new = SpectralField(u.grid, new_coeffs, False)
        eta_new = None if eta is None else eta.advance(u, u_new, dt)
        return u_star, u_new, eta_new


def _scalars(state, cfg, f_coeffs):
    """The stride-1 bookkeeping scalars (E, Pi, psi-term, <f,u>)."""
    u = state.u
    n0 = u.norm(0.0)
    n1 = u.norm(1.0)
    nmt = u.norm(-cfg.theta) if cfg.theta != 0.0 else n0
    msq = 0.0 if state.eta is None else state.eta.norm_sq(0)
    e = 0.5 * (n0**2 + cfg.alpha * n1**2 + msq)
    pi = 0.0 if state.eta is None else state.eta.pi(0)
    psi = cfg.beta * nmt**2
    fu = float((f_coeffs * np.conj(u.coeffs)).real.sum())
    return e, pi, psi, fu


def _check_finite(u, t, last_report):
    if not np.isfinite(u.coeffs.view(float)).all():
        raise BlowUpError(t, last_report)


def step(state, cfg):
    """One IMEX step of the full system (convenience wrapper)."""
    stepper = _Stepper(cfg)
    _, u_new, eta_new = stepper.substep(state.u, state.eta)
    _check_finite(u_new, state.t + cfg.dt, None)
    return State(u_new, eta_new, state.t + cfg.dt)


def solve(cfg, u0, eta0=None, instantaneous=False):
    """Integrate on [0, t_end]; returns the trajectory with diagnostics."""
    stepper = _Stepper(cfg, instantaneous=instantaneous)
    eta = None if instantaneous else (eta0 if eta0 is not None else cfg.new_history())
    state = State(u0.copy(), eta, 0.0)
    n_steps = int(round(cfg.t_end / cfg.dt))
    col = _TrajCollector(cfg, n_steps)
    u_path = [state.u.copy()] if cfg.store_u_path else None
    col.record(0, state, stepper.f)

    for n in range(n_steps):
        _, u_new, eta_new = stepper.substep(state.u, state.eta)
        state = State(u_new, eta_new, (n + 1) * cfg.dt)
        _check_finite(u_new, state.t, col.reports[-1])
        col.record(n + 1, state, stepper.f)
        if u_path is not None:
            u_path.append(u_new.copy())

    traj = col.finish(state)
    traj.u_path = u_path
    return traj


def solve_instantaneous(cfg, u0):
    """Reference solve with the kernel collapsed to an instantaneous Stokes term."""
    return solve(cfg, u0, eta0=None, instantaneous=True)


class _HistoryDiffNorm:
    """M-norm of a linear combination of co-evolved histories.

    For moment-closure histories the squared norm of the combination evolves
    through its own scalar moments driven by the combined velocity; for grid
    histories it is evaluated directly from node values.
    """

    def __init__(self, histories, coeffs):
        self.histories = histories
        self.coeffs = coeffs
        h0 = histories[0]
        self.prony = isinstance(h0, PronyHistory)
        if self.prony:
            self.a, self.d = h0.a, h0.d
            self.p = np.zeros(len(self.a))
            init = sum(c * h.m for c, h in zip(coeffs, histories))
            if float(np.abs(init).max()) > 1e-12:
                raise ValueError("difference tracker needs matching initial histories")

    @staticmethod
    def _sigma(u_coeffs, m_comb, grid, a):
        w = grid.power(2.0).ravel()
        uu = np.conj(u_coeffs).reshape(grid.dim, -1)
        mm = m_comb.reshape(len(a), grid.dim, -1)
        dot = np.einsum("jcx,cx->jx", mm.real, uu.real) - np.einsum(
            "jcx,cx->jx", mm.imag, uu.imag
        )
        return 2.0 * dot @ w

    def update(self, dt, u_old_comb, u_new_comb, hist_old, hist_new):
        if not self.prony:
            return
        grid = self.histories[0].grid
        m_old = sum(c * h.m for c, h in zip(self.coeffs, hist_old))
        m_new = sum(c * h.m for c, h in zip(self.coeffs, hist_new))
        s_old = self._sigma(u_old_comb, m_old, grid, self.a)
        s_new = self._sigma(u_new_comb, m_new, grid, self.a)
        decay = np.exp(-self.d * dt)
        self.p = decay * self.p + 0.5 * dt * (decay * s_old + s_new)

    def norm_sq(self, hist_now):
        if self.prony:
            return max(float(self.a @ self.p), 0.0)
        vals = sum(c * h.values for c, h in zip(self.coeffs, hist_now))
        return self.histories[0]._like(vals).norm_sq(0)


def _h_norm_sq(cfg, u_coeffs, hist_part_sq):
    g = cfg.grid
    flat = u_coeffs.reshape(g.dim, -1)
    mag = (flat.real**2 + flat.imag**2)
    n0 = float(mag.sum())
    n1 = float((mag * g.power(2.0).ravel()).sum())
    return n0 + cfg.alpha * n1 + hist_part_sq


def solve_split(cfg, u0, eta0=None):
    """Co-evolve the full system with its stable/regular decomposition.

    The first part starts from the full initial data, is advected by the full
    velocity, and carries no forcing or damping; the second starts from rest
    and receives the forcing plus the damping exchange term.  Returns
    (traj_full, traj_stable, traj_regular) with the superposition defect
    series in traj_full.extra["split_defect"].
    """
    stepper = _Stepper(cfg)
    eta = eta0 if eta0 is not None else cfg.new_history()
    u = u0.copy()
    v = u0.copy()
    w = SpectralField.zeros(cfg.grid)
    xi = eta.copy()
    zeta = cfg.new_history()
    n_steps = int(round(cfg.t_end / cfg.dt))
    f = stepper.f
    zero_f = np.zeros_like(f)

    diff = _HistoryDiffNorm([xi, zeta, eta], [1.0, 1.0, -1.0])
    collect = {name: _TrajCollector(cfg, n_steps) for name in ("S", "L", "K")}
    defect = np.zeros(n_steps + 1)

    collect["S"].record(0, State(u, eta, 0.0), f)
    collect["L"].record(0, State(v, xi, 0.0), zero_f)
    collect["K"].record(0, State(w, zeta, 0.0), f - stepper.damp_mult * v.coeffs)

    for n in range(n_steps):
        t1 = (n + 1) * cfg.dt
        # full-system predictor supplies the advecting stages
        b_uu = bilinear_B(u, u).coeffs
        mem_u = eta.memory_force().coeffs
        rhs_n = f - mem_u - stepper.lin * u.coeffs - b_uu
        u_star = SpectralField(cfg.grid, u.coeffs + cfg.dt * stepper.green * rhs_n, False)

        # stable part: no forcing, no damping, advected by the full velocity
        _, v_new, xi_new = stepper.substep(
            v, xi, adv_n=u, adv_star=u_star, f_n=zero_f, f_half=zero_f, damped=False
        )
        # regular part: forcing plus damping exchange with the stable part
        f_n = f - stepper.damp_mult * v.coeffs
        f_half = f - 0.5 * stepper.damp_mult * (v.coeffs + v_new.coeffs)
        _, w_new, zeta_new = stepper.substep(
            w, zeta, adv_n=u, adv_star=u_star, f_n=f_n, f_half=f_half, damped=True
        )
        # full system
        _, u_new, eta_new = stepper.substep(u, eta)

        u_old_comb = v.coeffs + w.coeffs - u.coeffs
        u_new_comb = v_new.coeffs + w_new.coeffs - u_new.coeffs
        diff.update(cfg.dt, u_old_comb, u_new_comb, [xi, zeta, eta], [xi_new, zeta_new, eta_new])

        u, v, w = u_new, v_new, w_new
        eta, xi, zeta = eta_new, xi_new, zeta_new
        _check_finite(u, t1, collect["S"].reports[-1])

        defect[n + 1] = np.sqrt(
            _h_norm_sq(cfg, u_new_comb, diff.norm_sq([xi, zeta, eta]))
        )
        collect["S"].record(n + 1, State(u, eta, t1), f)
        collect["L"].record(n + 1, State(v, xi, t1), zero_f)
        collect["K"].record(n + 1, State(w, zeta, t1), f - stepper.damp_mult * v.coeffs)

    traj_s = collect["S"].finish(State(u, eta, n_steps * cfg.dt))
    traj_l = collect["L"].finish(State(v, xi, n_steps * cfg.dt))
    traj_k = collect["K"].finish(State(w, zeta, n_steps * cfg.dt))
    traj_s.extra["split_defect"] = defect
    return traj_s, traj_l, traj_k


def solve_pair(cfg, u0_a, u0_b, eta0=None):
    """Co-evolve two solutions and track the phase-space separation.

    Both runs share the initial history (the perturbation lives in the
    velocity), so the separation norm follows the difference closure exactly.
    Returns (traj_a, traj_b) with ||U_a - U_b||_H in traj_a.extra["delta_h"].
    """
    stepper = _Stepper(cfg)
    eta_a = eta0.copy() if eta0 is not None else cfg.new_history()
    eta_b = eta_a.copy()
    ua, ub = u0_a.copy(), u0_b.copy()
    n_steps = int(round(cfg.t_end / cfg.dt))
    f = stepper.f

    diff = _HistoryDiffNorm([eta_a, eta_b], [1.0, -1.0])
    col_a = _TrajCollector(cfg, n_steps)
    col_b = _TrajCollector(cfg, n_steps)
    delta = np.zeros(n_steps + 1)
    delta[0] = np.sqrt(_h_norm_sq(cfg, ua.coeffs - ub.coeffs, 0.0))
    col_a.record(0, State(ua, eta_a, 0.0), f)
    col_b.record(0, State(ub, eta_b, 0.0), f)

    for n in range(n_steps):
        t1 = (n + 1) * cfg.dt
        _, ua_new, eta_a_new = stepper.substep(ua, eta_a)
        _, ub_new, eta_b_new = stepper.substep(ub, eta_b)
        diff.update(
            cfg.dt,
            ua.coeffs - ub.coeffs,
            ua_new.coeffs - ub_new.coeffs,
            [eta_a, eta_b],
            [eta_a_new, eta_b_new],
        )
        ua, ub, eta_a, eta_b = ua_new, ub_new, eta_a_new, eta_b_new
        _check_finite(ua, t1, col_a.reports[-1])
        _check_finite(ub, t1, col_b.reports[-1])
        delta[n + 1] = np.sqrt(
            _h_norm_sq(cfg, ua.coeffs - ub.coeffs, diff.norm_sq([eta_a, eta_b]))
        )
        col_a.record(n + 1, State(ua, eta_a, t1), f)
        col_b.record(n + 1, State(ub, eta_b, t1), f)

    traj_a = col_a.finish(State(ua, eta_a, n_steps * cfg.dt))
    traj_b = col_b.finish(State(ub, eta_b, n_steps * cfg.dt))
    traj_a.extra["delta_h"] = delta
    return traj_a, traj_b


class _TrajCollector:
    """Accumulates the stride-1 series and strided reports for one system."""

    def __init__(self, cfg, n_steps):
        self.cfg = cfg
        self.n = n_steps
        self.times = np.zeros(n_steps + 1)
        self.E = np.zeros(n_steps + 1)
        self.Pi = np.zeros(n_steps + 1)
        self.psi = np.zeros(n_steps + 1)
        self.fu = np.zeros(n_steps + 1)
        self.dtu = np.zeros(n_steps)
        self.resid = np.zeros(n_steps)
        self.reports = []
        self.report_times = []
        self._prev_u = None

    def record(self, n, state, f_coeffs):
        cfg = self.cfg
        self.times[n] = state.t
        self.E[n], self.Pi[n], self.psi[n], self.fu[n] = _scalars(state, cfg, f_coeffs)
        if n > 0:
            du = state.u.coeffs - self._prev_u
            flat = du.reshape(cfg.grid.dim, -1)
            mag = flat.real**2 + flat.imag**2
            n1sq = float((mag * cfg.grid.power(2.0).ravel()).sum())
            self.dtu[n - 1] = n1sq / cfg.dt**2
            self.resid[n - 1] = (
                (self.E[n] - self.E[n - 1]) / cfg.dt
                + 0.5 * (self.psi[n] + self.psi[n - 1])
                + 0.5 * (self.Pi[n] + self.Pi[n - 1])
                - 0.5 * (self.fu[n] + self.fu[n - 1])
            )
        self._prev_u = state.u.coeffs
        if n == 0 or n % cfg.stride == 0 or n == self.n:
            if isinstance(state.eta, PronyHistory):
                # materialize queued mini-segment shifts once for this report
                state.eta.mini = state.eta.mini.flushed()
            self.reports.append(energy.report(state, cfg))
            self.report_times.append(state.t)

    def finish(self, final_state):
        return Trajectory(
            t=self.times,
            E=self.E,
            Pi=self.Pi,
            psi_term=self.psi,
            f_dot_u=self.fu,
            dtu1_sq=self.dtu,
            resid=self.resid,
            report_times=self.report_times,
            reports=self.reports,
            final_state=final_state,
            dt=self.cfg.dt,
            stride=self.cfg.stride,
            config=self.cfg,
        )
