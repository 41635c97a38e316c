"""Scalar functionals of the flow state and trajectory-level analyses.

Everything the decay/dissipativity experiments measure lives here: the
quadratic energies at both regularity orders, the history dissipation
functional, the damping functional, the capped cross functional and the
perturbed energies built from them, plus the discrete energy-balance
residual, log-linear decay fitting, and the velocity time-derivative budget.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

__all__ = [
    "EnergyReport",
    "CSV_COLUMNS",
    "nu_factors",
    "report",
    "balance_residual",
    "fit_decay",
    "dtu_budget",
]

CSV_COLUMNS = [
    "t",
    "E",
    "E1",
    "Pi",
    "Pi1",
    "Phi",
    "Phi1",
    "Psi",
    "Psi1",
    "Lambda_eps",
    "Lambda1",
    "norm_u_minus_theta",
    "norm_u_0",
    "norm_u_1",
    "norm_u_2",
    "residual",
]


@dataclass(frozen=True)
class EnergyReport:
    """All scalar functionals at one instant."""

    t: float
    E: float
    E1: float
    Pi: float
    Pi1: float
    Phi: float
    Phi1: float
    Psi: float
    Psi1: float
    Lambda_eps: float
    Lambda1: float
    norm_u_minus_theta: float
    norm_u_0: float
    norm_u_1: float
    norm_u_2: float

    def as_row(self, residual=0.0):
        vals = [getattr(self, f.name) for f in fields(self)]
        return vals + [residual]


def nu_factors(cfg):
    """Weights of the cross functional in the perturbed energies."""
    prod = cfg.alpha * cfg.kernel.total_mass() * cfg.kernel.dafermos_rate()
    return min(prod / 32.0, 1.0), min(prod / 72.0, 1.0)


def report(state, cfg, eps=None):
    """Evaluate every functional at the given state."""
    if eps is None:
        eps = cfg.eps_report
    u = state.u
    eta = state.eta
    alpha, beta = cfg.alpha, cfg.beta
    n0 = u.norm(0.0)
    n1 = u.norm(1.0)
    n2 = u.norm(2.0)
    nmt = u.norm(-cfg.theta) if cfg.theta != 0.0 else n0
    n1mt = u.norm(1.0 - cfg.theta) if cfg.theta != 0.0 else n1
    if eta is not None:
        m0, m1 = eta.norm_sq(0), eta.norm_sq(1)
        pi0, pi1 = eta.pi(0), eta.pi(1)
        kappa = cfg.kernel.total_mass()
        phi = -(4.0 / kappa) * eta.capped_cross(u, 0)
        phi1 = -(6.0 / kappa) * eta.capped_cross(u, 1)
    else:
        m0 = m1 = pi0 = pi1 = phi = phi1 = 0.0
    e = 0.5 * (n0**2 + alpha * n1**2 + m0)
    e1 = 0.5 * (n1**2 + alpha * n2**2 + m1)
    psi = 2.0 * beta * nmt**2
    psi1 = beta * n1mt**2
    nu, nu1 = nu_factors(cfg)
    lam = e + nu * eps * phi + eps**2 * psi
    lam1 = e1 + nu1 * eps * phi1 + eps**2 * psi1
    return EnergyReport(
        t=state.t,
        E=e,
        E1=e1,
        Pi=pi0,
        Pi1=pi1,
        Phi=phi,
        Phi1=phi1,
        Psi=psi,
        Psi1=psi1,
        Lambda_eps=lam,
        Lambda1=lam1,
        norm_u_minus_theta=nmt,
        norm_u_0=n0,
        norm_u_1=n1,
        norm_u_2=n2,
    )


def balance_residual(traj):
    """Per-step defect of dE/dt + beta||u||^2_{-theta} + Pi = <f, u>.

    Midpoint quantities are trapezoidal averages of the stride-1 scalar
    series.  Returns (residual series, max |residual|).
    """
    if traj.stride != 1:
        raise ValueError("balance residual needs a stride-1 trajectory")
    dt = traj.dt
    e, pi, psi, fu = traj.E, traj.Pi, traj.psi_term, traj.f_dot_u
    r = (e[1:] - e[:-1]) / dt
    r = r + 0.5 * (psi[1:] + psi[:-1]) + 0.5 * (pi[1:] + pi[:-1]) - 0.5 * (fu[1:] + fu[:-1])
    return r, float(np.abs(r).max()) if len(r) else 0.0


def fit_decay(times, e_series, window):
    """Least-squares slope of log E over the window: (omega, r^2)."""
    times = np.asarray(times, dtype=float)
    e_series = np.asarray(e_series, dtype=float)
    lo, hi = window
    sel = (times >= lo) & (times <= hi)
    if not np.any(sel):
        raise ValueError(f"empty fit window {window}")
    t = times[sel]
    e = e_series[sel]
    if np.any(e <= 0.0):
        raise ValueError("energy reached the round-off floor inside the fit window")
    y = np.log(e)
    slope, intercept = np.polyfit(t, y, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    # a flat series has no variance to explain: the fit is exact
    r2 = 1.0 if ss_tot <= 1e-24 * len(y) else 1.0 - ss_res / ss_tot
    return float(-slope), r2


def dtu_budget(traj):
    """Running sum of dt * ||du/dt||_1^2 along the trajectory."""
    return np.concatenate([[0.0], np.cumsum(traj.dt * traj.dtu1_sq)])
