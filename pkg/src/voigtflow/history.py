"""Storage and evolution of the accumulated-past variable.

The hereditary state eta^t(s) (the past velocity integrated up to lag s)
is evolved by the transport equation d_t eta = -d_s eta + u with eta(0) = 0.
Two representations are provided:

* ``GridHistory`` samples eta on a geometric lag grid and advances it
  semi-Lagrangially (linear interpolation along characteristics).  All
  lag-space functionals are quadratures with kernel-exact hat weights, so
  pointwise kernel inequalities survive discretization.

* ``PronyHistory`` closes the dynamics exactly for exponential-sum kernels:
  the memory force needs only the moment fields m_j = int e^{-d_j s} eta ds,
  and the quadratic functionals (weighted norms, the dissipation functional)
  close on scalar moments p_j = int e^{-d_j s} ||eta(s)||^2 ds.  A short
  auxiliary lag segment on [0, s_*] supplies the capped-weight correction
  used by the cross functional.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .kernels import _exp_hat_moments
from .spectral import SpectralField

__all__ = [
    "SGrid",
    "GridHistory",
    "PronyHistory",
    "init_history",
    "advance",
    "memory_force",
    "history_norm",
    "pi_functional",
    "prony_advance",
    "representation_oracle",
]


class SGrid:
    """Geometric lag grid 0 = s_0 < s_1 < ... < s_M."""

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
            raise ValueError("lag grid must start at 0 and increase strictly")
        self.nodes = nodes
        self._shift_cache = {}

    @classmethod
    def geometric(cls, m, ds_min, s_max):
        if s_max <= ds_min:
            return cls(np.array([0.0, max(s_max, ds_min)]))
        return cls(np.concatenate([[0.0], np.geomspace(ds_min, s_max, m)]))

    def __len__(self):
        return len(self.nodes)

    def shift(self, dt):
        """Sparse interpolation matrix T and source vector for one transport step.

        eta_new = T @ eta_old + src[:, None] * u_mid, where rows with
        s_i >= dt pull back by dt (src = dt) and younger nodes are filled
        from the boundary layer eta(s) = s * u_mid.
        """
        key = float(dt)
        if key not in self._shift_cache:
            nodes = self.nodes
            m1 = len(nodes)
            rows, cols, vals = [], [], []
            src = np.zeros(m1)
            for i in range(1, m1):
                x = nodes[i] - dt
                if x < 0:
                    src[i] = nodes[i]
                    continue
                src[i] = dt
                j = min(np.searchsorted(nodes, x, side="right") - 1, m1 - 2)
                h = nodes[j + 1] - nodes[j]
                w_hi = (x - nodes[j]) / h
                rows += [i, i]
                cols += [j, j + 1]
                vals += [1.0 - w_hi, w_hi]
            t = sparse.csr_matrix((vals, (rows, cols)), shape=(m1, m1))
            self._shift_cache[key] = (t, src)
        return self._shift_cache[key]


def _node_sq_norms(values, grid, order):
    """||eta(s_i)||_{1+order}^2 for every node, one pass."""
    w = grid.power(2.0 * (1 + order)).ravel()
    flat = values.reshape(len(values), grid.dim, -1)
    mag = flat.real**2 + flat.imag**2
    return np.einsum("icx,x->i", mag, w)


def _node_cross(values, field, order):
    """<eta(s_i), u>_{1+order} for every node."""
    g = field.grid
    w = g.power(2.0 * (1 + order)).ravel()
    flat = values.reshape(len(values), g.dim, -1)
    target = field.coeffs.reshape(g.dim, -1) * w
    # real part of sum eta * conj(u) * |k|^{2(1+order)}
    return np.einsum("icx,cx->i", flat.real, target.real) + np.einsum(
        "icx,cx->i", flat.imag, target.imag
    )


class GridHistory:
    """Past-velocity accumulation sampled on a geometric lag grid."""

    def __init__(self, grid, sgrid, kernel, values=None):
        self.grid = grid
        self.sgrid = sgrid
        self.kernel = kernel
        if values is None:
            values = np.zeros((len(sgrid), grid.dim, *grid.shape), dtype=np.complex128)
        self.values = values
        self.w_mu = kernel.hat_weights(sgrid.nodes, "mu")
        self.w_dmu = kernel.hat_weights(sgrid.nodes, "neg_mu_prime")
        self.w_star = kernel.hat_weights(sgrid.nodes, "mu_star")
        self._pred_cache = {}

    mode = "grid"

    def _like(self, values):
        out = GridHistory.__new__(GridHistory)
        out.grid, out.sgrid, out.kernel = self.grid, self.sgrid, self.kernel
        out.values = values
        out.w_mu, out.w_dmu, out.w_star = self.w_mu, self.w_dmu, self.w_star
        out._pred_cache = self._pred_cache
        return out

    def copy(self):
        return self._like(self.values.copy())

    def advance(self, u_old, u_new, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        t, src = self.sgrid.shift(dt)
        flat = self.values.reshape(len(self.sgrid), -1)
        out = (t @ flat).reshape(self.values.shape)
        u_mid = 0.5 * (u_old.coeffs + u_new.coeffs)
        out += src.reshape(-1, *([1] * (1 + self.grid.dim))) * u_mid[None]
        out[0] = 0.0
        return self._like(out)

    def memory_force(self):
        """int mu(s) A eta(s) ds as a spectral field."""
        weighted = np.einsum("i,i...->...", self.w_mu, self.values)
        return SpectralField(self.grid, weighted * self.grid.power(2.0), False)

    def predicted_memory_force(self, u_old, u_star, dt):
        """Memory force of the predictor history, without materializing it."""
        key = float(dt)
        if key not in self._pred_cache:
            t, src = self.sgrid.shift(dt)
            self._pred_cache[key] = (t.T @ self.w_mu, float(self.w_mu @ src))
        w_pull, w_src = self._pred_cache[key]
        weighted = np.einsum("i,i...->...", w_pull, self.values)
        weighted = weighted + w_src * 0.5 * (u_old.coeffs + u_star.coeffs)
        return SpectralField(self.grid, weighted * self.grid.power(2.0), False)

    def norm_sq(self, order=0):
        return float(self.w_mu @ _node_sq_norms(self.values, self.grid, order))

    def norm(self, order=0):
        return float(np.sqrt(max(self.norm_sq(order), 0.0)))

    def pi(self, order=0):
        """Dissipation functional -1/2 int mu' ||eta||_{1+order}^2 ds >= 0."""
        return 0.5 * float(self.w_dmu @ _node_sq_norms(self.values, self.grid, order))

    def capped_cross(self, field, order=0):
        """int mu_*(s) <eta(s), field>_{1+order} ds."""
        return float(self.w_star @ _node_cross(self.values, field, order))

    def inner_M(self, other):
        if isinstance(other, GridHistory):
            flat_a = self.values.reshape(len(self.sgrid), -1)
            flat_b = other.values.reshape(len(self.sgrid), -1)
            w = self.grid.power(2.0).ravel()
            per = np.einsum("ix,ix->i", flat_a.real, flat_b.real * w) + np.einsum(
                "ix,ix->i", flat_a.imag, flat_b.imag * w
            )
            return float(self.w_mu @ per)
        raise TypeError("inner_M needs two grid histories")

    def eval_at(self, s):
        """Linear interpolation of node values at arbitrary lag."""
        nodes = self.sgrid.nodes
        s = float(np.clip(s, 0.0, nodes[-1]))
        j = min(int(np.searchsorted(nodes, s, side="right")) - 1, len(nodes) - 2)
        h = nodes[j + 1] - nodes[j]
        w = (s - nodes[j]) / h
        return SpectralField(self.grid, (1 - w) * self.values[j] + w * self.values[j + 1], False)

    def scaled(self, a):
        return self._like(self.values * a)

    def add(self, other, a=1.0):
        return self._like(self.values + a * other.values)


class _MiniSegment:
    """Transport on [0, s_*] feeding the capped-weight correction.

    Per-step source increments are queued and the semi-Lagrangian shift is
    applied in batches (one composed shift instead of many small ones); the
    state is flushed before any functional evaluation.
    """

    MAX_PENDING = 8

    def __init__(self, grid, kernel, ds_min, mini_m):
        s_star, _ = kernel.tail_split()
        nodes = SGrid.geometric(mini_m, min(ds_min, s_star / 4.0), s_star)
        self.sgrid = nodes
        self.values = np.zeros((len(nodes), grid.dim, *grid.shape), dtype=np.complex128)
        self.w_defect = kernel.hat_weights(nodes.nodes, "cap_defect")
        self.grid = grid
        self.pending = ()  # (dt, trapezoid increment) per queued step, oldest first
        self._shift_cache = {}

    def copy_with(self, values, pending=()):
        out = _MiniSegment.__new__(_MiniSegment)
        out.sgrid, out.w_defect, out.grid = self.sgrid, self.w_defect, self.grid
        out._shift_cache = self._shift_cache
        out.values = values
        out.pending = pending
        return out

    def advance(self, u_mid_coeffs, dt):
        out = self.copy_with(self.values, self.pending + ((float(dt), dt * u_mid_coeffs),))
        if len(out.pending) >= self.MAX_PENDING:
            out = out.flushed()
        return out

    def flushed(self):
        if not self.pending:
            return self
        dts = [p[0] for p in self.pending]
        incs = [p[1] for p in self.pending]
        dt = dts[0]
        if any(abs(d - dt) > 1e-15 * dt for d in dts):
            raise ValueError("mini segment batches require a uniform step")
        k = len(incs)
        delta = k * dt
        t, low = self._batched_shift(k, dt)
        flat = self.values.reshape(len(self.sgrid), -1)
        out = (t @ flat).reshape(self.values.shape)
        total = np.sum(incs, axis=0)
        nodes = self.sgrid.nodes
        shifted = nodes >= delta
        out[shifted] += total[None]
        # young nodes: backward partial sums of the queued increments
        for i, (m, frac) in low:
            acc = frac * incs[k - 1 - m]
            for j in range(m):
                acc = acc + incs[k - 1 - j]
            out[i] = acc
        out[0] = 0.0
        return self.copy_with(out)

    def _batched_shift(self, k, dt):
        key = (k, float(dt))
        if key not in self._shift_cache:
            nodes = self.sgrid.nodes
            m1 = len(nodes)
            delta = k * dt
            rows, cols, vals = [], [], []
            low = []
            for i in range(1, m1):
                x = nodes[i] - delta
                if x < 0:
                    m = int(nodes[i] / dt)
                    frac = nodes[i] / dt - m
                    if m >= k:  # round-off at the boundary
                        m, frac = k - 1, 1.0
                    low.append((i, (m, frac)))
                    continue
                j = min(np.searchsorted(nodes, x, side="right") - 1, m1 - 2)
                h = nodes[j + 1] - nodes[j]
                w_hi = (x - nodes[j]) / h
                rows += [i, i]
                cols += [j, j + 1]
                vals += [1.0 - w_hi, w_hi]
            t = sparse.csr_matrix((vals, (rows, cols)), shape=(m1, m1))
            self._shift_cache[key] = (t, tuple(low))
        return self._shift_cache[key]

    def defect_cross(self, field, order):
        seg = self.flushed()
        return float(seg.w_defect @ _node_cross(seg.values, field, order))


class PronyHistory:
    """Exact moment closure of the transport for exponential-sum kernels."""

    mode = "prony"

    def __init__(self, grid, kernel, ds_min, mini_m=32):
        terms = kernel.prony_terms()
        if terms is None:
            raise ValueError("moment closure needs an exponential-sum kernel")
        self.grid = grid
        self.kernel = kernel
        self.a, self.d = terms
        j = len(self.a)
        self.m = np.zeros((j, grid.dim, *grid.shape), dtype=np.complex128)
        self.p0 = np.zeros(j)
        self.p1 = np.zeros(j)
        self.mini = _MiniSegment(grid, kernel, ds_min, mini_m)

    def _like(self, m, p0, p1, mini):
        out = PronyHistory.__new__(PronyHistory)
        out.grid, out.kernel = self.grid, self.kernel
        out.a, out.d = self.a, self.d
        out.m, out.p0, out.p1, out.mini = m, p0, p1, mini
        return out

    def copy(self):
        mini = self.mini.copy_with(self.mini.values.copy(), self.mini.pending)
        return self._like(self.m.copy(), self.p0.copy(), self.p1.copy(), mini)

    def _sigma(self, u, m):
        """2 <u, m_j>_{1+order} for both orders, per term."""
        g = self.grid
        w1 = g.power(2.0).ravel()
        w2 = g.power(4.0).ravel()
        uu = np.conj(u.coeffs).reshape(g.dim, -1)
        mm = m.reshape(len(self.a), g.dim, -1)
        # real part of m * conj(u)
        dot = np.einsum("jcx,cx->jx", mm.real, uu.real) - np.einsum(
            "jcx,cx->jx", mm.imag, uu.imag
        )
        s0 = 2.0 * dot @ w1
        s1 = 2.0 * dot @ w2
        return s0, s1

    def advance(self, u_old, u_new, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        shape = (-1, *([1] * (1 + self.grid.dim)))
        decay = np.exp(-self.d * dt)
        u_mid = 0.5 * (u_old.coeffs + u_new.coeffs)
        gain = ((1.0 - decay) / self.d**2).reshape(shape)
        m_new = decay.reshape(shape) * self.m + gain * u_mid[None]
        s0_old, s1_old = self._sigma(u_old, self.m)
        s0_new, s1_new = self._sigma(u_new, m_new)
        p0 = decay * self.p0 + 0.5 * dt * (decay * s0_old + s0_new)
        p1 = decay * self.p1 + 0.5 * dt * (decay * s1_old + s1_new)
        mini = self.mini.advance(u_mid, dt)
        return self._like(m_new, p0, p1, mini)

    def predicted_moments(self, u_old, u_star, dt):
        shape = (-1, *([1] * (1 + self.grid.dim)))
        decay = np.exp(-self.d * dt)
        u_mid = 0.5 * (u_old.coeffs + u_star.coeffs)
        return decay.reshape(shape) * self.m + ((1.0 - decay) / self.d**2).reshape(
            shape
        ) * u_mid[None]

    def memory_force(self, moments=None):
        m = self.m if moments is None else moments
        weighted = np.einsum("j,j...->...", self.a, m)
        return SpectralField(self.grid, weighted * self.grid.power(2.0), False)

    def predicted_memory_force(self, u_old, u_star, dt):
        return self.memory_force(self.predicted_moments(u_old, u_star, dt))

    def norm_sq(self, order=0):
        p = self.p0 if order == 0 else self.p1
        return float(self.a @ p)

    def norm(self, order=0):
        return float(np.sqrt(max(self.norm_sq(order), 0.0)))

    def pi(self, order=0):
        p = self.p0 if order == 0 else self.p1
        return 0.5 * float((self.a * self.d) @ p)

    def capped_cross(self, field, order=0):
        g = self.grid
        w = g.power(2.0 * (1 + order)).ravel()
        uu = np.conj(field.coeffs).reshape(g.dim, -1)
        mm = self.m.reshape(len(self.a), g.dim, -1)
        dot = np.einsum("jcx,cx->jx", mm.real, uu.real) + np.einsum(
            "jcx,cx->jx", mm.imag, -uu.imag
        )
        full = float(self.a @ (dot @ w))
        return full - self.mini.defect_cross(field, order)

    def moment_fields(self):
        return [SpectralField(self.grid, self.m[j], False) for j in range(len(self.a))]


# -- module-level operation surface -------------------------------------------


def init_history(grid, sgrid, kernel, mode="grid", past=None, mini_m=32):
    """Build the initial hereditary state.

    ``past`` is None for a quiescent past, or a callable sigma -> SpectralField
    sampling the past velocity; the state is its cumulative (trapezoidal)
    integral on the lag grid.
    """
    ds_min = sgrid.nodes[1]
    if past is None:
        if mode == "grid":
            return GridHistory(grid, sgrid, kernel)
        return PronyHistory(grid, kernel, ds_min, mini_m)

    nodes = sgrid.nodes
    values = np.zeros((len(nodes), grid.dim, *grid.shape), dtype=np.complex128)
    prev = past(nodes[0]).coeffs
    for i in range(1, len(nodes)):
        cur = past(nodes[i]).coeffs
        values[i] = values[i - 1] + 0.5 * (nodes[i] - nodes[i - 1]) * (prev + cur)
        prev = cur
    gh = GridHistory(grid, sgrid, kernel, values)
    if mode == "grid":
        return gh
    ph = PronyHistory(grid, kernel, ds_min, mini_m)
    for j, d in enumerate(ph.d):
        w = _exp_hat_moments(nodes, d)
        ph.m[j] = np.einsum("i,i...->...", w, values)
        ph.p0[j] = float(w @ _node_sq_norms(values, grid, 0))
        ph.p1[j] = float(w @ _node_sq_norms(values, grid, 1))
    for i, s in enumerate(ph.mini.sgrid.nodes):
        ph.mini.values[i] = gh.eval_at(s).coeffs
    return ph


def advance(eta, u_old, u_new, dt):
    """One transport step d_t eta = -d_s eta + u with trapezoidal source."""
    return eta.advance(u_old, u_new, dt)


def memory_force(eta, kernel=None):
    """int mu(s) A eta(s) ds; the kernel is bound at construction."""
    return eta.memory_force()


def history_norm(eta, order=0):
    """Weighted-history norm at order 0 (velocity space) or 1 (higher order)."""
    return eta.norm(order)


def pi_functional(eta, kernel=None, order=0):
    return eta.pi(order)


def prony_advance(eta, u_old, u_new, dt):
    """Exact exponential-integrator update of the moment closure."""
    if not isinstance(eta, PronyHistory):
        raise ValueError("prony_advance requires a moment-closure history")
    return eta.advance(u_old, u_new, dt)


def representation_oracle(times, fields, eta0, t):
    """Rebuild the history at time t directly from the velocity path.

    ``times``/``fields`` sample u on [0, t]; for lags s <= t the history is
    the trapezoidal integral of u(t - sigma) over [0, s], and beyond it is
    the shifted initial history plus the full path integral.
    """
    times = np.asarray(times, dtype=float)
    if times[0] > 0.0 or times[-1] < t - 1e-12:
        raise ValueError("path must cover [0, t]")
    grid = eta0.grid
    nodes = eta0.sgrid.nodes
    m1 = len(nodes)
    cum = np.zeros((len(times), grid.dim, *grid.shape), dtype=np.complex128)
    for j in range(1, len(times)):
        h = times[j] - times[j - 1]
        cum[j] = cum[j - 1] + 0.5 * h * (fields[j - 1].coeffs + fields[j].coeffs)

    def cum_at(tau):
        if len(times) == 1:
            return cum[0]
        tau = float(np.clip(tau, times[0], times[-1]))
        j = min(int(np.searchsorted(times, tau, side="right")) - 1, len(times) - 2)
        w = (tau - times[j]) / (times[j + 1] - times[j])
        return (1 - w) * cum[j] + w * cum[j + 1]

    i_t = cum_at(t)
    values = np.zeros((m1, grid.dim, *grid.shape), dtype=np.complex128)
    for i in range(1, m1):
        s = nodes[i]
        if s <= t:
            values[i] = i_t - cum_at(t - s)
        else:
            values[i] = eta0.eval_at(s - t).coeffs + i_t
    return GridHistory(grid, eta0.sgrid, eta0.kernel, values)
