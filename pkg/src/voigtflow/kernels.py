"""Fading-memory kernels and the quantities derived from them.

A kernel is described by the nonnegative relaxation function g, normalized to
unit mass, or equivalently by the weight mu = -g'.  Admissible kernels have mu
nonnegative, non-increasing and summable, and satisfy the exponential-thinness
inequality mu'(s) + delta*mu(s) <= 0 for some delta > 0.

Two variants are supported: sums of decaying exponentials (closed forms
everywhere) and tabulated samples of mu (piecewise linear, with a single
exponential matched at the last sample as tail).  The ``epsilon`` parameter
implements the mass-preserving rescaling g_eps(s) = g(s/eps)/eps.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "Kernel",
    "ExponentialSum",
    "Tabulated",
    "KernelValidationError",
]

# Smallest admissible thinness rate; below this the kernel is rejected.
DELTA_FLOOR = 1e-8
MASS_TOL = 1e-10
_SCAN_POINTS = 2048


class KernelValidationError(ValueError):
    """A kernel failed an admissibility requirement."""


def _phi_up(x):
    """(1 - (1+x) e^-x) / x^2, series-protected near 0."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    out = (1.0 - (1.0 + xs) * np.exp(-xs)) / xs**2
    ser = 0.5 - x / 3.0 + x**2 / 8.0 - x**3 / 30.0
    return np.where(small, ser, out)


def _phi_down(x):
    """(x - 1 + e^-x) / x^2, series-protected near 0."""
    x = np.asarray(x, dtype=float)
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    out = (xs - 1.0 + np.exp(-xs)) / xs**2
    ser = 0.5 - x / 6.0 + x**2 / 24.0 - x**3 / 120.0
    return np.where(small, ser, out)


def _exp_hat_moments(nodes, d, amplitude=1.0):
    """Moments of amplitude*e^{-d s} against the linear hat basis on ``nodes``.

    Returns w with w[i] = int f(s) hat_i(s) ds over [nodes[0], nodes[-1]],
    plus the full tail int_{nodes[-1]}^inf f(s) ds folded into w[-1] (the
    integrand beyond the last node is treated as constant-in-hat, which is
    exact for the reductions this package performs there).
    """
    nodes = np.asarray(nodes, dtype=float)
    a, b = nodes[:-1], nodes[1:]
    h = b - a
    x = d * h
    ea = np.exp(-d * a)
    up = ea * h * _phi_up(x)      # against (s-a)/h
    down = ea * h * _phi_down(x)  # against (b-s)/h
    w = np.zeros_like(nodes)
    w[:-1] += down
    w[1:] += up
    w[-1] += np.exp(-d * nodes[-1]) / d
    return amplitude * w


def _const_hat_moments(nodes, lo, hi, value=1.0):
    """Moments of value*1_[lo,hi](s) against the hat basis on ``nodes``."""
    nodes = np.asarray(nodes, dtype=float)
    a, b = nodes[:-1], nodes[1:]
    p = np.clip(a, lo, hi)
    q = np.clip(b, lo, hi)
    h = b - a
    keep = q > p
    w = np.zeros_like(nodes)
    mid = 0.5 * (p + q)
    with np.errstate(invalid="ignore"):
        down = np.where(keep, (q - p) * (b - mid) / h, 0.0)
        up = np.where(keep, (q - p) * (mid - a) / h, 0.0)
    w[:-1] += down
    w[1:] += up
    return value * w


def _exp_hat_moments_window(nodes, d, lo, hi, amplitude=1.0):
    """Moments of amplitude*e^{-d s}*1_[lo,hi] against the hat basis."""
    nodes = np.asarray(nodes, dtype=float)
    a, b = nodes[:-1], nodes[1:]
    h = b - a
    p = np.clip(a, lo, hi)
    q = np.clip(b, lo, hi)
    keep = q > p
    p = np.where(keep, p, a)
    q = np.where(keep, q, a)
    hp = q - p
    x = d * hp
    ep = np.exp(-d * p)
    e0 = np.where(keep, ep * -np.expm1(-x) / d, 0.0)           # int e^-ds over [p,q]
    iup = np.where(keep, ep * hp**2 * _phi_up(x), 0.0)         # int e^-ds (s-p)
    idn = np.where(keep, ep * hp**2 * _phi_down(x), 0.0)       # int e^-ds (q-s)
    with np.errstate(invalid="ignore", divide="ignore"):
        down = np.where(keep, ((b - q) * e0 + idn) / h, 0.0)
        up = np.where(keep, ((p - a) * e0 + iup) / h, 0.0)
    w = np.zeros_like(nodes)
    w[:-1] += down
    w[1:] += up
    return amplitude * w


class Kernel:
    """Base class: epsilon bookkeeping plus variant-independent reductions.

    Subclasses implement the base-kernel (epsilon = 1) evaluations; the public
    methods fold in the rescaling g_eps(s) = g(s/eps)/eps, under which
    mu_eps(s) = mu(s/eps)/eps^2 and all derived rates scale by 1/eps.
    """

    def __init__(self, epsilon=1.0):
        if not (0.0 < epsilon <= 1.0):
            raise ValueError(f"epsilon must lie in (0, 1], got {epsilon}")
        self.epsilon = float(epsilon)
        self._mass = None
        self._delta = None
        self._s_star = None

    # -- subclass hooks (epsilon = 1 kernel) --------------------------------

    def _g(self, s):
        raise NotImplementedError

    def _mu(self, s):
        raise NotImplementedError

    def _mu_prime(self, s):
        raise NotImplementedError

    def _mass_base(self):
        raise NotImplementedError

    def _mass_below_base(self, s):
        """int_0^s mu, exact in the variant's representation."""
        raise NotImplementedError

    def _dafermos_base(self):
        raise NotImplementedError

    def _hat_weights_base(self, nodes, weight):
        raise NotImplementedError

    def _with_epsilon(self, epsilon):
        raise NotImplementedError

    # -- public API ----------------------------------------------------------

    def evaluate(self, s):
        """Return (g, mu, mu') at lag s >= 0, including the epsilon rescaling."""
        s = np.asarray(s, dtype=float)
        if np.any(s < 0):
            raise ValueError("time lag must be nonnegative")
        e = self.epsilon
        return self._g(s / e) / e, self._mu(s / e) / e**2, self._mu_prime(s / e) / e**3

    def g(self, s):
        return self.evaluate(s)[0]

    def mu(self, s):
        return self.evaluate(s)[1]

    def mu_prime(self, s):
        return self.evaluate(s)[2]

    def total_mass(self):
        """kappa = int_0^inf mu(s) ds by adaptive quadrature (cached)."""
        if self._mass is None:
            self._mass = self._mass_base() / self.epsilon
        return self._mass

    def mass_below(self, s):
        """int_0^s mu(sigma) dsigma."""
        return self._mass_below_base(np.asarray(s, dtype=float) / self.epsilon) / self.epsilon

    def dafermos_rate(self):
        """Largest delta with mu' + delta*mu <= 0; rejects the kernel below the floor."""
        if self._delta is None:
            base = self._dafermos_base()
            if base < DELTA_FLOOR:
                raise KernelValidationError(
                    f"kernel is not exponentially thin: delta={base:.3e} < {DELTA_FLOOR}"
                )
            self._delta = base / self.epsilon
        return self._delta

    def tail_split(self):
        """Split point s_* with int_0^{s_*} mu = kappa/2, and the capped weight.

        Returns (s_star, mu_star) where mu_star(s) = mu(s_star) for s <= s_star
        and mu(s) beyond.
        """
        if self._s_star is None:
            kappa = self.total_mass()
            target = 0.5 * kappa
            hi = 1.0
            while self.mass_below(hi) < target:
                hi *= 2.0
                if hi > 1e12:
                    raise KernelValidationError("tail split bracket not found")
            # xtol well below the contractual 1e-10 so that the half-mass
            # identity holds to 1e-9 even for kernels with large mass
            self._s_star = float(
                optimize.bisect(lambda s: self.mass_below(s) - target, 0.0, hi, xtol=1e-14)
            )
        s_star = self._s_star
        cap = float(self.mu(s_star))

        def mu_star(s):
            s = np.asarray(s, dtype=float)
            return np.where(s <= s_star, cap, self.mu(np.maximum(s, s_star)))

        return s_star, mu_star

    def rescale(self, eps):
        """Return the kernel with g_eps(s) = g(s/eps)/eps (mass of g preserved)."""
        if not (0.0 < eps <= 1.0):
            raise ValueError(f"rescaling parameter must lie in (0, 1], got {eps}")
        return self._with_epsilon(self.epsilon * eps)

    def prony_terms(self):
        """(amplitudes, rates) with mu(s) = sum a_j e^{-d_j s}, or None."""
        return None

    def hat_weights(self, nodes, weight="mu"):
        """Exact moments of a kernel weight against the hat basis on ``nodes``.

        weight is one of "mu", "neg_mu_prime", "mu_star", "cap_defect"
        (the last being mu(s) - mu(s_star) restricted to [0, s_star], used by
        the capped cross-functional).  Quadratures built from these weights
        integrate the weight times any piecewise-linear function exactly,
        which keeps pointwise kernel inequalities intact after discretization.
        """
        nodes = np.asarray(nodes, dtype=float)
        e = self.epsilon
        scale = {"mu": 1.0, "neg_mu_prime": 1.0 / e, "mu_star": 1.0, "cap_defect": 1.0}[weight]
        return self._hat_weights_base(nodes / e, weight) * (scale / e)


class ExponentialSum(Kernel):
    """g(s) = sum_j c_j e^{-d_j s}, amplitudes normalized so int g = 1."""

    def __init__(self, terms, epsilon=1.0):
        super().__init__(epsilon)
        terms = [(float(c), float(d)) for c, d in terms]
        if not terms:
            raise KernelValidationError("exponential sum needs at least one term")
        c = np.array([t[0] for t in terms])
        d = np.array([t[1] for t in terms])
        if np.any(c <= 0) or np.any(d <= 0):
            raise KernelValidationError("amplitudes and rates must be positive")
        # Unit-mass normalization of g is a standing assumption; enforce it.
        c = c / np.sum(c / d)
        order = np.argsort(d)
        self.c = c[order]
        self.d = d[order]
        self.a = self.c * self.d  # mu amplitudes

    def _with_epsilon(self, epsilon):
        k = ExponentialSum(list(zip(self.c, self.d)))
        k.epsilon = float(epsilon)
        return k

    def _g(self, s):
        s = np.asarray(s, dtype=float)
        return np.einsum("j,j...->...", self.c, np.exp(-np.multiply.outer(self.d, s)))

    def _mu(self, s):
        s = np.asarray(s, dtype=float)
        return np.einsum("j,j...->...", self.a, np.exp(-np.multiply.outer(self.d, s)))

    def _mu_prime(self, s):
        s = np.asarray(s, dtype=float)
        return -np.einsum(
            "j,j...->...", self.a * self.d, np.exp(-np.multiply.outer(self.d, s))
        )

    def _mass_base(self):
        val, _ = integrate.quad(self._mu, 0.0, np.inf, epsrel=1e-10, limit=500)
        return val

    def _mass_below_base(self, s):
        return np.einsum(
            "j,j...->...", self.c, -np.expm1(-np.multiply.outer(self.d, np.asarray(s, float)))
        )

    def _dafermos_base(self):
        # -mu'/mu decreases to min_j d_j as s -> inf; the infimum is exact.
        return float(self.d[0])

    def prony_terms(self):
        e = self.epsilon
        return self.a / e**2, self.d / e

    def _hat_weights_base(self, nodes, weight):
        if weight == "mu":
            return sum(_exp_hat_moments(nodes, d, a) for a, d in zip(self.a, self.d))
        if weight == "neg_mu_prime":
            return sum(_exp_hat_moments(nodes, d, a * d) for a, d in zip(self.a, self.d))
        s_star = self._base_split()
        cap = float(self._mu(np.asarray(s_star)))
        if weight == "mu_star":
            w = _const_hat_moments(nodes, 0.0, min(s_star, nodes[-1]), cap)
            for a, d in zip(self.a, self.d):
                w = w + _exp_hat_moments_window(nodes, d, s_star, np.inf, a)
            if nodes[-1] > s_star:
                w[-1] += self._g(np.asarray(nodes[-1]))
            else:
                w[-1] += cap * (s_star - nodes[-1]) + self._g(np.asarray(s_star))
            return w
        if weight == "cap_defect":
            hi = min(s_star, nodes[-1])
            w = -_const_hat_moments(nodes, 0.0, hi, cap)
            for a, d in zip(self.a, self.d):
                w = w + _exp_hat_moments_window(nodes, d, 0.0, hi, a)
            return w
        raise ValueError(f"unknown weight kind {weight!r}")

    def _base_split(self):
        if not hasattr(self, "_base_s_star"):
            base = self._with_epsilon(1.0)
            self._base_s_star, _ = base.tail_split()
        return self._base_s_star


class Tabulated(Kernel):
    """mu sampled at increasing lags, linearly interpolated, exponential tail.

    The samples must be nonnegative and non-increasing.  Beyond the last
    sample the kernel continues as mu_M e^{-delta_tail (s - s_M)} with the
    rate matched to the last log-slope; below the first sample (tables may
    start away from zero to describe integrable singularities) mu is frozen
    at its first value for quadrature purposes.  Amplitudes are rescaled at
    construction so that int g = 1.
    """

    def __init__(self, s, mu, epsilon=1.0):
        super().__init__(epsilon)
        s = np.asarray(s, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if s.ndim != 1 or s.shape != mu.shape or s.size < 2:
            raise KernelValidationError("table needs matching 1-d s and mu arrays, length >= 2")
        if s[0] < 0 or np.any(np.diff(s) <= 0):
            raise KernelValidationError("lags must be nonnegative and strictly increasing")
        if np.any(mu < 0) or np.any(np.diff(mu) > 0):
            raise KernelValidationError("mu samples must be nonnegative and non-increasing")
        if mu[-1] <= 0 or mu[-2] <= mu[-1]:
            raise KernelValidationError(
                "tail matching needs strictly decreasing, positive trailing samples"
            )
        self.s = s
        self.tail_rate = float(np.log(mu[-2] / mu[-1]) / (s[-1] - s[-2]))
        # int_0^inf g = int_0^inf s*mu(s) ds; normalize it to 1.
        z = self._first_moment(s, mu, self.tail_rate)
        if not np.isfinite(z) or z <= 0:
            raise KernelValidationError("kernel mass quadrature did not converge")
        self.mu_table = mu / z
        self._node_masses = self._piece_masses()
        self._g_nodes = self._cumulative_g()

    @staticmethod
    def _first_moment(s, mu, rate):
        h = np.diff(s)
        pieces = h / 6.0 * (mu[:-1] * (2 * s[:-1] + s[1:]) + mu[1:] * (s[:-1] + 2 * s[1:]))
        tail = mu[-1] * (s[-1] / rate + 1.0 / rate**2)
        left = s[0] * mu[0] * s[0] / 2.0  # frozen value below the first sample
        return float(np.sum(pieces) + tail + left)

    def _with_epsilon(self, epsilon):
        k = Tabulated.__new__(Tabulated)
        Kernel.__init__(k, 1.0)
        k.epsilon = float(epsilon)
        for name in ("s", "mu_table", "tail_rate", "_node_masses", "_g_nodes"):
            setattr(k, name, getattr(self, name))
        return k

    def _piece_masses(self):
        h = np.diff(self.s)
        return h * (self.mu_table[:-1] + self.mu_table[1:]) / 2.0

    def _cumulative_g(self):
        tail = self.mu_table[-1] / self.tail_rate
        g = np.concatenate([np.cumsum(self._node_masses[::-1])[::-1], [0.0]]) + tail
        return g

    def _interp_mu(self, s):
        return np.interp(s, self.s, self.mu_table)

    def _mu(self, s):
        s = np.asarray(s, dtype=float)
        inside = self._interp_mu(np.clip(s, self.s[0], self.s[-1]))
        tail = self.mu_table[-1] * np.exp(-self.tail_rate * (s - self.s[-1]))
        return np.where(s > self.s[-1], tail, inside)

    def _mu_prime(self, s):
        s = np.asarray(s, dtype=float)
        nodes = self.s
        vals = self.mu_table
        # centered differences at interior nodes, one-sided at the ends
        dmu = np.gradient(vals, nodes, edge_order=min(2, len(nodes) - 1))
        inside = np.interp(np.clip(s, nodes[0], nodes[-1]), nodes, dmu)
        tail = -self.tail_rate * self.mu_table[-1] * np.exp(-self.tail_rate * (s - nodes[-1]))
        out = np.where(s > nodes[-1], tail, inside)
        return np.where(s < nodes[0], 0.0, out)

    def _g(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s) - 2)
        s1 = self.s[idx + 1]
        x = np.clip(s, self.s[idx], s1)
        # exact integral of the linear piece from x to s1
        part = (s1 - x) * (self._interp_mu(x) + self.mu_table[idx + 1]) / 2.0
        inside = self._g_nodes[idx + 1] + part
        below = self._g_nodes[0] + (self.s[0] - np.minimum(s, self.s[0])) * self.mu_table[0]
        tail = (self.mu_table[-1] / self.tail_rate) * np.exp(-self.tail_rate * (s - self.s[-1]))
        out = np.where(s < self.s[0], below, inside)
        return np.where(s > self.s[-1], tail, out)

    def _mass_base(self):
        # piecewise-linear mu integrates exactly; quadrature would only add noise
        left = self.s[0] * self.mu_table[0]
        tail = self.mu_table[-1] / self.tail_rate
        return left + float(np.sum(self._node_masses)) + tail

    def _mass_below_base(self, s):
        s = np.asarray(s, dtype=float)
        total = self._g_nodes[0] + self.s[0] * self.mu_table[0]
        return total - self._g(s)

    def _dafermos_base(self):
        guess = self.tail_rate
        lo = max(1e-4, self.s[0] if self.s[0] > 0 else 1e-4)
        hi = max(50.0 / guess, self.s[-1] * 1.5)
        grid = np.geomspace(lo, hi, _SCAN_POINTS)
        mu = self._mu(grid)
        dmu = self._mu_prime(grid)
        ok = mu > 0
        if not np.any(ok):
            return 0.0
        return float(np.min(-dmu[ok] / mu[ok]))

    def _hat_weights_base(self, nodes, weight):
        if weight in ("mu_star", "cap_defect"):
            s_star, _ = self._base_tail_split()
            cap = float(self._mu(np.asarray(s_star)))
        w = np.zeros_like(nodes, dtype=float)
        a, b = nodes[:-1], nodes[1:]

        def piece_fn(s):
            if weight == "mu":
                return self._mu(s)
            if weight == "neg_mu_prime":
                return -self._mu_prime(s)
            if weight == "mu_star":
                return np.where(s <= s_star, cap, self._mu(s))
            return np.where(s <= s_star, self._mu(s) - cap, 0.0)

        # integrate weight * hat exactly on each subinterval split at table
        # nodes (the integrand is piecewise quadratic there: Simpson is exact)
        breakpoints = self.s
        if weight in ("mu_star", "cap_defect"):
            breakpoints = np.sort(np.concatenate([self.s, [s_star]]))
        for i in range(len(nodes) - 1):
            lo, hi = a[i], b[i]
            inner = breakpoints[(breakpoints > lo) & (breakpoints < hi)]
            pts = np.concatenate([[lo], inner, [hi]])
            for p, q in zip(pts[:-1], pts[1:]):
                mids = 0.5 * (p + q)
                fp, fm, fq = piece_fn(np.array([p, mids, q]))
                h = q - p
                up_p, up_m, up_q = (p - lo) / (hi - lo), (mids - lo) / (hi - lo), (q - lo) / (hi - lo)
                w[i + 1] += h / 6.0 * (fp * up_p + 4 * fm * up_m + fq * up_q)
                w[i] += h / 6.0 * (fp * (1 - up_p) + 4 * fm * (1 - up_m) + fq * (1 - up_q))
        # analytic exponential tail beyond the last node
        last = nodes[-1]
        if weight == "mu":
            w[-1] += self._g(np.asarray(last)) if last >= self.s[0] else self._g(np.asarray(self.s[0]))
        elif weight == "neg_mu_prime":
            w[-1] += float(self._mu(np.asarray(last)))
        elif weight == "mu_star":
            if last > s_star:
                w[-1] += self._g(np.asarray(last))
            else:
                w[-1] += cap * (s_star - last) + self._g(np.asarray(s_star))
        return w

    def _base_tail_split(self):
        base = self._with_epsilon(1.0)
        return base.tail_split()


def load_table(path, epsilon=1.0):
    """Build a Tabulated kernel from a two-column CSV of (s, mu) samples."""
    data = np.genfromtxt(path, delimiter=",", comments="#", skip_header=0)
    if data.ndim != 2 or data.shape[1] != 2:
        raise KernelValidationError(f"{path}: expected two columns (s, mu)")
    if np.isnan(data[0]).any():  # header row
        data = data[1:]
    return Tabulated(data[:, 0], data[:, 1], epsilon=epsilon)
