"""Divergence-free spectral calculus on the mean-zero periodic box.

Velocity fields live as complex amplitudes u_hat[k] on the full fftn layout
of a 2pi-periodic box, so wavevectors are integers and the Stokes operator is
the diagonal multiplier |k|^2 (first eigenvalue 1 on mean-zero fields).
Norms follow the coefficient Parseval convention ||u||^2 = sum |u_hat|^2.
The two-thirds mask is part of every constructor, which keeps the discrete
advection trilinear form exactly skew in its last two slots.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "leray_project",
    "dealias",
    "bilinear_B",
    "trilinear_b",
    "check_interpolation",
    "random_divfree_field",
    "single_mode_field",
    "forcing_from_modes",
    "resample",
]


class Grid:
    """Fourier bookkeeping for a dim-cube of n modes per axis (L = 2pi)."""

    def __init__(self, dim, n):
        if dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        if n < 4 or (n & (n - 1)) != 0:
            raise ValueError("n must be a power of two, at least 4")
        self.dim = dim
        self.n = n
        self.shape = (n,) * dim
        axes = [np.fft.fftfreq(n, d=1.0 / n) for _ in range(dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        self.k = np.stack(mesh).astype(float)          # (dim, *shape)
        self.k2 = np.sum(self.k**2, axis=0)
        cutoff = n / 3.0
        mask = np.ones(self.shape, dtype=bool)
        for comp in mesh:
            mask &= np.abs(comp) < cutoff
        mask[(0,) * dim] = False                        # mean-zero structurally
        self.mask = mask
        self._pow_cache = {}

    def power(self, r):
        """|k|^r as a multiplier array, zero at k = 0 (safe for r < 0)."""
        key = float(r)
        if key not in self._pow_cache:
            with np.errstate(divide="ignore"):
                p = np.where(self.k2 > 0, self.k2 ** (key / 2.0), 0.0)
            self._pow_cache[key] = p
        return self._pow_cache[key]

    def __eq__(self, other):
        return isinstance(other, Grid) and (self.dim, self.n) == (other.dim, other.n)

    def __hash__(self):
        return hash((self.dim, self.n))

    def __repr__(self):
        return f"Grid(dim={self.dim}, n={self.n})"


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError(f"grid mismatch: {f.grid} vs {g}")
    return g


class SpectralField:
    """Vector field as masked spectral coefficients; value semantics."""

    __slots__ = ("grid", "coeffs")

    def __init__(self, grid, coeffs, enforce_mask=True):
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (grid.dim, *grid.shape):
            raise ValueError(f"coefficient shape {coeffs.shape} mismatches {grid}")
        if enforce_mask:
            coeffs = coeffs * grid.mask
        self.grid = grid
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.dim, *grid.shape), dtype=np.complex128), False)

    def copy(self):
        return SpectralField(self.grid, self.coeffs.copy(), False)

    # -- algebra ------------------------------------------------------------

    def __add__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs, False)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs, False)

    def __mul__(self, a):
        return SpectralField(self.grid, self.coeffs * a, False)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs, False)

    # -- analysis -------------------------------------------------------------

    def inner(self, other, r=0.0):
        """<A^{r/2} u, A^{r/2} v> in the coefficient Parseval convention."""
        _check_same_grid(self, other)
        w = self.grid.power(2.0 * r) if r != 0.0 else None
        prod = (self.coeffs * np.conj(other.coeffs)).real.sum(axis=0)
        if w is not None:
            prod = prod * w
        return float(prod.sum())

    def norm(self, r=0.0):
        """||u||_r = ||A^{r/2} u||; r = 0 is the plain energy norm."""
        w = self.grid.power(2.0 * r) if r != 0.0 else None
        prod = (self.coeffs.real**2 + self.coeffs.imag**2).sum(axis=0)
        if w is not None:
            prod = prod * w
        return float(np.sqrt(prod.sum()))

    def apply_power(self, r):
        """A^{r/2} u: coefficients scaled by |k|^r."""
        return SpectralField(self.grid, self.coeffs * self.grid.power(r), False)

    def divergence_max(self):
        return float(np.abs(np.sum(self.grid.k * self.coeffs, axis=0)).max())

    def max_abs(self):
        return float(np.abs(self.coeffs).max())

    def reality_defect(self):
        """max |u_hat(-k) - conj(u_hat(k))|."""
        return float(np.abs(_conj_reflect(self.coeffs) - self.coeffs).max())

    def __repr__(self):
        return f"SpectralField({self.grid}, |u|={self.norm():.3e})"


def _reflect(coeffs):
    """Index map k -> -k on the fftn layout, applied to the spatial axes."""
    out = coeffs
    for ax in range(1, coeffs.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


def _conj_reflect(coeffs):
    return np.conj(_reflect(coeffs))


def symmetrize(coeffs):
    """Project onto reality-symmetric coefficients."""
    return 0.5 * (coeffs + _conj_reflect(coeffs))


def leray_project(field):
    """Remove the gradient part: u_hat -= k (k.u_hat)/|k|^2."""
    g = field.grid
    k = g.k
    with np.errstate(invalid="ignore", divide="ignore"):
        kdotu = np.sum(k * field.coeffs, axis=0)
        corr = np.where(g.k2 > 0, kdotu / g.k2, 0.0)
    return SpectralField(g, field.coeffs - k * corr, False)


def dealias(field):
    """Two-thirds truncation (and structural mean removal)."""
    return SpectralField(field.grid, field.coeffs * field.grid.mask, False)


def to_physical(field):
    """Collocation values u(x_j) = sum_k u_hat e^{ik.x_j} on the n^dim grid."""
    g = field.grid
    scale = float(np.prod(g.shape))
    axes = tuple(range(1, g.dim + 1))
    return np.fft.ifftn(field.coeffs, axes=axes).real * scale


def from_physical(grid, values):
    axes = tuple(range(1, grid.dim + 1))
    scale = float(np.prod(grid.shape))
    return np.fft.fftn(values, axes=axes) / scale


def bilinear_B(u, v):
    """P((u . grad) v), dealiased pseudospectral advection.

    Inputs are expected band-limited (every constructor masks), so with the
    output truncation the retained modes are alias-free and the discrete
    trilinear form is exactly skew in its last two slots.
    """
    g = _check_same_grid(u, v)
    axes = tuple(range(1, g.dim + 1))
    u_phys = np.fft.ifftn(u.coeffs, axes=axes).real
    adv = np.empty_like(u_phys)
    for j in range(g.dim):
        grad_j = 1j * g.k * v.coeffs[j]  # (dim, *shape): all partials of v_j
        grad_phys = np.fft.ifftn(grad_j, axes=axes).real
        adv[j] = np.einsum("c...,c...->...", u_phys, grad_phys)
    coeffs = np.fft.fftn(adv, axes=axes) * float(np.prod(g.shape))
    return leray_project(SpectralField(g, coeffs))


def trilinear_b(u, v, w):
    """b(u, v, w) = <(u.grad)v, w>; skew in the last two slots when div u = 0."""
    return bilinear_B(u, v).inner(w)


def check_interpolation(u, a, b, c):
    """Margin of ||u||_b <= ||u||_c^w ||u||_a^(1-w), w = (b-a)/(c-a)."""
    if not (a < b < c):
        raise ValueError(f"exponents must satisfy a < b < c, got {(a, b, c)}")
    w = (b - a) / (c - a)
    return u.norm(c) ** w * u.norm(a) ** (1.0 - w) - u.norm(b)


# -- field builders ----------------------------------------------------------


def random_divfree_field(grid, rng, k_max=4, amplitude=1.0):
    """Band-limited random solenoidal field with ||u|| = amplitude."""
    raw = rng.standard_normal((grid.dim, *grid.shape)) + 1j * rng.standard_normal(
        (grid.dim, *grid.shape)
    )
    band = grid.k2 <= float(k_max) ** 2
    field = leray_project(SpectralField(grid, symmetrize(raw * band)))
    nrm = field.norm()
    if nrm == 0.0:
        raise ValueError("degenerate random field")
    return field * (amplitude / nrm)


def _polarization(grid, kvec):
    """A unit vector orthogonal to kvec (deterministic choice)."""
    k = np.asarray(kvec, dtype=float)
    if grid.dim == 2:
        e = np.array([-k[1], k[0]])
    else:
        ref = np.array([0.0, 0.0, 1.0])
        if abs(k[0]) < 1e-12 and abs(k[1]) < 1e-12:
            ref = np.array([1.0, 0.0, 0.0])
        e = np.cross(k, ref)
    return e / np.linalg.norm(e)


def single_mode_field(grid, kvec, amplitude=1.0, phase=0.0):
    """Conjugate pair at +-kvec, divergence-free, with ||u|| = amplitude."""
    kvec = tuple(int(round(x)) for x in kvec)
    if all(x == 0 for x in kvec):
        raise ValueError("the zero mode is excluded")
    coeffs = np.zeros((grid.dim, *grid.shape), dtype=np.complex128)
    e = _polarization(grid, kvec)
    idx = tuple(k % grid.n for k in kvec)
    idx_m = tuple((-k) % grid.n for k in kvec)
    amp = amplitude / np.sqrt(2.0) * np.exp(1j * phase)
    for c in range(grid.dim):
        coeffs[(c, *idx)] = amp * e[c]
        coeffs[(c, *idx_m)] = np.conj(amp) * e[c]
    return SpectralField(grid, coeffs)


def forcing_from_modes(grid, modes):
    """Constant-in-time forcing from a list of (kvec, amplitude[, phase])."""
    total = SpectralField.zeros(grid)
    for entry in modes:
        kvec, amplitude = entry[0], entry[1]
        phase = entry[2] if len(entry) > 2 else 0.0
        total = total + single_mode_field(grid, kvec, amplitude, phase)
    return leray_project(total)


def resample(field, new_grid):
    """Transfer coefficients between resolutions by wavevector identity."""
    if new_grid.dim != field.grid.dim:
        raise ValueError("dimension mismatch in resample")
    src, dst = field.grid, new_grid
    m = min(src.n, dst.n) // 2
    out = np.zeros((dst.dim, *dst.shape), dtype=np.complex128)
    # copy the common centered block using shared wavevector indices
    idx = np.r_[0:m, -m:0]
    take = np.ix_(*([np.arange(src.dim)] + [idx % src.n] * src.dim))
    put = np.ix_(*([np.arange(dst.dim)] + [idx % dst.n] * dst.dim))
    out[put] = field.coeffs[take]
    return SpectralField(dst, out)
