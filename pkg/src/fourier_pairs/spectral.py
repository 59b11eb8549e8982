"""Grid functions, the continuous Fourier transform and related norms.

Transform convention: ``fhat(xi) = int f(x) exp(-2 pi i xi x) dx``.

A grid of half-width ``X`` and size ``N`` samples space at
``x_k = -X + k dx`` (``dx = 2X/N``) and frequency at ``xi_m = -Xi + m dxi``
with ``dxi = 1/(2X)`` and ``Xi = N/(4X)``.  Because ``Xi*X = N/4`` is an
integer for ``N`` a power of two (``N >= 4``), the Riemann sum of the
transform reduces to a plain DFT with alternating signs on both sides:

    fhat_m = dx (-1)^m sum_k f_k (-1)^k exp(-2 pi i m k / N)

and the inverse uses ``dxi`` and the conjugate kernel.
"""

import os
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .errors import AliasingError, DivergenceWarning, ParameterError, RangeError

ALIAS_TOL = 1e-8
PLANCHEREL_TOL = 1e-10

# chunk size for direct (non-uniform) evaluation sums, in grid*points cells
_EVAL_CHUNK = 2 ** 22


def fft_workers():
    """Worker count for scipy.fft, capped by FOURIER_PAIRS_THREADS."""
    raw = os.environ.get("FOURIER_PAIRS_THREADS")
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


@dataclass(frozen=True)
class Grid:
    half_width: float = 12.0
    size: int = 4096

    def __post_init__(self):
        if not self.half_width > 0:
            raise ParameterError("grid half-width must be positive")
        n = int(self.size)
        if n < 4 or n & (n - 1):
            raise ParameterError(f"grid size must be a power of two >= 4, got {self.size}")

    @property
    def dx(self):
        return 2.0 * self.half_width / self.size

    @property
    def dxi(self):
        return 1.0 / (2.0 * self.half_width)

    @property
    def freq_half_width(self):
        return self.size / (4.0 * self.half_width)

    @property
    def x(self):
        return -self.half_width + np.arange(self.size) * self.dx

    @property
    def xi(self):
        return -self.freq_half_width + np.arange(self.size) * self.dxi

    def to_dict(self):
        return {"half_width": float(self.half_width), "size": int(self.size),
                "dx": self.dx, "dxi": self.dxi, "freq_half_width": self.freq_half_width}


def _alternating(n):
    s = np.ones(n)
    s[1::2] = -1.0
    return s


def boundary_energy(values, outer=0.1):
    """Fraction of sum |v|^2 carried by the outer ``outer`` share of the grid."""
    v = np.abs(np.asarray(values)) ** 2
    total = v.sum()
    if total == 0:
        return 0.0
    n = v.shape[-1]
    k = max(1, int(round(outer * n / 2)))
    return float((v[..., :k].sum() + v[..., n - k:].sum()) / total)


def _forward(grid, values):
    sgn = _alternating(grid.size)
    return grid.dx * sgn * scipy.fft.fft(values * sgn, axis=-1, workers=fft_workers())


def _inverse(grid, values):
    sgn = _alternating(grid.size)
    return (grid.dxi * grid.size) * sgn * scipy.fft.ifft(values * sgn, axis=-1,
                                                          workers=fft_workers())


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Paired space/frequency samples of one function on a grid."""

    grid: Grid
    space_values: np.ndarray
    freq_values: np.ndarray = field(default=None)
    consistent: bool = False

    def __post_init__(self):
        for name in ("space_values", "freq_values"):
            v = getattr(self, name)
            if v is None:
                continue
            arr = np.array(v, dtype=complex)
            if arr.shape != (self.grid.size,):
                raise ParameterError(f"{name} must have length {self.grid.size}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_space(cls, grid, values, alias_tol=ALIAS_TOL):
        return fourier_transform(cls(grid, values), alias_tol=alias_tol)

    @classmethod
    def from_freq(cls, grid, values, alias_tol=ALIAS_TOL):
        values = np.asarray(values, dtype=complex)
        if values.any() and boundary_energy(values) > alias_tol:
            raise AliasingError(
                f"frequency boundary energy {boundary_energy(values):.3e} exceeds {alias_tol:g}")
        return cls(grid, _inverse(grid, values), values, True)

    @classmethod
    def zero(cls, grid):
        z = np.zeros(grid.size, complex)
        return cls(grid, z, z, True)

    def __add__(self, other):
        return _combine(self, other, 1.0)

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def __mul__(self, c):
        fv = None if self.freq_values is None else self.freq_values * c
        return GridFunction(self.grid, self.space_values * c, fv, self.consistent)

    __rmul__ = __mul__

    def norm2(self):
        """Quadrature value of int |f|^2 dx."""
        return float(np.sum(np.abs(self.space_values) ** 2) * self.grid.dx)

    def freq_norm2(self):
        _require_freq(self)
        return float(np.sum(np.abs(self.freq_values) ** 2) * self.grid.dxi)

    def derivative(self):
        """Spectral derivative: multiply the transform by 2 pi i xi."""
        _require_freq(self)
        fv = 2j * np.pi * self.grid.xi * self.freq_values
        return GridFunction(self.grid, _inverse(self.grid, fv), fv, True)


def _combine(f, g, sign):
    if f.grid != g.grid:
        raise ParameterError("grid functions live on different grids")
    fv = None
    if f.freq_values is not None and g.freq_values is not None:
        fv = f.freq_values + sign * g.freq_values
    return GridFunction(f.grid, f.space_values + sign * g.space_values, fv,
                        f.consistent and g.consistent)


def _require_freq(f):
    if f.freq_values is None:
        raise ParameterError("grid function has no frequency samples; transform it first")


def fourier_transform(f, alias_tol=ALIAS_TOL):
    """Populate the frequency samples of ``f`` from its space samples."""
    v = f.space_values
    if v.any():
        be = boundary_energy(v)
        if be > alias_tol:
            raise AliasingError(f"space boundary energy {be:.3e} exceeds {alias_tol:g}; "
                                "widen the grid")
    return GridFunction(f.grid, v, _forward(f.grid, v), True)


def inverse_transform(f):
    """Space samples recomputed from the frequency samples."""
    _require_freq(f)
    return _inverse(f.grid, f.freq_values)


def forward_many(grid, rows):
    """Transform a stack of space-sample rows (no aliasing check)."""
    return _forward(grid, np.asarray(rows, dtype=complex))


def inverse_many(grid, rows):
    return _inverse(grid, np.asarray(rows, dtype=complex))


def hermite_values(n_max, t):
    """Hermite functions h_0..h_n_max at points t, unit L2 norm on the line.

    h_0(t) = 2**0.25 exp(-pi t^2); with ``y = sqrt(2 pi) t`` the recurrence
    h_{n+1} = sqrt(2/(n+1)) y h_n - sqrt(n/(n+1)) h_{n-1} keeps every row
    bounded, and the family satisfies fhat(h_n) = (-i)^n h_n.
    """
    t = np.asarray(t, dtype=float)
    y = np.sqrt(2 * np.pi) * t
    h = np.zeros((n_max + 1,) + t.shape)
    h[0] = 2 ** 0.25 * np.exp(-np.pi * t ** 2)
    if n_max >= 1:
        h[1] = np.sqrt(2.0) * y * h[0]
    for n in range(1, n_max):
        h[n + 1] = np.sqrt(2.0 / (n + 1)) * y * h[n] - np.sqrt(n / (n + 1.0)) * h[n - 1]
    return h


def hermite_basis(n_max, grid, alias_tol=ALIAS_TOL):
    """Hermite functions h_0..h_n_max as transformed grid functions.

    Each row is re-normalised to unit quadrature norm so rounding does not
    accumulate along the recurrence.
    """
    if n_max < 0:
        raise ParameterError("n_max must be >= 0")
    rows = hermite_values(n_max, grid.x)
    rows /= np.sqrt(np.sum(rows ** 2, axis=1) * grid.dx)[:, None]
    be = boundary_energy(rows[-1])
    if be > alias_tol:
        raise AliasingError(f"h_{n_max} boundary energy {be:.3e} exceeds {alias_tol:g}")
    spec = forward_many(grid, rows)
    return [GridFunction(grid, rows[n], spec[n], True) for n in range(n_max + 1)]


def sobolev_norm(f, t):
    """Quadrature value of int (1 + |xi|^{2t}) |fhat|^2 dxi (squared norm)."""
    _require_freq(f)
    if t < 0:
        raise ParameterError("Sobolev index must be >= 0")
    xi = np.abs(f.grid.xi)
    w = 1.0 + xi ** (2 * t)
    return float(np.sum(w * np.abs(f.freq_values) ** 2) * f.grid.dxi)


def dual_sobolev_norm(f, t):
    """Sobolev norm of fhat: int (1 + |x|^{2t}) |f|^2 dx."""
    w = 1.0 + np.abs(f.grid.x) ** (2 * t)
    return float(np.sum(w * np.abs(f.space_values) ** 2) * f.grid.dx)


@dataclass(frozen=True)
class SpaceParams:
    s: float = 0.5
    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        if not (self.s > 0 and self.p > 1 and self.q > 1):
            raise ParameterError("need s > 0, p > 1, q > 1")
        if abs(1 / self.p + 1 / self.q - 1) > 1e-12:
            raise ParameterError(f"1/p + 1/q must equal 1 (p={self.p}, q={self.q})")

    @property
    def embeds_in_h(self):
        return self.s * min(self.p, self.q) >= 1 - 1e-12

    @property
    def lambda_exponent(self):
        """Exponent of the squared sample weight on the space side."""
        return (2 * self.s - 1) * self.p + 1

    @property
    def mu_exponent(self):
        return (2 * self.s - 1) * self.q + 1


def hspq_norm(f, params):
    """Squared H_{s,p,q} norm: ||f||^2_{H_{ps}} + ||fhat||^2_{H_{qs}}."""
    return sobolev_norm(f, params.p * params.s) + dual_sobolev_norm(f, params.q * params.s)


def hspq_inner_matrix(grid, space_rows, freq_rows, params):
    """Gram matrix G[m, n] = <f_n, f_m> in H_{s,p,q} for stacked samples."""
    wf = 1.0 + np.abs(grid.xi) ** (2 * params.p * params.s)
    ws = 1.0 + np.abs(grid.x) ** (2 * params.q * params.s)
    F = np.asarray(freq_rows)
    S = np.asarray(space_rows)
    G = (F.conj() * wf) @ F.T * grid.dxi + (S.conj() * ws) @ S.T * grid.dx
    return 0.5 * (G + G.conj().T)


def _check_points(grid, pts, half, what):
    pts = np.atleast_1d(np.asarray(pts, dtype=float))
    if pts.size and (np.max(np.abs(pts)) > half * (1 + 1e-12)):
        raise RangeError(f"{what} outside [-{half:g}, {half:g}]")
    return pts


def eval_space_rows(grid, freq_rows, pts):
    """f(pts) for stacked frequency samples: sum_m fhat_m e^{2 pi i xi_m x} dxi.

    This is the band-limited interpolant of the grid samples; at grid points it
    agrees with the inverse transform.
    """
    pts = _check_points(grid, pts, grid.half_width, "evaluation point")
    return _direct_sum(np.asarray(freq_rows), grid.size, pts * grid.dxi, +1) * grid.dxi


def eval_freq_rows(grid, space_rows, pts):
    """fhat(pts) for stacked space samples by direct quadrature."""
    pts = _check_points(grid, pts, grid.freq_half_width, "frequency")
    return _direct_sum(np.asarray(space_rows), grid.size, pts * grid.dx, -1) * grid.dx


_SPLIT = 2 ** 26


def _direct_sum(rows, n, y, sign):
    """sum_k rows[:, k] exp(sign 2 pi i (k - n/2) y) for each y.

    Grid coordinates are integer multiples of the spacing, so the phase is
    (k - n/2) * y cycles.  Writing y = y_hi + y_lo with y_hi on a 2^-26
    lattice makes (k - n/2) * y_hi exact in integer arithmetic; reducing it
    modulo 1 before exponentiating keeps every term accurate to round-off
    instead of to round-off times the (large) phase.
    """
    squeeze = rows.ndim == 1
    rows = np.atleast_2d(rows)
    kk = np.arange(n, dtype=np.int64) - n // 2
    y = np.atleast_1d(np.asarray(y, float))
    yi = np.round(y * _SPLIT).astype(np.int64)
    ylo = y - yi / _SPLIT
    out = np.empty((rows.shape[0], y.size), complex)
    step = max(1, _EVAL_CHUNK // n)
    for i in range(0, y.size, step):
        sl = slice(i, i + step)
        hi = np.mod(np.outer(kk, yi[sl]), _SPLIT) / _SPLIT
        phase = hi + np.outer(kk, ylo[sl])
        out[:, sl] = rows @ np.exp(sign * 2j * np.pi * phase)
    return out[0] if squeeze else out


def point_eval(f, x):
    """Band-limited interpolation of f at x (scalar or array)."""
    _require_freq(f)
    vals = eval_space_rows(f.grid, f.freq_values, x)
    return vals[0] if np.ndim(x) == 0 else vals


def freq_eval(f, xi):
    """fhat at arbitrary frequencies, by direct quadrature of the space samples."""
    vals = eval_freq_rows(f.grid, f.space_values, xi)
    return vals[0] if np.ndim(xi) == 0 else vals


def plancherel_defect(f):
    """| ||f||^2 - ||fhat||^2 | relative to ||f||^2."""
    a, b = f.norm2(), f.freq_norm2()
    return abs(a - b) / a if a > 0 else abs(b)


def heisenberg_sides(f):
    """(lhs, rhs) of (2 pi)^{-1} ||f||^2 <= int x^2 |f|^2 + int xi^2 |fhat|^2."""
    _require_freq(f)
    g = f.grid
    lhs = f.norm2() / (2 * np.pi)
    rhs = (np.sum(g.x ** 2 * np.abs(f.space_values) ** 2) * g.dx
           + np.sum(g.xi ** 2 * np.abs(f.freq_values) ** 2) * g.dxi)
    return lhs, float(rhs)


RESOLVED_FLOOR = 1e-12


def _weighted_log_integral(values, coords, step, c, power, edge_tol):
    """int |v|^2 exp(c |t|^power) dt evaluated in log space.

    Only samples above RESOLVED_FLOOR * max|v| enter: below that level the
    samples are transform round-off and any growing weight would amplify
    noise.  The integral counts as converged when the integrand at the edge
    of the resolved region, spread over the region's width, is below
    ``edge_tol`` times the total.
    """
    mag = np.abs(values)
    top_mag = mag.max()
    if top_mag == 0:
        return 0.0, True
    idx = np.where(mag > RESOLVED_FLOOR * top_mag)[0]
    sel = mag[idx]
    logs = 2 * np.log(sel) + c * np.abs(coords[idx]) ** power
    top = logs.max()
    if top > 700:
        return float("inf"), False
    terms = np.exp(logs)
    total = float(terms.sum() * step)
    width = float(coords[idx[-1]] - coords[idx[0]]) + step
    edge = float(max(terms[0], terms[-1])) * width
    return total, edge <= edge_tol * total


def gelfand_shilov_diagnostic(f, p, q, c, edge_tol=1e-6):
    """Grid quadratures of int |f|^2 e^{c|x|^p} and int |fhat|^2 e^{c|xi|^q}.

    A warning (DivergenceWarning) is raised when either integrand is not
    negligible at the grid edge, i.e. the weight outgrows the decay of f.
    """
    _require_freq(f)
    if c <= 0:
        raise ParameterError("c must be positive")
    g = f.grid
    sx, okx = _weighted_log_integral(f.space_values, g.x, g.dx, c, p, edge_tol)
    sf, okf = _weighted_log_integral(f.freq_values, g.xi, g.dxi, c, q, edge_tol)
    if not (okx and okf):
        warnings.warn(f"weighted integral diverges on the grid (c={c:g})", DivergenceWarning,
                      stacklevel=2)
    return sx, sf


def gelfand_shilov_converged(f, p, q, c, edge_tol=1e-6):
    """Like gelfand_shilov_diagnostic, returning (space, freq, finite_flag) silently."""
    g = f.grid
    sx, okx = _weighted_log_integral(f.space_values, g.x, g.dx, c, p, edge_tol)
    sf, okf = _weighted_log_integral(f.freq_values, g.xi, g.dxi, c, q, edge_tol)
    return sx, sf, bool(okx and okf)
