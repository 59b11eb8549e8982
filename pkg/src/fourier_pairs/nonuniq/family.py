"""Cardinal interpolant families and the free-interpolation iteration.

Phi_l(x) = S(x) / (S'(l)(x - l)) is built on the space grid from the product
whose real zeros contain the nodes; Psi_m is the same construction on the
frequency grid, and the space-side companion is its inverse transform.

The iteration solves f(l') = alpha(l'), fhat(m') = beta(m') on the outer
nodes (|node| > L): each step adds sum alpha Phi + sum beta Psi-check and
replaces the targets by the (negated) cross residuals, which are measured
through the cross matrices Phihat_l(m') and Psi-check_m(l').
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import (DivergenceError, NormalizationError, ParameterError, RangeError)
from ..spectral import (RESOLVED_FLOOR, GridFunction, boundary_energy, eval_freq_rows,
                        eval_space_rows, forward_many, inverse_many)

SPACE = "space"
FREQ = "freq"
CONTRACTION_LIMIT = 0.75
NODE_MATCH_TOL = 1e-9
LOG_TINY = math.log(1e-300)


@dataclass(frozen=True, eq=False)
class FamilyConstants:
    C: float
    a: float
    a_prime: float        # frequency-side decay exponent
    a_dprime: float       # home-side decay exponent
    C_home: float
    C_far: float
    measured_home_decay: float
    measured_far_decay: float

    @property
    def ordering_ok(self):
        return self.a_prime > self.a > self.a_dprime > 0

    @property
    def measured_ordering_ok(self):
        # fitted tail rates: the far side must decay faster than the home side
        return self.measured_far_decay > self.measured_home_decay

    def to_dict(self):
        d = dict(self.__dict__)
        d["ordering_ok"] = self.ordering_ok
        d["measured_ordering_ok"] = self.measured_ordering_ok
        return d


@dataclass(frozen=True, eq=False)
class InterpolantFamily:
    """Stacked samples of the family; row i belongs to nodes.points[i].

    For side == "space" the rows are Phi_l (space) and Phihat_l (freq).  For
    side == "freq" they are Psi-check_m (space) and Psi_m (freq).
    """
    nodes: object
    side: str
    grid: object
    space_rows: np.ndarray
    freq_rows: np.ndarray
    constants: FamilyConstants
    cardinal_error: float          # max |Phi_l(l') - delta| / max(1, max|Phi_l|)
    cardinal_error_abs: float
    normalization_error: float     # max |Phi_l(l) - 1| over the 20 innermost nodes
    log_derivatives: np.ndarray    # log|S'(l)|

    def __len__(self):
        return self.space_rows.shape[0]

    @property
    def functions(self):
        return {float(l): self.function(i) for i, l in enumerate(self.nodes.points)}

    def function(self, i):
        return GridFunction(self.grid, self.space_rows[i], self.freq_rows[i], True)

    @property
    def home_rows(self):
        return self.space_rows if self.side == SPACE else self.freq_rows

    def home_eval(self, pts, rows=None):
        """Family values on the home side at arbitrary points."""
        idx = slice(None) if rows is None else rows
        if self.side == SPACE:
            return eval_space_rows(self.grid, self.freq_rows[idx], pts)
        return eval_freq_rows(self.grid, self.space_rows[idx], pts)

    def far_eval(self, pts, rows=None):
        """Family values on the opposite side at arbitrary points."""
        idx = slice(None) if rows is None else rows
        if self.side == SPACE:
            return eval_freq_rows(self.grid, self.space_rows[idx], pts)
        return eval_space_rows(self.grid, self.freq_rows[idx], pts)

    def to_dict(self):
        return {"side": self.side, "nodes": self.nodes.points.tolist(),
                "constants": self.constants.to_dict(),
                "cardinal_error": self.cardinal_error,
                "cardinal_error_abs": self.cardinal_error_abs,
                "normalization_error": self.normalization_error}


def _match_zeros(prod, pts):
    real_idx = prod.real_zero_indices()
    real = prod.zeros[real_idx].real
    order = np.argsort(real)
    real, real_idx = real[order], real_idx[order]
    pos = np.clip(np.searchsorted(real, pts), 1, max(real.size - 1, 1))
    cand = np.stack([pos - 1, pos])
    cand = np.clip(cand, 0, real.size - 1)
    gaps = np.abs(real[cand] - pts[None, :])
    best = cand[np.argmin(gaps, axis=0), np.arange(pts.size)]
    miss = np.abs(real[best] - pts) > NODE_MATCH_TOL * np.maximum(1, np.abs(pts))
    if miss.any():
        raise ParameterError(f"node {pts[miss][0]:.6g} is not a real zero of the product")
    return real_idx[best]


def _decay_rate(coords, rows, power):
    """Smallest Gaussian-type rate b with |row(t)| <~ exp(-b |t|^power) in the tails.

    For each row, log of the running outer maximum is regressed on |t|^power
    over the resolved part of |t| >= half the resolved extent.
    """
    rates = []
    for row in rows:
        mag = np.abs(row)
        top = mag.max()
        if top == 0:
            continue
        keep = mag > RESOLVED_FLOOR * top
        t = np.abs(coords)
        ext = t[keep].max()
        sel = keep & (t >= 0.5 * ext)
        if sel.sum() < 8:
            continue
        order = np.argsort(-t[sel])
        tt = t[sel][order]
        env = np.maximum.accumulate(mag[sel][order])
        slope = np.polyfit(tt ** power, np.log(env), 1)[0]
        rates.append(-slope)
    return float(min(rates)) if rates else float("nan")


def _bound_constant(coords, rows, weights_exp, power, node_logs):
    """max_i max_t |row_i(t)| exp(w |t|^power - node_log_i) over resolved samples."""
    worst = -np.inf
    for row, nl in zip(rows, node_logs):
        mag = np.abs(row)
        top = mag.max()
        if top == 0:
            continue
        keep = mag > RESOLVED_FLOOR * top
        v = np.log(mag[keep]) + weights_exp * np.abs(coords[keep]) ** power - nl
        worst = max(worst, float(v.max()))
    return math.exp(worst) if worst < 700 else float("inf")


def build_interpolant_family(prod, nodes, grid, a=None, eps=0.05, side=SPACE,
                             decay_tol=1e-12):
    """Family of cardinal functions at ``nodes`` (real zeros of ``prod``).

    a defaults to the midpoint of (beta, beta/s); the nominal exponents are
    a' = beta/s on the far side and a'' = beta - eps on the home side.  The
    constant C is measured on the grid (resolved samples only).
    """
    if side not in (SPACE, FREQ):
        raise ParameterError("side must be 'space' or 'freq'")
    kp = prod.kp
    p = kp.p
    q = p / (p - 1)
    beta, s = kp.beta, kp.s_param
    if not np.isfinite(s):
        raise ParameterError("family exponents need the K_p parameter s")
    a_prime = beta / s
    a_dprime = beta - eps
    if a is None:
        a = 0.5 * (beta + a_prime)
    if not a_dprime > 0:
        raise ParameterError("eps must be smaller than beta")
    home = grid.x if side == SPACE else grid.xi
    half = grid.half_width if side == SPACE else grid.freq_half_width
    if math.exp(-a_dprime * min(half, prod.eval_radius) ** p) > decay_tol:
        raise RangeError("grid too narrow: exp(-a'' X^p) exceeds the decay tolerance")
    pts = np.asarray(nodes.points, float)
    if pts.size == 0:
        raise ParameterError("empty node set")
    if np.max(np.abs(pts)) > min(half, prod.eval_radius):
        raise RangeError("nodes outside the grid or the product's evaluation disk")
    zidx = _match_zeros(prod, pts)
    logd = prod.log_derivative_at_zeros(zidx)
    if np.any(logd.real < LOG_TINY):
        raise NormalizationError("|S'(node)| underflows; the derivative bound failed numerically")

    inside = np.abs(home) <= prod.eval_radius
    logS = np.full(home.size, -np.inf + 0j)
    logS[inside] = prod.log_eval(home[inside].astype(complex))
    rows = np.zeros((pts.size, home.size), complex)
    for i, (l, ld) in enumerate(zip(pts, logd)):
        with np.errstate(divide="ignore", invalid="ignore"):
            v = np.exp(logS - np.log(home - l + 0j) - ld)
        v[~np.isfinite(v)] = 0.0
        v[home == l] = 1.0
        rows[i] = v
    for r in rows:
        be = boundary_energy(r) if r.any() else 0.0
        if be > 1e-8:
            raise RangeError(f"family member not resolved on the grid (edge energy {be:.2e})")
    if side == SPACE:
        space_rows, freq_rows = rows, forward_many(grid, rows)
        far = grid.xi
    else:
        space_rows, freq_rows = inverse_many(grid, rows), rows
        far = grid.x
    far_rows = freq_rows if side == SPACE else space_rows

    node_logs = a * np.abs(pts) ** p
    far_power = q if side == SPACE else p
    C_home = _bound_constant(home, rows, a_dprime, p, node_logs)
    C_far = _bound_constant(far, far_rows, a_prime, far_power, node_logs)
    consts = FamilyConstants(max(C_home, C_far), a, a_prime, a_dprime, C_home, C_far,
                             _decay_rate(home, rows, p),
                             _decay_rate(far, far_rows, far_power))

    fam = InterpolantFamily(nodes, side, grid, space_rows, freq_rows, consts, 0.0, 0.0, 0.0,
                            logd.real.copy())
    vals = fam.home_eval(pts)
    dev = np.abs(vals - np.eye(pts.size))
    scale = np.maximum(1.0, np.abs(rows).max(axis=1))
    inner = np.argsort(np.abs(pts))[:20]
    return InterpolantFamily(nodes, side, grid, space_rows, freq_rows, consts,
                             float((dev / scale[:, None]).max()), float(dev.max()),
                             float(np.abs(np.diag(vals)[inner] - 1).max()), logd.real.copy())


# --- residual states and the iteration ----------------------------------------

@dataclass(frozen=True, eq=False)
class ResidualState:
    alpha: dict
    beta: dict
    a: float
    p: float = 2.0
    iteration: int = 0
    weighted_norm: float = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "alpha", {float(k): complex(v) for k, v in self.alpha.items()})
        object.__setattr__(self, "beta", {float(k): complex(v) for k, v in self.beta.items()})
        if self.weighted_norm is None:
            object.__setattr__(self, "weighted_norm", self.recompute_norm())
        if self.weighted_norm < 0:
            raise ParameterError("weighted norm must be non-negative")

    @property
    def q(self):
        return self.p / (self.p - 1)

    def recompute_norm(self):
        return weighted_norm(self.alpha, self.beta, self.a, self.p)

    def sup(self):
        vals = list(self.alpha.values()) + list(self.beta.values())
        return max((abs(v) for v in vals), default=0.0)

    def scaled(self, c):
        return ResidualState({k: c * v for k, v in self.alpha.items()},
                             {k: c * v for k, v in self.beta.items()}, self.a, self.p,
                             self.iteration)

    def __add__(self, other):
        al = dict(self.alpha)
        for k, v in other.alpha.items():
            al[k] = al.get(k, 0) + v
        be = dict(self.beta)
        for k, v in other.beta.items():
            be[k] = be.get(k, 0) + v
        return ResidualState(al, be, self.a, self.p, self.iteration)


def weighted_norm(alpha, beta, a, p):
    q = p / (p - 1)
    s1 = sum(abs(v) * math.exp(a * abs(k) ** p) for k, v in alpha.items())
    s2 = sum(abs(v) * math.exp(a * abs(k) ** q) for k, v in beta.items())
    return float(s1 + s2)


class FreeInterpolationSolver:
    """Cross matrices restricted to the outer nodes, reused across targets."""

    def __init__(self, phi, psi, L, a=None):
        if phi.grid != psi.grid:
            raise ParameterError("families live on different grids")
        if phi.side != SPACE or psi.side != FREQ:
            raise ParameterError("expected a space-side and a frequency-side family")
        self.phi, self.psi, self.L = phi, psi, float(L)
        self.p = phi.nodes.exponent
        self.q = self.p / (self.p - 1)
        self.a = phi.constants.a if a is None else a
        self.lam_idx = np.where(np.abs(phi.nodes.points) > L)[0]
        self.mu_idx = np.where(np.abs(psi.nodes.points) > L)[0]
        self.lam = phi.nodes.points[self.lam_idx]
        self.mu = psi.nodes.points[self.mu_idx]
        # B[i, j] = Phihat_{lam_j}(mu_i); A[i, j] = Psicheck_{mu_j}(lam_i)
        self.B = (phi.far_eval(self.mu, self.lam_idx).T if self.mu.size and self.lam.size
                  else np.zeros((self.mu.size, self.lam.size), complex))
        self.A = (psi.far_eval(self.lam, self.mu_idx).T if self.mu.size and self.lam.size
                  else np.zeros((self.lam.size, self.mu.size), complex))
        self.w_lam = np.exp(self.a * np.abs(self.lam) ** self.p)
        self.w_mu = np.exp(self.a * np.abs(self.mu) ** self.q)

    def operator_norm(self):
        """Weighted l1 norm of the one-step residual map."""
        nb = (np.abs(self.B) * self.w_mu[:, None] / self.w_lam[None, :]).sum(axis=0)
        na = (np.abs(self.A) * self.w_lam[:, None] / self.w_mu[None, :]).sum(axis=0)
        return float(max(nb.max(initial=0.0), na.max(initial=0.0)))

    def vectors(self, target):
        ta = np.array([target.alpha.get(float(l), 0) for l in self.lam], complex)
        tb = np.array([target.beta.get(float(m), 0) for m in self.mu], complex)
        extra = (set(target.alpha) - set(map(float, self.lam))) | \
                (set(target.beta) - set(map(float, self.mu)))
        extra = {k for k in extra if (target.alpha.get(k, 0) != 0 or target.beta.get(k, 0) != 0)}
        if extra:
            raise ParameterError(f"target has non-zero entries off the outer nodes: {sorted(extra)[:3]}")
        return ta, tb

    def _norm(self, ra, rb):
        return float(np.sum(np.abs(ra) * self.w_lam) + np.sum(np.abs(rb) * self.w_mu))

    def iterate(self, ta, tb, max_iter=200, rel_stop=1e-15):
        """Coefficients (c_alpha, c_beta) and the residual-norm history."""
        ca = np.zeros(self.lam.size, complex)
        cb = np.zeros(self.mu.size, complex)
        ra, rb = np.array(ta, complex), np.array(tb, complex)
        hist = [self._norm(ra, rb)]
        if hist[0] == 0:
            return ca, cb, hist
        bad = 0
        for _ in range(max_iter):
            if hist[-1] <= rel_stop * hist[0]:
                break
            ca += ra
            cb += rb
            ra, rb = -(self.A @ rb), -(self.B @ ra)
            hist.append(self._norm(ra, rb))
            bad = bad + 1 if hist[-1] >= hist[-2] else 0
            if bad >= 3:
                raise DivergenceError(
                    f"residual did not contract for 3 steps (L={self.L:g}, "
                    f"operator norm {self.operator_norm():.3g}); increase L")
        return ca, cb, hist

    def assemble(self, ca, cb):
        rows_s = ca @ self.phi.space_rows[self.lam_idx] + cb @ self.psi.space_rows[self.mu_idx]
        rows_f = ca @ self.phi.freq_rows[self.lam_idx] + cb @ self.psi.freq_rows[self.mu_idx]
        return rows_s, rows_f


def contraction_factor(history, skip_first=False):
    """Largest ratio history[k+1]/history[k] over the non-negligible steps."""
    h = np.asarray(history, float)
    if h.size < 2 or h[0] == 0:
        return 0.0
    live = h[:-1] > 1e-13 * h[0]
    r = h[1:][live] / h[:-1][live]
    if skip_first:
        r = r[1:]
    return float(r.max()) if r.size else 0.0


def tail_sum(lam_all, mu_all, gap, L, p):
    """sum_{|l| > L} e^{-gap |l|^p} + sum_{|m| > L} e^{-gap |m|^q} over the given nodes."""
    q = p / (p - 1)
    lam_all, mu_all = np.asarray(lam_all), np.asarray(mu_all)
    return float(np.sum(np.exp(-gap * np.abs(lam_all[np.abs(lam_all) > L]) ** p))
                 + np.sum(np.exp(-gap * np.abs(mu_all[np.abs(mu_all) > L]) ** q)))


def solve_free_interpolation(phi, psi, target, L, max_iter=200, solver=None):
    """Solve f(l') = alpha(l'), fhat(m') = beta(m') on the nodes beyond L.

    Returns (f, history) with history the weighted residual norms.  The
    accuracy check uses tol = 1e-6 (1 + sup |target|).
    """
    solver = solver or FreeInterpolationSolver(phi, psi, L, a=target.a)
    ta, tb = solver.vectors(target)
    ca, cb, hist = solver.iterate(ta, tb, max_iter=max_iter)
    if hist[0] == 0:
        return GridFunction.zero(phi.grid), hist
    rs, rf = solver.assemble(ca, cb)
    f = GridFunction(phi.grid, rs, rf, True)
    tol = 1e-6 * (1 + max(np.abs(ta).max(initial=0), np.abs(tb).max(initial=0)))
    err = solve_error(solver, f, ta, tb)
    if err > tol:
        raise DivergenceError(f"interpolation error {err:.3g} above tolerance {tol:.3g} "
                              f"after {len(hist) - 1} steps")
    return f, hist


def solve_error(solver, f, ta, tb):
    ea = np.abs(eval_space_rows(f.grid, f.freq_values, solver.lam) - ta) if solver.lam.size else [0]
    eb = np.abs(eval_freq_rows(f.grid, f.space_values, solver.mu) - tb) if solver.mu.size else [0]
    return float(max(np.max(ea), np.max(eb)))
