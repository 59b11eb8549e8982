"""Numerical verifiers for Poincare-Wirtinger type inequalities.

Integrals over [a, b] integrate the piecewise-linear interpolant of the
sampled integrand exactly, so interval endpoints between grid points get a
linear share of their boundary cell.  Derivatives are spectral.

Constants table (assembled from the proofs of the inequalities):

* stable Wirtinger bound: coefficients (1+eps)((b-a)/pi)^2 and (1+1/eps)(b-a).
* trace bound: 2/(b-a)^2 and 2/3.
* trace sum over a delta-separated set, theta = 1: apply the trace bound on
  [g, g+delta] for every node g (disjoint intervals) and multiply by delta^2:
  delta |f(g)|^2 <= 2 int|f|^2 + (2/3) delta^2 int|f'|^2.  With
  int|f'|^2 = 4 pi^2 int xi^2 |fhat|^2 this gives C = max(2, 8 pi^2 / 3)
  = 8 pi^2 / 3.  For theta > 1, 1 + u^2 <= 2 (1 + u^{2 theta}) doubles it.
* density form: summing the stable bound over gaps of length at most
  (1-eps)/(2t) gives t^2 int|f|^2 <= int xi^2|fhat|^2 + C_eps t sum|f(g)|^2
  with C_eps = (1 + 1/eps)(1 - eps); a convex Phi multiplies the node term
  by Phi'(t^2), here Phi(u) = u^theta.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .errors import PreconditionError, RangeError
from .nodes import NodeSequence, is_l_dense

TRACE_SUM_CONSTANT = 8 * math.pi ** 2 / 3


def trace_sum_constant(theta):
    return TRACE_SUM_CONSTANT if theta == 1 else 2 * TRACE_SUM_CONSTANT


def density_constant(eps):
    return (1 + 1 / eps) * (1 - eps)


class _Prepared:
    """Cumulative integrals and derivative samples of one grid function."""

    def __init__(self, f):
        if f.freq_values is None:
            f = spectral.fourier_transform(f)
        self.f = f
        g = f.grid
        self.x = g.x
        self.dx = g.dx
        self.d = f.derivative()
        self.g0 = np.abs(f.space_values) ** 2
        self.g1 = np.abs(self.d.space_values) ** 2
        self.c0 = _cumtrapz(self.g0, self.dx)
        self.c1 = _cumtrapz(self.g1, self.dx)
        self.total0 = f.norm2()
        self.total1 = self.d.norm2()

    def integral(self, which, a, b):
        g, c = (self.g0, self.c0) if which == 0 else (self.g1, self.c1)
        return _prim(g, c, self.x, self.dx, b) - _prim(g, c, self.x, self.dx, a)

    def values(self, pts):
        return spectral.point_eval(self.f, np.asarray(pts, float))


def _cumtrapz(g, dx):
    out = np.zeros_like(g)
    out[1:] = np.cumsum(0.5 * (g[1:] + g[:-1])) * dx
    return out


def _prim(g, c, x, dx, t):
    """Integral from x_0 to t of the linear interpolant of g."""
    t = np.asarray(t, float)
    k = np.clip(np.floor((t - x[0]) / dx).astype(int), 0, x.size - 2)
    h = t - x[k]
    slope = (g[k + 1] - g[k]) / dx
    return c[k] + g[k] * h + 0.5 * slope * h ** 2


def _check_interval(f, a, b):
    X = f.grid.half_width
    if not a < b:
        raise RangeError("need a < b")
    if a < -X or b > X:
        raise RangeError(f"interval [{a}, {b}] outside the grid")


def _prep(f):
    return f if isinstance(f, _Prepared) else _Prepared(f)


def check_pw_stable(f, a, b, eps, scale=1.0):
    """Both sides of the stable Wirtinger bound on [a, b]."""
    pf = _prep(f)
    _check_interval(pf.f, a, b)
    if not eps > 0:
        raise RangeError("eps must be positive")
    ends = pf.values([a, b])
    lhs = pf.integral(0, a, b)
    L = b - a
    rhs = scale * ((1 + eps) * (L / math.pi) ** 2 * pf.integral(1, a, b)
                   + (1 + 1 / eps) * L * float(np.sum(np.abs(ends) ** 2)))
    return float(lhs), float(rhs)


def pw_rhs_terms(f, a, b):
    """(derivative term, endpoint term) so RHS(eps) = (1+eps) A + (1+1/eps) B."""
    pf = _prep(f)
    _check_interval(pf.f, a, b)
    L = b - a
    ends = pf.values([a, b])
    return (float((L / math.pi) ** 2 * pf.integral(1, a, b)),
            float(L * np.sum(np.abs(ends) ** 2)))


def check_trace(f, a, b, scale=1.0):
    """Both sides of the trace bound |f(a)|^2/(b-a) <= 2/(b-a)^2 int|f|^2 + 2/3 int|f'|^2."""
    pf = _prep(f)
    _check_interval(pf.f, a, b)
    L = b - a
    fa = pf.values([a])[0]
    lhs = abs(fa) ** 2 / L
    rhs = scale * (2 / L ** 2 * pf.integral(0, a, b) + 2.0 / 3.0 * pf.integral(1, a, b))
    return float(lhs), float(rhs)


def _node_points(gamma):
    return gamma.points if isinstance(gamma, NodeSequence) else np.asarray(gamma, float)


def check_trace_general(f, gamma, delta, theta=1.0, scale=1.0):
    """delta sum |f(g)|^2 against C [int|f|^2 + delta^{2 theta} int |xi|^{2 theta}|fhat|^2]."""
    pf = _prep(f)
    pts = _node_points(gamma)
    if theta < 1:
        raise PreconditionError("theta must be >= 1")
    if pts.size > 1 and np.min(np.diff(pts)) < delta * (1 - 1e-12):
        raise PreconditionError(f"node gaps smaller than delta={delta}")
    vals = pf.values(pts)
    lhs = delta * float(np.sum(np.abs(vals) ** 2))
    g = pf.f.grid
    moment = float(np.sum(np.abs(g.xi) ** (2 * theta) * np.abs(pf.f.freq_values) ** 2) * g.dxi)
    rhs = scale * trace_sum_constant(theta) * (pf.total0 + delta ** (2 * theta) * moment)
    return lhs, float(rhs)


def support_window(f, rel=1e-12):
    """Smallest interval outside which |f| <= rel * max|f|."""
    v = np.abs(f.space_values)
    top = v.max()
    if top == 0:
        return None
    idx = np.where(v > rel * top)[0]
    x = f.grid.x
    return float(x[idx[0]]), float(x[idx[-1]])


def check_wirt2(f, gamma, t, eps, theta=1.0, vanishing=False, scale=1.0):
    """Density form of the Wirtinger bound with Phi(u) = u^theta.

    Part (i) (vanishing False): Phi(t^2) int|f|^2 <= int Phi(xi^2)|fhat|^2
    + C_eps t Phi'(t^2) sum |f(g)|^2, gamma (1-eps)/(2t)-dense.
    Part (ii) (vanishing True): f = 0 on gamma, gamma 1/(2t)-dense, no node term.
    """
    pf = _prep(f)
    pts = _node_points(gamma)
    if theta < 1:
        raise PreconditionError("theta must be >= 1")
    if not vanishing and not 0 < eps < 1:
        raise PreconditionError("eps must lie in (0, 1)")
    g = pf.f.grid
    win = support_window(pf.f)
    if win is None:
        return 0.0, 0.0
    seq = NodeSequence(pts)
    l = 1 / (2 * t) if vanishing else (1 - eps) / (2 * t)
    try:
        dense = is_l_dense(seq, l * (1 + 1e-12), win)
    except RangeError as exc:
        raise PreconditionError(f"nodes do not cover the support window {win}") from exc
    if not dense:
        raise PreconditionError(f"nodes are not {l:.6g}-dense on the support window")
    vals = pf.values(pts)
    if vanishing:
        top = np.abs(pf.f.space_values).max()
        if np.abs(vals).max() > 1e-9 * top:
            raise PreconditionError("function does not vanish on the nodes")
    lhs = t ** (2 * theta) * pf.total0
    rhs = float(np.sum(np.abs(g.xi) ** (2 * theta) * np.abs(pf.f.freq_values) ** 2) * g.dxi)
    if not vanishing:
        node_sum = float(np.sum(np.abs(vals) ** 2))
        rhs += scale * density_constant(eps) * t * theta * t ** (2 * theta - 2) * node_sum
    return float(lhs), float(rhs)


@dataclass
class InequalityReport:
    name: str
    cases_run: int = 0
    worst_slack: float = math.inf
    violations: list = field(default_factory=list)
    tolerance: float = 1e-9
    errors: list = field(default_factory=list)

    def add(self, case_id, lhs, rhs):
        self.cases_run += 1
        slack = rhs - lhs
        tol = self.tolerance * max(1.0, abs(lhs), abs(rhs))
        self.worst_slack = min(self.worst_slack, slack)
        if slack < -tol:
            self.violations.append((case_id, lhs, rhs))

    def to_dict(self):
        return {"name": self.name, "cases_run": self.cases_run,
                "worst_slack": None if math.isinf(self.worst_slack) else self.worst_slack,
                "violations": [list(v) for v in sorted(self.violations)],
                "tolerance": self.tolerance, "errors": sorted(self.errors)}


@dataclass
class SuiteConfig:
    interval_lengths: tuple = (0.1, 0.25, 0.5, 1.0, 2.0, 4.0)
    interval_starts: int = 33
    span: float = 8.0
    eps_values: tuple = (0.1, 1.0, 10.0)
    trace_deltas: tuple = (0.25, 0.5, 1.0)
    thetas: tuple = (1.0, 1.5, 2.0)
    density_ts: tuple = (0.5, 1.0, 2.0)
    density_eps: tuple = (0.1, 0.5)
    node_span: float = 10.0
    constant_scale: float = 1.0
    tolerance: float = 1e-9
    seed: int = None

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        for k in ("interval_lengths", "eps_values", "trace_deltas", "thetas",
                  "density_ts", "density_eps"):
            if k in known:
                known[k] = tuple(float(v) for v in known[k])
        return cls(**known)

    def to_dict(self):
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    def intervals(self):
        starts = np.linspace(-self.span, self.span, self.interval_starts)
        rng = np.random.default_rng(self.seed) if self.seed is not None else None
        out = []
        for L in self.interval_lengths:
            for a in starts:
                if rng is not None:
                    a = a + rng.uniform(-0.05, 0.05)
                a = max(a, -self.span)
                b = a + L
                if b <= self.span:
                    out.append((float(a), float(b)))
        return out


def _lattice(step, span):
    k = int(np.floor(span / step))
    return np.arange(-k, k + 1) * step


def run_suite(corpus, config=None):
    """Run every check over the corpus; returns {name: InequalityReport}.

    Case failures (precondition or range errors) are recorded in the report
    rather than raised.
    """
    cfg = config if isinstance(config, SuiteConfig) else SuiteConfig.from_dict(config)
    if not corpus:
        raise PreconditionError("corpus must be non-empty")
    tol = cfg.tolerance
    reports = {n: InequalityReport(n, tolerance=tol) for n in
               ("pw_stable", "trace", "trace_general", "density_i", "density_ii")}
    scale = cfg.constant_scale
    intervals = cfg.intervals()
    ends = np.array(sorted({e for iv in intervals for e in iv}))
    for fi, f in enumerate(corpus):
        pf = _Prepared(f)
        endvals = dict(zip(ends.tolist(), pf.values(ends)))
        for a, b in intervals:
            L = b - a
            i0 = pf.integral(0, a, b)
            i1 = pf.integral(1, a, b)
            e2 = abs(endvals[a]) ** 2 + abs(endvals[b]) ** 2
            for eps in cfg.eps_values:
                rhs = scale * ((1 + eps) * (L / math.pi) ** 2 * i1 + (1 + 1 / eps) * L * e2)
                reports["pw_stable"].add(f"f{fi}:[{a:.4f},{b:.4f}]:eps={eps:g}", i0, rhs)
            lhs = abs(endvals[a]) ** 2 / L
            rhs = scale * (2 / L ** 2 * i0 + 2.0 / 3.0 * i1)
            reports["trace"].add(f"f{fi}:[{a:.4f},{b:.4f}]", lhs, rhs)
        for delta in cfg.trace_deltas:
            gamma = _lattice(delta, cfg.node_span)
            for theta in cfg.thetas:
                cid = f"f{fi}:delta={delta:g}:theta={theta:g}"
                _guarded(reports["trace_general"], cid, check_trace_general,
                         pf, gamma, delta, theta, scale)
        for t in cfg.density_ts:
            for eps in cfg.density_eps:
                gamma = _lattice((1 - eps) / (2 * t), cfg.node_span)
                for theta in cfg.thetas:
                    cid = f"f{fi}:t={t:g}:eps={eps:g}:theta={theta:g}"
                    _guarded(reports["density_i"], cid, check_wirt2,
                             pf, gamma, t, eps, theta, False, scale)
            # vanishing companion: f(x) sin(2 pi t x) vanishes on (2t)^{-1} Z
            h = _vanishing_companion(f, t)
            if h is None:
                continue
            ph = _Prepared(h)
            gamma = _lattice(1 / (2 * t), cfg.node_span)
            for theta in cfg.thetas:
                cid = f"f{fi}:t={t:g}:theta={theta:g}"
                _guarded(reports["density_ii"], cid, check_wirt2,
                         ph, gamma, t, 0.5, theta, True, scale)
    return reports


def _vanishing_companion(f, t):
    g = f.grid
    v = f.space_values * np.sin(2 * np.pi * t * g.x)
    if not np.any(v):
        return None
    return spectral.GridFunction.from_space(g, v)


def _guarded(report, cid, fn, *args):
    try:
        lhs, rhs = fn(*args)
    except (PreconditionError, RangeError) as exc:
        report.errors.append(f"{cid}: {exc}")
        return
    report.add(cid, lhs, rhs)


def suite_summary(reports):
    return {name: rep.to_dict() for name, rep in sorted(reports.items())}


def total_violations(reports):
    return sum(len(r.violations) for r in reports.values())


def sine_arch(grid, a, b, margin=2.0, taper=0.3):
    """sin(pi (x-a)/(b-a)) times a smooth window equal to 1 on [a, b]."""
    from scipy.special import erf
    x = grid.x
    w = 0.5 * (erf((x - (a - margin)) / taper) - erf((x - (b + margin)) / taper))
    return spectral.GridFunction.from_space(grid, np.sin(np.pi * (x - a) / (b - a)) * w)


def pw_sharpness(grid, a=0.0, b=1.0, eps=1e-6):
    """Relative slack of the derivative term for the extremal sine arch.

    Returns ((b-a)/pi)^2 int|f'|^2 / int|f|^2 - 1 and the full relative slack
    (rhs - lhs)/lhs at the given eps.
    """
    f = sine_arch(grid, a, b)
    A, B = pw_rhs_terms(f, a, b)
    lhs = _prep(f).integral(0, a, b)
    rhs = (1 + eps) * A + (1 + 1 / eps) * B
    return A / lhs - 1.0, (rhs - lhs) / lhs
