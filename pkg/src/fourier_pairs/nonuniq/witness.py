"""End-to-end construction of a nonzero f vanishing on Lambda with fhat vanishing on M.

Pipeline: classify the pair, enlarge both node sets to the density of the
chosen K_p function, build the canonical products and the two cardinal
families, solve the free interpolation problem on the nodes beyond L for a
basis of right-hand sides, and finally kill the finitely many constraints
in [-L, L] with a null vector of the resulting evaluation matrix.
"""

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ClassificationError, ConfigurationError, ParameterError
from ..nodes import SUBCRITICAL, NodeSequence, classify_pair, enlarged_added_mask, smooth_enlarge
from ..spectral import (GridFunction, Grid, eval_freq_rows, eval_space_rows,
                        gelfand_shilov_converged)
from .family import (FREQ, SPACE, FreeInterpolationSolver, build_interpolant_family,
                      contraction_factor, tail_sum)
from .kp import build_kp, default_s, threshold_b
from .levin import build_levin_product, ideal_ray_moduli


@dataclass
class WitnessConfig:
    sigma: float = 0.9
    s: float = None              # default: midpoint of (sigma^q, 1)
    b_factor: float = 1.25       # b = b_factor * b0(s)
    R: float = 30.0
    grid_x: float = 12.0
    grid_n: int = 8192
    L: float = None              # default: smallest candidate with operator norm <= 1/2
    L_max: float = 7.0
    a: float = None              # default: midpoint of (beta, beta/s)
    eps: float = 0.05
    max_iter: int = 200
    witness_tol: float = 1e-6
    operator_target: float = 0.5
    gs_fractions: tuple = (0.25, 0.5, 0.75)
    tail_fraction: float = 0.25
    band: float = 0.02

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in dict(d or {}).items() if k in cls.__dataclass_fields__}
        if "gs_fractions" in known:
            known["gs_fractions"] = tuple(known["gs_fractions"])
        return cls(**known)

    def to_dict(self):
        d = asdict(self)
        d["gs_fractions"] = list(self.gs_fractions)
        return d


@dataclass
class WitnessReport:
    config: dict
    classification: dict
    kp: dict
    b0: float
    product_lambda: dict
    family_phi: dict
    family_psi: dict
    L: float
    operator_norm: float
    analytic_L: float
    analytic_delta: float
    basis_size: int
    constraint_count: int
    smallest_singular_values: list
    max_lambda_residual: float
    max_mu_residual: float
    lambda_checked: int
    mu_checked: int
    norm2: float
    contraction_max: float
    contraction_histories: list
    gelfand_shilov: list
    gs_finite_c: float
    witness_ok: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _enlarge_symmetric(seq, D, R):
    """Smooth enlargement of each half-line (negative side mirrored)."""
    p = seq.exponent
    halves = []
    for part in (seq.positive, -seq.negative[::-1]):
        part = part[part <= R]
        halves.append(smooth_enlarge(NodeSequence(part, p, R), D, R).points)
    return NodeSequence(np.concatenate([-halves[1][::-1], halves[0]]), p, R), halves


def _zero_sets(kp, real_pos, real_neg, R):
    zs = {}
    for th, D in zip(kp.jump_angles, kp.densities):
        if abs(th) < 1e-12:
            zs[float(th)] = real_pos
        elif abs(abs(th) - math.pi) < 1e-12:
            zs[float(th)] = real_neg
        else:
            zs[float(th)] = ideal_ray_moduli(D, kp.p, R)
    return zs


def choose_L(phi, psi, a, target, L_max, step=0.5):
    L = 1.0
    while L < L_max - step / 2:
        solver = FreeInterpolationSolver(phi, psi, L, a=a)
        if solver.lam.size and solver.operator_norm() <= target:
            return L, solver
        L += step
    raise ConfigurationError(f"no L below {L_max} gives operator norm <= {target}; "
                             "increase L_max")


def prepare_pipeline(lam, mu, config=None):
    """Classification, K_p function, products and both families for the witness."""
    cfg = config if isinstance(config, WitnessConfig) else WitnessConfig.from_dict(config)
    p, q = lam.exponent, mu.exponent
    if not (p == 2 and q == 2):
        raise ParameterError("the end-to-end witness is implemented for p = q = 2")
    cls = classify_pair(lam, mu, cfg.tail_fraction, cfg.band)
    if cls.verdict != SUBCRITICAL:
        raise ClassificationError(f"pair is {cls.verdict} (combined {cls.combined:.4g}); "
                                  "a witness needs a subcritical pair")
    sigma = cfg.sigma
    for name, a_val, e in (("Lambda", cls.a_lambda_inf, p), ("M", cls.a_mu_inf, q)):
        # input density in u = t^e is 1/(e * a_inf); it must sit below 2 sigma/e
        if not 2 * sigma / e > 1 / (e * a_val):
            raise ConfigurationError(f"sigma={sigma} too small to enlarge {name}: need "
                                     f"sigma > {1 / (2 * a_val):.4g}")
    s = default_s(sigma, p) if cfg.s is None else cfg.s
    b0 = threshold_b(p, sigma, s)
    kp = build_kp(p, sigma, cfg.b_factor * b0, s)
    D = 2 * sigma / p
    R = cfg.R
    if min(lam.truncation_radius, mu.truncation_radius) < R:
        raise ConfigurationError(f"node sets must reach the product radius R={R}")

    lam_e, lam_h = _enlarge_symmetric(lam, D, R)
    mu_e, mu_h = _enlarge_symmetric(mu, D, R)
    prod_l = build_levin_product(kp, _zero_sets(kp, lam_h[0], lam_h[1], R), R)
    same = (lam_e.points.size == mu_e.points.size
            and np.allclose(lam_e.points, mu_e.points, rtol=0, atol=1e-14))
    prod_m = prod_l if same else build_levin_product(kp, _zero_sets(kp, mu_h[0], mu_h[1], R), R)

    grid = Grid(cfg.grid_x, cfg.grid_n)
    fam_l = lam_e.clipped(cfg.L_max)
    fam_m = mu_e.clipped(cfg.L_max)
    phi = build_interpolant_family(prod_l, fam_l, grid, a=cfg.a, eps=cfg.eps, side=SPACE)
    psi = build_interpolant_family(prod_m, fam_m, grid, a=cfg.a, eps=cfg.eps, side=FREQ)
    return {"config": cfg, "classification": cls, "kp": kp, "b0": b0, "D": D,
            "lambda_enlarged": lam_e, "mu_enlarged": mu_e, "product_lambda": prod_l,
            "product_mu": prod_m, "grid": grid, "phi": phi, "psi": psi}


def construct_nonuniqueness_witness(lam, mu, config=None, return_report=False):
    """Nonzero grid function vanishing on Lambda whose transform vanishes on M."""
    st = prepare_pipeline(lam, mu, config)
    cfg, cls, kp, b0, D = st["config"], st["classification"], st["kp"], st["b0"], st["D"]
    lam_e, mu_e, prod_l = st["lambda_enlarged"], st["mu_enlarged"], st["product_lambda"]
    grid, phi, psi = st["grid"], st["phi"], st["psi"]
    R = cfg.R
    p, q = lam.exponent, mu.exponent
    fam_l, fam_m = phi.nodes, psi.nodes
    a = phi.constants.a

    if cfg.L is None:
        L, solver = choose_L(phi, psi, a, cfg.operator_target, cfg.L_max)
    else:
        L = float(cfg.L)
        solver = FreeInterpolationSolver(phi, psi, L, a=a)

    # basis of functions vanishing (resp. transform vanishing) on the outer nodes
    lam_in = np.where(np.abs(fam_l.points) <= L)[0]
    mu_in = np.where(np.abs(fam_m.points) <= L)[0]
    added_l = enlarged_added_mask(lam, fam_l)[solver.lam_idx]
    added_m = enlarged_added_mask(mu, fam_m)[solver.mu_idx]
    B_in = phi.far_eval(solver.mu, lam_in) if solver.mu.size else np.zeros((lam_in.size, 0))
    A_in = psi.far_eval(solver.lam, mu_in) if solver.lam.size else np.zeros((mu_in.size, 0))
    space_rows, freq_rows, histories = [], [], []

    def run(ta, tb):
        ca, cb, hist = solver.iterate(ta, tb, max_iter=cfg.max_iter)
        histories.append(hist)
        return solver.assemble(ca, cb)

    zl = np.zeros(solver.lam.size, complex)
    zm = np.zeros(solver.mu.size, complex)
    for k, i in enumerate(lam_in):
        rs, rf = run(zl, -B_in[k])
        space_rows.append(phi.space_rows[i] + rs)
        freq_rows.append(phi.freq_rows[i] + rf)
    for k, i in enumerate(mu_in):
        rs, rf = run(-A_in[k], zm)
        space_rows.append(psi.space_rows[i] + rs)
        freq_rows.append(psi.freq_rows[i] + rf)
    for j in np.where(added_l)[0]:
        e = zl.copy()
        e[j] = 1
        rs, rf = run(e, zm)
        space_rows.append(rs)
        freq_rows.append(rf)
    for j in np.where(added_m)[0]:
        e = zm.copy()
        e[j] = 1
        rs, rf = run(zl, e)
        space_rows.append(rs)
        freq_rows.append(rf)
    S = np.array(space_rows)
    F = np.array(freq_rows)

    cons_l = lam.points[np.abs(lam.points) <= L]
    cons_m = mu.points[np.abs(mu.points) <= L]
    n_cons = cons_l.size + cons_m.size
    if S.shape[0] <= n_cons:
        raise ConfigurationError(f"basis dimension {S.shape[0]} does not exceed the "
                                 f"{n_cons} constraints in [-L, L]")
    M = np.concatenate([eval_space_rows(grid, F, cons_l), eval_freq_rows(grid, S, cons_m)],
                       axis=1).T
    scale = np.abs(S).max(axis=1)
    _, sv, vh = np.linalg.svd(M / scale[None, :])
    c = vh[-1].conj() / scale
    fs, ff = c @ S, c @ F
    nrm = math.sqrt(float(np.sum(np.abs(fs) ** 2) * grid.dx))
    if nrm == 0:
        raise ConfigurationError("null vector produced the zero function")
    f = GridFunction(grid, fs / nrm, ff / nrm, True)

    res_l, res_m, n_l, n_m = witness_residuals(f, lam, mu)
    contraction = max(contraction_factor(h) for h in histories) if histories else 0.0

    beta = kp.beta
    gs = []
    finite_c = None
    for frac in cfg.gs_fractions:
        cval = frac * beta
        sx, sf, ok = gelfand_shilov_converged(f, p, q, cval)
        gs.append({"c": cval, "space": sx, "freq": sf, "finite": ok})
        if ok:
            finite_c = cval

    consts = phi.constants
    delta = 1 / (4 * max(phi.constants.C, psi.constants.C))
    gap = consts.a_prime - consts.a
    analytic_L = float("inf")
    for Lc in np.arange(0.5, R, 0.5):
        if tail_sum(lam_e.points, mu_e.points, gap, Lc, p) + _continuum_tail(D, gap, R, p) < delta:
            analytic_L = float(Lc)
            break

    ok = (res_l <= cfg.witness_tol and res_m <= cfg.witness_tol and nrm > 0
          and finite_c is not None)
    report = WitnessReport(
        config=cfg.to_dict(), classification=cls.to_dict(), kp=kp.to_dict(), b0=b0,
        product_lambda=prod_l.to_dict(), family_phi=phi.to_dict(), family_psi=psi.to_dict(),
        L=L, operator_norm=solver.operator_norm(), analytic_L=analytic_L, analytic_delta=delta,
        basis_size=int(S.shape[0]), constraint_count=int(n_cons),
        smallest_singular_values=[float(v) for v in sv[-3:]],
        max_lambda_residual=res_l, max_mu_residual=res_m, lambda_checked=n_l, mu_checked=n_m,
        norm2=f.norm2(), contraction_max=contraction,
        contraction_histories=[list(map(float, h)) for h in histories[:4]],
        gelfand_shilov=gs, gs_finite_c=finite_c, witness_ok=bool(ok),
        extra={"analytic_contraction": 0.5, "contraction_limit": 0.75,
               "bound_margin": kp.bound_margin()})
    return (f, report) if return_report else f


def _continuum_tail(D, gap, R, p):
    # nodes beyond R, counted with density D in u = t^p on both half-lines (both sets)
    return 4 * D * math.exp(-gap * R ** p) / gap if gap > 0 else float("inf")


def witness_residuals(f, lam, mu):
    """(max|f(l)|/|f|_inf, max|fhat(m)|/|fhat|_inf, #l checked, #m checked) over the grid."""
    g = f.grid
    pl = lam.points[np.abs(lam.points) <= g.half_width]
    pm = mu.points[np.abs(mu.points) <= g.freq_half_width]
    vl = np.abs(eval_space_rows(g, f.freq_values, pl)) if pl.size else np.zeros(1)
    vm = np.abs(eval_freq_rows(g, f.space_values, pm)) if pm.size else np.zeros(1)
    return (float(vl.max() / np.abs(f.space_values).max()),
            float(vm.max() / np.abs(f.freq_values).max()), int(pl.size), int(pm.size))
