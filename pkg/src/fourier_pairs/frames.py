"""Weighted sampling operator, restricted frame bounds and interpolation basis.

The sampling map sends f to the weighted samples
sqrt(w_l) f(l) and sqrt(w_m) fhat(m) with squared weights
(1+|l|)^{(2s-1)p+1} and (1+|m|)^{(2s-1)q+1}.  Weights are folded into
the rows of the sample matrix so the weighted sequence space becomes plain
Euclidean space.

Frame constants are computed on the span of the Hermite functions
h_0..h_{m-1}: with G = L L^* the H_{s,p,q} Gram matrix and S the sample
matrix, the extremal generalised eigenvalues of (S^* S, G) are the squared
extreme singular values of S L^{-*}.  The SVD route keeps tiny lower
constants resolved far below what a dense generalised eigensolver reaches.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import spectral
from .errors import (ConditioningError, ConfigurationError, DegenerateFrameError,
                     InputError, InsufficientDataError, ParameterError)
from .nodes import NodeSequence, is_p_separated

CLIP_FRACTION = 0.8
MAX_BASIS = 60
PINV_CUTOFF = 1e-12


@dataclass(frozen=True, eq=False)
class SamplingOperator:
    lam: NodeSequence
    mu: NodeSequence
    params: spectral.SpaceParams
    grid: spectral.Grid
    lambda_weights: np.ndarray
    mu_weights: np.ndarray
    clipped_lambda: int = 0
    clipped_mu: int = 0

    @property
    def n_rows(self):
        return len(self.lam) + len(self.mu)

    def sample_rows(self, space_rows, freq_rows):
        """Weighted sample matrix (rows = nodes, columns = functions)."""
        fl = spectral.eval_space_rows(self.grid, np.atleast_2d(freq_rows), self.lam.points)
        fm = spectral.eval_freq_rows(self.grid, np.atleast_2d(space_rows), self.mu.points)
        return np.concatenate([fl.T * self.lambda_weights[:, None],
                               fm.T * self.mu_weights[:, None]])

    def apply(self, f):
        spectral._require_freq(f)
        return self.sample_rows(f.space_values, f.freq_values)[:, 0]

    def raw_samples(self, f):
        """Unweighted (f(l), fhat(m)) as two arrays."""
        fl = spectral.point_eval(f, self.lam.points)
        fm = spectral.freq_eval(f, self.mu.points)
        return np.atleast_1d(fl), np.atleast_1d(fm)


def build_sampling_operator(lam, mu, params, grid):
    if not params.embeds_in_h:
        raise ParameterError("need s * min(p, q) >= 1")
    rl = CLIP_FRACTION * grid.half_width
    rm = CLIP_FRACTION * grid.freq_half_width
    rm = min(rm, rl)  # the frequency grid is far wider; keep both sides comparable
    lc, mc = lam.clipped(rl), mu.clipped(rm)
    if len(lc) == 0 and len(mc) == 0:
        raise ConfigurationError("no nodes left after clipping to the grid")
    wl = (1 + np.abs(lc.points)) ** (params.lambda_exponent / 2)
    wm = (1 + np.abs(mc.points)) ** (params.mu_exponent / 2)
    return SamplingOperator(lc, mc, params, grid, wl, wm,
                            len(lam) - len(lc), len(mu) - len(mc))


@dataclass(eq=False)
class FrameModel:
    op: SamplingOperator
    m: int
    A_est: float
    B_est: float
    basis_space: np.ndarray
    basis_freq: np.ndarray
    gram: np.ndarray
    sample_matrix: np.ndarray
    chol: np.ndarray = field(repr=False, default=None)
    label: str = "restricted to the span of h_0..h_{m-1}"

    @property
    def condition(self):
        return self.B_est / self.A_est if self.A_est > 0 else math.inf

    def whitened(self):
        return scipy.linalg.solve_triangular(self.chol, self.sample_matrix.T.conj(),
                                             lower=True).T.conj()

    def pencil_residual(self):
        """Relative residuals of (S^*S - A G) v for the extremal eigenpairs."""
        W = self.whitened()
        _, sv, vh = np.linalg.svd(W, full_matrices=False)
        M = self.sample_matrix.conj().T @ self.sample_matrix
        out = []
        for k, lamb in ((-1, self.A_est), (0, self.B_est)):
            y = vh[k].conj()
            v = scipy.linalg.solve_triangular(self.chol.conj().T, y, lower=False)
            r = M @ v - lamb * (self.gram @ v)
            out.append(float(np.linalg.norm(r) / (np.linalg.norm(M, 2) * np.linalg.norm(v))))
        return out

    def to_dict(self):
        op = self.op
        d = {"m": self.m, "A_est": self.A_est, "B_est": self.B_est,
             "condition": self.condition, "label": self.label}
        if op is not None:
            d.update({"s": op.params.s, "p": op.params.p, "q": op.params.q,
                      "n_lambda": len(op.lam), "n_mu": len(op.mu),
                      "clipped_lambda": op.clipped_lambda, "clipped_mu": op.clipped_mu})
        return d


def _cholesky(G):
    try:
        return np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        for n in range(1, G.shape[0] + 1):
            try:
                np.linalg.cholesky(G[:n, :n])
            except np.linalg.LinAlgError:
                raise ConditioningError(f"Gram matrix singular at basis index n={n - 1}")
        raise ConditioningError("Gram matrix numerically singular")


def _extremes(S, chol):
    W = scipy.linalg.solve_triangular(chol, S.T.conj(), lower=True).T.conj()
    if W.shape[0] < W.shape[1]:
        sv = np.linalg.svd(W, compute_uv=False)
        return 0.0, float(sv[0] ** 2)
    sv = np.linalg.svd(W, compute_uv=False)
    return float(sv[-1] ** 2), float(sv[0] ** 2)


def estimate_frame_bounds(op, m):
    if not 1 <= m <= MAX_BASIS:
        raise ParameterError(f"basis size must lie in [1, {MAX_BASIS}]")
    basis = spectral.hermite_basis(m - 1, op.grid)
    Hs = np.array([h.space_values for h in basis])
    Hf = np.array([h.freq_values for h in basis])
    G = spectral.hspq_inner_matrix(op.grid, Hs, Hf, op.params)
    chol = _cholesky(G)
    S = op.sample_rows(Hs, Hf)
    A, B = _extremes(S, chol)
    return FrameModel(op, m, A, B, Hs, Hf, G, S, chol)


def model_from_matrices(sample_matrix, gram, basis_space, basis_freq, op=None):
    """FrameModel for an explicit sample matrix and Gram matrix."""
    S = np.asarray(sample_matrix, complex)
    G = np.asarray(gram, complex)
    chol = _cholesky(G)
    A, B = _extremes(S, chol)
    return FrameModel(op, S.shape[1], A, B, np.asarray(basis_space), np.asarray(basis_freq),
                      G, S, chol)


def frame_bound_trend(lam, mu, params, grid, ms):
    op = build_sampling_operator(lam, mu, params, grid)
    return [(m, estimate_frame_bounds(op, m).A_est) for m in ms]


@dataclass(eq=False)
class InterpolationBasis:
    """Cardinal functions a_l (space nodes) and b_m (frequency nodes).

    ``coeffs`` holds the Hermite coefficients column-wise, lambda nodes first.
    """

    model: FrameModel
    lambda_nodes: np.ndarray
    mu_nodes: np.ndarray
    coeffs: np.ndarray
    residual_norms: np.ndarray
    norm_constant: float
    norms: np.ndarray

    @property
    def params(self):
        return self.model.op.params if self.model.op is not None else None

    def _fn(self, k):
        c = self.coeffs[:, k]
        g = self.model.op.grid if self.model.op is not None else None
        return spectral.GridFunction(g, c @ self.model.basis_space, c @ self.model.basis_freq,
                                     True)

    @property
    def a(self):
        return {float(l): self._fn(i) for i, l in enumerate(self.lambda_nodes)}

    @property
    def b(self):
        n = len(self.lambda_nodes)
        return {float(u): self._fn(n + i) for i, u in enumerate(self.mu_nodes)}

    def a_values_at(self, x):
        """a_l(x) for every lambda node, as an array over nodes."""
        return self._values(x)[: len(self.lambda_nodes)]

    def b_values_at(self, x):
        return self._values(x)[len(self.lambda_nodes):]

    def _values(self, x):
        g = self.model.op.grid
        hx = spectral.eval_space_rows(g, self.model.basis_freq, [x])[:, 0]
        return hx @ self.coeffs

    def bound_ok(self, rtol=1e-8):
        w = np.concatenate([self.model.op.lambda_weights, self.model.op.mu_weights])
        return bool(np.all(self.norms <= self.norm_constant * w * (1 + rtol)))


def build_interpolation_basis(model, cutoff=PINV_CUTOFF):
    if model.A_est < 1e-8:
        raise DegenerateFrameError(f"restricted lower frame constant {model.A_est:.3e} < 1e-8")
    S = model.sample_matrix
    W = scipy.linalg.solve_triangular(model.chol, S.T.conj(), lower=True).T.conj()
    U, sv, Vh = np.linalg.svd(W, full_matrices=False)
    keep = sv ** 2 > cutoff * sv[0] ** 2
    U, sv, Vh = U[:, keep], sv[keep], Vh[keep]
    if model.op is not None:
        w = np.concatenate([model.op.lambda_weights, model.op.mu_weights])
        lam_nodes, mu_nodes = model.op.lam.points, model.op.mu.points
    else:
        w = np.ones(S.shape[0])
        lam_nodes, mu_nodes = np.arange(S.shape[0], dtype=float), np.array([])
    # coefficients of T^+ applied to the weighted unit vectors sqrt(w_k) e_k
    Y = (Vh.conj().T / sv) @ (U.conj().T * w[None, :])
    C = scipy.linalg.solve_triangular(model.chol.conj().T, Y, lower=False)
    proj = U @ (U.conj().T * w[None, :])
    resid = np.linalg.norm(S @ C - proj, axis=0)
    norms = np.sqrt(np.maximum(np.real(np.einsum("ik,ij,jk->k", C.conj(), model.gram, C)), 0))
    return InterpolationBasis(model, lam_nodes, mu_nodes, C, resid,
                              1 / math.sqrt(model.A_est), norms)


def _sample_vector(keys, samples, what):
    if isinstance(samples, dict):
        got = np.array(sorted(float(k) for k in samples))
        if got.size != keys.size or np.any(got != np.sort(keys)):
            raise InputError(f"{what} sample keys do not match the basis nodes")
        return np.array([samples[float(k)] for k in keys], complex)
    arr = np.asarray(samples, complex)
    if arr.shape != keys.shape:
        raise InputError(f"{what} samples must have length {keys.size}")
    return arr


def reconstruct(basis, samples_lambda, samples_mu):
    """sum f(l) a_l + sum fhat(m) b_m as a grid function."""
    vl = _sample_vector(basis.lambda_nodes, samples_lambda, "lambda")
    vm = _sample_vector(basis.mu_nodes, samples_mu, "mu")
    c = basis.coeffs @ np.concatenate([vl, vm])
    m = basis.model
    grid = m.op.grid if m.op is not None else None
    return spectral.GridFunction(grid, c @ m.basis_space, c @ m.basis_freq, True)


def reconstruct_coefficients(basis, samples_lambda, samples_mu):
    vl = _sample_vector(basis.lambda_nodes, samples_lambda, "lambda")
    vm = _sample_vector(basis.mu_nodes, samples_mu, "mu")
    return basis.coeffs @ np.concatenate([vl, vm])


def sample_function(basis, f):
    """Raw samples of f at the basis nodes, as (dict lambda, dict mu)."""
    op = basis.model.op
    fl, fm = op.raw_samples(f)
    return (dict(zip(basis.lambda_nodes.tolist(), fl)), dict(zip(basis.mu_nodes.tolist(), fm)))


def norm_growth_slope(basis, lo=2.0, hi=8.0, side="lambda"):
    """Least-squares slope of log||a_l|| against log(1+|l|) for lo <= |l| <= hi."""
    n = len(basis.lambda_nodes)
    nodes = basis.lambda_nodes if side == "lambda" else basis.mu_nodes
    norms = basis.norms[:n] if side == "lambda" else basis.norms[n:]
    sel = (np.abs(nodes) >= lo) & (np.abs(nodes) <= hi) & (norms > 0)
    if sel.sum() < 3:
        raise InsufficientDataError("too few nodes in the slope window")
    return float(np.polyfit(np.log1p(np.abs(nodes[sel])), np.log(norms[sel]), 1)[0])


def duffin_schaeffer_demo(model, removed):
    """Lower constant before and after deleting sample rows.

    ``removed`` holds node values (taken from the lambda side) or pairs
    ("lambda"|"mu", value).  Returns a dict with A_before, A_after and a
    completeness flag; a rank collapse is reported, not raised.
    """
    removed = list(removed)
    if len(removed) > 5:
        raise ParameterError("at most 5 nodes may be removed")
    op = model.op
    rows = np.ones(model.sample_matrix.shape[0], bool)
    nl = len(op.lam)
    for item in removed:
        side, v = item if isinstance(item, tuple) else ("lambda", item)
        pts = op.lam.points if side == "lambda" else op.mu.points
        k = int(np.argmin(np.abs(pts - v)))
        if abs(pts[k] - v) > 1e-12 * max(1.0, abs(v)):
            raise ParameterError(f"node {v} is not in the {side} set")
        rows[k if side == "lambda" else nl + k] = False
    S = model.sample_matrix[rows]
    out = {"A_before": model.A_est, "removed": len(removed), "rows_left": int(rows.sum()),
           "m": model.m}
    rank = np.linalg.matrix_rank(S) if S.shape[0] else 0
    if S.shape[0] < model.m or rank < model.m:
        out.update({"A_after": 0.0, "complete": False,
                    "report": f"completeness violated: rank {rank} < m = {model.m}"})
        return out
    A, _ = _extremes(S, model.chol)
    out.update({"A_after": A, "complete": True, "report": "rank preserved"})
    return out


def nearest_to_origin(seq, k):
    order = np.argsort(np.abs(seq.points), kind="stable")
    return seq.points[order[:k]]


def separated_upper_constant(lam, mu):
    """Frozen upper frame constant for p-separated nodes with p = q = 2, s = 1/2.

    For a positive node l take I = [l, l + d] with d = min(gap, 1/(1+|l|))
    inside the gap to its right (negative nodes use the gap to the left), so
    the intervals are disjoint and d >= c'/(1+|l|), c' = min(c, 1).  The
    trace bound gives (1+|l|)|f(l)|^2 <= (2/c') (1+|l|)^2 int_I |f|^2
    + (2/3) int_I |f'|^2, and (1+|l|)^2 <= 2 (1+x^2) on I.  Summing both sides
    of the pair, sum <= (4/c' + 8 pi^2/3) ||f||^2 in the p = q = 2, s = 1/2 norm.
    """
    if lam.exponent != 2 or mu.exponent != 2:
        raise ParameterError("the frozen constant covers p = q = 2 only")
    cl = is_p_separated(lam)[1]
    cm = is_p_separated(mu)[1]
    c = min(cl, cm, 1.0)
    return 4.0 / c + 8 * math.pi ** 2 / 3


def _envelope_slope(nodes, values, floor):
    mag = np.abs(values)
    r = np.abs(nodes)
    order = np.argsort(r)
    r, mag = r[order], mag[order]
    env = np.maximum.accumulate(mag[::-1])[::-1]
    sel = (r >= 1.0) & (env > floor)
    if sel.sum() < 8:
        raise InsufficientDataError("fewer than 8 usable nodes for a slope fit")
    return float(np.polyfit(np.log(r[sel]), np.log(env[sel]), 1)[0])


def _norm_converged(f, params, edge=0.1, tol=1e-6):
    g = f.grid
    ok = True
    for vals, coord, t in ((f.freq_values, g.xi, params.p * params.s),
                           (f.space_values, g.x, params.q * params.s)):
        mag = np.abs(vals)
        # samples below the resolution floor are transform round-off
        mag = np.where(mag > spectral.RESOLVED_FLOOR * mag.max(), mag, 0.0)
        w = (1 + np.abs(coord) ** (2 * t)) * mag ** 2
        ok &= spectral.boundary_energy(np.sqrt(w), edge) <= tol
    return bool(ok)


def decay_to_schwartz_check(f, lam, mu, r_list=(1, 2, 4, 8), slack=0.0):
    """Compare polynomial decay of node samples with finiteness of H_{s,p,q} norms.

    Slopes come from an upper envelope (running maximum from the outside in)
    of |f| at the nodes, fitted in log-log coordinates over |node| >= 1 and
    above a round-off floor.  Norm finiteness is judged on the grid: the
    weighted integrand must carry at most 1e-6 of its mass in the outer tenth.
    """
    spectral._require_freq(f)
    g = f.grid
    top = max(np.abs(f.space_values).max(), np.abs(f.freq_values).max())
    p, q = lam.exponent, mu.exponent
    report = {"r_list": list(r_list), "degenerate": bool(top == 0)}
    if top == 0:
        report.update({"slope_lambda": None, "slope_mu": None, "per_r": [
            {"r": r, "decay_ok": True, "norm_finite": True, "hspq_norm": 0.0} for r in r_list],
            "consistent": True})
        return report
    rl = CLIP_FRACTION * g.half_width
    lp = lam.points[np.abs(lam.points) <= rl]
    mp = mu.points[np.abs(mu.points) <= rl]
    floor = 1e-13 * top
    sl = _envelope_slope(lp, spectral.point_eval(f, lp), floor)
    sm = _envelope_slope(mp, spectral.freq_eval(f, mp), floor)
    per_r = []
    for r in r_list:
        params = spectral.SpaceParams(r / min(p, q), p, q)
        per_r.append({"r": r, "decay_ok": bool(sl <= -r + slack and sm <= -r + slack),
                      "norm_finite": _norm_converged(f, params),
                      "hspq_norm": spectral.hspq_norm(f, params)})
    all_decay = all(e["decay_ok"] for e in per_r)
    all_norm = all(e["norm_finite"] for e in per_r)
    report.update({"slope_lambda": sl, "slope_mu": sm, "per_r": per_r,
                   "schwartz_by_decay": all_decay, "schwartz_by_norms": all_norm,
                   "consistent": all_decay == all_norm})
    return report
