"""Discrete measures from the interpolation basis and their Fourier pairing.

With a basis (a_l, b_m) on Lambda' = Lambda \\ {x} and M, every test g in the
basis subspace satisfies g(x) - sum a_l(x) g(l) = sum b_m(x) ghat(m).  Read as
a pairing, nu = sum b_m(x) delta_m has Fourier transform
nu_hat = delta_x - sum a_l(x) delta_l on that subspace.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import frames, spectral
from .errors import ConfigurationError, ParameterError, RangeError
from .nodes import NodeSequence, gen_power_nodes

PAIRING_TOL = 1e-5


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    support: np.ndarray
    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        s = np.asarray(self.support, float).ravel()
        w = np.asarray(self.weights, complex).ravel()
        if s.size != w.size:
            raise ParameterError("support and weights differ in length")
        if s.size > 1 and np.any(np.diff(s) <= 0):
            raise ParameterError("support must be strictly increasing")
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    def total_variation(self):
        return float(np.sum(np.abs(self.weights)))

    def to_dict(self):
        return {"support": self.support.tolist(), "weights_re": self.weights.real.tolist(),
                "weights_im": self.weights.imag.tolist(), "label": self.label}

    @classmethod
    def from_dict(cls, d):
        w = np.asarray(d["weights_re"], float) + 1j * np.asarray(d["weights_im"], float)
        return cls(np.asarray(d["support"], float), w, d.get("label", ""))


def build_crystalline_measure(basis, x):
    """(nu, nu_hat) for the point x; x must not be one of the basis Lambda nodes."""
    grid = basis.model.op.grid
    if abs(x) > grid.half_width:
        raise RangeError(f"x={x} outside the grid")
    lam = np.asarray(basis.lambda_nodes, float)
    if lam.size and np.min(np.abs(lam - x)) <= 1e-12 * max(1.0, abs(x)):
        raise ConfigurationError(f"x={x} is a node of the basis; rebuild it with x removed")
    vals = basis._values(x)
    a_x = vals[:lam.size]
    b_x = vals[lam.size:]
    nu = DiscreteMeasure(basis.mu_nodes, b_x, f"nu_x (x={x:.17g})")
    sup = np.concatenate([lam, [x]])
    w = np.concatenate([-a_x, [1.0]])
    order = np.argsort(sup)
    nu_hat = DiscreteMeasure(sup[order], w[order], f"nu_hat_x (x={x:.17g})")
    return nu, nu_hat


def verify_pairing(nu, nu_hat, g):
    """(<nu, ghat>, <nu_hat, g>) = (sum nu(m) ghat(m), sum nu_hat(t) g(t))."""
    lhs = complex(np.sum(nu.weights * spectral.freq_eval(g, nu.support))) if nu.support.size else 0j
    rhs = (complex(np.sum(nu_hat.weights * spectral.point_eval(g, nu_hat.support)))
           if nu_hat.support.size else 0j)
    return lhs, rhs


def pairing_ok(lhs, rhs, tol=PAIRING_TOL):
    return abs(lhs - rhs) <= tol * (1 + abs(lhs))


def basis_without(lam, mu, params, grid, m, removed=()):
    """Interpolation basis for (Lambda minus ``removed``, M) on h_0..h_{m-1}."""
    pts = lam.points
    keep = np.ones(pts.size, bool)
    for v in removed:
        k = int(np.argmin(np.abs(pts - v)))
        if abs(pts[k] - v) > 1e-12 * max(1.0, abs(v)):
            raise ParameterError(f"{v} is not a node of Lambda")
        keep[k] = False
    lam_r = NodeSequence(pts[keep], lam.exponent, lam.truncation_radius)
    op = frames.build_sampling_operator(lam_r, mu, params, grid)
    model = frames.estimate_frame_bounds(op, m)
    return frames.build_interpolation_basis(model)


def default_setup(a=0.8, count=200, m=40, grid=None, removed=None):
    """Supercritical p = q = 2 generator pair with the innermost positive node removed."""
    grid = grid or spectral.Grid(12.0, 4096)
    lam = gen_power_nodes(2, a, count)
    mu = gen_power_nodes(2, a, count)
    if removed is None:
        removed = [float(lam.positive[0])]
    params = spectral.SpaceParams(0.5, 2, 2)
    return lam, mu, basis_without(lam, mu, params, grid, m, removed), list(removed)


def removal_span_dimensions(lam, mu, params, grid, m, candidates):
    """Rank of the nu weight vectors after removing 1, 2, ... of ``candidates``.

    With k nodes removed each removed node x gives one measure nu_x on M; the
    ranks of the k weight vectors are returned in order.
    """
    ranks = []
    for k in range(1, len(candidates) + 1):
        basis = basis_without(lam, mu, params, grid, m, candidates[:k])
        W = np.array([build_crystalline_measure(basis, x)[0].weights for x in candidates[:k]])
        ranks.append(int(np.linalg.matrix_rank(W / np.abs(W).max(), tol=1e-8)))
    return ranks


def counting_constant(lam, mu, T_values=None, W_values=None):
    """Smallest C >= 0 with #Lambda[-T,T] + #M[-W,W] >= 4WT - C log^2(4WT) on the sample."""
    T_values = np.linspace(1, 8, 15) if T_values is None else np.asarray(T_values, float)
    W_values = np.linspace(1, 8, 15) if W_values is None else np.asarray(W_values, float)
    worst = 0.0
    for T in T_values:
        nl = int(np.sum(np.abs(lam.points) <= T))
        for W in W_values:
            nm = int(np.sum(np.abs(mu.points) <= W))
            area = 4 * W * T
            need = (area - nl - nm) / math.log(area) ** 2
            worst = max(worst, need)
    return float(worst)
