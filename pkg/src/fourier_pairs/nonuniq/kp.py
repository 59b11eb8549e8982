"""Piecewise p-trigonometric indicator functions k with positive derivative jumps.

For 1 < p <= 2 the function is alpha sin(p t) - beta cos(p t) on [0, pi/2],
extended evenly about 0 and about pi/2.  For p > 2 write p = 2^n p' with
1 < p' <= 2 and compose with t -> 2^n t; the same formula then holds on
[0, pi/(2p)] with the same alpha and beta.

Derivative jumps (the masses) sit at the angles j pi / 2^{n+1}:
2 alpha p at even j, and 2^n * (-2 p' (alpha cos(p' pi/2) + beta sin(p' pi/2)))
at odd j.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConstructionError, ParameterError


def doubling_split(p):
    """(n, p') with p = 2^n p' and 1 < p' <= 2."""
    if not p > 1:
        raise ParameterError("p must exceed 1")
    n = 0
    pp = float(p)
    while pp > 2 + 1e-12:
        pp /= 2
        n += 1
    return n, pp


def genus_for(p):
    """Integer s with s < p <= s + 1."""
    return int(math.ceil(p - 1e-12)) - 1


@dataclass(frozen=True, eq=False)
class KpFunction:
    p: float
    alpha: float
    beta: float
    sigma: float
    s_param: float
    b: float
    n_doubling: int
    p_base: float
    jump_angles: np.ndarray
    masses: np.ndarray
    arc_coeffs: np.ndarray  # (a_j, b_j) on (theta_j, theta_{j+1})

    def __call__(self, theta):
        """k(theta) for any real theta (2 pi periodic)."""
        th = np.asarray(theta, float)
        phi = np.mod(th * 2 ** self.n_doubling + math.pi, 2 * math.pi) - math.pi
        phi = np.abs(phi)
        phi = np.where(phi > math.pi / 2, math.pi - phi, phi)
        pb = self.p_base
        return self.alpha * np.sin(pb * phi) - self.beta * np.cos(pb * phi)

    @property
    def densities(self):
        """Ray densities D_j = m_j / (2 pi p) (zeros per unit of r^p)."""
        return self.masses / (2 * math.pi * self.p)

    def derivative_jumps(self, h=1e-7):
        th = self.jump_angles
        # second-order one-sided differences
        right = (-3 * self(th) + 4 * self(th + h) - self(th + 2 * h)) / (2 * h)
        left = (3 * self(th) - 4 * self(th - h) + self(th - 2 * h)) / (2 * h)
        return right - left

    def lindelof_residual(self):
        return abs(np.sum(self.masses * np.exp(-1j * self.p * self.jump_angles)))

    def continuity_defect(self):
        """Largest mismatch between the arc formulas at the jump angles."""
        th = self.jump_angles
        p = self.p
        worst = 0.0
        for j in range(th.size):
            # arc j-1 ends at th[j], measured in its own unwrapped coordinate
            start = th[j - 1]
            end = th[j] if th[j] > start else th[j] + 2 * math.pi
            a0, b0 = self.arc_coeffs[j - 1]
            a, b = self.arc_coeffs[j]
            v0 = a0 * math.cos(p * end) + b0 * math.sin(p * end)
            v1 = a * math.cos(p * th[j]) + b * math.sin(p * th[j])
            worst = max(worst, abs(v1 - v0))
        return worst

    def bound_margin(self, n_angles=512):
        """min over [0, pi/2] of 2 pi (b^p/p) sin^p t - k(t) (positive = holds)."""
        return bound_margin(self, self.b, n_angles)

    def to_dict(self):
        return {"p": self.p, "alpha": self.alpha, "beta": self.beta, "sigma": self.sigma,
                "s": self.s_param, "b": self.b, "jump_angles": self.jump_angles.tolist(),
                "masses": self.masses.tolist(), "densities": self.densities.tolist(),
                "lindelof_residual": self.lindelof_residual() if _is_int(self.p) else None}


def _is_int(p):
    return abs(p - round(p)) < 1e-12


def bound_margin(kp, b, n_angles=512):
    th = np.linspace(0, math.pi / 2, n_angles)
    rhs = 2 * math.pi * b ** kp.p / kp.p * np.sin(th) ** kp.p
    return float(np.min(rhs - kp(th)))


def _kp_raw(p, alpha, beta):
    n, pb = doubling_split(p)
    if pb < 2 - 1e-12:
        limit = alpha * abs(1 / math.tan(math.pi * pb / 2))
        if not beta < limit:
            raise ParameterError(f"beta={beta:.6g} must be below alpha|cot(pi p'/2)|={limit:.6g}")
    count = 2 ** (n + 2)
    angles = np.arange(count) * math.pi / 2 ** (n + 1)
    angles = np.where(angles > math.pi + 1e-12, angles - 2 * math.pi, angles)
    order = np.argsort(angles)
    angles = angles[order]
    even_mass = 2 * alpha * p
    odd_mass = 2 ** n * (-2 * pb * (alpha * math.cos(pb * math.pi / 2)
                                    + beta * math.sin(pb * math.pi / 2)))
    idx = np.round(angles * 2 ** (n + 1) / math.pi).astype(int)
    masses = np.where(idx % 2 == 0, even_mass, odd_mass).astype(float)
    return n, pb, angles, masses


def threshold_b(p, sigma, s, n_angles=512, hi=1e3):
    """Smallest b (by bisection) for which k_p < 2 pi (b^p/p) sin^p on [0, pi/2].

    Here beta = 2 pi s b^{-q}/q follows b, alpha = 2 pi sigma / p.
    """
    q = p / (p - 1)
    alpha = 2 * math.pi * sigma / p

    def ok(b):
        beta = 2 * math.pi * s * b ** (-q) / q
        try:
            kp = _assemble(p, alpha, beta, sigma, s, b)
        except ParameterError:
            return False
        return bound_margin(kp, b, n_angles) > 0

    lo = 1e-3
    if not ok(hi):
        raise ParameterError("no admissible b found below the search limit")
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
        if hi / lo < 1 + 1e-12:
            break
    return hi


def _assemble(p, alpha, beta, sigma, s, b):
    n, pb, angles, masses = _kp_raw(p, alpha, beta)
    proto = KpFunction(p, alpha, beta, sigma, s, b, n, pb, angles, masses,
                       np.zeros((angles.size, 2)))
    coeffs = np.zeros((angles.size, 2))
    for j in range(angles.size):
        t0 = angles[j]
        t1 = angles[(j + 1) % angles.size]
        if t1 <= t0:
            t1 += 2 * math.pi
        ts = np.array([t0 + 0.3 * (t1 - t0), t0 + 0.7 * (t1 - t0)])
        M = np.column_stack([np.cos(p * ts), np.sin(p * ts)])
        coeffs[j] = np.linalg.solve(M, proto(ts))
    return KpFunction(p, alpha, beta, sigma, s, b, n, pb, angles, masses, coeffs)


def default_s(sigma, p):
    q = p / (p - 1)
    return 0.5 * (sigma ** q + 1)


def build_kp(p, sigma, b, s=None):
    """K_p function with alpha = 2 pi sigma / p and beta = 2 pi s b^{-q} / q."""
    if not 0 < sigma < 1:
        raise ParameterError("sigma must lie in (0, 1)")
    q = p / (p - 1)
    if s is None:
        s = default_s(sigma, p)
    if not sigma ** q < s < 1:
        raise ParameterError(f"s={s} must lie in (sigma^q, 1) = ({sigma ** q:.6g}, 1)")
    if not b > 0:
        raise ParameterError("b must be positive")
    alpha = 2 * math.pi * sigma / p
    beta = 2 * math.pi * s * b ** (-q) / q
    kp = _assemble(p, alpha, beta, sigma, s, b)
    _validate(kp)
    return kp


def build_kp_direct(p, alpha, beta):
    """K_p function from explicit alpha, beta (no density bookkeeping)."""
    if not (alpha > 0 and beta > 0):
        raise ParameterError("alpha and beta must be positive")
    kp = _assemble(p, alpha, beta, alpha * p / (2 * math.pi), float("nan"), float("nan"))
    _validate(kp)
    return kp


def _validate(kp):
    if np.any(kp.masses <= 0):
        raise ConstructionError("non-positive derivative jump")
    if kp.continuity_defect() > 1e-12 * max(1.0, kp.alpha, kp.beta):
        raise ConstructionError("arc formulas disagree at a jump angle")
    if _is_int(kp.p) and kp.lindelof_residual() > 1e-10 * max(1.0, kp.masses.max()):
        raise ConstructionError(f"Lindelof residual {kp.lindelof_residual():.3e} too large")
