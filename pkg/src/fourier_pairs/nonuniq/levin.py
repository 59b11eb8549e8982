"""Genus-s canonical products with zeros on finitely many rays.

The product over the listed zeros (|zeta| <= R) is completed by a continuous
tail: beyond the last listed zero on ray j the zeros are replaced by their
density D_j d(r^p), whose contribution is summed in closed form as a power
series.  For integer p the divergent r^{-p} terms of different rays cancel by
the balance sum_j m_j e^{-i p theta_j} = 0 and leave z^p sum_j D_j
e^{-i p theta_j} log R_j.  A residual harmonic polynomial of degree <= p is
then removed by least squares against k(theta) r^p.

All evaluation happens in log space: log S(z) is returned as a complex
number whose real part is log|S(z)|.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import KSmoothnessError, ParameterError, RangeError, TruncationError
from .kp import genus_for

EVAL_FRACTION = 0.8       # evaluation disk |z| <= EVAL_FRACTION * R
_CHUNK_PTS = 2048
_CHUNK_ZEROS = 1024


def _angle_dist(a, b):
    return np.abs(np.angle(np.exp(1j * (np.asarray(a) - np.asarray(b)))))


@dataclass(frozen=True, eq=False)
class LevinProduct:
    kp: object
    zeros: np.ndarray            # complex, grouped by ray
    ray_of_zero: np.ndarray      # index into ray_angles
    ray_angles: np.ndarray
    ray_densities: np.ndarray
    tail_radii: np.ndarray       # start of the continuous tail per ray (inf: no tail)
    genus: int
    truncation_radius: float
    correction: np.ndarray       # c_n, n = 0..floor(p); log S includes -sum c_n z^n
    disk_d: float
    fit_residual: float
    with_tail: bool = True

    @property
    def p(self):
        return self.kp.p

    @property
    def eval_radius(self):
        return EVAL_FRACTION * self.truncation_radius

    # -- evaluation -------------------------------------------------------
    def _factor_sum(self, z, exclude=None):
        """sum over zeros of log E_s(z/zeta); ``exclude`` marks self pairs."""
        s = self.genus
        out = np.zeros(z.shape, complex)
        zs = self.zeros
        for j0 in range(0, zs.size, _CHUNK_ZEROS):
            zc = zs[j0:j0 + _CHUNK_ZEROS]
            w = z[:, None] / zc[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                lg = np.log1p(-w)
            poly = np.zeros_like(w)
            pw = np.ones_like(w)
            for k in range(1, s + 1):
                pw = pw * w
                poly += pw / k
            term = lg + poly
            if exclude is not None:
                own = exclude[:, None] == np.arange(j0, j0 + zc.size)[None, :]
                term = np.where(own, sum(1.0 / k for k in range(1, s + 1)), term)
            out += term.sum(axis=1)
        return out

    def _tail(self, z):
        p = self.p
        s = self.genus
        out = np.zeros(z.shape, complex)
        if not self.with_tail:
            return out
        integer_p = abs(p - round(p)) < 1e-12
        for th, D, Rj in zip(self.ray_angles, self.ray_densities, self.tail_radii):
            if not np.isfinite(Rj):
                continue
            rot = np.exp(-1j * th)
            w = z * rot / Rj
            wmax = float(np.max(np.abs(w))) if w.size else 0.0
            if wmax >= 0.95:
                raise RangeError("evaluation point too close to the tail radius")
            nmax = s + 2 if wmax == 0 else int(math.ceil(math.log(1e-18) / math.log(wmax))) + s + 2
            nmax = min(max(nmax, s + 2), 5000)
            pw = w ** (s + 1)
            for n in range(s + 1, nmax + 1):
                if not (integer_p and n == round(p)):
                    out -= p * D * Rj ** p * pw / (n * (n - p))
                pw = pw * w
            if integer_p:
                out += z ** round(p) * rot ** round(p) * D * math.log(Rj)
        return out

    def _poly(self, z):
        out = np.zeros(z.shape, complex)
        for n, c in enumerate(self.correction):
            if n:
                out += c * z ** n
        return out

    def log_eval(self, z, check_range=True):
        """Complex log S(z) (real part log|S|; -inf at zeros)."""
        z = np.asarray(z, complex)
        shape = z.shape
        zf = z.ravel()
        if check_range and zf.size and np.max(np.abs(zf)) > self.eval_radius * (1 + 1e-12):
            raise RangeError(f"|z| exceeds the evaluation radius {self.eval_radius:.4g}")
        out = np.empty(zf.shape, complex)
        for i0 in range(0, zf.size, _CHUNK_PTS):
            zc = zf[i0:i0 + _CHUNK_PTS]
            out[i0:i0 + _CHUNK_PTS] = self._factor_sum(zc) + self._tail(zc) - self._poly(zc)
        return out.reshape(shape)

    def __call__(self, z):
        return np.exp(self.log_eval(z))

    def log_derivative_at_zeros(self, index):
        """Complex log S'(zeta_i) for the zeros with the given indices."""
        idx = np.atleast_1d(np.asarray(index, int))
        zt = self.zeros[idx]
        out = np.empty(idx.size, complex)
        for i0 in range(0, idx.size, _CHUNK_PTS):
            sl = slice(i0, i0 + _CHUNK_PTS)
            z = zt[sl]
            # S(z) = (1 - z/zeta) * rest  =>  S'(zeta) = -rest(zeta) / zeta
            out[sl] = (self._factor_sum(z, exclude=idx[sl]) + self._tail(z) - self._poly(z)
                       + np.log(-1.0 / z))
        return out

    def real_zero_indices(self):
        return np.where(np.abs(self.zeros.imag) <= 1e-12 * np.maximum(1, np.abs(self.zeros)))[0]

    def exclusion_radius(self, zeta):
        return self.disk_d * (1 + np.abs(zeta)) ** (1 - self.p)

    def outside_disks(self, z):
        """Mask of points outside every exclusion disk."""
        z = np.asarray(z, complex).ravel()
        ok = np.ones(z.size, bool)
        rad = self.exclusion_radius(self.zeros)
        for j0 in range(0, self.zeros.size, _CHUNK_ZEROS):
            zc = self.zeros[j0:j0 + _CHUNK_ZEROS]
            dist = np.abs(z[:, None] - zc[None, :])
            ok &= np.all(dist >= rad[j0:j0 + _CHUNK_ZEROS][None, :], axis=1)
        return ok

    def scaled_distance(self, z):
        """dist(z, Z) * (1 + |z|)^{p-1}."""
        z = np.asarray(z, complex).ravel()
        best = np.full(z.size, np.inf)
        for j0 in range(0, self.zeros.size, _CHUNK_ZEROS):
            zc = self.zeros[j0:j0 + _CHUNK_ZEROS]
            best = np.minimum(best, np.abs(z[:, None] - zc[None, :]).min(axis=1))
        return best * (1 + np.abs(z)) ** (self.p - 1)

    def to_dict(self):
        return {"p": self.p, "genus": self.genus, "truncation_radius": self.truncation_radius,
                "zero_count": int(self.zeros.size),
                "ray_angles": self.ray_angles.tolist(),
                "ray_densities": self.ray_densities.tolist(),
                "tail_radii": [float(r) for r in self.tail_radii],
                "correction_re": self.correction.real.tolist(),
                "correction_im": self.correction.imag.tolist(),
                "disk_d": self.disk_d, "fit_residual": self.fit_residual,
                "kp": self.kp.to_dict()}


def ideal_ray_moduli(D, p, R):
    """Moduli ((k + 1/2)/D)^{1/p} below R: the evenly spread zero set of density D."""
    k = np.arange(int(np.floor(D * R ** p + 0.5)) + 1)
    r = ((k + 0.5) / D) ** (1.0 / p)
    return r[r <= R]


def ideal_zero_sets(kp, R):
    """Per-ray moduli for every jump angle of kp, using D_j = m_j/(2 pi p)."""
    return {float(th): ideal_ray_moduli(D, kp.p, R)
            for th, D in zip(kp.jump_angles, kp.densities)}


def _as_moduli(v):
    pts = np.asarray(getattr(v, "points", v), float)
    if pts.size and pts.min() <= 0:
        raise ParameterError("ray zero sets are given by positive moduli")
    return np.sort(pts)


def max_counting_deviation(moduli, D, p):
    """sup_r |n(r) - D r^p| over both one-sided limits at each modulus."""
    if moduli.size == 0:
        return 0.0
    i = np.arange(moduli.size)
    u = D * moduli ** p
    return float(max(np.max(np.abs(i + 1 - u)), np.max(np.abs(i - u))))


def _separation(zeros, p):
    if zeros.size < 2:
        return 1.0
    best = np.inf
    for j0 in range(0, zeros.size, _CHUNK_ZEROS):
        zc = zeros[j0:j0 + _CHUNK_ZEROS]
        d = np.abs(zc[:, None] - zeros[None, :])
        scale = (1 + np.minimum(np.abs(zc)[:, None], np.abs(zeros)[None, :])) ** (p - 1)
        d = d * scale
        d[d == 0] = np.inf
        best = min(best, float(d.min()))
    return best


def build_levin_product(kp, zero_sets, R, strict=True, fit_correction=True,
                        deviation_bound=2.0):
    """Product with the given per-ray zeros (moduli <= R) and its completion.

    zero_sets maps ray angle -> positive moduli (array or NodeSequence).  In
    strict mode every jump angle of kp needs a ray whose counting function
    tracks D_j r^p within ``deviation_bound``.  Non-strict mode builds the
    bare finite product (no tail, no correction).
    """
    if not R > 0:
        raise ParameterError("R must be positive")
    p = kp.p
    items = sorted(((float(th), _as_moduli(v)) for th, v in dict(zero_sets).items()),
                   key=lambda t: t[0])
    angles = np.array([t[0] for t in items])
    dens = np.zeros(angles.size)
    if strict:
        for th, D in zip(kp.jump_angles, kp.densities):
            j = np.where(_angle_dist(angles, th) < 1e-9)[0]
            if j.size != 1:
                raise KSmoothnessError(f"no zero set on the ray at angle {th:.6g}")
            dens[j[0]] = D
        if angles.size != kp.jump_angles.size:
            raise KSmoothnessError("zero sets on rays without a derivative jump")
    zeros, ray_of, tails = [], [], []
    for j, (th, mod) in enumerate(items):
        mod = mod[mod <= R]
        if strict:
            dev = max_counting_deviation(mod, dens[j], p)
            if dev > deviation_bound:
                raise KSmoothnessError(
                    f"ray {th:.6g}: counting deviation {dev:.3g} exceeds {deviation_bound}")
            tails.append((mod.size / dens[j]) ** (1.0 / p) if mod.size else np.inf)
        else:
            tails.append(np.inf)
        zeros.append(mod * np.exp(1j * th))
        ray_of.append(np.full(mod.size, j))
    zeros = np.concatenate(zeros) if zeros else np.zeros(0, complex)
    ray_of = np.concatenate(ray_of) if ray_of else np.zeros(0, int)
    # snap rays at 0 and pi to the real axis exactly
    real_ray = np.abs(np.sin(angles[ray_of])) < 1e-12 if zeros.size else np.zeros(0, bool)
    zeros[real_ray] = zeros[real_ray].real
    sep = _separation(zeros, p)
    if not sep > 0:
        raise KSmoothnessError("zeros are not simple")
    prod = LevinProduct(kp, zeros, ray_of, angles, dens, np.array(tails, float),
                        genus_for(p), float(R), np.zeros(int(math.floor(p + 1e-12)) + 1, complex),
                        0.25 * sep, 0.0, with_tail=strict)
    if strict and fit_correction:
        prod = _fit_correction(prod)
    return prod


def _fit_correction(prod):
    kp, R, p = prod.kp, prod.truncation_radius, prod.p
    rs = np.linspace(0.2, 0.75, 12) * R
    th = np.linspace(0, 2 * np.pi, 97, endpoint=False)
    far = np.min(_angle_dist(th[:, None], prod.ray_angles[None, :]), axis=1) > np.pi / 12
    th = th[far]
    Z = (rs[:, None] * np.exp(1j * th[None, :])).ravel()
    g = prod.log_eval(Z, check_range=False).real - kp(np.angle(Z)) * np.abs(Z) ** p
    deg = prod.correction.size - 1
    cols = [np.ones(Z.size)]
    for n in range(1, deg + 1):
        zn = Z ** n
        cols += [zn.real, -zn.imag]
    A = np.column_stack(cols)
    c, *_ = np.linalg.lstsq(A, g, rcond=None)
    resid = g - A @ c
    rms = float(np.sqrt(np.mean(resid ** 2)))
    if not np.isfinite(rms) or rms > 2 * math.log(2 + R):
        raise TruncationError(f"correction fit residual {rms:.3g} too large; increase R")
    corr = np.zeros(deg + 1, complex)
    for n in range(1, deg + 1):
        corr[n] = c[2 * n - 1] + 1j * c[2 * n]
    return LevinProduct(prod.kp, prod.zeros, prod.ray_of_zero, prod.ray_angles,
                        prod.ray_densities, prod.tail_radii, prod.genus, R, corr,
                        prod.disk_d, rms, prod.with_tail)


def polar_sample(radius, n_r=60, n_theta=256, r_min=1.0):
    r = np.linspace(r_min, radius, n_r)
    th = np.linspace(-np.pi, np.pi, n_theta, endpoint=False) + np.pi / n_theta
    return (r[:, None] * np.exp(1j * th[None, :])).ravel()


def verify_levin_bounds(prod, eps, fit_fraction=0.5, n_r=60, n_theta=256, tol=1e-9):
    """Scan the growth bounds outside the exclusion disks.

    Constants are fitted on |z| <= fit_fraction * eval_radius and checked on
    the rest of the evaluation disk, so a violation means growth that no
    r-independent constant absorbs at this truncation.
    """
    if not eps > 0:
        raise ParameterError("eps must be positive")
    p, kp = prod.p, prod.kp
    rmax = prod.eval_radius
    r_fit = fit_fraction * rmax
    Z = polar_sample(rmax, n_r, n_theta)
    Z = Z[prod.outside_disks(Z)]
    r = np.abs(Z)
    K = kp(np.angle(Z)) * r ** p
    logS = prod.log_eval(Z).real
    inner = r <= r_fit
    upper = logS - (K + eps * r ** p)
    lower = logS - (K - eps * r ** p)
    logC_up = float(upper[inner].max())
    logc_low = float(lower[inner].min())
    viol_I = int(np.sum(upper[~inner] > logC_up + tol))
    viol_II = int(np.sum(lower[~inner] < logc_low - tol))

    idx = np.where(np.abs(prod.zeros) <= rmax)[0]
    zr = np.abs(prod.zeros[idx])
    kz = kp(prod.ray_angles[prod.ray_of_zero[idx]])
    dS = prod.log_derivative_at_zeros(idx).real
    third = dS - (kz - 2 * eps) * zr ** p
    zin = zr <= r_fit
    logc_der = float(third[zin].min()) if zin.any() else float(third.min())
    viol_III = int(np.sum(third[~zin] < logc_der - tol))

    dist = prod.scaled_distance(Z)
    denom = np.log(2 + r) + np.log(1 + 1 / dist)
    C_fit = float(np.max(np.abs(logS - K) / denom))

    return {
        "eps": eps, "fit_radius": r_fit, "eval_radius": rmax, "samples": int(Z.size),
        "zeros_checked": int(idx.size),
        "log_C_upper": logC_up, "log_c_lower": logc_low, "log_c_derivative": logc_der,
        "violations_I": viol_I, "violations_II": viol_II, "violations_III": viol_III,
        "violations": viol_I + viol_II + viol_III,
        "estimate_constant": C_fit,
        "indicator": indicator_profile(prod),
        "tolerance": tol,
    }


def indicator_profile(prod, n_r=24):
    """max over the outer half of the disk of log|S(r e^{it})| / r^p, per ray."""
    p = prod.p
    rmax = prod.eval_radius
    out = []
    for th in prod.ray_angles:
        # probe slightly off the ray to stay away from its zeros
        r = np.linspace(0.5 * rmax, rmax, n_r)
        z = r * np.exp(1j * (th + 0.5 * np.pi / 180))
        ok = prod.outside_disks(z)
        if not ok.any():
            continue
        v = prod.log_eval(z[ok]).real / r[ok] ** p
        out.append({"angle": float(th), "estimate": float(v.max()),
                    "k": float(prod.kp(th))})
    return out


def truncation_stability(kp, zero_sets, R, n_r=40, n_theta=180):
    """max |log|S_R| - log|S_2R|| on the evaluation disk of the R build.

    ``zero_sets`` must reach 2R on every ray.
    """
    small = build_levin_product(kp, zero_sets, R)
    big = build_levin_product(kp, zero_sets, 2 * R)
    Z = polar_sample(small.eval_radius, n_r, n_theta, r_min=0.0)
    Z = Z[small.outside_disks(Z) & big.outside_disks(Z)]
    diff = np.abs(small.log_eval(Z).real - big.log_eval(Z).real)
    return float(diff.max())

