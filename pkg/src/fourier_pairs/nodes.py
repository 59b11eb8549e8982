"""Node sequences: generation, criticality classification and transforms.

Infinite node sequences are stored as finite truncations.  Asymptotic
quantities (limsup/liminf of the gap statistic |l|^{p-1} * gap) are replaced
by extreme values over the outer ``tail_fraction`` of the gaps on each side.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientDataError, ParameterError, RangeError

SUPERCRITICAL = "Supercritical"
SUBCRITICAL = "Subcritical"
CRITICAL = "Critical"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True, eq=False)
class NodeSequence:
    points: np.ndarray
    exponent: float = 2.0
    truncation_radius: float = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size > 1 and np.any(np.diff(pts) <= 0):
            raise ParameterError("node points must be strictly increasing")
        if not self.exponent > 1:
            raise ParameterError("exponent must exceed 1")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.truncation_radius is None:
            r = float(np.max(np.abs(pts))) if pts.size else 0.0
            object.__setattr__(self, "truncation_radius", r)

    def __len__(self):
        return self.points.size

    @property
    def positive(self):
        return self.points[self.points > 0]

    @property
    def negative(self):
        return self.points[self.points < 0]

    def scaled(self, t):
        pts = t * self.points
        if t < 0:
            pts = pts[::-1]
        return NodeSequence(pts, self.exponent, abs(t) * self.truncation_radius)

    def clipped(self, radius):
        return NodeSequence(self.points[np.abs(self.points) <= radius], self.exponent,
                            min(radius, self.truncation_radius))

    def with_points(self, pts):
        return NodeSequence(np.sort(np.asarray(pts, float)), self.exponent, self.truncation_radius)


def gen_power_nodes(p, a, count):
    """Nodes sign(j) (p a |j| / 2)^{1/p} for 1 <= |j| <= count (origin omitted)."""
    if not p > 1:
        raise ParameterError(f"p must exceed 1, got {p}")
    if not a > 0:
        raise ParameterError(f"a must be positive, got {a}")
    if count < 1:
        raise ParameterError("count must be >= 1")
    j = np.arange(1, int(count) + 1, dtype=float)
    pos = (p * a * j / 2.0) ** (1.0 / p)
    pts = np.concatenate([-pos[::-1], pos])
    return NodeSequence(pts, p, float(pos[-1]))


def gap_statistic(seq, exponent=None):
    """|l_j|^{p-1} (l_{j+1} - l_j) for every consecutive pair (left point l_j)."""
    p = seq.exponent if exponent is None else exponent
    pts = seq.points
    return np.abs(pts[:-1]) ** (p - 1) * np.diff(pts)


def _tail_stats(seq, tail_fraction):
    pts = seq.points
    stats = gap_statistic(seq)
    pos_idx = np.where(pts[:-1] > 0)[0]
    neg_idx = np.where(pts[1:] < 0)[0]
    if pos_idx.size < 19 or neg_idx.size < 19:
        raise InsufficientDataError("need at least 20 points on each side for tail statistics")
    picks = []
    for idx in (pos_idx, neg_idx[::-1]):
        k = max(2, int(np.ceil(tail_fraction * idx.size)))
        picks.append(idx[-k:])
    tail = stats[np.concatenate(picks)]
    return float(tail.max()), float(tail.min())


@dataclass(frozen=True)
class PairClassification:
    a_lambda: float
    a_mu: float
    verdict: str
    combined: float
    a_lambda_sup: float = 0.0
    a_lambda_inf: float = 0.0
    a_mu_sup: float = 0.0
    a_mu_inf: float = 0.0
    combined_sup: float = 0.0
    combined_inf: float = 0.0
    band: float = 0.02
    tail_fraction: float = 0.25
    note: str = field(default="tail statistics over a finite truncation")

    def to_dict(self):
        return dict(self.__dict__)


def classify_pair(lam, mu, tail_fraction=0.25, band=0.02):
    """Classify (Lambda, M) by the dilation-invariant a^{1/p} b^{1/q} against 1/2.

    The sup-based combined value decides supercriticality and the inf-based
    one subcriticality.  A pair whose tail values all sit within ``band`` of
    1/2 is Critical; anything else undecided is Indeterminate.
    """
    p, q = lam.exponent, mu.exponent
    if abs(1 / p + 1 / q - 1) > 1e-12:
        raise ParameterError(f"exponents must be conjugate (p={p}, q={q})")
    if not 0 < tail_fraction < 1:
        raise ParameterError("tail_fraction must lie in (0, 1)")
    ls, li = _tail_stats(lam, tail_fraction)
    ms, mi = _tail_stats(mu, tail_fraction)
    c_sup = ls ** (1 / p) * ms ** (1 / q)
    c_inf = li ** (1 / p) * mi ** (1 / q)
    if c_sup < 0.5 - band:
        verdict, al, am, comb = SUPERCRITICAL, ls, ms, c_sup
    elif c_inf > 0.5 + band:
        verdict, al, am, comb = SUBCRITICAL, li, mi, c_inf
    else:
        crit = abs(c_sup - 0.5) <= band and abs(c_inf - 0.5) <= band
        verdict = CRITICAL if crit else INDETERMINATE
        al, am, comb = ls, ms, c_sup
    return PairClassification(al, am, verdict, comb, ls, li, ms, mi, c_sup, c_inf,
                              band, tail_fraction)


def is_p_separated(seq, exponent=None):
    """(flag, c) with c = min gap * (1 + min(|l_j|, |l_{j+1}|))^{p-1}."""
    p = seq.exponent if exponent is None else exponent
    pts = seq.points
    if pts.size < 2:
        raise InsufficientDataError("need at least two points")
    m = np.minimum(np.abs(pts[:-1]), np.abs(pts[1:]))
    c = float(np.min(np.diff(pts) * (1 + m) ** (p - 1)))
    return c > 0, c


def is_l_dense(seq, l, window):
    """True iff every gap meeting ``window`` has length <= l."""
    lo, hi = float(window[0]), float(window[1])
    pts = seq.points
    if pts.size < 2 or lo < pts[0] or hi > pts[-1] or lo > hi:
        raise RangeError(f"window [{lo}, {hi}] outside the node range")
    left, right = pts[:-1], pts[1:]
    meet = (right > lo) & (left < hi)
    return bool(np.all((right - left)[meet] <= l))


def _thin_half(mags, p, delta):
    keep = []
    last = None
    for v in mags:
        if last is None or last ** (p - 1) * (v - last) >= delta:
            keep.append(v)
            last = v
    return np.array(keep)


def thin_to_separated(seq, delta):
    """Greedy selection: keep l_m iff l_n^{p-1}(l_m - l_n) >= delta, l_n last kept.

    Each half-line is scanned outward from the origin.
    """
    if not delta > 0:
        raise ParameterError("delta must be positive")
    p = seq.exponent
    pos = _thin_half(seq.positive, p, delta)
    neg = _thin_half(-seq.negative[::-1], p, delta)
    pts = np.concatenate([-neg[::-1], pos])
    return NodeSequence(pts, p, seq.truncation_radius)


def smooth_enlarge(seq_positive_half, D, radius=None):
    """Fill every empty cell of length 1/D in the variable u = t^p.

    Cells cover [0, radius^p); an empty cell k receives the point
    ((k + 1/2)/D)^{1/p}.  All input points are kept.
    """
    seq = seq_positive_half
    pts = seq.points
    if pts.size and pts[0] <= 0:
        raise DomainError("smooth_enlarge expects positive points")
    if not D > 0:
        raise ParameterError("density D must be positive")
    p = seq.exponent
    R = seq.truncation_radius if radius is None else radius
    u = pts ** p
    ncell = int(np.floor(D * R ** p + 1e-9))
    occupied = np.zeros(ncell, bool)
    cells = np.floor(u * D).astype(np.int64)
    occupied[cells[cells < ncell]] = True
    added_u = (np.where(~occupied)[0] + 0.5) / D
    out = np.sort(np.concatenate([pts, added_u ** (1.0 / p)]))
    return NodeSequence(out, p, R)


def enlarged_added_mask(original, enlarged):
    """Boolean mask over ``enlarged.points`` marking the points not in ``original``."""
    orig = original.points
    e = enlarged.points
    idx = np.searchsorted(orig, e)
    idx = np.clip(idx, 0, max(orig.size - 1, 0))
    if orig.size == 0:
        return np.ones(e.size, bool)
    near = np.minimum(np.abs(orig[idx] - e), np.abs(orig[np.maximum(idx - 1, 0)] - e))
    return near > 1e-12 * np.maximum(1.0, np.abs(e))


def counting_deviation(seq_positive, D, r_values):
    """|n(r) - D r^p| at the given radii, n counting positive points <= r."""
    p = seq_positive.exponent
    r = np.asarray(r_values, float)
    n = np.searchsorted(seq_positive.points, r, side="right")
    return np.abs(n - D * r ** p)


def is_uniformly_supercritical(lam, mu):
    """(flag, sup_stat) for the uniform condition with p = q = 2."""
    if lam.exponent != 2 or mu.exponent != 2:
        raise ParameterError("uniform supercriticality is defined for p = q = 2")
    best = 0.0
    for seq in (lam, mu):
        pts = seq.points
        if pts.size < 2:
            raise InsufficientDataError("need at least two points per sequence")
        m = np.maximum(np.abs(pts[:-1]), np.abs(pts[1:])) * np.diff(pts)
        best = max(best, float(m.max()))
    return best < 0.5, best
