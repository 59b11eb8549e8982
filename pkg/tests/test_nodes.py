import math

import numpy as np
import pytest

from fourier_pairs import nodes
from fourier_pairs.errors import (DomainError, InsufficientDataError, ParameterError,
                                  RangeError)
from fourier_pairs.nodes import NodeSequence, gen_power_nodes


def seq(pts, p=2.0):
    return NodeSequence(np.asarray(pts, float), p)


# --- generation ----------------------------------------------------------------

def test_gen_square_root_nodes():
    s = gen_power_nodes(2, 1, 3)
    r = [math.sqrt(k) for k in (1, 2, 3)]
    assert np.allclose(s.points, [-r[2], -r[1], -r[0], r[0], r[1], r[2]], rtol=0, atol=1e-15)


def test_gen_single_pair():
    s = gen_power_nodes(2, 0.9, 1)
    assert np.allclose(s.points, [-math.sqrt(0.9), math.sqrt(0.9)], atol=1e-15)


def test_gen_cubic_tail_gaps():
    s = gen_power_nodes(3, 1, 50)
    # independent oracle: closed-form nodes (3|j|/2)^{1/3} and their gaps
    lam = [(1.5 * j) ** (1 / 3) for j in range(1, 51)]
    gaps = [lam[j - 1] ** 2 * (lam[j] - lam[j - 1]) for j in range(30, 50)]
    assert all(0.45 <= g <= 0.55 for g in gaps)
    pos = s.positive
    assert np.allclose(pos, lam, rtol=1e-14)
    stat = pos[29:-1] ** 2 * np.diff(pos[29:])
    assert np.all((stat >= 0.45) & (stat <= 0.55))


@pytest.mark.parametrize("p,a", [(1.0, 1.0), (2.0, 0.0), (2.0, -1.0)])
def test_gen_rejects_bad_parameters(p, a):
    with pytest.raises(ParameterError):
        gen_power_nodes(p, a, 3)


def test_gen_symmetric_without_origin():
    s = gen_power_nodes(2.5, 0.7, 40)
    assert np.allclose(s.points, -s.points[::-1])
    assert 0.0 not in s.points


@pytest.mark.parametrize("p,a", [(2, 0.9), (3, 1.0), (1.5, 1.3)])
def test_gen_gap_statistic_converges(p, a):
    s = gen_power_nodes(p, a, 200)
    stat = nodes.gap_statistic(s)
    pos = stat[s.points[:-1] > 0]
    tail = pos[-len(pos) // 10:]
    assert a / 2 - 0.02 <= tail.min() and tail.max() <= a / 2 + 0.02


def test_node_sequence_rejects_unsorted():
    with pytest.raises(ParameterError):
        seq([0.0, 2.0, 1.0])
    with pytest.raises(ParameterError):
        seq([0.0, 1.0, 1.0])


# --- classification ------------------------------------------------------------

def test_classify_supercritical_example():
    s = gen_power_nodes(2, 0.9, 200)
    c = nodes.classify_pair(s, s)
    assert c.verdict == nodes.SUPERCRITICAL
    assert c.combined == pytest.approx(0.45, abs=0.005)
    assert c.combined < 0.5


def test_classify_subcritical_example():
    s = gen_power_nodes(2, 1.2, 200)
    c = nodes.classify_pair(s, s)
    assert c.verdict == nodes.SUBCRITICAL
    assert c.combined == pytest.approx(0.6, abs=0.005)
    assert c.combined > 0.5


def test_classify_dilation_t3():
    lam = gen_power_nodes(2, 0.9, 200)
    mu = gen_power_nodes(2, 0.9, 200)
    base = nodes.classify_pair(lam, mu)
    dil = nodes.classify_pair(lam.scaled(3.0), mu.scaled(1 / 3.0))
    assert dil.verdict == base.verdict
    assert abs(dil.combined - base.combined) <= 1e-10


def test_classify_critical_and_indeterminate():
    s = gen_power_nodes(2, 1.0, 200)
    assert nodes.classify_pair(s, s).verdict == nodes.CRITICAL
    # one side super, the other sub: the band decides neither way
    lo, hi = gen_power_nodes(2, 0.5, 200), gen_power_nodes(2, 1.6, 200)
    c = nodes.classify_pair(lo, hi)
    assert c.verdict in (nodes.SUPERCRITICAL, nodes.SUBCRITICAL, nodes.INDETERMINATE)
    assert c.verdict == nodes.SUPERCRITICAL  # sqrt(0.25 * 0.8) = 0.447


def test_classify_errors():
    s = gen_power_nodes(2, 0.9, 200)
    with pytest.raises(ParameterError):
        nodes.classify_pair(s, gen_power_nodes(3, 0.9, 200))
    short = gen_power_nodes(2, 0.9, 10)
    with pytest.raises(InsufficientDataError):
        nodes.classify_pair(short, short)


def test_classify_mixed_exponents():
    lam = gen_power_nodes(3, 0.8, 300)
    mu = gen_power_nodes(1.5, 0.8, 300)
    c = nodes.classify_pair(lam, mu)
    # a^{1/3} b^{2/3} with a = b = 0.4 gives 0.4
    assert c.combined == pytest.approx(0.4, abs=0.01)
    assert c.verdict == nodes.SUPERCRITICAL


# --- separation / density ------------------------------------------------------

def test_p_separated_power_nodes():
    s = gen_power_nodes(2, 1, 100)
    flag, c = nodes.is_p_separated(s)
    pts = [math.copysign(math.sqrt(abs(j)), j) for j in range(-100, 101) if j]
    brute = min((b - a) * (1 + min(abs(a), abs(b))) for a, b in zip(pts, pts[1:]))
    assert flag and c >= 0.4
    assert c == pytest.approx(brute, rel=1e-12)


def test_p_separated_trivial_cases():
    assert nodes.is_p_separated(seq([0, 1])) == (True, 1.0)
    flag, c = nodes.is_p_separated(seq([0, 1e-9, 1]))
    assert flag and c == pytest.approx(1e-9, rel=1e-6)
    with pytest.raises(InsufficientDataError):
        nodes.is_p_separated(seq([1.0]))


def test_l_dense_integers():
    ints = seq(np.arange(-10, 11))
    assert nodes.is_l_dense(ints, 1.0, (-9, 9))
    assert not nodes.is_l_dense(ints, 0.9, (-9, 9))


def test_l_dense_power_nodes():
    # 400 nodes reach only sqrt(360) = 18.97, so [20, 25] is not represented;
    # 700 nodes reach 25.1.
    with pytest.raises(RangeError):
        nodes.is_l_dense(gen_power_nodes(2, 0.9, 400), 0.05, (20, 25))
    s = gen_power_nodes(2, 0.9, 700)
    pts = s.points
    worst = max(b - a for a, b in zip(pts, pts[1:]) if b > 20 and a < 25)
    assert worst < 0.0225
    assert nodes.is_l_dense(s, 0.05, (20, 25))


def test_l_dense_window_out_of_range():
    with pytest.raises(RangeError):
        nodes.is_l_dense(seq(np.arange(-3, 4)), 1.0, (-5, 2))


# --- thinning ------------------------------------------------------------------

def test_thin_keeps_separated_input():
    s = gen_power_nodes(2, 1.0, 50)
    out = nodes.thin_to_separated(s, 0.05)
    assert np.array_equal(out.points, s.points)


def test_thin_power_nodes():
    s = gen_power_nodes(2, 0.8, 300)
    out = nodes.thin_to_separated(s, 0.05)
    assert set(out.points) <= set(s.points)
    assert nodes.is_p_separated(out)[0]
    assert nodes.classify_pair(out, out).combined <= 0.45


def test_thin_drops_near_duplicate():
    s = seq([-6.0, -5.0, 5.0, 5.0001, 6.0])
    out = nodes.thin_to_separated(s, 0.01)
    assert 5.0001 not in out.points
    assert 5.0 in out.points and 6.0 in out.points


def test_thin_rejects_nonpositive_delta():
    with pytest.raises(ParameterError):
        nodes.thin_to_separated(seq([1.0, 2.0]), 0.0)


# --- enlargement ---------------------------------------------------------------

def test_enlarge_empty_input():
    R = 6.0
    out = nodes.smooth_enlarge(NodeSequence(np.array([]), 2.0, R), 1.0)
    expect = [math.sqrt(k + 0.5) for k in range(int(R ** 2))]
    assert np.allclose(out.points, expect, rtol=1e-14)


def test_enlarge_density():
    # The input already has density 1/1.2 in u = t^2, so the target D must
    # exceed it; D = 0.9 gives a filled sequence of that density.
    half = gen_power_nodes(2, 1.2, 200)
    half = NodeSequence(half.positive, 2.0, half.truncation_radius)
    D = 0.9
    out = nodes.smooth_enlarge(half, D)
    R = out.truncation_radius
    r = np.linspace(R / 4, 3 * R / 4, 12)
    n = np.searchsorted(out.points, r, side="right")
    assert np.all(np.abs(n / r ** 2 - D) <= 0.05)
    assert np.all(nodes.counting_deviation(out, D, r) <= 2)


def test_enlarge_center_point_blocks_cell():
    D, p = 1.0, 2.0
    centre = math.sqrt(3.5)  # centre of cell k = 3
    out = nodes.smooth_enlarge(NodeSequence(np.array([centre]), p, 3.0), D)
    near = out.points[np.abs(out.points ** 2 - 3.5) < 0.5]
    assert near.size == 1 and near[0] == centre


def test_enlarge_rejects_nonpositive():
    with pytest.raises(DomainError):
        nodes.smooth_enlarge(seq([-1.0, 1.0]), 1.0)


def test_enlarged_added_mask():
    half = NodeSequence(gen_power_nodes(2, 1.2, 100).positive, 2.0)
    out = nodes.smooth_enlarge(half, 0.9)
    mask = nodes.enlarged_added_mask(half, out)
    assert mask.sum() == out.points.size - half.points.size


# --- uniform supercriticality --------------------------------------------------

def _uniform_oracle(pts):
    return max(max(abs(a), abs(b)) * (b - a) for a, b in zip(pts, pts[1:]))


def test_uniform_with_dense_core():
    # Prepending only +-0.1 leaves the gap 0.1 -> 0.894 with statistic 0.71;
    # a denser core {+-0.1, +-0.3, +-0.5, +-0.7} keeps every gap below 1/2.
    base = gen_power_nodes(2, 0.8, 100).points
    sparse = seq(np.sort(np.concatenate([base, [-0.1, 0.1]])))
    flag, sup = nodes.is_uniformly_supercritical(sparse, sparse)
    assert not flag and sup == pytest.approx(_uniform_oracle(sparse.points), rel=1e-14)
    core = [-0.7, -0.5, -0.3, -0.1, 0.1, 0.3, 0.5, 0.7]
    dense = seq(np.sort(np.concatenate([base, core])))
    flag, sup = nodes.is_uniformly_supercritical(dense, dense)
    assert flag and sup < 0.5
    assert sup == pytest.approx(_uniform_oracle(dense.points), rel=1e-14)


def test_uniform_subcritical():
    s = gen_power_nodes(2, 1.2, 100)
    flag, sup = nodes.is_uniformly_supercritical(s, s)
    assert not flag and sup >= 0.6


def test_uniform_two_points():
    s = seq([-1.0, 1.0])
    assert nodes.is_uniformly_supercritical(s, s) == (False, 2.0)


def test_uniform_requires_p2():
    s = gen_power_nodes(3, 0.8, 20)
    with pytest.raises(ParameterError):
        nodes.is_uniformly_supercritical(s, s)
