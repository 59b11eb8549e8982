import math

import numpy as np
import pytest
from scipy import integrate
from scipy.special import erf

from fourier_pairs import spectral, wirtinger
from fourier_pairs.errors import PreconditionError, RangeError
from fourier_pairs.nodes import NodeSequence
from fourier_pairs.spectral import Grid, GridFunction


def plateau(grid, a=0.0, b=1.0, margin=2.0, taper=0.3):
    x = grid.x
    return 0.5 * (erf((x - (a - margin)) / taper) - erf((x - (b + margin)) / taper))


def windowed(grid, fn):
    return GridFunction.from_space(grid, fn(grid.x) * plateau(grid))


def lattice(step, span):
    k = int(math.floor(span / step + 1e-9))
    return NodeSequence(np.arange(-k, k + 1) * step)


# --- stable Wirtinger bound ----------------------------------------------------

def test_pw_sine_extremal(grid):
    f = wirtinger.sine_arch(grid, 0.0, 1.0)
    lhs, _ = wirtinger.check_pw_stable(f, 0.0, 1.0, 0.5)
    A, B = wirtinger.pw_rhs_terms(f, 0.0, 1.0)
    assert lhs == pytest.approx(0.5, abs=1e-6)
    assert A == pytest.approx(0.5, abs=1e-6)   # (1/pi^2) * (pi^2 / 2)
    assert B <= 1e-20


def test_pw_constant(grid):
    f = windowed(grid, np.ones_like)
    lhs, rhs = wirtinger.check_pw_stable(f, 0.0, 1.0, 1.0)
    assert lhs == pytest.approx(1.0, abs=1e-6)
    assert rhs == pytest.approx(4.0, abs=1e-5)


def test_pw_linear(grid):
    f = windowed(grid, lambda x: x)
    lhs, rhs = wirtinger.check_pw_stable(f, 0.0, 1.0, 1.0)
    # oracle: adaptive quadrature of the closed forms
    i0 = integrate.quad(lambda x: x * x, 0, 1)[0]
    i1 = integrate.quad(lambda x: 1.0, 0, 1)[0]
    expect = 2 * i1 / math.pi ** 2 + 2 * (0 + 1)
    # trapezoid error of the grid quadrature is O(dx^2) ~ 1e-5
    assert lhs == pytest.approx(i0, rel=1e-4)
    assert rhs == pytest.approx(expect, rel=1e-4)
    assert expect == pytest.approx(2.2026, abs=1e-4)


def test_pw_interval_errors(gaussian):
    with pytest.raises(RangeError):
        wirtinger.check_pw_stable(gaussian, 1.0, 0.0, 1.0)
    with pytest.raises(RangeError):
        wirtinger.check_pw_stable(gaussian, -13.0, 0.0, 1.0)


def test_pw_sharpness_fine_grid():
    rel_derivative, rel_total = wirtinger.pw_sharpness(Grid(12.0, 8192), 0.0, 1.0, 1e-6)
    assert abs(rel_derivative) <= 1e-3
    assert 0 <= rel_total <= 1e-3


def test_pw_rhs_convex_in_eps(grid):
    for n, h in enumerate(spectral.hermite_basis(6, grid)):
        A, B = wirtinger.pw_rhs_terms(h, -0.7, 0.9)
        eps = np.geomspace(0.05, 20, 60)
        rhs = np.array([wirtinger.check_pw_stable(h, -0.7, 0.9, e)[1] for e in eps])
        assert np.allclose(rhs, (1 + eps) * A + (1 + 1 / eps) * B, rtol=1e-12)
        # convexity in eps, sampled on a uniform grid of eps values
        lin = np.linspace(0.05, 20, 60)
        r = (1 + lin) * A + (1 + 1 / lin) * B
        assert np.all(np.diff(r, 2) >= -1e-9)


def test_partial_cell_integral(grid):
    # endpoints between grid points: integral of the linear interpolant
    f = windowed(grid, lambda x: x)
    pf = wirtinger._Prepared(f)
    a, b = 0.0013, 0.7771
    assert pf.integral(0, a, b) == pytest.approx((b ** 3 - a ** 3) / 3, rel=1e-4)


# --- trace bounds ----------------------------------------------------------------

def test_trace_constant(grid):
    lhs, rhs = wirtinger.check_trace(windowed(grid, np.ones_like), 0.0, 1.0)
    assert lhs == pytest.approx(1.0, abs=1e-6)
    assert rhs == pytest.approx(2.0, abs=1e-5)


def test_trace_linear(grid):
    lhs, rhs = wirtinger.check_trace(windowed(grid, lambda x: 1 - x), 0.0, 1.0)
    i0 = integrate.quad(lambda x: (1 - x) ** 2, 0, 1)[0]
    assert lhs == pytest.approx(1.0, abs=1e-6)
    assert rhs == pytest.approx(2 * i0 + 2 / 3, rel=1e-4)
    assert rhs == pytest.approx(4 / 3, rel=1e-4)


def test_trace_zero(grid):
    assert wirtinger.check_trace(GridFunction.zero(grid), 0.0, 1.0) == (0.0, 0.0)


def test_trace_general_examples(grid):
    assert wirtinger.check_trace_general(GridFunction.zero(grid), lattice(1, 8), 1.0) == (0.0, 0.0)
    h0 = spectral.hermite_basis(0, grid)[0]
    gamma = NodeSequence(np.arange(-8.0, 9.0))
    lhs, rhs1 = wirtinger.check_trace_general(h0, gamma, 1.0, 1.0)
    # oracle: direct sum of the closed-form Gaussian samples
    direct = sum(math.sqrt(2) * math.exp(-2 * math.pi * k * k) for k in range(-8, 9))
    assert lhs == pytest.approx(direct, rel=1e-12)
    assert rhs1 / lhs >= 1.0
    _, rhs2 = wirtinger.check_trace_general(h0, gamma, 1.0, 2.0)
    assert rhs2 <= 2 * rhs1


def test_trace_general_separation_check(gaussian):
    with pytest.raises(PreconditionError):
        wirtinger.check_trace_general(gaussian, NodeSequence(np.array([0.0, 0.5, 2.0])), 1.0)


def test_trace_constant_table():
    assert wirtinger.trace_sum_constant(1) == pytest.approx(8 * math.pi ** 2 / 3)
    assert wirtinger.trace_sum_constant(2) == pytest.approx(16 * math.pi ** 2 / 3)
    assert wirtinger.density_constant(0.2) == pytest.approx(6 * 0.8)


# --- density form -------------------------------------------------------------------

def test_wirt2_part_i(grid):
    h0 = spectral.hermite_basis(0, grid)[0]
    lhs, rhs = wirtinger.check_wirt2(h0, lattice(0.2, 10), 2.0, 0.2, 1.0)
    assert lhs <= rhs
    assert lhs == pytest.approx(4.0, rel=1e-10)  # t^2 ||h_0||^2


def test_wirt2_part_ii(grid):
    t = 1.0
    ell = 1 / (2 * t)
    x = grid.x
    f = GridFunction.from_space(grid, np.sin(np.pi * x / ell) * np.exp(-np.pi * x ** 2 / 4))
    lhs, rhs = wirtinger.check_wirt2(f, lattice(ell, 11), t, 0.5, 1.0, vanishing=True)
    assert rhs - lhs >= 0


def test_wirt2_zero(grid):
    assert wirtinger.check_wirt2(GridFunction.zero(grid), lattice(0.2, 10), 2.0, 0.2) == (0.0, 0.0)


def test_wirt2_preconditions(grid, gaussian):
    with pytest.raises(PreconditionError):
        wirtinger.check_wirt2(gaussian, lattice(0.5, 10), 2.0, 0.2)
    with pytest.raises(PreconditionError):
        wirtinger.check_wirt2(gaussian, lattice(0.25, 11), 2.0, 0.5, vanishing=True)


# --- suite --------------------------------------------------------------------------

def test_suite_zero_corpus(grid):
    reports = wirtinger.run_suite([GridFunction.zero(grid)])
    for rep in reports.values():
        assert not rep.violations
        if rep.cases_run:
            assert rep.worst_slack == 0.0


def test_suite_empty_corpus():
    with pytest.raises(PreconditionError):
        wirtinger.run_suite([])


def test_suite_negative_control(grid):
    corpus = spectral.hermite_basis(3, grid)
    cfg = wirtinger.SuiteConfig(constant_scale=0.1)
    assert wirtinger.total_violations(wirtinger.run_suite(corpus, cfg)) > 0


def test_suite_config_round_trip():
    cfg = wirtinger.SuiteConfig(eps_values=(0.5,), seed=4)
    back = wirtinger.SuiteConfig.from_dict(cfg.to_dict())
    assert back == cfg
    assert back.intervals() == cfg.intervals()
    for a, b in cfg.intervals():
        assert -8 <= a < b <= 8 and 0.1 - 1e-12 <= b - a <= 4 + 1e-12


def test_report_violation_bookkeeping():
    rep = wirtinger.InequalityReport("x", tolerance=1e-9)
    rep.add("ok", 1.0, 2.0)
    rep.add("bad", 3.0, 2.0)
    assert rep.violations == [("bad", 3.0, 2.0)]
    assert rep.worst_slack == -1.0
    assert (not rep.violations) == (rep.worst_slack >= -rep.tolerance)
