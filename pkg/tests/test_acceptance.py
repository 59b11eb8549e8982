"""End-to-end acceptance run: one PASS/FAIL line per criterion.

Each check runs at its stated tolerance and runtime budget.  Lines are
written straight to the terminal so they also appear in captured logs.
"""

import math
import time

import numpy as np
import pytest

from fourier_pairs import crystal, frames, nodes, spectral, wirtinger
from fourier_pairs.nonuniq import (build_kp, build_levin_product, construct_nonuniqueness_witness,
                                   ideal_zero_sets, threshold_b, truncation_stability,
                                   verify_levin_bounds, witness_residuals)
from fourier_pairs.nonuniq.kp import default_s
from fourier_pairs.spectral import Grid, GridFunction, SpaceParams

HALF = SpaceParams(0.5, 2, 2)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return emit


def test_criterion_1_spectral_core(report):
    t0 = time.perf_counter()
    grid = Grid(12.0, 4096)
    hs = spectral.hermite_basis(20, grid)
    on_xi = spectral.hermite_values(20, grid.xi)
    eig = max(math.sqrt(np.sum(np.abs(h.freq_values - (-1j) ** n * on_xi[n]) ** 2) * grid.dxi)
              for n, h in enumerate(hs))
    planch = max(spectral.plancherel_defect(h) for h in hs)
    rng = np.random.default_rng(0)
    v = (rng.standard_normal(grid.size) + 1j * rng.standard_normal(grid.size))
    v *= np.exp(-0.5 * grid.x ** 2)
    back = spectral.inverse_transform(GridFunction.from_space(grid, v))
    rt = np.linalg.norm(back - v) / np.linalg.norm(v)
    dt = time.perf_counter() - t0
    ok = eig <= 1e-8 and planch <= 1e-10 and rt <= 1e-12 and dt < 5
    report(1, ok, f"eigen {eig:.2e} plancherel {planch:.2e} round-trip {rt:.2e} time {dt:.2f}s")


def test_criterion_2_wirtinger_suite(report):
    t0 = time.perf_counter()
    grid = Grid(12.0, 4096)
    corpus = spectral.hermite_basis(20, grid)
    cfg = wirtinger.SuiteConfig()
    assert tuple(cfg.eps_values) == (0.1, 1.0, 10.0)
    reps = wirtinger.run_suite(corpus, cfg)
    viol = wirtinger.total_violations(reps)
    cases = {k: r.cases_run for k, r in reps.items()}
    damaged = wirtinger.total_violations(
        wirtinger.run_suite(corpus, wirtinger.SuiteConfig(constant_scale=0.1)))
    dt = time.perf_counter() - t0
    ok = viol == 0 and all(c > 0 for c in cases.values()) and damaged >= 1 and dt < 60
    report(2, ok, f"violations {viol} cases {cases} damaged-control violations {damaged} "
                  f"time {dt:.1f}s")


def test_criterion_3_pw_sharpness(report):
    rel_d, rel_t = wirtinger.pw_sharpness(Grid(12.0, 8192), 0.0, 1.0, 1e-6)
    ok = abs(rel_d) <= 1e-3
    report(3, ok, f"derivative-term slack {rel_d:.2e} total slack {rel_t:.2e}")


def test_criterion_4_frames(report):
    t0 = time.perf_counter()
    grid = Grid(12.0, 4096)
    sup = nodes.gen_power_nodes(2, 0.8, 400)
    model = frames.estimate_frame_bounds(frames.build_sampling_operator(sup, sup, HALF, grid), 40)
    sub = nodes.gen_power_nodes(2, 1.2, 400)
    trend = frames.frame_bound_trend(sub, sub, HALF, grid, [10, 20, 30, 40])
    A = [a for _, a in trend]
    ratios = [y / x for x, y in zip(A, A[1:])]
    dt = time.perf_counter() - t0
    ok = (model.A_est >= 1e-4 and model.condition <= 1e4
          and all(r <= 0.9 for r in ratios) and dt < 120)
    report(4, ok, f"A {model.A_est:.3e} B/A {model.condition:.3e} subcritical ratios "
                  f"{[round(r, 4) for r in ratios]} time {dt:.1f}s")


def test_criterion_5_interpolation(report):
    grid = Grid(12.0, 4096)
    lam = nodes.gen_power_nodes(2, 0.8, 400)
    model = frames.estimate_frame_bounds(frames.build_sampling_operator(lam, lam, HALF, grid), 40)
    basis = frames.build_interpolation_basis(model)
    hs = spectral.hermite_basis(39, grid)
    # oracle: weighted least squares on h_0..h_39 from directly evaluated samples
    ln, mn = basis.lambda_nodes, basis.mu_nodes
    w = np.sqrt(np.concatenate([1 + np.abs(ln), 1 + np.abs(mn)]))
    rows = np.array([np.concatenate([spectral.point_eval(h, ln), spectral.freq_eval(h, mn)])
                     for h in hs]).T
    errs, oracle_gap = [], []
    for n in range(3):
        sl, sm = frames.sample_function(basis, hs[n])
        rec = frames.reconstruct(basis, sl, sm)
        errs.append(math.sqrt(spectral.hspq_norm(rec - hs[n], HALF) / spectral.hspq_norm(hs[n], HALF)))
        c = frames.reconstruct_coefficients(basis, sl, sm)
        y = np.concatenate([list(sl.values()), list(sm.values())])
        ref = np.linalg.lstsq(rows / w[:, None], y / w, rcond=None)[0]
        oracle_gap.append(float(np.max(np.abs(c - ref))))
    slope = frames.norm_growth_slope(basis, 2.0, 8.0)
    bound = (HALF.s - 0.5) * HALF.p + 0.5 + 0.1
    ok = max(errs) <= 1e-6 and max(oracle_gap) <= 1e-6 and slope <= bound
    report(5, ok, f"relative errors {[f'{e:.1e}' for e in errs]} oracle gap "
                  f"{max(oracle_gap):.1e} slope {slope:.3f} <= {bound:.2f}")


def test_criterion_6_witness(report):
    t0 = time.perf_counter()
    s = nodes.gen_power_nodes(2, 1.2, 800)
    f, rep = construct_nonuniqueness_witness(s, s, return_report=True)
    rl, rm, nl, nm = witness_residuals(f, s, s)
    dt = time.perf_counter() - t0
    ok = (f.norm2() > 0 and rl <= 1e-6 and rm <= 1e-6 and nl > 0 and nm > 0
          and rep.gs_finite_c is not None and rep.gs_finite_c > 0
          and rep.contraction_max <= 0.75 and dt < 600)
    report(6, ok, f"lambda residual {rl:.1e} ({nl} nodes) mu residual {rm:.1e} ({nm} nodes) "
                  f"GS finite at c={rep.gs_finite_c} contraction {rep.contraction_max:.3f} "
                  f"(exact value 0.5) time {dt:.1f}s")


def test_criterion_7_levin_bounds(report):
    sigma, p = 0.6, 2
    sp = default_s(sigma, p)
    kp = build_kp(p, sigma, 1.25 * threshold_b(p, sigma, sp), sp)
    prod = build_levin_product(kp, ideal_zero_sets(kp, 30.0), 30.0)
    scan = verify_levin_bounds(prod, 0.1)
    stab = truncation_stability(kp, ideal_zero_sets(kp, 60.0), 30.0)
    ok = scan["violations"] == 0 and stab <= 0.05
    report(7, ok, f"violations {scan['violations']} truncation stability {stab:.2e}")


def test_criterion_8_crystalline(report):
    grid = Grid(12.0, 4096)
    lam, mu, basis, removed = crystal.default_setup()
    nu, nu_hat = crystal.build_crystalline_measure(basis, removed[0])
    worst = 0.0
    for g in spectral.hermite_basis(20, grid):
        lhs, rhs = crystal.verify_pairing(nu, nu_hat, g)
        worst = max(worst, abs(lhs - rhs) / (1 + abs(lhs)))
    C = crystal.counting_constant(lam, mu)
    ok = worst <= 1e-5 and nu.total_variation() >= 1e-8 and C <= 50
    report(8, ok, f"pairing defect {worst:.1e} |nu|_1 {nu.total_variation():.3e} C {C:.2f}")


def test_criterion_9_classification(report):
    verdict = {a: nodes.classify_pair(nodes.gen_power_nodes(2, a, 200),
                                      nodes.gen_power_nodes(2, a, 200)) for a in (1.0, 0.9, 1.1)}
    lam, mu = nodes.gen_power_nodes(2, 0.9, 200), nodes.gen_power_nodes(2, 0.9, 200)
    drift = max(abs(nodes.classify_pair(lam.scaled(t), mu.scaled(1 / t)).combined
                    - verdict[0.9].combined) for t in (0.25, 3.0, 17.0))
    ok = (verdict[1.0].verdict in (nodes.CRITICAL, nodes.INDETERMINATE)
          and verdict[0.9].verdict == nodes.SUPERCRITICAL
          and verdict[1.1].verdict == nodes.SUBCRITICAL and drift <= 1e-10)
    report(9, ok, f"a=1 {verdict[1.0].verdict} a=0.9 {verdict[0.9].verdict} "
                  f"a=1.1 {verdict[1.1].verdict} dilation drift {drift:.1e}")
