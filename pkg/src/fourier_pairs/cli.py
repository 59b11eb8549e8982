"""Command-line front end.

Exit codes: 0 success, 2 precondition/configuration errors, 3 verification
failures, 64 usage errors.  Reports embed the command configuration and the
sha256 of every input file; --no-timestamp makes them byte-reproducible.
"""

import argparse
import datetime
import math
import os
import sys

import numpy as np

from . import __version__, crystal, frames, io, nodes, spectral, wirtinger
from . import nonuniq
from .errors import FourierPairsError, InputError

EXIT_OK, EXIT_VERIFY, EXIT_USAGE = 0, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _global_parent():
    gp = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    gp.add_argument("--grid-x", type=float, default=S, help="grid half-width X")
    gp.add_argument("--grid-n", type=int, default=S, help="grid size N (power of two)")
    gp.add_argument("--tol", type=float, default=S, help="verification tolerance")
    gp.add_argument("--seed", type=int, default=S, help="RNG seed for corpus jitter")
    gp.add_argument("--json-indent", type=int, default=S)
    gp.add_argument("--no-timestamp", action="store_true", default=S)
    return gp


GLOBAL_DEFAULTS = {"grid_x": 12.0, "grid_n": 4096, "tol": None, "seed": None,
                   "json_indent": 2, "no_timestamp": False}


def build_parser():
    gp = _global_parent()
    top = _Parser(prog="fourier-pairs", parents=[gp],
                  description="Fourier uniqueness / non-uniqueness pair toolkit")
    top.add_argument("--version", action="version", version=__version__)
    groups = top.add_subparsers(dest="group", parser_class=_Parser, required=True)

    def sub(group_parser, name, fn, help_text):
        sp = group_parser.add_parser(name, parents=[gp], help=help_text)
        sp.set_defaults(func=fn)
        return sp

    # nodes ---------------------------------------------------------------
    g = groups.add_parser("nodes", help="node generation and statistics").add_subparsers(
        dest="cmd", parser_class=_Parser, required=True)
    sp = sub(g, "gen", cmd_nodes_gen, "generate power-law nodes for Lambda and M")
    sp.add_argument("--p", type=float, required=True)
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--a-mu", type=float, default=None, help="generator constant for M")
    sp.add_argument("--count", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp = sub(g, "classify", cmd_nodes_classify, "classify a node pair")
    sp.add_argument("--nodes", required=True)
    sp.add_argument("--tail-fraction", type=float, default=0.25)
    sp.add_argument("--band", type=float, default=0.02)
    sp.add_argument("--report", required=True)
    sp = sub(g, "thin", cmd_nodes_thin, "greedy thinning to a separated subsequence")
    sp.add_argument("--nodes", required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--out", required=True)
    sp = sub(g, "enlarge", cmd_nodes_enlarge, "smooth enlargement to density D")
    sp.add_argument("--nodes", required=True)
    sp.add_argument("--D", type=float, required=True)
    sp.add_argument("--radius", type=float, default=None)
    sp.add_argument("--out", required=True)

    # verify --------------------------------------------------------------
    g = groups.add_parser("verify", help="inequality suites").add_subparsers(
        dest="cmd", parser_class=_Parser, required=True)
    sp = sub(g, "wirtinger", cmd_verify_wirtinger, "run the Wirtinger-type suite")
    sp.add_argument("--config", default=None, help="suite config JSON")
    sp.add_argument("--n-max", type=int, default=20, help="Hermite corpus degree")
    sp.add_argument("--report", required=True)

    # frame ---------------------------------------------------------------
    g = groups.add_parser("frame", help="sampling frames and interpolation").add_subparsers(
        dest="cmd", parser_class=_Parser, required=True)
    for name, fn, text in (("estimate", cmd_frame_estimate, "restricted frame bounds"),
                           ("basis", cmd_frame_basis, "interpolation basis dump"),
                           ("reconstruct", cmd_frame_reconstruct, "reconstruct Hermite functions"),
                           ("ds-demo", cmd_frame_ds_demo, "remove nodes and re-estimate A")):
        sp = sub(g, name, fn, text)
        sp.add_argument("--nodes", required=True)
        sp.add_argument("--m", type=int, default=40)
        sp.add_argument("--s", type=float, default=0.5)
        if name == "basis":
            sp.add_argument("--out-dir", required=True)
        else:
            sp.add_argument("--report", required=True)
        if name == "reconstruct":
            sp.add_argument("--hermite", type=int, nargs="+", default=[0, 1, 2])
        if name == "ds-demo":
            sp.add_argument("--remove", type=int, default=2, help="innermost nodes to delete")

    # nonuniq -------------------------------------------------------------
    g = groups.add_parser("nonuniq", help="non-uniqueness witnesses").add_subparsers(
        dest="cmd", parser_class=_Parser, required=True)
    sp = sub(g, "kp", cmd_nonuniq_kp, "build and check a K_p function")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--sigma", type=float, default=0.6)
    sp.add_argument("--s", type=float, default=None)
    sp.add_argument("--b-factor", type=float, default=1.25)
    sp.add_argument("--report", required=True)
    sp = sub(g, "product", cmd_nonuniq_product, "canonical product with evenly spread zeros")
    sp.add_argument("--sigma", type=float, default=0.6)
    sp.add_argument("--b-factor", type=float, default=1.25)
    sp.add_argument("--R", type=float, default=30.0)
    sp.add_argument("--eps", type=float, default=0.1)
    sp.add_argument("--stability", action="store_true", help="also compare R with 2R")
    sp.add_argument("--report", required=True)
    for name, fn, text in (("family", cmd_nonuniq_family, "cardinal families for a pair"),
                           ("solve", cmd_nonuniq_solve, "unit-target free interpolation"),
                           ("build", cmd_nonuniq_build, "full witness bundle")):
        sp = sub(g, name, fn, text)
        sp.add_argument("--nodes", required=True)
        sp.add_argument("--config", default=None, help="witness config JSON")
        if name == "build":
            sp.add_argument("--out-dir", required=True)
        else:
            sp.add_argument("--report", required=True)
        if name == "solve":
            sp.add_argument("--L", type=float, default=4.0)

    # crystal -------------------------------------------------------------
    g = groups.add_parser("crystal", help="crystalline measures").add_subparsers(
        dest="cmd", parser_class=_Parser, required=True)
    for name, fn, text in (("emit", cmd_crystal_emit, "write nu and nu_hat"),
                           ("verify", cmd_crystal_verify, "pairing test on Hermite functions")):
        sp = sub(g, name, fn, text)
        sp.add_argument("--nodes", required=True)
        sp.add_argument("--m", type=int, default=40)
        sp.add_argument("--x", type=float, default=None,
                        help="point (default: innermost positive Lambda node, removed)")
        if name == "emit":
            sp.add_argument("--out-dir", required=True)
        else:
            sp.add_argument("--n-max", type=int, default=20)
            sp.add_argument("--report", required=True)

    # gs ------------------------------------------------------------------
    g = groups.add_parser("gs", help="Gelfand-Shilov diagnostics").add_subparsers(
        dest="cmd", parser_class=_Parser, required=True)
    sp = sub(g, "diagnose", cmd_gs_diagnose, "weighted integrals of a grid function")
    sp.add_argument("--function", required=True, help="GridFunction CSV")
    sp.add_argument("--p", type=float, default=2.0)
    sp.add_argument("--c", type=float, nargs="+", default=[0.1, 0.5, 1.0])
    sp.add_argument("--report", required=True)
    return top


# --- helpers ---------------------------------------------------------------------

class Run:
    def __init__(self, args, argv):
        self.args = args
        self.argv = list(argv)
        self.opts = {k: getattr(args, k, v) for k, v in GLOBAL_DEFAULTS.items()}
        self.inputs = []

    @property
    def grid(self):
        return spectral.Grid(self.opts["grid_x"], self.opts["grid_n"])

    def read_nodes(self, path):
        self.inputs.append(path)
        lam, mu = io.read_nodes(path)
        return lam, mu

    def read_pair(self, path):
        lam, mu = self.read_nodes(path)
        if mu is None:
            raise InputError(f"{path} holds no mu nodes")
        return lam, mu

    def read_config(self, path):
        if not path:
            return {}
        self.inputs.append(path)
        return io.read_json(path)

    def config(self):
        d = {k: v for k, v in vars(self.args).items() if k not in ("func",)}
        d.update(self.opts)
        return d

    def envelope(self, result):
        env = {"command": " ".join(filter(None, [self.args.group, self.args.cmd])),
               "config": self.config(), "inputs": io.input_hashes(self.inputs),
               "version": __version__, "result": result}
        if not self.opts["no_timestamp"]:
            env["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
        return env

    def write_report(self, path, result):
        io.write_json(path, self.envelope(result), self.opts["json_indent"])


def _tol(run, default):
    return run.opts["tol"] if run.opts["tol"] is not None else default


# --- commands --------------------------------------------------------------------

def cmd_nodes_gen(run):
    a = run.args
    p = a.p
    q = p / (p - 1)
    lam = nodes.gen_power_nodes(p, a.a, a.count)
    mu = nodes.gen_power_nodes(q, a.a if a.a_mu is None else a.a_mu, a.count)
    io.write_nodes(a.out, lam, mu, run.opts["json_indent"])
    return EXIT_OK


def cmd_nodes_classify(run):
    a = run.args
    lam, mu = run.read_pair(a.nodes)
    cls = nodes.classify_pair(lam, mu, a.tail_fraction, a.band)
    res = cls.to_dict()
    res["uniform"] = None
    if lam.exponent == 2 and mu.exponent == 2:
        flag, stat = nodes.is_uniformly_supercritical(lam, mu)
        res["uniform"] = {"flag": flag, "sup_stat": stat}
    res["tolerance"] = a.band
    run.write_report(a.report, res)
    return EXIT_OK


def cmd_nodes_thin(run):
    a = run.args
    lam, mu = run.read_nodes(a.nodes)
    lt = nodes.thin_to_separated(lam, a.delta)
    mt = nodes.thin_to_separated(mu, a.delta) if mu is not None else None
    io.write_nodes(a.out, lt, mt, run.opts["json_indent"])
    return EXIT_OK


def _enlarge_both_halves(seq, D, radius):
    R = seq.truncation_radius if radius is None else radius
    halves = []
    for part in (seq.positive, -seq.negative[::-1]):
        part = part[part <= R]
        halves.append(nodes.smooth_enlarge(nodes.NodeSequence(part, seq.exponent, R), D, R).points)
    return nodes.NodeSequence(np.concatenate([-halves[1][::-1], halves[0]]), seq.exponent, R)


def cmd_nodes_enlarge(run):
    a = run.args
    lam, mu = run.read_nodes(a.nodes)
    le = _enlarge_both_halves(lam, a.D, a.radius)
    me = _enlarge_both_halves(mu, a.D, a.radius) if mu is not None else None
    io.write_nodes(a.out, le, me, run.opts["json_indent"])
    return EXIT_OK


def cmd_verify_wirtinger(run):
    a = run.args
    cfg_d = run.read_config(a.config)
    if run.opts["tol"] is not None:
        cfg_d["tolerance"] = run.opts["tol"]
    if run.opts["seed"] is not None:
        cfg_d["seed"] = run.opts["seed"]
    cfg = wirtinger.SuiteConfig.from_dict(cfg_d)
    corpus = spectral.hermite_basis(a.n_max, run.grid)
    reports = wirtinger.run_suite(corpus, cfg)
    total = wirtinger.total_violations(reports)
    run.write_report(a.report, {"suite_config": cfg.to_dict(), "corpus": f"hermite n<={a.n_max}",
                                "reports": wirtinger.suite_summary(reports),
                                "violations": total, "tolerance": cfg.tolerance})
    return EXIT_VERIFY if total else EXIT_OK


def _frame_model(run):
    a = run.args
    lam, mu = run.read_pair(a.nodes)
    params = spectral.SpaceParams(a.s, lam.exponent, mu.exponent)
    op = frames.build_sampling_operator(lam, mu, params, run.grid)
    return lam, mu, params, frames.estimate_frame_bounds(op, a.m)


def cmd_frame_estimate(run):
    lam, mu, params, model = _frame_model(run)
    res = model.to_dict()
    res["pencil_residual"] = model.pencil_residual()
    res["nodes_file"] = os.path.basename(run.args.nodes)
    res["tolerance"] = _tol(run, 1e-10)
    run.write_report(run.args.report, res)
    return EXIT_OK


def cmd_frame_basis(run):
    lam, mu, params, model = _frame_model(run)
    basis = frames.build_interpolation_basis(model)
    out = run.args.out_dir
    index = {"lambda": [], "mu": []}
    for side, fns in (("lambda", basis.a), ("mu", basis.b)):
        for k, (node, fn) in enumerate(sorted(fns.items())):
            name = f"{'a' if side == 'lambda' else 'b'}_{k:04d}.csv"
            io.write_grid_function(os.path.join(out, name), fn)
            index[side].append({"node": node, "file": name})
    index["frame"] = model.to_dict()
    index["norm_constant"] = basis.norm_constant
    index["bound_ok"] = basis.bound_ok()
    run.write_report(os.path.join(out, "index.json"), index)
    return EXIT_OK


def cmd_frame_reconstruct(run):
    lam, mu, params, model = _frame_model(run)
    basis = frames.build_interpolation_basis(model)
    H = spectral.hermite_basis(max(run.args.hermite), run.grid)
    tol = _tol(run, 1e-6)
    rows = []
    for n in run.args.hermite:
        sl, sm = frames.sample_function(basis, H[n])
        g = frames.reconstruct(basis, sl, sm)
        err = spectral.hspq_norm(g - H[n], params) / spectral.hspq_norm(H[n], params)
        rows.append({"n": n, "relative_error": err, "ok": err <= tol})
    bad = sum(not r["ok"] for r in rows)
    run.write_report(run.args.report, {"rows": rows, "tolerance": tol, "failures": bad})
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_frame_ds_demo(run):
    lam, mu, params, model = _frame_model(run)
    removed = [float(v) for v in frames.nearest_to_origin(model.op.lam, run.args.remove)]
    res = frames.duffin_schaeffer_demo(model, removed)
    res["removed_nodes"] = removed
    res["tolerance"] = _tol(run, 0.0)
    run.write_report(run.args.report, res)
    return EXIT_OK


def cmd_nonuniq_kp(run):
    a = run.args
    s = nonuniq.default_s(a.sigma, a.p) if a.s is None else a.s
    b0 = nonuniq.threshold_b(a.p, a.sigma, s)
    kp = nonuniq.build_kp(a.p, a.sigma, a.b_factor * b0, s)
    res = kp.to_dict()
    res.update({"b0": b0, "bound_margin": kp.bound_margin(),
                "continuity_defect": kp.continuity_defect(), "tolerance": 1e-10})
    run.write_report(a.report, res)
    return EXIT_OK


def cmd_nonuniq_product(run):
    a = run.args
    s = nonuniq.default_s(a.sigma, 2)
    kp = nonuniq.build_kp(2, a.sigma, a.b_factor * nonuniq.threshold_b(2, a.sigma, s), s)
    prod = nonuniq.build_levin_product(kp, nonuniq.ideal_zero_sets(kp, a.R), a.R)
    rep = nonuniq.verify_levin_bounds(prod, a.eps)
    res = {"product": prod.to_dict(), "bounds": rep}
    bad = rep["violations"] > 0 or rep["estimate_constant"] > 10
    if a.stability:
        st = nonuniq.truncation_stability(kp, nonuniq.ideal_zero_sets(kp, 2 * a.R), a.R)
        res["truncation_stability"] = {"value": st, "tolerance": 0.05}
        bad = bad or st > 0.05
    run.write_report(a.report, res)
    return EXIT_VERIFY if bad else EXIT_OK


def _witness_config(run):
    d = run.read_config(run.args.config)
    d.setdefault("grid_x", getattr(run.args, "grid_x", 12.0))
    d.setdefault("grid_n", getattr(run.args, "grid_n", 8192))
    if run.opts["tol"] is not None:
        d["witness_tol"] = run.opts["tol"]
    return nonuniq.WitnessConfig.from_dict(d)


def cmd_nonuniq_family(run):
    lam, mu = run.read_pair(run.args.nodes)
    st = nonuniq.prepare_pipeline(lam, mu, _witness_config(run))
    res = {"phi": st["phi"].to_dict(), "psi": st["psi"].to_dict(), "kp": st["kp"].to_dict(),
           "tolerance": 1e-8}
    run.write_report(run.args.report, res)
    bad = max(st["phi"].cardinal_error, st["psi"].cardinal_error) > 1e-8
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_nonuniq_solve(run):
    lam, mu = run.read_pair(run.args.nodes)
    st = nonuniq.prepare_pipeline(lam, mu, _witness_config(run))
    phi, psi = st["phi"], st["psi"]
    L = run.args.L
    solver = nonuniq.FreeInterpolationSolver(phi, psi, L)
    lstar = float(solver.lam[np.argmin(np.abs(solver.lam))])
    target = nonuniq.ResidualState({lstar: 1.0}, {}, phi.constants.a)
    f, hist = nonuniq.solve_free_interpolation(phi, psi, target, L, solver=solver)
    factor = nonuniq.contraction_factor(hist)
    res = {"L": L, "target_node": lstar, "history": hist, "contraction": factor,
           "operator_norm": solver.operator_norm(), "contraction_limit": 0.75,
           "analytic_contraction": 0.5, "tolerance": 0.75}
    run.write_report(run.args.report, res)
    return EXIT_VERIFY if factor > 0.75 else EXIT_OK


def cmd_nonuniq_build(run):
    lam, mu = run.read_pair(run.args.nodes)
    f, rep = nonuniq.construct_nonuniqueness_witness(lam, mu, _witness_config(run),
                                                     return_report=True)
    out = run.args.out_dir
    io.write_grid_function(os.path.join(out, "witness.csv"), f, "space")
    io.write_grid_function(os.path.join(out, "witness_hat.csv"), f, "freq")
    io.write_nodes(os.path.join(out, "nodes.json"), lam, mu, run.opts["json_indent"])
    res = rep.to_dict()
    res["tolerance"] = rep.config["witness_tol"]
    run.write_report(os.path.join(out, "report.json"), res)
    ok = rep.witness_ok and rep.contraction_max <= 0.75
    return EXIT_OK if ok else EXIT_VERIFY


def _crystal_basis(run):
    a = run.args
    lam, mu = run.read_pair(a.nodes)
    params = spectral.SpaceParams(0.5, lam.exponent, mu.exponent)
    x = float(lam.positive[0]) if a.x is None else a.x
    in_lam = np.any(np.abs(lam.points - x) <= 1e-12 * max(1.0, abs(x)))
    removed = [x] if in_lam else []
    basis = crystal.basis_without(lam, mu, params, run.grid, a.m, removed)
    return lam, mu, x, basis


def cmd_crystal_emit(run):
    lam, mu, x, basis = _crystal_basis(run)
    nu, nu_hat = crystal.build_crystalline_measure(basis, x)
    io.write_json(os.path.join(run.args.out_dir, "nu.json"), nu.to_dict(), run.opts["json_indent"])
    io.write_json(os.path.join(run.args.out_dir, "nu_hat.json"), nu_hat.to_dict(),
                  run.opts["json_indent"])
    return EXIT_OK


def cmd_crystal_verify(run):
    lam, mu, x, basis = _crystal_basis(run)
    nu, nu_hat = crystal.build_crystalline_measure(basis, x)
    tol = _tol(run, crystal.PAIRING_TOL)
    rows = []
    for n, g in enumerate(spectral.hermite_basis(run.args.n_max, run.grid)):
        lhs, rhs = crystal.verify_pairing(nu, nu_hat, g)
        rows.append({"n": n, "lhs": lhs, "rhs": rhs, "ok": crystal.pairing_ok(lhs, rhs, tol)})
    C = crystal.counting_constant(lam, mu)
    bad = sum(not r["ok"] for r in rows) + (nu.total_variation() < 1e-8) + (C > 50)
    run.write_report(run.args.report, {"x": x, "rows": rows, "tolerance": tol,
                                       "nu_total_variation": nu.total_variation(),
                                       "counting_constant": C, "counting_limit": 50,
                                       "failures": int(bad)})
    return EXIT_VERIFY if bad else EXIT_OK


def cmd_gs_diagnose(run):
    a = run.args
    run.inputs.append(a.function)
    f = io.read_grid_function(a.function)
    q = a.p / (a.p - 1)
    rows = []
    for c in a.c:
        sx, sf, ok = spectral.gelfand_shilov_converged(f, a.p, q, c)
        rows.append({"c": c, "space": sx if math.isfinite(sx) else None,
                     "freq": sf if math.isfinite(sf) else None, "finite": ok})
    run.write_report(a.report, {"rows": rows, "tolerance": 1e-6})
    return EXIT_OK


# --- entry points ----------------------------------------------------------------

def dispatch(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:   # --help / --version
        return int(exc.code or 0)
    run = Run(args, argv)
    try:
        return args.func(run)
    except FourierPairsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv=None):
    return dispatch(sys.argv[1:] if argv is None else argv)
