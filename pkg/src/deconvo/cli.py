"""Command-line workbench: gen, solve, certify, rip, sweep, selftest.

Exit codes: 0 success, 2 configuration errors, 3 non-converged solve in
strict mode.  All randomness flows from --seed; the DECONVO_OUT
environment variable overrides --out.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import bench, certify, geometry, model as model_mod, plots, solver
from .errors import DeconvoError, InvalidInputError


def _common_flags(p):
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", type=str, default=None,
                   help="output file or directory (DECONVO_OUT overrides)")
    p.add_argument("--quiet", action="store_true", help="suppress stdout report")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for sweep cells (default 1)")


def _dims_flags(p):
    p.add_argument("--L", type=int, default=512)
    p.add_argument("--K", type=int, default=16)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--b-type", dest="b_type", choices=model_mod.B_TYPES,
                   default="identity-columns")


def _resolve_out(args):
    return os.environ.get("DECONVO_OUT") or args.out


def _emit(args, doc):
    text = json.dumps(doc, indent=2, sort_keys=True, default=float)
    if not args.quiet:
        print(text)
    return text


def _build_instance(args, nu=1.0):
    m = model_mod.build_model(args.L, args.K, args.N, args.b_type,
                              bench.derive_seed(args.seed, 0))
    truth = model_mod.GroundTruth.random(args.K, args.N,
                                         bench.derive_seed(args.seed, 1), nu=nu)
    return m, truth


def cmd_gen(args):
    m = model_mod.build_model(args.L, args.K, args.N, args.b_type, args.seed)
    text = model_mod.model_to_json(m)
    out = _resolve_out(args)
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text)
        if not args.quiet:
            print(json.dumps({"written": out, "L": m.L, "K": m.K, "N": m.N,
                              "b_type": m.b_type, "seed": m.seed}, sort_keys=True))
    elif not args.quiet:
        print(text, end="")
    return 0


def cmd_solve(args):
    m, truth = _build_instance(args, nu=args.nu)
    X0 = truth.lifted()
    tau = args.tau * args.nu
    if args.noise == "none" or tau == 0.0:
        e = np.zeros(m.L, dtype=complex)
    else:
        e = bench.make_noise(m, X0, tau, args.noise, bench.derive_seed(args.seed, 2))
    y = model_mod.apply_A(m, X0) + e
    opts = solver.SolveOptions(
        max_iters=args.max_iters, tol_rel_change=args.tol_rel,
        tol_feasibility=args.tol_feas, step_scale=args.step_scale,
        seed=args.seed)
    rep = (solver.solve_noiseless(m, y, opts) if tau == 0.0
           else solver.solve_constrained(m, y, tau, opts))
    doc = rep.summary(with_matrix=args.emit_matrix)
    doc["relative_error"] = float(np.linalg.norm(rep.X_star - X0) / args.nu)
    doc["noise_mode"] = args.noise
    text = _emit(args, doc)
    out = _resolve_out(args)
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    if args.strict and not rep.converged:
        print("solve did not converge within max_iters", file=sys.stderr)
        return 3
    return 0


def cmd_certify(args):
    m, truth = _build_instance(args)
    report, _, exact = certify.certify_pipeline(
        m, truth, omega=args.omega, alpha_target=args.alpha_target,
        max_tries=args.max_tries, partition_seed=bench.derive_seed(args.seed, 3),
        P=args.P)
    text = _emit(args, report)
    out = _resolve_out(args)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "certify.json"), "w", encoding="ascii") as fh:
            fh.write(text + "\n")
        if not args.no_figures:
            plots.render_decay_figure(report["approximate"]["decay_trace"],
                                      os.path.join(out, "golfing_decay.png"))
    return 0


def cmd_rip(args):
    m, truth = _build_instance(args)
    ts = geometry.TangentSpace(truth.h0, truth.m0)
    doc = {
        "dims": {"L": m.L, "K": m.K, "N": m.N, "b_type": m.b_type},
        "delta_T": certify.rip_delta_on_T(m, ts),
        "delta_T_dense": certify.rip_delta_on_T_dense(m, ts),
    }
    if args.P is not None:
        part = certify.build_partition(m, args.P, args.alpha_target, args.max_tries,
                                       bench.derive_seed(args.seed, 3))
        doc["partition"] = part.summary()
        doc["delta_blocks"] = [certify.rip_delta_on_Tp(m, part, ts, p)
                               for p in range(part.P)]
    text = _emit(args, doc)
    out = _resolve_out(args)
    if out:
        with open(out, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    return 0


def cmd_sweep(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    config = bench.ExperimentConfig.from_dict(doc)
    if args.seed != 0:
        config.master_seed = args.seed
    out = _resolve_out(args) or config.out or "sweep_out"
    records = bench.sweep_tau(config, threads=max(1, args.threads))
    files = bench.emit_report(records, out)
    if not args.no_figures:
        files += plots.render_sweep_figures(records, out)
    summary = bench.summarize(records)
    summary["files"] = files
    _emit(args, summary)
    return 0


def cmd_selftest(args):
    from .selftest import run_selftest
    ok = run_selftest(quiet=args.quiet)
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="deconvo",
        description="blind deconvolution via lifted rank-1 nuclear-norm recovery")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate and serialize a measurement model")
    _common_flags(p); _dims_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve one synthetic instance")
    _common_flags(p); _dims_flags(p)
    p.add_argument("--tau", type=float, default=0.0,
                   help="noise level as a fraction of nu (default 0)")
    p.add_argument("--noise", choices=("none",) + bench.NOISE_MODES, default="random")
    p.add_argument("--nu", type=float, default=1.0)
    p.add_argument("--max-iters", type=int, default=100000)
    p.add_argument("--tol-rel", type=float, default=1e-7)
    p.add_argument("--tol-feas", type=float, default=None)
    p.add_argument("--step-scale", type=float, default=0.99)
    p.add_argument("--emit-matrix", action="store_true")
    p.add_argument("--strict", action="store_true",
                   help="exit 3 when the solve does not converge")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="build and verify a dual certificate")
    _common_flags(p); _dims_flags(p)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--alpha-target", type=float, default=0.5)
    p.add_argument("--max-tries", type=int, default=50)
    p.add_argument("--P", type=int, default=None, help="override choose_P")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("rip", help="tangent-space restricted isometry constants")
    _common_flags(p); _dims_flags(p)
    p.add_argument("--P", type=int, default=None,
                   help="also report per-block constants for a P-partition")
    p.add_argument("--alpha-target", type=float, default=0.5)
    p.add_argument("--max-tries", type=int, default=50)
    p.set_defaults(func=cmd_rip)

    p = sub.add_parser("sweep", help="noise-scaling sweep from a JSON config")
    _common_flags(p)
    p.add_argument("--config", type=str, required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("selftest", help="invariant suite on tiny dimensions")
    _common_flags(p)
    p.set_defaults(func=cmd_selftest)
    return parser


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except DeconvoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
