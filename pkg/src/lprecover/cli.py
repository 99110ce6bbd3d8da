"""Command-line interface: ``lprecover <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 numeric or validation failure,
3 I/O error. Data goes to stdout or to files under ``--out-dir``;
diagnostics go to stderr.
"""
import argparse
import json
import os
import sys
import time
from dataclasses import fields
from types import SimpleNamespace

import numpy as np

from . import experiments as ex
from .certify import certify_recovery, constant_c1, constant_c2, check_condition_P
from .decode import SolveOptions, decode_irls, decode_lp, decode_lp_eps
from .ensembles import (gen_gaussian, gen_mixed_signal, gen_powerlaw_signal, gen_sparse_signal,
                        gen_uniform_sphere, read_lprm, read_matrix_csv, write_lprm,
                        write_matrix_csv)
from .errors import LpRecoverError
from .pconvex import d1_gap_check, lq_empirical
from .rip import rip_delta_exact, rip_delta_mc, rip_profile

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def parse_list(cast=float):
    """Parse ``a,b,c`` lists whose items may be ``start:step:stop`` ranges (inclusive)."""

    def parse(text):
        out = []
        for item in text.split(","):
            item = item.strip()
            if not item:
                continue
            if ":" in item:
                parts = item.split(":")
                if len(parts) != 3:
                    raise argparse.ArgumentTypeError(f"range must be start:step:stop, got {item!r}")
                start, step, stop = (float(v) for v in parts)
                if step <= 0 or stop < start:
                    raise argparse.ArgumentTypeError(f"empty or invalid range {item!r}")
                out.extend(cast(v) for v in ex._grid(start, step, stop))
            else:
                out.append(cast(float(item)) if cast is int else cast(item))
        if not out:
            raise argparse.ArgumentTypeError("empty list")
        return out

    return parse


def _seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {v}")
    return v


def _out_path(args, name):
    """Resolve ``name`` under ``--out-dir``; refuse paths that escape it."""
    root = os.path.abspath(args.out_dir)
    path = os.path.abspath(os.path.join(root, name))
    if os.path.commonpath([root, path]) != root:
        raise ValueError(f"output path {name!r} escapes the output directory {root}")
    os.makedirs(os.path.dirname(path), exist_ok=True)
    return path


def _load_matrix(path):
    if path.endswith(".csv"):
        return read_matrix_csv(path)
    return read_lprm(path)


def _load_vector(path):
    return np.loadtxt(path, delimiter=",", ndmin=1).ravel()


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _add_common(p, seed=True):
    if seed:
        p.add_argument("--seed", type=_seed, default=0, help="uint64 seed")
    p.add_argument("--out-dir", default=".", help="directory for all written files")


def _add_solver(p):
    d = SolveOptions()
    g = p.add_argument_group("solver options")
    g.add_argument("--p", type=float, default=d.p, help="quasinorm exponent in (0, 1]")
    g.add_argument("--eps0", type=float, default=None, help="initial smoothing (default max|y0|)")
    g.add_argument("--eps-decay", type=float, default=d.eps_decay, help="smoothing decay factor per stage")
    g.add_argument("--eps-min", type=float, default=d.eps_min, help="smallest smoothing level")
    g.add_argument("--max-outer", type=int, default=d.max_outer, help="maximum continuation stages")
    g.add_argument("--max-inner", type=int, default=d.max_inner, help="maximum gradient steps per stage")
    g.add_argument("--grad-tol", type=float, default=d.grad_tol, help="relative stationarity tolerance")
    g.add_argument("--step-init", type=float, default=d.step_init, help="first trial step")
    g.add_argument("--backtrack", type=float, default=d.backtrack, help="largest backtracking shrink factor")
    g.add_argument("--armijo", type=float, default=d.armijo, help="sufficient decrease constant")
    g.add_argument("--no-polish", dest="polish", action="store_false",
                   help="skip the final snap to a basic solution")


def _solver_opts(args, p=None):
    names = [f.name for f in fields(SolveOptions)]
    kw = {n: getattr(args, n) for n in names if hasattr(args, n) and n != "seed"}
    if p is not None:
        kw["p"] = p
    kw["seed"] = getattr(args, "seed", 0)
    return SolveOptions(**kw)


def build_parser():
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="lprecover", description="Sparse recovery by l^p minimization.",
                     formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-matrix", help="draw a random measurement matrix", formatter_class=fmt)
    p.add_argument("--ensemble", choices=["gaussian", "uniform_sphere"], default="gaussian")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--format", choices=["binary", "csv"], default="binary")
    p.add_argument("--out", default="A.lprm", help="file name under --out-dir")
    _add_common(p)

    p = sub.add_parser("gen-signal", help="draw a test signal", formatter_class=fmt)
    p.add_argument("--kind", choices=["sparse", "powerlaw", "mixed"], default="sparse")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--S", type=int, default=1)
    p.add_argument("--q", type=float, default=0.5, help="power-law exponent (powerlaw)")
    p.add_argument("--lam", type=float, default=0.0, help="tail weight (mixed)")
    p.add_argument("--matrix", default=None, help="also write observations b = A x")
    p.add_argument("--out", default="x.csv", help="file name under --out-dir")
    p.add_argument("--obs-out", default="b.csv", help="observation file name under --out-dir")
    _add_common(p)

    p = sub.add_parser("rip", help="estimate restricted isometry constants", formatter_class=fmt)
    p.add_argument("--matrix", required=True)
    p.add_argument("--S", type=int, required=True, help="order (max order for --method profile)")
    p.add_argument("--method", choices=["mc", "exact", "profile"], default="mc",
                   help="Monte-Carlo, exhaustive, or MC profile for orders 1..S")
    p.add_argument("--trials", type=int, default=1000, help="MC supports per order")
    _add_common(p)

    p = sub.add_parser("certify", help="check the recovery condition and constants",
                       formatter_class=fmt)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--S", type=int, default=None, help="sparsity level (with --matrix)")
    p.add_argument("--matrix", default=None, help="estimate a delta profile from this matrix")
    p.add_argument("--trials", type=int, default=1000, help="MC supports per order")
    p.add_argument("--k", type=float, default=None,
                   help="multiplier k > 1 (None: first admissible n/S from the profile)")
    p.add_argument("--delta-kS", type=float, default=None, help="direct mode: delta_kS")
    p.add_argument("--delta-k1S", type=float, default=None, help="direct mode: delta_(k+1)S")
    _add_common(p)

    p = sub.add_parser("decode", help="recover x from b = A x (+ e)", formatter_class=fmt)
    p.add_argument("--matrix", required=True)
    p.add_argument("--obs", required=True, help="CSV observation vector b")
    p.add_argument("--method", choices=["lp", "lp-eps", "irls"], default="lp")
    p.add_argument("--eps-noise", type=float, default=0.0, help="noise level for lp-eps")
    p.add_argument("--history", default=None, help="write (eps, objective, residual) CSV here")
    _add_solver(p)
    _add_common(p)

    p = sub.add_parser("experiment", help="run a figure experiment", formatter_class=fmt)
    p.add_argument("name", choices=["fig1", "fig2", "fig3", "fig4"])
    p.add_argument("--preset", choices=sorted(ex.PRESETS), default="desk",
                   help="size preset; flags left at None take the preset value")
    p.add_argument("--p", type=parse_list(float), default=None, help="p values as a,b,c or start:step:stop")
    p.add_argument("--m", type=parse_list(float), default=None, help="fig1 m grid")
    p.add_argument("--q", type=parse_list(float), default=None, help="fig4 q values")
    p.add_argument("--S", type=parse_list(int), default=None, help="fig2 S axis or fig3 sparsity")
    p.add_argument("--lam", type=parse_list(float), default=None, help="fig3 lambda axis")
    p.add_argument("--M", type=int, default=None, help="rows of A")
    p.add_argument("--N", type=int, default=None, help="columns of A")
    p.add_argument("--trials", type=int, default=None, help="trials or matrices per cell")
    p.add_argument("--rip-trials", type=int, default=None, help="fig2 MC supports per order")
    p.add_argument("--mode", choices=["compressible", "noise", "both"], default="both",
                   help="fig3 perturbation mode")
    p.add_argument("--success-threshold", type=float, default=ex.SUCCESS_THRESHOLD,
                   help="fig2 relative l2 error counted as success")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker threads; results do not depend on it")
    _add_common(p)

    p = sub.add_parser("lq-check", help="sampled LQ_p radius and d1 consistency",
                       formatter_class=fmt)
    p.add_argument("--matrix", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--directions", type=int, default=200)
    p.add_argument("--dump", default=None, help="per-direction CSV under --out-dir")
    p.add_argument("--d1", action="store_true", help="also run the d1 gap check")
    _add_common(p)
    return parser


def cmd_gen_matrix(args):
    gen = gen_gaussian if args.ensemble == "gaussian" else gen_uniform_sphere
    A = gen(args.M, args.N, args.seed)
    path = _out_path(args, args.out)
    if args.format == "csv":
        write_matrix_csv(path, A)
    else:
        write_lprm(path, A)
    print(path, file=sys.stderr)


def cmd_gen_signal(args):
    if args.kind == "sparse":
        x = gen_sparse_signal(args.N, args.S, args.seed)
    elif args.kind == "powerlaw":
        x = gen_powerlaw_signal(args.N, args.q)
    else:
        x, _ = gen_mixed_signal(args.N, args.S, args.lam, args.seed)
    np.savetxt(_out_path(args, args.out), x, delimiter=",", fmt="%.17g")
    if args.matrix:
        A = _load_matrix(args.matrix)
        np.savetxt(_out_path(args, args.obs_out), A @ x, delimiter=",", fmt="%.17g")


def cmd_rip(args):
    A = _load_matrix(args.matrix)
    if args.method == "exact":
        _emit({"S": args.S, "delta": rip_delta_exact(A, args.S), "method": "exhaustive"})
    elif args.method == "mc":
        _emit(rip_delta_mc(A, args.S, args.trials, args.seed).to_dict())
    else:
        _emit([e.to_dict() for e in rip_profile(A, args.S, args.trials, args.seed)])


def cmd_certify(args):
    if args.delta_kS is not None or args.delta_k1S is not None:
        if args.delta_kS is None or args.delta_k1S is None or args.k is None:
            raise ValueError("direct mode needs --delta-kS, --delta-k1S and --k")
        ok = check_condition_P(args.delta_kS, args.delta_k1S, args.k, args.p)
        out = {"p": args.p, "k": args.k, "delta_kS": args.delta_kS,
               "delta_k1S": args.delta_k1S, "satisfied": ok, "C1": None, "C2": None}
        if ok:
            out["C1"] = constant_c1(args.p, args.k, args.delta_kS, args.delta_k1S)
            out["C2"] = constant_c2(args.p, args.k, args.delta_kS, args.delta_k1S)
        _emit(out)
        return
    if args.matrix is None or args.S is None:
        raise ValueError("give --matrix and --S, or the direct-mode delta flags")
    A = _load_matrix(args.matrix)
    profile = rip_profile(A, min(A.shape), args.trials, args.seed)
    _emit(certify_recovery(profile, args.S, args.p, args.k).to_dict())


def cmd_decode(args):
    A = _load_matrix(args.matrix)
    b = _load_vector(args.obs)
    opts = _solver_opts(args)
    if args.method == "lp":
        rep = decode_lp(A, b, opts)
    elif args.method == "irls":
        rep = decode_irls(A, b, opts)
    else:
        rep = decode_lp_eps(A, b, args.eps_noise, opts)
    if args.history:
        rep.write_history_csv(_out_path(args, args.history))
    _emit(rep.to_dict())


def _pick(args, preset, key, flag):
    v = getattr(args, flag)
    return preset[key] if v is None else v


def run_experiment(args):
    """Dispatch one figure experiment and write its CSV/JSON files."""
    cfg = ex.PRESETS[args.preset][args.name]
    t0 = time.perf_counter()
    written = []
    if args.name == "fig1":
        res = ex.run_condition_curves(_pick(args, cfg, "p_list", "p"), _pick(args, cfg, "m_grid", "m"))
        written.append(ex.write_result(res, args.out_dir))
        cells = len(res.rows)
    elif args.name == "fig2":
        M, N = _pick(args, cfg, "M", "M"), _pick(args, cfg, "N", "N")
        S_range, p_range = _pick(args, cfg, "S_range", "S"), _pick(args, cfg, "p_range", "p")
        trials = _pick(args, cfg, "trials", "trials")
        emp = ex.run_phase_diagram(M, N, S_range, p_range, trials, args.success_threshold,
                                   args.seed, threads=args.threads)
        A = ex.phase_matrix(M, N, args.seed)
        theo = ex.run_theoretical_phase(A, S_range, p_range,
                                        _pick(args, cfg, "rip_trials", "rip_trials"), args.seed)
        written += [ex.write_result(theo, args.out_dir), ex.write_result(emp, args.out_dir)]
        cells = emp.cells.size + theo.cells.size
    elif args.name == "fig3":
        modes = ["compressible", "noise"] if args.mode == "both" else [args.mode]
        S = cfg["S"] if args.S is None else args.S[0]
        tables = [ex.run_robustness_sweep(_pick(args, cfg, "M", "M"), _pick(args, cfg, "N", "N"), S,
                                          mode, _pick(args, cfg, "lambda_axis", "lam"),
                                          _pick(args, cfg, "p_list", "p"),
                                          _pick(args, cfg, "trials", "trials"), args.seed,
                                          threads=args.threads)
                  for mode in modes]
        written.append(_write_sweeps(tables, args.out_dir))
        cells = sum(t.mean_error.size for t in tables)
    else:
        res = ex.run_snr_grid(_pick(args, cfg, "M", "M"), _pick(args, cfg, "N", "N"),
                              _pick(args, cfg, "q_list", "q"), _pick(args, cfg, "p_list", "p"),
                              _pick(args, cfg, "num_matrices", "trials"), args.seed,
                              threads=args.threads)
        written.append(ex.write_result(res, args.out_dir))
        cells = res.mean_snr_db.size
    files = ", ".join(os.path.basename(p) for pair in written for p in pair)
    print(f"{args.name}: {cells} cells in {time.perf_counter() - t0:.1f}s -> {files}",
          file=sys.stderr)


def _write_sweeps(tables, out_dir):
    """Both sweep modes go into one fig3_sweep.csv; the sidecar lists each config."""

    joined = SimpleNamespace(name=ex.SweepTable.name, header=ex.SweepTable.header,
                             rows=[r for t in tables for r in t.rows],
                             config={"sweeps": [t.config for t in tables]})
    return ex.write_result(joined, out_dir)


def cmd_lq_check(args):
    A = _load_matrix(args.matrix)
    res = lq_empirical(A, args.p, args.directions, args.seed)
    out = {"p": args.p, "alpha_hat": res.alpha_hat, "directions": res.directions,
           "seed": res.seed}
    if args.dump:
        res.write_csv(_out_path(args, args.dump))
    if args.d1:
        out["d1"] = d1_gap_check(A, args.p, args.directions, args.seed)
    _emit(out)


_COMMANDS = {
    "gen-matrix": cmd_gen_matrix,
    "gen-signal": cmd_gen_signal,
    "rip": cmd_rip,
    "certify": cmd_certify,
    "decode": cmd_decode,
    "experiment": run_experiment,
    "lq-check": cmd_lq_check,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        _COMMANDS[args.command](args)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (LpRecoverError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
