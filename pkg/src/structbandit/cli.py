"""Command-line interface: ``structbandit <command> [flags]``.

Commands
--------
run              one episode from a JSON config
sweep            a grid of episodes with cached, resumable cells
width            Monte-Carlo Gaussian width of a norm ball
diagnose-lambda  concentration of the noise statistic against t
diagnose-re      empirical restricted eigenvalue against t
report           containment and regret summaries of a finished sweep

Exit status: 0 success, 1 bad input or config, 2 runtime failure (for
example an infeasible schedule), 130 interrupted.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import defaultdict
from pathlib import Path

import numpy as np

from . import __version__
from .bandit import DecisionSet, Environment, compute_schedule, make_theta_star, run_episode
from .config import structure_from_dict, build_episode, load_config, validate
from .exceptions import ConfigurationError, InputError, StructBanditError
from .experiments import (
    ExperimentSpec,
    concentration_diagnostic,
    containment_report,
    load_sweep,
    re_phase_diagnostic,
    regret_summary,
    run_sweep,
)
from .geometry import omega_width

THREADS_ENV = "STRUCTBANDIT_THREADS"
_SETS = {"l1-ball": "l1", "l2-ball": "l2", "group-ball": "group", "nuclear-ball": "nuclear"}


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors: exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", metavar="PATH", help="JSON config file for the command")
    g.add_argument("--out", metavar="DIR", help="output directory (default: ./out; width writes files only when given)")
    g.add_argument("--seed", type=int, metavar="INT", help="seed override; takes precedence over the config")
    g.add_argument("--threads", type=int, metavar="INT",
                   help=f"worker threads for sweeps (default: ${THREADS_ENV} or 1)")
    g.add_argument("--quiet", action="store_true", help="print only the final result line")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="structbandit", description="Structured stochastic linear bandit simulator.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}",
                        help="show the package version and exit")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common()
    sub.add_parser("run", parents=[common], help="run one episode",
                   description="Run one episode; writes manifest.json, traces/episode.csv and summary.json.")
    sw = sub.add_parser("sweep", parents=[common], help="run a grid of episodes",
                        description="Run every (structure, p, T, seed) cell; cached cells are reused.")
    sw.add_argument("--svg", action="store_true", help="also write SVG plots (needs matplotlib)")
    w = sub.add_parser("width", parents=[common], help="Gaussian width of a norm ball",
                       description="Monte-Carlo Gaussian width of a unit norm ball (flags override --config).")
    w.add_argument("--set", choices=sorted(_SETS), help="norm ball to measure")
    w.add_argument("--p", type=int, metavar="INT", help="ambient dimension")
    w.add_argument("--samples", type=int, metavar="INT", help="Gaussian samples (default 100000)")
    w.add_argument("--group-size", type=int, metavar="INT", help="contiguous group size for group-ball")
    w.add_argument("--rows", type=int, metavar="INT", help="matrix rows for nuclear-ball (p = rows * cols)")
    sub.add_parser("diagnose-lambda", parents=[common], help="noise statistic against t",
                   description="Mean dual norm of (1/t) X^T w against t, with its log-log slope.")
    sub.add_parser("diagnose-re", parents=[common], help="restricted eigenvalue against t",
                   description="Empirical restricted eigenvalue against t per seed, with t*.")
    sub.add_parser("report", parents=[common], help="summarize a finished sweep",
                   description="Recompute aggregates from the traces in --out and summarize them.")
    return parser


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(raw)
        except ValueError:
            raise InputError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise InputError("thread count must be positive")
    return n


def _need_config(args, kind):
    if not args.config:
        raise InputError(f"{kind} needs --config PATH")
    return load_config(args.config, kind)


def _dump(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=1, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def _manifest(out: Path, args, config, **extra) -> dict:
    m = {"command": args.command, "version": __version__, "config": config,
         "seed": args.seed, "argv": sys.argv[1:], **extra}
    _dump(out / "manifest.json", m)
    return m


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def cmd_run(args, out: Path) -> int:
    cfg = _need_config(args, "run")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    manifest = _manifest(out, args, cfg, effective_seed=seed)
    ep = build_episode(cfg, seed)
    sched = compute_schedule(ep.params)
    manifest.update(schedule={"n": sched.n, "beta": sched.beta, "lambda_scale": sched.lambda_scale},
                    params=ep.params.to_dict())
    _dump(out / "manifest.json", manifest)
    _say(args, f"burn-in n = {sched.n}, beta = {sched.beta:.6g}, T = {ep.params.T}")
    trace = run_episode(ep.env, ep.dset, ep.model, ep.params, ep.solver, seed,
                        kappa_directions=ep.kappa_directions)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    trace.to_csv(out / "traces" / "episode.csv")
    summary = {"R_T": trace.R_T, "containment": trace.containment_rate, "n": trace.n,
               "beta": trace.beta, "unhealthy": trace.unhealthy, "kappa_hat": trace.kappa_hat,
               "optimal_value": trace.optimal_value, "gap": trace.gap}
    _dump(out / "summary.json", summary)
    _say(args, f"containment {trace.containment_rate:.4f} over rounds >= n")
    print(f"R_T = {trace.R_T!r}")
    return 0


def cmd_sweep(args, out: Path) -> int:
    cfg = _need_config(args, "sweep")
    if args.seed is not None:
        cfg = dict(cfg, seeds=[args.seed])
    spec = ExperimentSpec.from_dict(cfg)
    threads = _threads(args)

    def progress(rec):
        c, r = rec["config"], rec["result"]
        tag = f"{c['structure']} p={c['p']} T={c['T']} seed={c['seed']}"
        if r["status"] == "ok":
            _say(args, f"{tag}: R_T = {r['R_T']:.4f}, containment {r['containment']:.3f}")
        else:
            _say(args, f"{tag}: skipped ({r['reason']})")

    res = run_sweep(spec, out, threads=threads, svg=args.svg, progress=progress)
    _say(args, f"{res.computed} computed, {res.cached} cached, {len(res.skipped)} skipped")
    for row in res.aggregates:
        print(f"{row['structure']} p={row['p']} T={row['T']}: mean R_T = {row['mean_R_T']:.4f} "
              f"(sd {row['std_R_T']:.4f}, {row['count']} seeds), containment {row['containment']:.4f}")
    return 0


def cmd_width(args, out: Path | None) -> int:
    cfg = load_config(args.config, "width") if args.config else {}
    for key, val in (("set", args.set), ("p", args.p), ("samples", args.samples), ("seed", args.seed),
                     ("group_size", args.group_size), ("rows", args.rows)):
        if val is not None:
            cfg[key] = val
    validate("width", cfg)
    kind, p = _SETS[cfg["set"]], cfg["p"]
    structure = {"kind": kind}
    if kind == "group":
        g = cfg.get("group_size") or 1
        if p % g:
            raise ConfigurationError(f"group size {g} does not divide p = {p}")
        structure["groups"] = [list(range(k, k + g)) for k in range(0, p, g)]
    if kind == "nuclear":
        r = cfg.get("rows") or 1
        if p % r:
            raise ConfigurationError(f"rows {r} does not divide p = {p}")
        structure["shape"] = [r, p // r]
    model = structure_from_dict(p, structure)
    if out is not None:
        _manifest(out, args, cfg)
    est = omega_width(model, cfg.get("samples", 100_000), cfg.get("seed", 0))
    if out is not None:
        _dump(out / "width.json", est.to_dict())
    print(f"w = {est.mean!r} +- {est.std_error!r} ({est.samples} samples)")
    return 0


def _dset(cfg) -> DecisionSet:
    d = cfg.get("decision_set", {"kind": "ball"})
    return DecisionSet(d["kind"], cfg["p"], d.get("vertices"))


def cmd_diagnose_lambda(args, out: Path) -> int:
    cfg = _need_config(args, "diagnose-lambda")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    _manifest(out, args, cfg, effective_seed=seed)
    model = structure_from_dict(cfg["p"], cfg["structure"])
    noise = cfg.get("noise", {})
    # the statistic does not involve theta*; any unit vector will do
    env = Environment(np.eye(cfg["p"])[0], noise.get("bound", 0.1), noise.get("kind", "uniform"))
    tab = concentration_diagnostic(env, _dset(cfg), model, cfg["t_grid"], cfg.get("trials", 100), seed)
    _dump(out / "concentration.json", tab.to_dict())
    (out / "plots").mkdir(parents=True, exist_ok=True)
    (out / "plots" / "concentration.txt").write_text(
        "".join(f"{float(t)!r} {m!r}\n" for t, m in zip(tab.t, tab.mean)))
    for t, m, se in zip(tab.t, tab.mean, tab.std_error):
        _say(args, f"t = {t}: mean {m:.6g} (se {se:.2g})")
    print(f"slope = {tab.slope!r}")
    return 0


def cmd_diagnose_re(args, out: Path) -> int:
    cfg = _need_config(args, "diagnose-re")
    seeds = [args.seed] if args.seed is not None else cfg["seeds"]
    _manifest(out, args, cfg, effective_seeds=seeds)
    model = structure_from_dict(cfg["p"], cfg["structure"])
    theta = make_theta_star(model, cfg.get("theta_seed", 0))
    tab = re_phase_diagnostic(_dset(cfg), model, theta, cfg["t_grid"], seeds,
                              cfg.get("directions", 200), cfg.get("threshold", 0.0))
    _dump(out / "re_phase.json", tab.to_dict())
    for row in tab.rows:
        _say(args, f"seed {row.seed}: t* = {row.t_star}, kappa = " + ", ".join(f"{k:.4g}" for k in row.kappa))
    for t in tab.t:
        print(f"t = {t}: kappa_hat > {tab.threshold} in {tab.fraction_positive(t):.3f} of seeds")
    return 0


def cmd_report(args, out: Path) -> int:
    if not (out / "manifest.json").exists():
        raise InputError(f"{out} holds no sweep manifest")
    res = load_sweep(out)
    groups = defaultdict(list)
    for c in res.cells:
        if c["result"]["status"] == "ok":
            groups[(c["config"]["structure"], c["config"]["p"])].append(c["trace"])
    report = []
    for (kind, p), traces in sorted(groups.items()):
        cont = containment_report(traces)
        reg = regret_summary(traces)
        report.append({"structure": kind, "p": p, "containment": cont["pooled"], "regret": reg})
        slope = "n/a" if reg["slope"] is None else f"{reg['slope']:.3f}"
        print(f"{kind} p={p}: pooled containment {cont['pooled']:.4f}, "
              f"log-log slope {slope}, horizons {reg['horizons']}")
    _dump(out / "report.json", {"groups": report, "aggregates": res.aggregates,
                                "skipped": len(res.skipped)})
    return 0


_HANDLERS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "width": cmd_width,
    "diagnose-lambda": cmd_diagnose_lambda,
    "diagnose-re": cmd_diagnose_re,
    "report": cmd_report,
}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (InputError, ConfigurationError)):
        return 1
    return 2


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.out is not None:
        out = Path(args.out)
    elif args.command == "width":
        out = None
    else:
        out = Path("out")
    try:
        if out is not None and args.command != "report":
            out.mkdir(parents=True, exist_ok=True)
        return _HANDLERS[args.command](args, out)
    except KeyboardInterrupt:
        print("interrupted; finished cells are kept", file=sys.stderr)
        return 130
    except (StructBanditError, ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        if out is not None and out.is_dir():
            _dump(out / "error.json", {"error": type(exc).__name__, "message": str(exc),
                                       "exit_code": code, "command": args.command})
        return code


if __name__ == "__main__":
    sys.exit(main())
