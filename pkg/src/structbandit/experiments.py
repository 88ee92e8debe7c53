"""Seeded experiment campaigns and the numerical diagnostics built on them.

A sweep is a grid over structure kind, dimension ``p``, horizon ``T`` and
seed. Each cell runs one episode, and its trace is persisted under a content
hash of the cell's canonical JSON config, so re-running a sweep only
computes the missing cells. Aggregates are a deterministic post-pass over
the cell summaries.

Layout of an output directory::

    manifest.json          sweep spec, package version, cell index
    traces/<hash>.csv      per-round trace of one cell
    cells/<hash>.json      config and summary of one cell (or skip reason)
    aggregate.csv          one row per (structure, p, T)
    plots/*.txt            two-column x/y plot data
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__
from .bandit import (
    DecisionSet,
    Environment,
    RegretTrace,
    ScheduleParams,
    compute_schedule,
    make_theta_star,
    run_episode,
)
from .estimation import SolverConfig
from .exceptions import ConfigurationError, HorizonTooShortError, InputError
from .geometry import CapSampler, ErrorSetSpec, estimate_restricted_eigenvalue
from .structure import StructureModel, eval_dual_norm

__all__ = [
    "ExperimentSpec",
    "SweepResult",
    "build_model",
    "cell_configs",
    "cell_hash",
    "run_cell",
    "run_sweep",
    "load_sweep",
    "summarize_trace",
    "aggregate",
    "concentration_diagnostic",
    "re_phase_diagnostic",
    "containment_report",
    "regret_summary",
    "bootstrap_difference",
]

_KINDS = ("l1", "l2", "group", "nuclear")
_CURVE_POINTS = 500


def build_model(kind: str, p: int, truth: dict) -> StructureModel:
    """Structure of ``kind`` at dimension ``p``.

    ``truth`` supplies ``s`` (sparsity, active groups or rank), plus
    ``group_size`` for contiguous groups and ``rows`` for the matrix shape.
    """
    s = truth.get("s")
    if kind == "l2":
        return StructureModel("l2", p, psi=truth.get("psi"))
    if kind == "l1":
        return StructureModel("l1", p, s=s, psi=truth.get("psi"))
    if kind == "group":
        g = truth.get("group_size")
        if not g or p % g:
            raise ConfigurationError(f"group_size must divide p = {p}")
        groups = [list(range(k, k + g)) for k in range(0, p, g)]
        return StructureModel("group", p, s=s, groups=groups, psi=truth.get("psi"))
    if kind == "nuclear":
        r = truth.get("rows")
        if not r or p % r:
            raise ConfigurationError(f"rows must divide p = {p}")
        return StructureModel("nuclear", p, s=s, shape=(r, p // r), psi=truth.get("psi"))
    raise ConfigurationError(f"unknown structure kind {kind!r}")


@dataclass(frozen=True)
class ExperimentSpec:
    """A grid of episodes.

    ``truth`` describes how ``theta*`` is drawn (``kind``, ``s`` and, where
    needed, ``group_size`` or ``rows``); ``structures`` lists the norms the
    algorithm regularizes with. ``constants`` overrides schedule parameters
    and ``solver`` overrides :class:`SolverConfig` fields.
    """

    name: str
    truth: dict
    p_list: tuple
    T_list: tuple
    seeds: tuple
    structures: tuple = ()
    noise_bound: float = 0.1
    noise_kind: str = "uniform"
    decision_set: str = "ball"
    constants: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    kappa_directions: int = 0

    def __post_init__(self):
        for name in ("p_list", "T_list", "seeds", "structures"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if not self.structures:
            object.__setattr__(self, "structures", (self.truth.get("kind"),))
        if not (self.p_list and self.T_list and self.seeds):
            raise ConfigurationError("p_list, T_list and seeds must be non-empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigurationError("seeds must be distinct")
        if self.truth.get("kind") not in _KINDS:
            raise ConfigurationError(f"truth kind must be one of {_KINDS}")
        for k in self.structures:
            if k not in _KINDS:
                raise ConfigurationError(f"unknown structure kind {k!r}")
        if self.decision_set not in ("ball", "cube"):
            raise ConfigurationError("sweeps support the ball and cube decision sets")

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("p_list", "T_list", "seeds", "structures"):
            d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        return cls(**data)


def cell_configs(spec: ExperimentSpec) -> list[dict]:
    """Canonical per-cell configs in grid order (structure, p, T, seed)."""
    base = {
        "truth": dict(sorted(spec.truth.items())),
        "noise_bound": float(spec.noise_bound),
        "noise_kind": spec.noise_kind,
        "decision_set": spec.decision_set,
        "constants": dict(sorted(spec.constants.items())),
        "solver": dict(sorted(spec.solver.items())),
        "kappa_directions": int(spec.kappa_directions),
        "version": __version__,
    }
    out = []
    for kind in spec.structures:
        for p in spec.p_list:
            for T in spec.T_list:
                for seed in spec.seeds:
                    out.append(dict(base, structure=kind, p=int(p), T=int(T), seed=int(seed)))
    return out


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def cell_hash(cfg: dict) -> str:
    return hashlib.sha256(_canonical(cfg).encode()).hexdigest()[:20]


def summarize_trace(trace: RegretTrace, kappa_hat=None) -> dict:
    """Per-cell numbers that the aggregates are built from."""
    lam = trace.lambdas[~np.isnan(trace.lambdas)]
    return {
        "R_T": float(trace.R_T),
        "containment": trace.containment_rate,
        "mean_lambda": float(lam.mean()) if lam.size else float("nan"),
        "kappa_hat": kappa_hat,
        "n": int(trace.n),
    }


def _episode_inputs(cfg: dict):
    p, T = cfg["p"], cfg["T"]
    truth_model = build_model(cfg["truth"]["kind"], p, cfg["truth"])
    model = build_model(cfg["structure"], p, cfg["truth"])
    # theta* depends on (seed, p) only, so structures and horizons share it
    theta = make_theta_star(truth_model, [cfg["seed"], p])
    env = Environment(theta, cfg["noise_bound"], cfg["noise_kind"])
    dset = DecisionSet(cfg["decision_set"], p)
    params = ScheduleParams.for_model(model, T, **cfg["constants"])
    return env, dset, model, params


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def run_cell(cfg: dict, out: Path | None = None) -> dict:
    """Run one cell; persists ``traces/<hash>.csv`` and ``cells/<hash>.json``
    under ``out`` when given. Returns the cell record."""
    h = cell_hash(cfg)
    record = {"hash": h, "config": cfg}
    try:
        env, dset, model, params = _episode_inputs(cfg)
        compute_schedule(params)
    except HorizonTooShortError as exc:
        record["result"] = {"status": "skipped", "reason": "horizon_too_short",
                            "message": str(exc), "min_T": exc.min_T}
    except (ConfigurationError, InputError) as exc:
        record["result"] = {"status": "skipped", "reason": "invalid_config", "message": str(exc)}
    else:
        trace = run_episode(env, dset, model, params, SolverConfig(**cfg["solver"]), cfg["seed"],
                            kappa_directions=cfg["kappa_directions"])
        summary = summarize_trace(trace, trace.kappa_hat)
        summary.update(status="ok", beta=trace.beta, unhealthy=trace.unhealthy,
                       solver_failures=trace.solver_failures)
        record["result"] = summary
        record["trace"] = trace
        if out is not None:
            _write_atomic(out / "traces" / f"{h}.csv", trace.csv_text())
    if out is not None:
        _write_atomic(out / "cells" / f"{h}.json",
                      json.dumps({"hash": h, "config": cfg, "result": record["result"]}, indent=1))
    return record


def _load_cell(out: Path, h: str) -> dict | None:
    path = out / "cells" / f"{h}.json"
    if not path.exists():
        return None
    rec = json.loads(path.read_text())
    if rec["result"]["status"] == "ok" and not (out / "traces" / f"{h}.csv").exists():
        return None
    return rec


@dataclass
class SweepResult:
    cells: list
    aggregates: list
    computed: int = 0
    cached: int = 0

    @property
    def skipped(self) -> list:
        return [c for c in self.cells if c["result"]["status"] == "skipped"]

    def values(self, structure: str, p: int, T: int, key: str = "R_T") -> np.ndarray:
        """Per-seed values of one config, in seed order."""
        return np.array([
            c["result"][key] for c in self.cells
            if c["result"]["status"] == "ok" and c["config"]["structure"] == structure
            and c["config"]["p"] == p and c["config"]["T"] == T
        ], dtype=float)


def aggregate(cells: list) -> list[dict]:
    """Mean and standard deviation per (structure, p, T) over seeds."""
    groups = defaultdict(list)
    for c in cells:
        if c["result"]["status"] == "ok":
            cfg = c["config"]
            groups[(cfg["structure"], cfg["p"], cfg["T"])].append(c["result"])
    rows = []
    for (kind, p, T), res in sorted(groups.items()):
        R = np.array([r["R_T"] for r in res])
        kap = [r["kappa_hat"] for r in res if r["kappa_hat"] is not None]
        rows.append({
            "structure": kind,
            "p": p,
            "T": T,
            "count": len(res),
            "mean_R_T": float(R.mean()),
            "std_R_T": float(R.std(ddof=1)) if len(R) > 1 else 0.0,
            "containment": float(np.mean([r["containment"] for r in res])),
            "mean_lambda": float(np.mean([r["mean_lambda"] for r in res])),
            "kappa_hat": float(np.mean(kap)) if kap else None,
            "n": res[0]["n"],
        })
    return rows


def _aggregate_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = ["structure", "p", "T", "count", "mean_R_T", "std_R_T", "containment",
            "mean_lambda", "kappa_hat", "n"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r[c] is None else repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])
    return buf.getvalue()


def _xy_text(x, y) -> str:
    return "".join(f"{a!r} {b!r}\n" for a, b in zip(x, y))


def _write_plots(out: Path, cells: list, rows: list[dict], svg: bool) -> None:
    plots = out / "plots"
    series = defaultdict(list)
    for r in rows:
        series[(r["structure"], r["p"])].append((r["T"], r["mean_R_T"]))
    for (kind, p), pts in series.items():
        pts.sort()
        _write_atomic(plots / f"regret_vs_T__{kind}_p{p}.txt",
                      _xy_text([float(a) for a, _ in pts], [b for _, b in pts]))
    curves = defaultdict(list)
    for c in cells:
        if "trace" in c:
            cfg = c["config"]
            curves[(cfg["structure"], cfg["p"], cfg["T"])].append(c["trace"].cum_regret)
    mean_curves = {}
    for (kind, p, T), cs in sorted(curves.items()):
        mean = np.mean(cs, axis=0)
        idx = np.unique(np.linspace(0, T - 1, min(T, _CURVE_POINTS)).astype(int))
        mean_curves[(kind, p, T)] = (idx + 1.0, mean[idx])
        _write_atomic(plots / f"cum_regret__{kind}_p{p}_T{T}.txt",
                      _xy_text(idx + 1.0, [float(v) for v in mean[idx]]))
    if svg and mean_curves:
        _svg_charts(plots, series, mean_curves)


def _svg_charts(plots: Path, series, mean_curves) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "structbandit"
    fig, ax = plt.subplots(figsize=(6, 4))
    for (kind, p, T), (x, y) in mean_curves.items():
        ax.plot(x, y, label=f"{kind} p={p} T={T}")
    ax.set_xlabel("round")
    ax.set_ylabel("mean cumulative regret")
    ax.legend(fontsize=7)
    fig.savefig(plots / "cum_regret.svg", metadata={"Date": None})
    plt.close(fig)
    if any(len(v) > 1 for v in series.values()):
        fig, ax = plt.subplots(figsize=(6, 4))
        for (kind, p), pts in sorted(series.items()):
            ax.loglog([a for a, _ in pts], [b for _, b in pts], "o-", label=f"{kind} p={p}")
        ax.set_xlabel("T")
        ax.set_ylabel("mean R_T")
        ax.legend(fontsize=7)
        fig.savefig(plots / "regret_vs_T.svg", metadata={"Date": None})
        plt.close(fig)


def run_sweep(spec: ExperimentSpec, out=None, *, threads: int = 1, svg: bool = False,
              progress=None) -> SweepResult:
    """Run every (structure, p, T, seed) cell of ``spec``.

    With ``out`` set, cells whose files already exist are loaded instead of
    recomputed, and the manifest, aggregate and plot files are (re)written.
    Infeasible cells are recorded as skipped with a machine-readable reason.
    ``progress`` is called with each finished cell record.

    An interrupt leaves every finished cell on disk; the next run resumes.
    """
    configs = cell_configs(spec)
    out = Path(out) if out is not None else None
    if out is not None:
        for sub in ("traces", "cells", "plots"):
            (out / sub).mkdir(parents=True, exist_ok=True)
        manifest = {"spec": spec.to_dict(), "version": __version__, "status": "running",
                    "cells": [cell_hash(c) for c in configs]}
        _write_atomic(out / "manifest.json", json.dumps(manifest, indent=1))

    records: list = [None] * len(configs)
    todo = []
    cached = 0
    for i, cfg in enumerate(configs):
        rec = _load_cell(out, cell_hash(cfg)) if out is not None else None
        if rec is not None:
            records[i] = rec
            cached += 1
            if progress:
                progress(rec)
        else:
            todo.append(i)

    def work(i):
        rec = run_cell(configs[i], out)
        if progress:
            progress(rec)
        return rec

    if threads <= 1 or len(todo) <= 1:
        for i in todo:
            records[i] = work(i)
    else:
        pool = ThreadPoolExecutor(max_workers=threads)
        try:
            futures = {i: pool.submit(work, i) for i in todo}
            for i, fut in futures.items():
                records[i] = fut.result()
        except BaseException:
            pool.shutdown(wait=True, cancel_futures=True)
            raise
        pool.shutdown()

    rows = aggregate(records)
    if out is not None:
        if any("trace" not in r and r["result"]["status"] == "ok" for r in records):
            for r in records:
                if "trace" not in r and r["result"]["status"] == "ok":
                    r["trace"] = RegretTrace.from_csv(out / "traces" / f"{r['hash']}.csv")
        _write_atomic(out / "aggregate.csv", _aggregate_csv(rows))
        _write_plots(out, records, rows, svg)
        manifest["status"] = "complete"
        manifest["skipped"] = [
            {"hash": r["hash"], **{k: r["config"][k] for k in ("structure", "p", "T", "seed")},
             "reason": r["result"]["reason"], "message": r["result"]["message"]}
            for r in records if r["result"]["status"] == "skipped"
        ]
        _write_atomic(out / "manifest.json", json.dumps(manifest, indent=1))
    return SweepResult(records, rows, computed=len(todo), cached=cached)


def load_sweep(out) -> SweepResult:
    """Rebuild a sweep from disk, recomputing cell summaries from the traces."""
    out = Path(out)
    manifest = json.loads((out / "manifest.json").read_text())
    records = []
    for h in manifest["cells"]:
        rec = _load_cell(out, h)
        if rec is None:
            raise InputError(f"cell {h} is missing from {out}")
        if rec["result"]["status"] == "ok":
            trace = RegretTrace.from_csv(out / "traces" / f"{h}.csv")
            summary = summarize_trace(trace, rec["result"]["kappa_hat"])
            rec["result"] = dict(rec["result"], **summary)
            rec["trace"] = trace
        records.append(rec)
    return SweepResult(records, aggregate(records), computed=0, cached=len(records))


# ----------------------------------------------------------------- diagnostics


@dataclass(frozen=True)
class ConcentrationTable:
    t: tuple
    mean: tuple
    std_error: tuple
    slope: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _loglog_slope(x, y) -> float | None:
    y = np.asarray(y, dtype=float)
    if len(y) < 2 or np.any(y <= 0):
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def concentration_diagnostic(env: Environment, dset: DecisionSet, model: StructureModel,
                             t_grid, trials: int = 100, seed: int = 0) -> ConcentrationTable:
    """Mean of ``R*((1/t) X_t^T w_t)`` over independent designs and noise.

    Arms are uniform draws from ``dset`` and ``w_t`` comes from ``env``.
    The fitted log-log slope against ``t`` should be close to ``-1/2``.
    """
    if trials < 30:
        raise InputError("need at least 30 trials")
    rng = np.random.default_rng(seed)
    t_grid = [int(t) for t in t_grid]
    means, ses = [], []
    for t in t_grid:
        vals = np.empty(trials)
        for k in range(trials):
            X = dset.sample(rng, t)
            w = env.noise(rng, t)
            vals[k] = eval_dual_norm(model, X.T @ w / t)
        means.append(float(vals.mean()))
        ses.append(float(vals.std(ddof=1) / math.sqrt(trials)))
    return ConcentrationTable(tuple(t_grid), tuple(means), tuple(ses), _loglog_slope(t_grid, means))


@dataclass(frozen=True)
class REPhaseRow:
    seed: int
    kappa: tuple
    t_star: int | None


@dataclass(frozen=True)
class REPhaseTable:
    t: tuple
    rows: tuple
    directions: int
    threshold: float

    def fraction_positive(self, t: int) -> float:
        j = self.t.index(t)
        return float(np.mean([r.kappa[j] > self.threshold for r in self.rows]))

    def to_dict(self) -> dict:
        return {"t": list(self.t), "directions": self.directions, "threshold": self.threshold,
                "rows": [asdict(r) for r in self.rows]}


def re_phase_diagnostic(dset: DecisionSet, model: StructureModel, theta_star, t_grid, seeds,
                        directions: int = 200, threshold: float = 0.0) -> REPhaseTable:
    """Empirical restricted eigenvalue against ``t`` for each seed.

    Each seed draws one design of ``max(t_grid)`` uniform arms and evaluates
    prefixes of it, so the curve follows a single growing design. ``t_star``
    is the first grid point where ``kappa_hat`` exceeds ``threshold``.
    """
    t_grid = sorted(int(t) for t in t_grid)
    spec = ErrorSetSpec(model, theta_star)
    sampler = CapSampler.from_spec(spec)
    rows = []
    for seed in seeds:
        X = dset.sample(np.random.default_rng(seed), t_grid[-1])
        kappa = tuple(estimate_restricted_eigenvalue(X[:t], sampler, directions, seed).kappa_hat
                      for t in t_grid)
        t_star = next((t for t, k in zip(t_grid, kappa) if k > threshold), None)
        rows.append(REPhaseRow(int(seed), kappa, t_star))
    return REPhaseTable(tuple(t_grid), tuple(rows), directions, threshold)


def containment_report(traces) -> dict:
    """Per-trace and pooled fraction of rounds ``t >= n`` with ``theta*`` in ``C_t``.

    ``worst`` is the round with the largest distance-to-radius ratio
    (infinite for a zero radius), when distances are available.
    """
    traces = list(traces)
    if not traces:
        raise InputError("no traces")
    per = []
    hits = total = 0
    worst = None
    for k, tr in enumerate(traces):
        post = tr.contained[tr.n - 1:]
        per.append(float(np.mean(post == 1)) if post.size else float("nan"))
        hits += int(np.sum(post == 1))
        total += post.size
        d = tr.distance[tr.n - 1:]
        if post.size and np.isfinite(d).any():
            j = int(np.nanargmax(d))
            ratio = float(d[j] / tr.beta) if tr.beta > 0 else (math.inf if d[j] > 0 else 0.0)
            if worst is None or ratio > worst["ratio"]:
                worst = {"trace": k, "round": tr.n + j, "distance": float(d[j]), "ratio": ratio}
    return {"per_trace": per, "pooled": hits / total if total else float("nan"), "worst": worst}


def regret_summary(traces, fit: str = "loglog_T") -> dict:
    """Mean ``R_T`` per horizon and the log-log slope against ``T``.

    The slope needs at least three horizons and strictly positive means;
    otherwise it is ``None`` (``degenerate`` is set for zero regret).
    """
    if fit != "loglog_T":
        raise InputError(f"unknown fit {fit!r}")
    by_T = defaultdict(list)
    for tr in traces:
        by_T[tr.T].append(tr.R_T)
    horizons = sorted(by_T)
    means = [float(np.mean(by_T[T])) for T in horizons]
    degenerate = any(m <= 0 for m in means)
    slope = _loglog_slope(horizons, means) if len(horizons) >= 3 and not degenerate else None
    return {
        "horizons": horizons,
        "mean_R_T": means,
        "slope": slope,
        "degenerate": degenerate,
        "sublinear": None if slope is None else slope < 1.0,
    }


def bootstrap_difference(a, b, resamples: int = 10_000, confidence: float = 0.95,
                         seed: int = 0) -> dict:
    """One-sided bootstrap upper bound for ``mean(a) - mean(b)``.

    ``excludes_zero`` is true when the upper bound is negative, i.e. ``a``
    is smaller with the requested confidence.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    res = stats.bootstrap(
        (a, b),
        lambda x, y, axis: x.mean(axis=axis) - y.mean(axis=axis),
        n_resamples=resamples,
        confidence_level=confidence,
        alternative="less",
        method="percentile",
        vectorized=True,
        rng=np.random.default_rng(seed),
    )
    upper = float(res.confidence_interval.high)
    return {"difference": float(a.mean() - b.mean()), "upper": upper, "excludes_zero": upper < 0.0,
            "resamples": resamples, "confidence": confidence}
