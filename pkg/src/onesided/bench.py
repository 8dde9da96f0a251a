"""Seeded (method x alpha x seed x cutoff) experiment grids."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml
from joblib import Parallel, delayed

from .data_io import (
    ResultRow,
    final_losses,
    ingest_csv,
    load_schema,
    make_run_id,
    parse_run_id,
    read_results,
    summarize,
    write_results,
    write_summary,
)
from .environment import (
    LossLedger,
    StreamKind,
    StreamSpec,
    build_stream,
    fit_oracle,
    replay_stream,
)
from .exceptions import ConfigError, OneSidedError
from .learners import (
    METHODS,
    AdaptiveLearner,
    BaselineLearner,
    GreedyLearner,
    PassiveLearner,
    SgdLearner,
    default_omega_radius,
)

__all__ = [
    "RunConfig",
    "load_config",
    "alpha_grid",
    "cell_seed",
    "make_learner",
    "run_learner",
    "run_experiment",
    "emit_plotdata",
    "PLOT_HEADER",
]

logger = logging.getLogger(__name__)

PLOT_HEADER = ["method", "round", "avg_loss_rate", "stderr"]
ALPHA_METHODS = {"eps_greedy", "os_eps_greedy", "noise", "os_noise", "margin"}


@dataclass
class RunConfig:
    """Everything needed to run one experiment grid.

    ``stream`` is a mapping with ``kind`` (``synthetic``, ``theorem1`` or
    ``csv``) plus the :class:`~onesided.environment.StreamSpec` fields; for
    ``csv`` it also carries ``path``, ``schema`` and ``init_frac``.
    ``cutoffs`` are percentiles of the oracle scores (ignored for
    ``theorem1``, whose cutoff is absolute). ``learner`` holds shared learner
    settings; ``adaptive_rho`` is ``"grid"`` (tune the scale over the alpha
    grid), ``"theory"`` (closed-form width) or a number.
    """

    stream: dict
    methods: list
    seeds: list = field(default_factory=lambda: [0])
    cutoffs: list = field(default_factory=lambda: [0.5])
    alpha_exponents: tuple = (-6, 6)
    learner: dict = field(default_factory=dict)
    base_dir: str = "."

    def validate(self) -> None:
        problems = []
        if not self.methods:
            problems.append("methods: at least one method is required")
        for m in self.methods:
            if m not in METHODS:
                problems.append(f"methods: unknown method {m!r} (choose from {', '.join(METHODS)})")
        if not self.seeds:
            problems.append("seeds: at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            problems.append("seeds: seeds must be distinct")
        if any(not isinstance(s, int) for s in self.seeds):
            problems.append("seeds: seeds must be integers")
        lo, hi = (list(self.alpha_exponents) + [None, None])[:2]
        if not (isinstance(lo, int) and isinstance(hi, int) and lo <= hi):
            problems.append("alpha_exponents: need two integers [lo, hi] with lo <= hi")
        kind = self.stream.get("kind")
        if kind not in {k.value for k in StreamKind}:
            problems.append(f"stream.kind: expected synthetic, theorem1 or csv, got {kind!r}")
        if kind != "theorem1":
            if not self.cutoffs:
                problems.append("cutoffs: at least one cutoff percentile is required")
            for c in self.cutoffs:
                if not isinstance(c, (int, float)) or not 0 < c < 1:
                    problems.append(f"cutoffs: percentile {c!r} must lie in (0, 1)")
        if kind in ("synthetic", "theorem1"):
            for key in ("d", "T"):
                if not isinstance(self.stream.get(key), int) or self.stream.get(key) < 1:
                    problems.append(f"stream.{key}: positive integer required")
        if kind == "csv":
            path = self.stream.get("path")
            if not path:
                problems.append("stream.path: CSV path required")
            elif not self.resolve(path).exists():
                problems.append(f"stream.path: {path} does not exist")
            if "schema" not in self.stream:
                problems.append("stream.schema: schema mapping or file required")
        N = self.stream.get("N", 1)
        if not isinstance(N, int) or N < 1:
            problems.append("stream.N: batch size must be a positive integer")
        rho = self.learner.get("adaptive_rho", "grid")
        if rho not in ("grid", "theory") and not (isinstance(rho, (int, float)) and rho >= 0):
            problems.append("learner.adaptive_rho: 'grid', 'theory' or a non-negative number")
        delta = self.learner.get("delta", 0.05)
        if not (isinstance(delta, (int, float)) and 0 < delta < 1):
            problems.append("learner.delta: must lie in (0, 1)")
        if problems:
            raise ConfigError(problems)

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def alphas_for(self, method):
        if method in ALPHA_METHODS:
            return alpha_grid(*self.alpha_exponents)
        if method == "adaptive":
            rho = self.learner.get("adaptive_rho", "grid")
            if rho == "grid":
                return alpha_grid(*self.alpha_exponents)
            if rho == "theory":
                return [None]
            return [float(rho)]
        return [None]

    def cutoff_list(self):
        return [None] if self.stream.get("kind") == "theorem1" else list(self.cutoffs)


def alpha_grid(lo: int, hi: int) -> list:
    """Powers of two ``2**lo .. 2**hi``."""
    return [2.0**k for k in range(lo, hi + 1)]


_CONFIG_KEYS = {"stream", "methods", "seeds", "cutoffs", "alpha_exponents", "learner"}


def load_config(path) -> RunConfig:
    """Read a YAML (or JSON) run configuration."""
    path = Path(path)
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ConfigError([f"unknown top-level key {k!r}" for k in sorted(unknown)])
    if "stream" not in raw or "methods" not in raw:
        raise ConfigError([f"missing required key {k!r}" for k in ("stream", "methods") if k not in raw])
    cfg = RunConfig(
        stream=dict(raw["stream"]),
        methods=list(raw["methods"]),
        seeds=list(raw.get("seeds", [0])),
        cutoffs=list(raw.get("cutoffs", [0.5])),
        alpha_exponents=tuple(raw.get("alpha_exponents", (-6, 6))),
        learner=dict(raw.get("learner") or {}),
        base_dir=str(path.parent),
    )
    return cfg


def cell_seed(seed, method, alpha, cutoff) -> int:
    """Learner RNG seed derived from the grid cell alone."""
    key = json.dumps([seed, method, alpha, cutoff]).encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def make_learner(method: str, stream, alpha=None, learner_cfg=None, random_state=None):
    """Instantiate ``method`` with constants taken from the stream."""
    cfg = dict(learner_cfg or {})
    oracle = stream.oracle
    link, cutoff, M = oracle.link.name, oracle.cutoff, stream.M
    B = stream.B if math.isfinite(stream.B) else float(np.linalg.norm(stream.warm_X, axis=1).max())
    lambda0 = cfg.get("lambda0")
    refit = cfg.get("refit_every", 1)
    if method == "adaptive":
        return AdaptiveLearner(link=link, cutoff=cutoff, M=M, B=B, phi=cfg.get("phi", stream.spec.noise_phi),
                               delta=cfg.get("delta", 0.05), horizon=stream.n_rounds, batch_size=stream.spec.N,
                               alpha=alpha, lambda0=lambda0, refit_every=refit)
    if method == "greedy":
        return GreedyLearner(link=link, cutoff=cutoff, M=M, lambda0=lambda0, refit_every=refit)
    if method in ALPHA_METHODS:
        return BaselineLearner(kind=method, alpha=alpha, link=link, cutoff=cutoff, M=M, lambda0=lambda0,
                               refit_every=refit, random_state=random_state)
    if method == "passive":
        p = cfg.get("passive", {})
        return PassiveLearner(link=link, cutoff=cutoff, M=M, horizon=stream.total_items, K=p.get("K"),
                              S=p.get("S"), cover_samples=p.get("cover_samples"), random_state=random_state)
    if method == "sgd":
        p = cfg.get("sgd", {})
        radius = p.get("omega_radius", default_omega_radius(oracle.link, B, M))
        return SgdLearner(link=link, cutoff=cutoff, accuracy=p.get("accuracy", 0.1),
                          noise_bound=p.get("noise_bound", 0.0), delta=p.get("delta", 1.0), d0=p.get("d0"), M=M,
                          omega_radius=radius)
    raise ValueError(f"unknown method {method!r}")


def run_learner(learner, stream, ledger: LossLedger | None = None) -> LossLedger:
    """Warm-start ``learner`` and play every round of ``stream``.

    Labels are reached only through the ``reveal`` callback handed to the
    learner, i.e. only for accepted items.
    """
    ledger = LossLedger() if ledger is None else ledger
    learner.fit(stream.warm_X, stream.warm_y)
    for X, y in stream.rounds():
        dec = learner.run_round(X, y.__getitem__)
        ledger.record(stream.oracle, X, dec.accept)
    if isinstance(learner, PassiveLearner):
        learner.finish()
    return ledger


def _load_dataset(cfg: RunConfig):
    s = cfg.stream
    schema = s["schema"]
    schema = load_schema(schema if isinstance(schema, dict) else cfg.resolve(schema))
    X, y, _ = ingest_csv(cfg.resolve(s["path"]), schema)
    return X, y


def _build(cfg: RunConfig, seed, cutoff, dataset):
    s = dict(cfg.stream)
    kind = StreamKind(s.pop("kind"))
    if kind is StreamKind.CSV_REPLAY:
        X, y = dataset
        oracle = fit_oracle(X, y, s.get("link", "identity"), cutoff)
        return replay_stream(X, y, oracle, split_seed=seed, init_frac=s.get("init_frac", 0.05),
                             batch_size=s.get("N", 1), M=s.get("M"))
    params = dict(s.pop("params", {}) or {})
    if kind is StreamKind.SYNTHETIC_GLM and cutoff is not None:
        params["cutoff_percentile"] = cutoff
    fields = {k: s[k] for k in ("d", "T", "N", "noise_phi", "link", "B", "M", "cutoff", "warm_n") if k in s}
    for k in ("tau", "p_v", "gap", "covariates", "beta_norm", "sigma", "label_noise", "beta_star"):
        if k in s:
            params[k] = s[k]
    return build_stream(StreamSpec(kind, seed=seed, params=params, **fields))


def _run_group(cfg: RunConfig, seed, cutoff, cells, dataset):
    """Run every (method, alpha) cell sharing one stream; errors are returned, not raised."""
    rows, errors = [], []
    try:
        stream = _build(cfg, seed, cutoff, dataset)
    except OneSidedError as exc:
        return rows, [{"seed": seed, "cutoff": cutoff, "error": type(exc).__name__, "message": str(exc)}]
    for method, alpha in cells:
        run_id = make_run_id(method, alpha, cutoff, seed)
        try:
            learner = make_learner(method, stream, alpha, cfg.learner, cell_seed(seed, method, alpha, cutoff))
            ledger = run_learner(learner, stream)
        except OneSidedError as exc:
            logger.error("%s failed: %s", run_id, exc)
            errors.append({"run_id": run_id, "error": type(exc).__name__, "message": str(exc)})
            continue
        for t in range(len(ledger)):
            rows.append(ResultRow(run_id, method, seed, t + 1, ledger.r[t], ledger.R[t], ledger.accepted[t],
                                  ledger.batch_sizes[t]))
    return rows, errors


def run_experiment(cfg: RunConfig, out_dir, jobs: int = 1, methods=None, seeds=None) -> dict:
    """Run the grid and write ``results.csv``, ``summary.csv`` and ``plotdata.csv``.

    Groups sharing a (seed, cutoff) stream run in parallel when ``jobs > 1``;
    output is identical for any ``jobs``. Failed cells are listed in
    ``errors.json`` and make the returned ``exit_code`` non-zero.
    """
    if methods:
        cfg.methods = list(methods)
    if seeds:
        cfg.seeds = list(seeds)
    cfg.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(cfg) if cfg.stream["kind"] == "csv" else None
    cells = [(m, a) for m in cfg.methods for a in cfg.alphas_for(m)]
    groups = [(seed, cut) for seed in cfg.seeds for cut in cfg.cutoff_list()]
    logger.info("running %d cells over %d streams", len(cells) * len(groups), len(groups))
    if jobs == 1:
        results = [_run_group(cfg, s, c, cells, dataset) for s, c in groups]
    else:
        results = Parallel(n_jobs=jobs)(delayed(_run_group)(cfg, s, c, cells, dataset) for s, c in groups)
    rows = [r for res in results for r in res[0]]
    errors = [e for res in results for e in res[1]]
    paths = {"results": out / "results.csv", "summary": out / "summary.csv", "plotdata": out / "plotdata.csv"}
    write_results(rows, paths["results"])
    # summaries come from the written file so `summarize` on it reproduces them
    write_summary(summarize(read_results(paths["results"])), paths["summary"])
    emit_plotdata(paths["results"], paths["plotdata"])
    err_path = out / "errors.json"
    if errors:
        err_path.write_text(json.dumps(errors, indent=2) + "\n")
    elif err_path.exists():
        err_path.unlink()
    return {"exit_code": 1 if errors else 0, "errors": errors, **{k: str(v) for k, v in paths.items()}}


def emit_plotdata(results_path, out_path) -> None:
    """Average loss rate ``R_t / t`` per method and round, averaged over seeds.

    For methods run with several alphas only the best alpha (smallest mean
    final loss) is kept. When the file holds several cutoffs the method
    label becomes ``method[cut=p]``.
    """
    rows = read_results(results_path)
    best = {(s.method, s.cutoff): s.alpha for s in summarize(rows)}
    cutoffs = {parse_run_id(r.run_id)["cutoff"] for r in rows}
    series = {}
    for r in rows:
        info = parse_run_id(r.run_id)
        if best.get((info["method"], info["cutoff"])) != info["alpha"]:
            continue
        label = info["method"] if len(cutoffs) <= 1 else f"{info['method']}[cut={info['cutoff']:g}]"
        series.setdefault(label, {}).setdefault(r.round, []).append(r.R_t / r.round)
    with open(out_path, "w", newline="") as fh:
        fh.write(",".join(PLOT_HEADER) + "\n")
        for label in sorted(series):
            for t in sorted(series[label]):
                v = np.asarray(series[label][t])
                se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
                fh.write(f"{label},{t},{float(v.mean()):.6g},{se:.6g}\n")


def log_level_from_env() -> int:
    name = os.environ.get("ONESIDED_LOG", "WARNING").upper()
    return getattr(logging, name, logging.WARNING) if not name.isdigit() else int(name)


__all__ += ["final_losses", "log_level_from_env"]
