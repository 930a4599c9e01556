"""End-to-end runs: simulate -> embed -> fit -> graphs -> evaluate, replicated."""
from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from . import io as nio
from .datagen import EXAMPLES, Dataset, generate
from .embedding import ase
from .errors import InvalidInputError
from .graph import OmegaField, omega, threshold_edges
from .kernels import KernelConfig
from .metrics import (METRIC_NAMES, MODES, PER_NODE_MEAN, ConfusionCounts, aggregate,
                      confusion, format_cell, replication_report)
from .score import FitConfig, RepresenterModel, fit, median_kernel
from .selection import (CvPlan, DeltaSearch, LambdaSearch, cv_delta, cv_lambda,
                        default_delta_grid, kfold_split)

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-4, 0, 7).tolist())

# (embedding mode, embedding dimension) used when the config leaves them unset
EXAMPLE_DEFAULTS = {
    "rdpg-gaussian": ("ase", 5),
    "butterfly": ("given", 1),
    "permutation-laplace": ("ase", 3),
}


@dataclass
class RunConfig:
    example: str | None = None
    x_path: str | None = None
    edges_path: str | None = None
    embedding_path: str | None = None
    truth_path: str | None = None
    n: int = 400
    d: int = 10
    m: int | None = None
    seed: int = 0
    replications: int = 1
    lambda_grid: list = field(default_factory=lambda: list(DEFAULT_LAMBDA_GRID))
    delta_grid: list | None = None
    delta: float | None = None
    sigma_x: float | None = None
    sigma_b: float | None = None
    embedding: str | None = None
    eval_subsample: int | None = None
    folds: int = 5
    out_dir: str = "ngm-out"
    aggregation: str = PER_NODE_MEAN
    threads: int | None = None
    example_options: dict = field(default_factory=dict)
    save_omega: bool = True

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise InvalidInputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        return cls.from_dict(nio.read_json(path))

    def to_dict(self) -> dict:
        return asdict(self)

    def resolved(self) -> "RunConfig":
        """Copy with per-example defaults filled in; validates."""
        cfg = RunConfig(**self.to_dict())
        if (cfg.example is None) == (cfg.x_path is None):
            raise InvalidInputError("give exactly one of 'example' or 'x_path'")
        if cfg.example is not None:
            if cfg.example not in EXAMPLES:
                raise InvalidInputError(f"unknown example {cfg.example!r}; choose from {', '.join(EXAMPLES)}")
            mode, m = EXAMPLE_DEFAULTS[cfg.example]
            cfg.embedding = cfg.embedding or mode
            cfg.m = cfg.m or m
        else:
            cfg.embedding = cfg.embedding or ("given" if cfg.embedding_path else "ase")
            cfg.m = cfg.m or 2
            if cfg.embedding == "ase" and cfg.edges_path is None:
                raise InvalidInputError("embedding 'ase' needs edges_path")
            if cfg.embedding == "given" and cfg.embedding_path is None:
                raise InvalidInputError("embedding 'given' needs embedding_path")
        if cfg.embedding not in ("ase", "given"):
            raise InvalidInputError(f"embedding must be 'ase' or 'given', got {cfg.embedding!r}")
        if not cfg.lambda_grid or any(not (v > 0) for v in cfg.lambda_grid):
            raise InvalidInputError("lambda_grid must be nonempty and positive")
        if cfg.delta_grid is not None and (not cfg.delta_grid or any(not (v > 0) for v in cfg.delta_grid)):
            raise InvalidInputError("delta_grid must be nonempty and positive")
        if cfg.delta is not None and not (cfg.delta >= 0):
            raise InvalidInputError("delta must be >= 0")
        if cfg.replications < 1:
            raise InvalidInputError("replications must be >= 1")
        if cfg.aggregation not in MODES:
            raise InvalidInputError(f"aggregation must be one of {MODES}")
        cfg.threads = cfg.threads or os.cpu_count() or 1
        return cfg


def replication_seed(master: int, rep: int) -> int:
    return int(np.random.SeedSequence([int(master), int(rep)]).generate_state(1)[0])


class Timer:
    def __init__(self, label: str):
        self.label = label
        self.timings: dict[str, float] = {}

    def stage(self, name: str):
        timer = self

        class _Ctx:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, exc_type, exc, tb):
                dt = time.perf_counter() - self.t0
                timer.timings[name] = dt
                status = "failed" if exc_type else "done"
                logger.info("%s %s %s in %.2fs", timer.label, name, status, dt)
                if exc is not None and not hasattr(exc, "stage"):
                    exc.stage = name
        return _Ctx()


# ---- stages -----------------------------------------------------------------

def embed_stage(A, given, mode: str, m: int) -> np.ndarray:
    if mode == "given":
        B = np.asarray(given, dtype=float)
        return B[:, None] if B.ndim == 1 else B
    return ase(A, m)


def fit_stage(X, B, cfg: RunConfig, seed: int) -> tuple[RepresenterModel, LambdaSearch, CvPlan]:
    if cfg.sigma_x is not None and cfg.sigma_b is not None:
        kernel = KernelConfig(cfg.sigma_x, cfg.sigma_b)
    else:
        auto = median_kernel(X, B, sigma_b=cfg.sigma_b, seed=seed)
        kernel = KernelConfig(cfg.sigma_x or auto.sigma_x, auto.sigma_b)
    plan = kfold_split(X.shape[0], cfg.folds, seed)
    search = cv_lambda(X, B, kernel, cfg.lambda_grid, plan)
    model = fit(X, B, FitConfig(lam=search.best, kernel=kernel))
    return model, search, plan


def graph_stage(model: RepresenterModel, X, B, cfg: RunConfig, plan: CvPlan,
                seed: int) -> tuple[OmegaField, float, DeltaSearch | None]:
    full = omega(model, B, cfg.eval_subsample, seed)
    if cfg.delta is not None:
        return full, float(cfg.delta), None
    fcfg = FitConfig(lam=model.lam, kernel=model.kernel)
    fold_fields = []
    for train, _ in plan.folds():
        fm = fit(X[train], B[train], fcfg)
        sub = None if cfg.eval_subsample is None else min(cfg.eval_subsample, fm.n)
        fold_fields.append(omega(fm, B, sub, seed))
    grid = cfg.delta_grid if cfg.delta_grid is not None else default_delta_grid([full] + fold_fields)
    search = cv_delta(fold_fields, grid)
    return full, search.best, search


# ---- outputs ----------------------------------------------------------------

def write_dataset(out: Path, ds: Dataset) -> list[str]:
    nio.write_matrix_csv(out / "X.csv", ds.X)
    nio.write_edge_list(out / "A.edges", ds.A)
    nio.write_matrix_csv(out / "B_true.csv", ds.B_true)
    nio.write_edges_jsonl(out / "truth.jsonl", ds.truth)
    nio.write_json(out / "meta.json", ds.meta)
    return ["X.csv", "A.edges", "B_true.csv", "truth.jsonl", "meta.json"]


def write_lambda_table(path, search: LambdaSearch) -> None:
    rows = [(float(lam), f + 1, float(search.fold_loss[g, f]))
            for g, lam in enumerate(search.grid) for f in range(search.fold_loss.shape[1])]
    nio.write_rows_csv(path, ["lambda", "fold", "heldout_loss"], rows)


def write_delta_table(path, search: DeltaSearch) -> None:
    nio.write_rows_csv(path, ["delta", "stability_score"],
                       [(float(a), float(b)) for a, b in zip(search.grid, search.scores)])


def write_confusion(path, counts: list[ConfusionCounts]) -> None:
    nio.write_rows_csv(path, ["node", "tp", "fp", "tn", "fn"],
                       [(i, c.tp, c.fp, c.tn, c.fn) for i, c in enumerate(counts)])


def read_confusion(path) -> list[ConfusionCounts]:
    arr = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    return [ConfusionCounts(int(r[1]), int(r[2]), int(r[3]), int(r[4])) for r in arr]


def write_metric_tables(out: Path, label: str, n: int, d: int,
                        per_rep: list[list[ConfusionCounts] | None], mode: str) -> list[str]:
    """``metrics.csv`` (both modes, per replication) and ``summary.csv``
    (replication rows in ``mode`` plus one ``mean(se)`` summary row)."""
    header = ["example", "n", "d", "replication", "node_mode", *METRIC_NAMES]
    rows = []
    for r, counts in enumerate(per_rep):
        if counts is None:
            continue
        for md in MODES:
            rep = replication_report(counts, md)
            rows.append([label, n, d, r, md, *(f"{v:.6f}" for v in rep.values())])
    nio.write_rows_csv(out / "metrics.csv", header, rows)
    done = [c for c in per_rep if c is not None]
    srows = [row for row in rows if row[4] == mode]
    if done:
        mean, se = aggregate(done, mode)
        srows.append([label, n, d, "summary", mode,
                      *(format_cell(a, b) for a, b in zip(mean.values(), se.values()))])
    nio.write_rows_csv(out / "summary.csv", header, srows)
    return ["metrics.csv", "summary.csv"]


def write_manifest(out: Path, cfg: RunConfig, timings: dict, extra: dict, files: list[str]) -> None:
    inventory = {f: nio.sha256(out / f) for f in sorted(set(files))}
    nio.write_json(out / "manifest.json", {
        "config": cfg.to_dict(),
        "version": __version__,
        "timings": timings,
        "files": inventory,
        **extra,
    })


def verify_manifest(path) -> bool:
    """True if every file listed in a manifest exists with a matching checksum."""
    path = Path(path)
    try:
        man = nio.read_json(path)
        return all((path.parent / f).exists() and nio.sha256(path.parent / f) == h
                   for f, h in man["files"].items())
    except (OSError, ValueError, KeyError):
        return False


# ---- replication -----------------------------------------------------------

def _load_external(cfg: RunConfig):
    X = nio.read_matrix_csv(cfg.x_path)
    A = nio.read_edge_list(cfg.edges_path, n=X.shape[0]) if cfg.edges_path else None
    given = nio.read_matrix_csv(cfg.embedding_path) if cfg.embedding_path else None
    truth = nio.read_edges_jsonl(cfg.truth_path, d=X.shape[1]) if cfg.truth_path else None
    return X, A, given, truth


def run_replication(cfg: RunConfig, rep: int, rep_dir) -> dict:
    """Execute one replication and write its outputs into ``rep_dir``."""
    with threadpool_limits(limits=1):
        return _run_replication(cfg, rep, Path(rep_dir))


def _run_replication(cfg: RunConfig, rep: int, out: Path) -> dict:
    seed = replication_seed(cfg.seed, rep)
    timer = Timer(f"rep {rep}:")
    files: list[str] = []
    out.mkdir(parents=True, exist_ok=True)
    with timer.stage("simulate" if cfg.example is not None else "load"):
        if cfg.example is not None:
            ds = generate(cfg.example, cfg.n, cfg.d, seed, **cfg.example_options)
            files += write_dataset(out, ds)
            X, A, given, truth = ds.X, ds.A, ds.B_true, ds.truth
        else:
            X, A, given, truth = _load_external(cfg)
    with timer.stage("embed"):
        B = embed_stage(A, given, cfg.embedding, cfg.m)
        nio.write_matrix_csv(out / "embedding.csv", B)
        files.append("embedding.csv")
    with timer.stage("fit"):
        model, lsearch, plan = fit_stage(X, B, cfg, seed)
        nio.save_model(out / "model.bin", model)
        write_lambda_table(out / "cv_lambda.csv", lsearch)
        files += ["model.bin", "cv_lambda.csv"]
    with timer.stage("graphs"):
        field_, delta, dsearch = graph_stage(model, X, B, cfg, plan, seed)
        pred = threshold_edges(field_, delta)
        nio.write_edges_jsonl(out / "edges.jsonl", pred)
        files.append("edges.jsonl")
        if cfg.save_omega:
            nio.write_omega_csv(out / "omega.csv", field_)
            files.append("omega.csv")
        if dsearch is not None:
            write_delta_table(out / "cv_delta.csv", dsearch)
            files.append("cv_delta.csv")
    counts = None
    if truth is not None:
        with timer.stage("evaluate"):
            counts = confusion(pred, truth)
            write_confusion(out / "confusion.csv", counts)
            files.append("confusion.csv")
    info = {"replication": rep, "seed": seed, "lambda": model.lam, "delta": delta,
            "sigma_x": model.kernel.sigma_x, "sigma_b": model.kernel.sigma_b,
            "lambda_grid_of_one": len(set(cfg.lambda_grid)) == 1}
    write_manifest(out, cfg, timer.timings, {"selected": info}, files)
    return info


def _rep_worker(args):
    cfg, rep, rep_dir = args
    try:
        return rep, run_replication(cfg, rep, rep_dir), None
    except Exception as exc:  # one failed replication must not abort the run
        stage = getattr(exc, "stage", "unknown")
        return rep, None, f"stage {stage}: {type(exc).__name__}: {exc}"


def cmd_run(cfg: RunConfig, resume: bool = False) -> int:
    """Run all replications and write run-level tables; returns an exit code."""
    cfg = cfg.resolved()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results: dict[int, dict] = {}
    pending = []
    for rep in range(cfg.replications):
        rep_dir = out / f"rep_{rep:03d}"
        if resume and verify_manifest(rep_dir / "manifest.json"):
            results[rep] = nio.read_json(rep_dir / "manifest.json")["selected"]
            logger.info("rep %d: reused verified outputs", rep)
        else:
            pending.append((cfg, rep, rep_dir))
    failures = {}
    if cfg.threads > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.threads, len(pending))) as pool:
            outcomes = list(pool.map(_rep_worker, pending))
    else:
        outcomes = [_rep_worker(p) for p in pending]
    for rep, info, err in outcomes:
        if err is None:
            results[rep] = info
        else:
            failures[rep] = err
            logger.error("rep %d failed at %s", rep, err)

    per_rep = []
    for rep in range(cfg.replications):
        path = out / f"rep_{rep:03d}" / "confusion.csv"
        per_rep.append(read_confusion(path) if rep in results and path.exists() else None)
    files = []
    if any(c is not None for c in per_rep):
        label = cfg.example or "external"
        n, d = (cfg.n, cfg.d) if cfg.example else _external_shape(cfg)
        files += write_metric_tables(out, label, n, d, per_rep, cfg.aggregation)
    files += [f"rep_{r:03d}/manifest.json" for r in sorted(results)]
    write_manifest(out, cfg, {"total": time.perf_counter() - t0}, {
        "replications": [results[r] for r in sorted(results)],
        "failures": {str(k): v for k, v in sorted(failures.items())},
    }, files)
    return 1 if failures else 0


def _external_shape(cfg: RunConfig) -> tuple[int, int]:
    X = nio.read_matrix_csv(cfg.x_path)
    return X.shape


# ---- single-stage commands ---------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> list[str]:
    cfg = cfg.resolved()
    if cfg.example is None:
        raise InvalidInputError("simulate needs an example name")
    out = Path(cfg.out_dir)
    timer = Timer("simulate:")
    with timer.stage("simulate"):
        ds = generate(cfg.example, cfg.n, cfg.d, cfg.seed, **cfg.example_options)
        files = write_dataset(out, ds)
    write_manifest(out, cfg, timer.timings, {"seeds": {"dataset": cfg.seed}}, files)
    return files


def cmd_embed(edges_path, m: int, out_dir, n: int | None = None) -> Path:
    A = nio.read_edge_list(edges_path, n=n)
    B = ase(A, m)
    out = Path(out_dir)
    nio.write_matrix_csv(out / "embedding.csv", B)
    return out / "embedding.csv"


def cmd_fit(cfg: RunConfig) -> Path:
    """Fit on external files named in ``cfg`` (x_path + embedding_path or edges_path)."""
    cfg = cfg.resolved()
    if cfg.x_path is None:
        raise InvalidInputError("fit needs x_path")
    out = Path(cfg.out_dir)
    timer = Timer("fit:")
    with timer.stage("load"):
        X, A, given, _ = _load_external(cfg)
    with timer.stage("embed"):
        B = embed_stage(A, given, cfg.embedding, cfg.m)
        nio.write_matrix_csv(out / "embedding.csv", B)
    with timer.stage("fit"):
        model, search, _ = fit_stage(X, B, cfg, cfg.seed)
        nio.save_model(out / "model.bin", model)
        write_lambda_table(out / "cv_lambda.csv", search)
    grid_of_one = len(set(cfg.lambda_grid)) == 1
    write_manifest(out, cfg, timer.timings, {
        "selected": {"lambda": model.lam, "sigma_x": model.kernel.sigma_x,
                     "sigma_b": model.kernel.sigma_b},
        "notes": ["grid-of-one"] if grid_of_one else [],
        "seeds": {"folds": cfg.seed},
    }, ["embedding.csv", "model.bin", "cv_lambda.csv"])
    return out / "model.bin"


def cmd_graphs(cfg: RunConfig, model_path, embedding_path) -> Path:
    """Omega field, threshold selection and edge export for a saved model."""
    out = Path(cfg.out_dir)
    timer = Timer("graphs:")
    with timer.stage("load"):
        model = nio.load_model(model_path)
        B = nio.read_matrix_csv(embedding_path)
        X = model.train_x * model.scale + model.center
    plan = kfold_split(model.n, cfg.folds, cfg.seed)
    with timer.stage("omega"):
        field_, delta, search = graph_stage(model, X, B, cfg, plan, cfg.seed)
    files = ["edges.jsonl"]
    with timer.stage("export"):
        nio.write_edges_jsonl(out / "edges.jsonl", threshold_edges(field_, delta))
        if cfg.save_omega:
            nio.write_omega_csv(out / "omega.csv", field_)
            files.append("omega.csv")
        if search is not None:
            write_delta_table(out / "cv_delta.csv", search)
            files.append("cv_delta.csv")
    write_manifest(out, cfg, timer.timings, {"selected": {"delta": delta}}, files)
    return out / "edges.jsonl"


def cmd_evaluate(pred_paths, truth_paths, mode: str, out_dir, label: str = "external") -> list[str]:
    if len(pred_paths) != len(truth_paths) or not pred_paths:
        raise InvalidInputError("need matching, nonempty lists of prediction and truth files")
    if mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}")
    per_rep = []
    n = d = None
    for p, t in zip(pred_paths, truth_paths):
        truth = nio.read_edges_jsonl(t)
        pred = nio.read_edges_jsonl(p, d=truth.d)
        per_rep.append(confusion(pred, truth))
        n, d = truth.n, truth.d
    return write_metric_tables(Path(out_dir), label, n, d, per_rep, mode)


def dumps_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)
