"""End-to-end orchestration: filter -> pretrain -> co-train -> evaluate,
parameter sweeps, the linear-scaling benchmark, and artifact/manifest IO.

Every pipeline run writes a fixed artifact set under its output directory
(metrics.json, metrics.csv, loss.csv, assignments.txt, checkpoint.npz,
filtered.npz, manifest.json). The manifest embeds the fully resolved
configuration and seeds, so re-running from it reproduces the metric values
bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import time
import tracemalloc
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import CacheMismatchError, PipelineStageError
from .filters import (FilterConfig, filter_exact, filter_randomwalk,
                      load_filtered_cache, save_filtered_cache)
from .graph import (CsrGraph, augment_self_loops, load_edge_list,
                    load_features, load_labels, rmat_generate, save_labels)
from .metrics import MetricReport, evaluate_all
from .spectral import spectral_report, verify_claim1, verify_claim2
from .training import (TrainConfig, loss_history_to_csv, pretrain_autoencoder,
                       save_checkpoint, train_rwsl)

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved pipeline configuration."""

    edges: str
    n_nodes: int
    features: str
    k: int
    out: str
    labels: str = ""
    repeat: int = 1
    filter_method: str = "exact"
    filter: FilterConfig = field(default_factory=FilterConfig)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.repeat < 1:
            raise ValueError("repeat must be >= 1")
        if self.filter_method not in ("exact", "randomwalk"):
            raise ValueError("filter_method must be 'exact' or 'randomwalk'")


# ---------------------------------------------------------------------------
# configuration files: flat "key = value" text or JSON (plain or manifest)

_FILTER_KEYS = {"alpha": "alpha", "hops": "hops", "rrz": "rrz",
                "r_max": "r_max", "n_walks": "n_walks"}
_TRAIN_KEYS = {"learning_rate": "learning_rate", "pretrain_lr": "pretrain_lr",
               "n_epochs": "n_epochs", "pretrain_n_epochs": "pretrain_n_epochs",
               "batch_size": "batch_size", "beta": "beta", "gamma": "gamma_loss",
               "epsilon": "epsilon_mix", "v": "v_dof", "update_p": "update_p",
               "dropout_rate": "dropout_rate", "weight_decay": "weight_decay",
               "seed": "seed", "ae_input": "ae_input",
               "kmeans_sample_cap": "kmeans_sample_cap",
               "kmeans_max_iters": "kmeans_max_iters"}
_RUN_KEYS = ("edges", "n_nodes", "features", "labels", "k", "out", "repeat",
             "filter_method")


def _coerce(token: str):
    try:
        return json.loads(token)
    except (json.JSONDecodeError, ValueError):
        return token


def parse_config_text(text: str) -> dict:
    """Parse "key = value" lines; '#' starts a comment, blanks are skipped."""
    values = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        for sep in ("=", ":"):
            if sep in line:
                key, val = line.split(sep, 1)
                break
        else:
            raise ValueError(f"config line {line_no}: expected 'key = value', got {raw!r}")
        values[key.strip()] = _coerce(val.strip())
    return values


def load_config_file(path) -> dict:
    """Load a config from key=value text, a JSON object, or a manifest."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        doc = json.loads(text)
        if "config" in doc and isinstance(doc["config"], dict):
            return dict(doc["config"])
        return doc
    return parse_config_text(text)


def parse_architecture(value) -> tuple:
    """Accept "512-2048-32", comma lists, or sequences of ints."""
    if isinstance(value, str):
        parts = value.replace(",", "-").split("-")
        return tuple(int(p) for p in parts if p.strip())
    if isinstance(value, (list, tuple)):
        return tuple(int(p) for p in value)
    return (int(value),)


def resolve_run_config(values: dict) -> RunConfig:
    """Build a RunConfig from a flat key dict (unknown keys are rejected)."""
    values = dict(values)
    filter_kwargs = {}
    for key, fname in _FILTER_KEYS.items():
        if key in values:
            filter_kwargs[fname] = values.pop(key)
    train_kwargs = {}
    for key, fname in _TRAIN_KEYS.items():
        if key in values:
            train_kwargs[fname] = values.pop(key)
    if "architecture" in values:
        train_kwargs["architecture"] = parse_architecture(values.pop("architecture"))
    run_kwargs = {k: values.pop(k) for k in _RUN_KEYS if k in values}
    if values:
        raise ValueError(f"unknown config keys: {sorted(values)}")
    return RunConfig(filter=FilterConfig(**filter_kwargs),
                     train=TrainConfig(**train_kwargs), **run_kwargs)


def run_config_to_flat(cfg: RunConfig) -> dict:
    """Inverse of ``resolve_run_config``; used by the manifest."""
    flat = {k: getattr(cfg, k) for k in _RUN_KEYS}
    for key, fname in _FILTER_KEYS.items():
        flat[key] = getattr(cfg.filter, fname)
    for key, fname in _TRAIN_KEYS.items():
        flat[key] = getattr(cfg.train, fname)
    flat["architecture"] = "-".join(str(d) for d in cfg.train.architecture)
    return flat


# ---------------------------------------------------------------------------
# artifact helpers


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _aggregate(reports: list) -> dict:
    """Mean/std per metric over repeated runs; std flagged zero for repeat=1."""
    table = np.array([[getattr(r, f) for f in MetricReport.FIELDS] for r in reports])
    mean = table.mean(axis=0)
    std = table.std(axis=0) if len(reports) > 1 else np.zeros(table.shape[1])
    return {
        "repeat": len(reports),
        "std_is_zero_flagged": len(reports) < 2,
        "mean": dict(zip(MetricReport.FIELDS, map(float, mean))),
        "std": dict(zip(MetricReport.FIELDS, map(float, std))),
    }


def write_metric_report_json(report: MetricReport, path) -> None:
    Path(path).write_text(json.dumps(report.as_dict(), indent=2) + "\n")


def write_metric_report_csv(rows: list, path) -> None:
    """CSV with the fixed metric column order; one row per dict in ``rows``."""
    with open(path, "w") as fh:
        fh.write(",".join(MetricReport.FIELDS) + "\n")
        for row in rows:
            fh.write(",".join(f"{row[f]:.17g}" for f in MetricReport.FIELDS) + "\n")


def write_distribution_csv(matrix: np.ndarray, path) -> None:
    """Row-stochastic matrix as CSV, one node per row, one cluster per column."""
    with open(path, "w") as fh:
        fh.write(",".join(f"cluster_{j}" for j in range(matrix.shape[1])) + "\n")
        for row in matrix:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


@dataclass
class PipelineOutcome:
    summary: dict                  # aggregate mean/std block
    reports: list                  # per-seed MetricReport
    seeds: list
    out_dir: Path


def _stage(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineStageError:
        raise
    except Exception as exc:
        raise PipelineStageError(stage, exc) from exc


def _filter_features(g_aug: CsrGraph, x_raw: np.ndarray, cfg: RunConfig,
                     seed: int, cache_path: Path | None):
    if cfg.filter_method == "randomwalk":
        return filter_randomwalk(g_aug, x_raw, cfg.filter, seed)
    if cache_path is not None and cache_path.exists():
        try:
            return load_filtered_cache(cache_path, g_aug, cfg.filter)
        except (CacheMismatchError, OSError, KeyError, ValueError):
            pass  # stale or unreadable: recompute below
    xf = filter_exact(g_aug, x_raw, cfg.filter)
    if cache_path is not None:
        save_filtered_cache(cache_path, xf, g_aug, cfg.filter)
    return xf


def run_pipeline(cfg: RunConfig, *, _data=None) -> PipelineOutcome:
    """Execute the full pipeline and write the artifact set.

    Repeats the pretrain/train/evaluate segment with seeds
    seed .. seed+repeat-1 and aggregates the metric reports. The top-level
    loss/assignment/checkpoint artifacts come from the first seed. ``_data``
    lets sweep drivers inject pre-loaded inputs.
    """
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if _data is None:
        g_plain = _stage("load", load_edge_list, cfg.edges, cfg.n_nodes)
        x_raw = _stage("load", load_features, cfg.features)
        labels = _stage("load", load_labels, cfg.labels) if cfg.labels else None
    else:
        g_plain, x_raw, labels = _data
    if labels is None:
        raise PipelineStageError("load", ValueError("pipeline evaluation needs a labels file"))
    if x_raw.shape[0] != g_plain.n_nodes or len(labels) != g_plain.n_nodes:
        raise PipelineStageError("load", ValueError("row counts disagree with n_nodes"))

    g_aug = _stage("filter", augment_self_loops, g_plain)
    cache_path = out_dir / "filtered.npz"
    base_seed = cfg.train.seed
    seeds = [base_seed + i for i in range(cfg.repeat)]

    reports = []
    first_artifacts_written = False
    x_filtered = None
    for seed in seeds:
        if x_filtered is None or cfg.filter_method == "randomwalk":
            x_filtered = _stage("filter", _filter_features, g_aug, x_raw, cfg,
                                seed, cache_path if cfg.filter_method == "exact" else None)
        train_cfg = replace(cfg.train, seed=seed)
        ae_x = x_filtered if train_cfg.ae_input == "filtered" else x_raw
        enc_dims = (ae_x.shape[1], *train_cfg.architecture)
        encoder, decoder = _stage("pretrain", pretrain_autoencoder, ae_x, enc_dims, train_cfg)
        result = _stage("train", train_rwsl, g_plain, x_filtered, x_raw, cfg.k,
                        train_cfg, encoder=encoder, decoder=decoder)
        report = _stage("eval", evaluate_all, g_plain, result.assignments, labels)
        reports.append(report)
        if not first_artifacts_written:
            _stage("write", loss_history_to_csv, result.loss_history, out_dir / "loss.csv")
            _stage("write", save_labels, result.assignments, out_dir / "assignments.txt")
            _stage("write", save_checkpoint, out_dir / "checkpoint.npz",
                   {"encoder": result.encoder, "decoder": result.decoder, "dnn": result.dnn},
                   {"seed": seed, "k": cfg.k}, result.optimizer, result.rng_state,
                   {"centroids": result.cluster.centroids})
            first_artifacts_written = True

    summary = _aggregate(reports)
    summary["per_seed"] = [{"seed": s} | r.as_dict() for s, r in zip(seeds, reports)]
    _stage("write", Path(out_dir / "metrics.json").write_text,
           json.dumps(summary, indent=2) + "\n")
    _stage("write", write_metric_report_csv, [summary["mean"]], out_dir / "metrics.csv")
    _stage("write", _write_manifest, cfg, seeds, out_dir)
    return PipelineOutcome(summary, reports, seeds, out_dir)


def _write_manifest(cfg: RunConfig, seeds: list, out_dir: Path) -> None:
    artifact_names = ("metrics.json", "metrics.csv", "loss.csv", "assignments.txt",
                      "checkpoint.npz", "filtered.npz")
    artifacts = {name: _sha256(out_dir / name)
                 for name in artifact_names if (out_dir / name).exists()}
    manifest = {
        "kind": "manifest",
        "version": MANIFEST_VERSION,
        "config": run_config_to_flat(cfg),
        "seeds": seeds,
        "artifacts": artifacts,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    parameter: str
    values: list
    summaries: list                 # aggregate block per value
    csv_path: Path


def _sweep(cfg: RunConfig, parameter: str, values, make_cfg) -> SweepResult:
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    g_plain = _stage("load", load_edge_list, cfg.edges, cfg.n_nodes)
    x_raw = _stage("load", load_features, cfg.features)
    labels = _stage("load", load_labels, cfg.labels) if cfg.labels else None
    summaries = []
    for value in values:
        sub = make_cfg(cfg, value)
        sub = replace(sub, out=str(out_dir / f"{parameter}_{value}"))
        outcome = run_pipeline(sub, _data=(g_plain, x_raw, labels))
        summaries.append(outcome.summary)
    csv_path = out_dir / f"sweep_{parameter}.csv"
    with open(csv_path, "w") as fh:
        fh.write(f"{parameter},metric,mean,std\n")
        for value, summary in zip(values, summaries):
            for metric in MetricReport.FIELDS:
                fh.write(f"{value},{metric},{summary['mean'][metric]:.17g},"
                         f"{summary['std'][metric]:.17g}\n")
    return SweepResult(parameter, list(values), summaries, csv_path)


def sweep_epsilon(cfg: RunConfig, values) -> SweepResult:
    """One pipeline per blend weight; emits sweep_epsilon.csv."""
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"epsilon {v} outside [0, 1]")
    return _sweep(cfg, "epsilon", values,
                  lambda c, v: replace(c, train=replace(c.train, epsilon_mix=v)))


def sweep_alpha(cfg: RunConfig, values) -> SweepResult:
    """One pipeline per teleport probability (features re-filtered each time)."""
    for v in values:
        if not 0.0 < v < 1.0:
            raise ValueError(f"alpha {v} outside (0, 1)")
    return _sweep(cfg, "alpha", values,
                  lambda c, v: replace(c, filter=replace(c.filter, alpha=v)))


# ---------------------------------------------------------------------------
# scalability benchmark

BENCH_TRAIN_CONFIG = TrainConfig(
    architecture=(256, 64),
    learning_rate=1e-3,
    pretrain_n_epochs=0,
    batch_size=512,
    dropout_rate=0.0,
    kmeans_sample_cap=10000,
    kmeans_max_iters=20,
)


DESK_SCALE_CEILING = 100_000


def bench_scalability(sizes, edge_factor: float, feat_dim: int, epochs: int,
                      repeats: int = 3, seed: int = 0, k: int = 8,
                      filter_cfg: FilterConfig | None = None,
                      train_cfg: TrainConfig | None = None,
                      max_nodes: int = DESK_SCALE_CEILING) -> list:
    """Time filter and 5-epoch-style co-training across synthetic graph sizes.

    Per size: generate a random graph (edge count ~ edge_factor * n) and a
    uniform feature matrix, then time the filter and training stages over
    ``repeats`` repetitions (medians reported). Graph/feature generation and
    IO are excluded from the timings. Training-stage peak memory is tracked
    via tracemalloc. MemoryError yields a failure row and the remaining
    sizes continue.

    ``sizes`` must be ascending. Runs are capped at the desk-scale ceiling
    of 100k nodes by default; pass a larger ``max_nodes`` to opt in.
    """
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly ascending")
    if sizes and sizes[-1] > max_nodes:
        raise ValueError(f"size {sizes[-1]} exceeds max_nodes={max_nodes}; "
                         "raise max_nodes to opt in to larger runs")
    filter_cfg = filter_cfg or FilterConfig()
    train_cfg = train_cfg or BENCH_TRAIN_CONFIG
    train_cfg = replace(train_cfg, n_epochs=epochs)
    rows = []
    for n in sizes:
        try:
            g = augment_self_loops(rmat_generate(n, edge_factor, seed))
            x = np.random.default_rng(seed).random((n, feat_dim))
            filter_times, train_times, totals, peaks = [], [], [], []
            for _ in range(max(1, repeats)):
                t0 = time.perf_counter()
                xf = filter_exact(g, x, filter_cfg)
                filter_s = time.perf_counter() - t0

                started_here = not tracemalloc.is_tracing()
                if started_here:
                    tracemalloc.start()
                tracemalloc.reset_peak()
                t0 = time.perf_counter()
                train_rwsl(g, xf, None, k, train_cfg, return_embeddings=False)
                train_s = time.perf_counter() - t0
                _, peak = tracemalloc.get_traced_memory()
                if started_here:
                    tracemalloc.stop()

                filter_times.append(filter_s)
                train_times.append(train_s)
                totals.append(filter_s + train_s)
                peaks.append(peak / 1e6)
                del xf
            rows.append({
                "n_nodes": n,
                "filter_s": float(np.median(filter_times)),
                "train_s": float(np.median(train_times)),
                "total_s": float(np.median(totals)),
                "train_peak_mb": float(np.median(peaks)),
                "status": "ok",
            })
        except MemoryError:
            rows.append({"n_nodes": n, "filter_s": float("nan"),
                         "train_s": float("nan"), "total_s": float("nan"),
                         "train_peak_mb": float("nan"), "status": "oom"})
    return rows


def bench_rows_to_csv(rows: list, path) -> None:
    with open(path, "w") as fh:
        fh.write("n_nodes,filter_s,train_s,total_s,train_peak_mb,status\n")
        for r in rows:
            fh.write(f"{r['n_nodes']},{r['filter_s']:.6g},{r['train_s']:.6g},"
                     f"{r['total_s']:.6g},{r['train_peak_mb']:.6g},{r['status']}\n")


# ---------------------------------------------------------------------------
# spectral report + claim checks for the CLI


def spectral_run(g_plain: CsrGraph, alphas, hops: int, out_dir,
                 dense_limit: int = 3000) -> dict:
    """Write eigenvalue CSVs and claim PASS/FAIL lines; returns the summary."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    alphas = sorted(alphas)
    g_aug = augment_self_loops(g_plain)
    reports = {a: spectral_report(g_aug, a, hops, dense_limit) for a in alphas}

    first = reports[alphas[0]]
    columns = {"index": np.arange(g_plain.n_nodes),
               "eigenvalue_gcn": first.eigenvalues_gcn,
               "laplacian_sym": 1.0 - first.eigenvalues_gcn}
    for a in alphas:
        columns[f"ppr_closed_a{a}"] = reports[a].eigenvalues_ppr_closed
        columns[f"ppr_laplacian_a{a}"] = 1.0 - reports[a].eigenvalues_ppr_closed
        columns[f"ppr_direct_a{a}"] = reports[a].eigenvalues_ppr_direct
    with open(out_dir / "spectrum.csv", "w") as fh:
        names = list(columns)
        fh.write(",".join(names) + "\n")
        for i in range(g_plain.n_nodes):
            fh.write(",".join(f"{columns[n][i]:.17g}" for n in names) + "\n")

    claim_lines = []
    claim1_ok = True
    for a1, a2 in zip(alphas[:-1], alphas[1:]):
        try:
            l0 = verify_claim1(a1, a2, l_max=5000)
            claim_lines.append(f"claim1 alpha=({a1},{a2}) PASS crossover={l0}")
        except Exception as exc:
            claim1_ok = False
            claim_lines.append(f"claim1 alpha=({a1},{a2}) FAIL {exc}")
    grid_alphas = np.round(np.arange(0.05, 0.951, 0.01), 10)
    grid_lambdas = np.round(np.arange(0.01, 1.991, 0.01), 10)
    claim2_ok = verify_claim2(grid_alphas, grid_lambdas)
    claim_lines.append(f"claim2 grid {len(grid_alphas)}x{len(grid_lambdas)} "
                       f"{'PASS' if claim2_ok else 'FAIL'}")
    (out_dir / "claims.txt").write_text("\n".join(claim_lines) + "\n")

    summary = {
        "alphas": list(alphas),
        "hops": hops,
        "max_abs_gap": {str(a): reports[a].max_abs_gap for a in alphas},
        "claim1_pass": claim1_ok,
        "claim2_pass": bool(claim2_ok),
    }
    (out_dir / "spectral.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary
