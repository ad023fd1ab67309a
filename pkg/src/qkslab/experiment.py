"""Experiment orchestration: sweeps, reference trials, EQA, PTRI, variability.

A sweep walks a grid of (feature count, dataset size) points.  Per point
and trial it draws one stratified subset and evaluates every kernel on
that same subset (paired design), so kernel comparisons are same-data by
construction.  Trial seeds derive from mix64(master_seed, F, N, trial),
which makes the whole sweep a pure function of its arguments.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, SubsetSpec, sample_subset, scale_split
from .kernels import KernelConfig, gram_pair, resolve_gamma
from .metrics import balanced_accuracy, confusion, f1
from .seeding import mix64
from .svm import predict, train

DEFAULT_SIZES = (200, 250, 300, 350, 400)
DEFAULT_FEATURE_COUNTS = (5, 6, 7)


class ExperimentError(RuntimeError):
    """Failure inside a sweep, annotated with its (config, trial) coordinates."""


@dataclass(frozen=True)
class ConfigPoint:
    features: int
    size: int


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    trial_seed: int
    balanced_accuracy: float
    f1: float
    fingerprint: str  # digest of the train/test row ids (paired-design witness)


@dataclass(eq=False)
class SweepResult:
    configs: tuple[ConfigPoint, ...]
    kernel_names: tuple[str, ...]
    trials: int
    master_seed: int
    split_ratio: float
    svm_c: float
    svm_tol: float
    cells: dict[tuple[int, int, str], list[TrialRecord]]
    kernel_configs: dict[str, KernelConfig] | None = None

    def records(self, config: ConfigPoint, kernel: str) -> list[TrialRecord]:
        return self.cells[(config.features, config.size, kernel)]

    def metric_values(self, config: ConfigPoint, kernel: str, metric: str = "balanced_accuracy") -> list[float]:
        return [getattr(r, metric) for r in self.records(config, kernel)]


def mean_std(values) -> tuple[float, float]:
    """Mean and sample standard deviation (n-1); std is 0.0 for n < 2."""
    vals = list(values)
    n = len(vals)
    m = math.fsum(vals) / n
    if n < 2:
        return m, 0.0
    return m, math.sqrt(math.fsum((v - m) ** 2 for v in vals) / (n - 1))


def _subset_fingerprint(train: Dataset, test: Dataset) -> str:
    text = " ".join(train.ids) + "|" + " ".join(test.ids)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _kernel_for(config: KernelConfig, num_features: int, trial_seed: int) -> KernelConfig:
    """Instantiate a sweep kernel template at a grid point."""
    seed = mix64(config.master_seed, trial_seed)
    if config.kind == "quantum":
        fm = replace(config.feature_map, num_features=num_features)
        return replace(config, feature_map=fm, master_seed=seed)
    return replace(config, master_seed=seed)


def evaluate_kernels_on_subset(train_ds: Dataset, test_ds: Dataset, kernels: dict[str, KernelConfig],
                               svm_c: float, svm_tol: float, seed: int) -> dict[str, tuple[float, float]]:
    """Train and score every kernel on one already-scaled train/test split."""
    out: dict[str, tuple[float, float]] = {}
    for name, kcfg in kernels.items():
        kcfg = resolve_gamma(kcfg, train_ds.X)
        train_gram, cross_gram = gram_pair(train_ds.X, test_ds.X, kcfg,
                                           train_ids=train_ds.ids, test_ids=test_ds.ids)
        model = train(train_gram, train_ds.y, C=svm_c, tol=svm_tol, seed=seed)
        cm = confusion(test_ds.y, predict(model, cross_gram))
        out[name] = (balanced_accuracy(cm), f1(cm))
    return out


def run_sweep(ds: Dataset, configs, kernels, trials: int, master_seed: int,
              split_ratio: float = 0.7, svm_c: float = 1.0, svm_tol: float = 1e-3,
              progress=None) -> SweepResult:
    """Evaluate every kernel at every (config, trial) on shared subsets."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    configs = tuple(ConfigPoint(c.features, c.size) if isinstance(c, ConfigPoint) else ConfigPoint(*c)
                    for c in configs)
    kernel_map = {k.name: k for k in kernels}
    if len(kernel_map) != len(kernels):
        raise ValueError("kernel names must be unique")
    cells: dict[tuple[int, int, str], list[TrialRecord]] = {
        (c.features, c.size, name): [] for c in configs for name in kernel_map
    }
    for cfg in configs:
        for t in range(trials):
            trial_seed = mix64(master_seed, cfg.features, cfg.size, t)
            try:
                subset = SubsetSpec(cfg.size, cfg.features, trial_seed, split_ratio)
                train_ds, test_ds = scale_split(*sample_subset(ds, subset))
                fingerprint = _subset_fingerprint(train_ds, test_ds)
                trial_kernels = {name: _kernel_for(k, cfg.features, trial_seed)
                                 for name, k in kernel_map.items()}
                scores = evaluate_kernels_on_subset(train_ds, test_ds, trial_kernels,
                                                    svm_c, svm_tol, trial_seed)
            except Exception as exc:
                raise ExperimentError(
                    f"config (F={cfg.features}, N={cfg.size}) trial {t}: {exc}") from exc
            for name, (ba, f1_score) in scores.items():
                cells[(cfg.features, cfg.size, name)].append(
                    TrialRecord(t, trial_seed, ba, f1_score, fingerprint))
            if progress is not None:
                progress(cfg, t)
    return SweepResult(configs, tuple(kernel_map), trials, master_seed, split_ratio,
                       svm_c, svm_tol, cells, kernel_map)


@dataclass(frozen=True)
class ReferenceTrials:
    closest_to_mean: int
    closest_to_min: int
    closest_to_max: int


def select_reference_trials(sr: SweepResult, baseline: str) -> dict[ConfigPoint, ReferenceTrials]:
    """Trial indices where the baseline's BA is nearest its mean/min/max.

    Ties break toward the lowest trial index.
    """
    if baseline not in sr.kernel_names:
        raise ValueError(f"baseline kernel {baseline!r} not present in the sweep")
    out: dict[ConfigPoint, ReferenceTrials] = {}
    for cfg in sr.configs:
        bas = sr.metric_values(cfg, baseline)
        mean, _ = mean_std(bas)

        def nearest(target: float) -> int:
            return min(range(len(bas)), key=lambda t: (abs(bas[t] - target), t))

        out[cfg] = ReferenceTrials(nearest(mean), nearest(min(bas)), nearest(max(bas)))
    return out


def eqa_difference(sr: SweepResult, quantum: str, classical: str) -> dict[ConfigPoint, float]:
    """Mean BA difference quantum minus classical per grid point.

    Positive values sit above the zero-advantage line.
    """
    for name in (quantum, classical):
        if name not in sr.kernel_names:
            raise ValueError(f"kernel {name!r} not present in the sweep")
    out: dict[ConfigPoint, float] = {}
    for cfg in sr.configs:
        qm, _ = mean_std(sr.metric_values(cfg, quantum))
        cm, _ = mean_std(sr.metric_values(cfg, classical))
        out[cfg] = qm - cm
    return out


@dataclass(eq=False)
class PTRIGrid:
    feature_axis: tuple[int, ...]
    size_axis: tuple[int, ...]
    values: dict[str, np.ndarray]  # metric surface per method
    scores: dict[str, np.ndarray]  # ruggedness surface per method


def ptri_scores(z: np.ndarray) -> np.ndarray:
    """Root-sum-of-squared differences to the up-to-8 adjacent grid cells."""
    rows, cols = z.shape
    scores = np.zeros_like(z)
    for r in range(rows):
        for c in range(cols):
            acc = 0.0
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < rows and 0 <= cc < cols:
                        acc += (z[rr, cc] - z[r, c]) ** 2
            scores[r, c] = math.sqrt(acc)
    return scores


def ptri(sr: SweepResult, method: str, metric: str = "balanced_accuracy",
         trial_selection: str = "all", baseline: str | None = None) -> PTRIGrid:
    """Ruggedness surface of a method's metric over the full config grid.

    ``trial_selection="all"`` averages every trial per cell;
    ``"reference"`` averages the two trials where the baseline (default:
    the method itself) was closest to its min and max.
    """
    if method not in sr.kernel_names:
        raise ValueError(f"kernel {method!r} not present in the sweep")
    if metric != "balanced_accuracy" and metric != "f1":
        raise ValueError(f"unknown metric {metric!r}")
    feature_axis = tuple(sorted({c.features for c in sr.configs}))
    size_axis = tuple(sorted({c.size for c in sr.configs}))
    present = {(c.features, c.size) for c in sr.configs}
    missing = [(f, n) for f in feature_axis for n in size_axis if (f, n) not in present]
    if missing:
        raise ValueError(f"config grid is ragged; missing points: {missing}")

    if trial_selection == "reference":
        refs = select_reference_trials(sr, baseline or method)
    elif trial_selection != "all":
        raise ValueError(f"unknown trial_selection {trial_selection!r}")

    z = np.zeros((len(feature_axis), len(size_axis)))
    for fi, f in enumerate(feature_axis):
        for si, n in enumerate(size_axis):
            cfg = ConfigPoint(f, n)
            vals = sr.metric_values(cfg, method, metric)
            if trial_selection == "reference":
                ref = refs[cfg]
                vals = [vals[t] for t in sorted({ref.closest_to_min, ref.closest_to_max})]
            z[fi, si], _ = mean_std(vals)
    return PTRIGrid(feature_axis, size_axis, {method: z}, {method: ptri_scores(z)})


def merge_ptri(grids) -> PTRIGrid:
    grids = list(grids)
    first = grids[0]
    for g in grids[1:]:
        if g.feature_axis != first.feature_axis or g.size_axis != first.size_axis:
            raise ValueError("cannot merge PTRI grids with different axes")
        first.values.update(g.values)
        first.scores.update(g.scores)
    return first


@dataclass(eq=False)
class VariabilityResult:
    features: int
    size: int
    kernel_name: str
    trials: int
    master_seed: int
    records: list[TrialRecord]
    mean: float
    std: float
    bin_edges: np.ndarray
    bin_counts: np.ndarray


def variability_study(ds: Dataset, config: ConfigPoint, kernel: KernelConfig, trials: int,
                      master_seed: int, split_ratio: float = 0.7, svm_c: float = 1.0,
                      svm_tol: float = 1e-3, bins: int = 20,
                      trial_seeds: list[int] | None = None) -> VariabilityResult:
    """Repeat subset-train-test cycles and summarize the BA distribution.

    ``trial_seeds`` overrides the derived per-trial seeds (e.g. to replay
    selected trials); its length must equal ``trials``.
    """
    if trials < 2:
        raise ValueError("variability needs at least two trials")
    if trial_seeds is not None and len(trial_seeds) != trials:
        raise ValueError("trial_seeds must have one entry per trial")
    records: list[TrialRecord] = []
    for t in range(trials):
        seed = trial_seeds[t] if trial_seeds is not None else mix64(master_seed, config.features,
                                                                    config.size, t)
        subset = SubsetSpec(config.size, config.features, seed, split_ratio)
        train_ds, test_ds = scale_split(*sample_subset(ds, subset))
        kcfg = _kernel_for(kernel, config.features, seed)
        scores = evaluate_kernels_on_subset(train_ds, test_ds, {kernel.name: kcfg},
                                            svm_c, svm_tol, seed)
        ba, f1_score = scores[kernel.name]
        records.append(TrialRecord(t, seed, ba, f1_score, _subset_fingerprint(train_ds, test_ds)))
    bas = [r.balanced_accuracy for r in records]
    mean, std = mean_std(bas)
    lo, hi = min(bas), max(bas)
    if hi <= lo:  # degenerate distribution still gets plottable bins
        lo, hi = lo - 0.005, hi + 0.005
    counts, edges = np.histogram(bas, bins=bins, range=(lo, hi))
    return VariabilityResult(config.features, config.size, kernel.name, trials, master_seed,
                             records, mean, std, edges, counts)


# --- serialization ----------------------------------------------------------------

SWEEP_FORMAT = "qkslab-sweep"
PTRI_FORMAT = "qkslab-ptri"
VARIABILITY_FORMAT = "qkslab-variability"
RESULT_VERSION = "1.0"


def _kernel_config_doc(config: KernelConfig) -> dict:
    doc = {"name": config.name, "kind": config.kind, "mode": config.mode,
           "shots": config.shots, "master_seed": config.master_seed}
    if config.kind == "quantum":
        doc["pauli_layers"] = list(config.feature_map.pauli_layers)
        doc["repetitions"] = config.feature_map.repetitions
    else:
        doc["gamma"] = config.gamma
    return doc


def _record_doc(r: TrialRecord) -> dict:
    return {"trial": r.trial, "trial_seed": r.trial_seed,
            "balanced_accuracy": r.balanced_accuracy, "f1": r.f1, "fingerprint": r.fingerprint}


def sweep_to_doc(sr: SweepResult) -> dict:
    cells = []
    for (features, size, kernel), records in sorted(sr.cells.items()):
        mean_ba, std_ba = mean_std(r.balanced_accuracy for r in records)
        mean_f1, std_f1 = mean_std(r.f1 for r in records)
        cells.append({
            "features": features, "size": size, "kernel": kernel,
            "records": [_record_doc(r) for r in records],
            "mean_balanced_accuracy": mean_ba, "std_balanced_accuracy": std_ba,
            "mean_f1": mean_f1, "std_f1": std_f1,
        })
    return {
        "format": SWEEP_FORMAT, "version": RESULT_VERSION,
        "master_seed": sr.master_seed, "trials": sr.trials, "split_ratio": sr.split_ratio,
        "svm": {"C": sr.svm_c, "tol": sr.svm_tol},
        "configs": [[c.features, c.size] for c in sr.configs],
        "kernels": [_kernel_config_doc(sr.kernel_configs[name]) for name in sr.kernel_names]
        if sr.kernel_configs else [{"name": n} for n in sr.kernel_names],
        "cells": cells,
    }


def sweep_from_doc(doc: dict) -> SweepResult:
    if doc.get("format") != SWEEP_FORMAT:
        raise ValueError(f"not a {SWEEP_FORMAT} document")
    if str(doc.get("version", "")).split(".")[0] != RESULT_VERSION.split(".")[0]:
        raise ValueError(f"unsupported format version {doc.get('version')}")
    cells: dict[tuple[int, int, str], list[TrialRecord]] = {}
    names = [k["name"] for k in doc["kernels"]]
    for cell in doc["cells"]:
        key = (cell["features"], cell["size"], cell["kernel"])
        if cell["kernel"] not in names:
            names.append(cell["kernel"])
        cells[key] = [TrialRecord(r["trial"], r["trial_seed"], r["balanced_accuracy"],
                                  r["f1"], r["fingerprint"]) for r in cell["records"]]
    return SweepResult(
        tuple(ConfigPoint(f, n) for f, n in doc["configs"]),
        tuple(names),
        doc["trials"], doc["master_seed"], doc["split_ratio"],
        doc["svm"]["C"], doc["svm"]["tol"], cells,
    )


def ptri_to_doc(grid: PTRIGrid, metric: str, trial_selection: str, baseline: str | None) -> dict:
    return {
        "format": PTRI_FORMAT, "version": RESULT_VERSION,
        "metric": metric, "trial_selection": trial_selection, "baseline": baseline,
        "feature_axis": list(grid.feature_axis), "size_axis": list(grid.size_axis),
        "surfaces": {
            method: {"values": grid.values[method].tolist(), "scores": grid.scores[method].tolist()}
            for method in sorted(grid.values)
        },
    }


def variability_to_doc(vr: VariabilityResult) -> dict:
    return {
        "format": VARIABILITY_FORMAT, "version": RESULT_VERSION,
        "features": vr.features, "size": vr.size, "kernel": vr.kernel_name,
        "trials": vr.trials, "master_seed": vr.master_seed,
        "records": [_record_doc(r) for r in vr.records],
        "mean": vr.mean, "std": vr.std,
        "histogram": {"bin_edges": vr.bin_edges.tolist(), "counts": vr.bin_counts.tolist()},
    }


def write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def result_table_rows(doc: dict) -> tuple[list[str], list[list]]:
    """Flatten any result document into plot-ready tabular rows."""
    kind = doc.get("format")
    if kind == SWEEP_FORMAT:
        header = ["features", "size", "kernel", "trial", "trial_seed", "balanced_accuracy", "f1"]
        rows = [[c["features"], c["size"], c["kernel"], r["trial"], r["trial_seed"],
                 repr(r["balanced_accuracy"]), repr(r["f1"])]
                for c in doc["cells"] for r in c["records"]]
        return header, rows
    if kind == PTRI_FORMAT:
        header = ["method", "features", "size", "mean_metric", "score"]
        rows = []
        for method, surface in sorted(doc["surfaces"].items()):
            for fi, f in enumerate(doc["feature_axis"]):
                for si, n in enumerate(doc["size_axis"]):
                    rows.append([method, f, n, repr(surface["values"][fi][si]),
                                 repr(surface["scores"][fi][si])])
        return header, rows
    if kind == VARIABILITY_FORMAT:
        header = ["trial", "trial_seed", "balanced_accuracy", "f1"]
        rows = [[r["trial"], r["trial_seed"], repr(r["balanced_accuracy"]), repr(r["f1"])]
                for r in doc["records"]]
        return header, rows
    raise ValueError(f"cannot tabulate document format {kind!r}")


def write_table(doc: dict, path) -> None:
    header, rows = result_table_rows(doc)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
