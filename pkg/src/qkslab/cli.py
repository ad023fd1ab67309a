"""Command-line entry point wiring the modules into file-driven runs.

Every subcommand writes a ``<out>.manifest.json`` sidecar recording the
resolved arguments, input digests, and output digests; ``qkslab replay``
re-executes a manifest and verifies the outputs are byte-identical.
Outputs never embed timestamps, so reruns reproduce files exactly.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import (DEFAULT_FEATURES, ingest, label_direction, read_dataset, synthetic_dataset,
                   sample_subset, scale_split, write_dataset, SubsetSpec)
from .experiment import (ConfigPoint, DEFAULT_FEATURE_COUNTS, DEFAULT_SIZES, merge_ptri, ptri,
                         ptri_to_doc, read_json, result_table_rows, run_sweep, sweep_from_doc,
                         sweep_to_doc, variability_study, variability_to_doc, write_json,
                         write_table)
from .kernels import SHOT_CAP, gram_matrix, quantum_config, rbf_config, resolve_gamma, write_gram
from .resources import TABLE_HEADER, verification_table
from .seeding import mix64

MANIFEST_FORMAT = "qkslab-manifest"
MANIFEST_VERSION = "1.0"

KERNEL_CHOICES = ("z", "zz", "yyy", "yzz", "zzz", "rbf")


class CliError(RuntimeError):
    pass


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(command: str, args: dict, inputs: list, outputs: list, out_path: Path) -> Path:
    doc = {
        "format": MANIFEST_FORMAT, "version": MANIFEST_VERSION, "tool_version": __version__,
        "command": command,
        "arguments": args,
        "inputs": {str(p): _sha256(Path(p)) for p in inputs},
        "outputs": {str(p): _sha256(Path(p)) for p in outputs},
    }
    manifest_path = Path(str(out_path) + ".manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest_path


def _make_kernel(name: str, features: int, reps: int, mode: str, shots, seed: int,
                 gamma, allow_overshoot: bool):
    if name == "rbf":
        return rbf_config(gamma=gamma, master_seed=seed)
    return quantum_config(name, features, reps, mode, shots if mode == "shots" else None,
                          seed, allow_overshoot)


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise CliError(f"expected a comma-separated integer list, got {text!r}") from None


# --- subcommands ---------------------------------------------------------------

def cmd_ingest(args) -> int:
    out = Path(args.out)
    if args.synthetic is not None:
        ds = synthetic_dataset(args.synthetic, days=args.days)
        inputs: list = []
        arg_doc = {"synthetic": args.synthetic, "days": args.days, "out": str(out)}
    else:
        if not args.index or not args.gold:
            raise CliError("provide --index and --gold, or --synthetic SEED")
        for path in (args.index, args.gold):
            if not Path(path).exists():
                raise CliError(f"file not found: {path}")
        columns = tuple(args.columns.split(",")) if args.columns else DEFAULT_FEATURES
        ds = label_direction(ingest(args.index, args.gold), feature_columns=columns)
        inputs = [args.index, args.gold]
        arg_doc = {"index": str(args.index), "gold": str(args.gold),
                   "columns": ",".join(columns), "out": str(out)}
    write_dataset(ds, out)
    _write_manifest("ingest", arg_doc, inputs, [out], out)
    pos = int(np.sum(ds.y == 1))
    print(f"rows={len(ds)} positive={pos} negative={len(ds) - pos} features={len(ds.feature_names)}")
    return 0


def cmd_kernel(args) -> int:
    if args.mode == "shots" and args.shots > SHOT_CAP and not args.allow_overshoot:
        raise CliError(f"shots={args.shots} exceeds the {SHOT_CAP}-shot cap "
                       "(use --allow-overshoot to override)")
    ds = read_dataset(args.dataset)
    size = args.size if args.size is not None else len(ds)
    subset = SubsetSpec(size, args.features, mix64(args.seed, size, args.features),
                        args.split_ratio)
    train_ds, test_ds = scale_split(*sample_subset(ds, subset))
    config = _make_kernel(args.map, args.features, args.reps, args.mode,
                          args.shots, args.seed, args.gamma, args.allow_overshoot)
    config = resolve_gamma(config, train_ds.X)
    if args.rows == "train":
        gram = gram_matrix(train_ds.X, None, config, row_ids=train_ds.ids,
                           clip=False if args.no_psd_clip else None)
    else:
        gram = gram_matrix(test_ds.X, train_ds.X, config,
                           row_ids=test_ds.ids, col_ids=train_ds.ids)
    out = Path(args.out)
    write_gram(gram, out)
    arg_doc = {k: getattr(args, k) for k in
               ("dataset", "map", "features", "reps", "mode", "shots", "seed", "rows",
                "size", "split_ratio", "gamma", "allow_overshoot", "no_psd_clip")}
    arg_doc["out"] = str(out)
    _write_manifest("kernel", arg_doc, [args.dataset], [out], out)
    shape = gram.values.shape
    print(f"kernel={config.name} mode={config.mode} rows={shape[0]} cols={shape[1]} "
          f"symmetric={int(gram.symmetric)}")
    return 0


def _sweep_kernels(args):
    kernels = []
    for name in args.kernels.split(","):
        name = name.strip()
        if name not in KERNEL_CHOICES:
            raise CliError(f"unknown kernel {name!r}; choose from {KERNEL_CHOICES}")
        # feature count is a template here; the sweep re-instantiates per grid point
        kernels.append(_make_kernel(name, max(DEFAULT_FEATURE_COUNTS), args.reps, args.mode,
                                    args.shots, args.seed, args.gamma, args.allow_overshoot))
    return kernels


def cmd_sweep(args) -> int:
    if args.mode == "shots" and args.shots > SHOT_CAP and not args.allow_overshoot:
        raise CliError(f"shots={args.shots} exceeds the {SHOT_CAP}-shot cap "
                       "(use --allow-overshoot to override)")
    ds = read_dataset(args.dataset)
    sizes = _parse_int_list(args.sizes)
    feature_counts = _parse_int_list(args.features)
    configs = [ConfigPoint(f, n) for f in feature_counts for n in sizes]
    sr = run_sweep(ds, configs, _sweep_kernels(args), args.trials, args.seed,
                   args.split_ratio, args.c, args.tol)
    out = Path(args.out)
    doc = sweep_to_doc(sr)
    write_json(doc, out)
    outputs = [out]
    if args.table:
        write_table(doc, args.table)
        outputs.append(Path(args.table))
    arg_doc = {k: getattr(args, k) for k in
               ("dataset", "sizes", "features", "kernels", "trials", "seed", "mode", "shots",
                "reps", "gamma", "split_ratio", "c", "tol", "allow_overshoot")}
    arg_doc["out"] = str(out)
    arg_doc["table"] = str(args.table) if args.table else None
    _write_manifest("sweep", arg_doc, [args.dataset], outputs, out)
    print(f"configs={len(configs)} kernels={len(sr.kernel_names)} trials={args.trials} "
          f"records={sum(len(v) for v in sr.cells.values())}")
    return 0


def cmd_ptri(args) -> int:
    sr = sweep_from_doc(read_json(args.sweep))
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    grid = merge_ptri(ptri(sr, m, args.metric, args.selection, args.baseline) for m in methods)
    doc = ptri_to_doc(grid, args.metric, args.selection, args.baseline)
    out = Path(args.out)
    write_json(doc, out)
    outputs = [out]
    if args.table:
        write_table(doc, args.table)
        outputs.append(Path(args.table))
    arg_doc = {"sweep": str(args.sweep), "methods": args.methods, "metric": args.metric,
               "selection": args.selection, "baseline": args.baseline,
               "out": str(out), "table": str(args.table) if args.table else None}
    _write_manifest("ptri", arg_doc, [args.sweep], outputs, out)
    for method in methods:
        print(f"{method}: max_score={grid.scores[method].max():.6f}")
    return 0


def cmd_variability(args) -> int:
    ds = read_dataset(args.dataset)
    kernel = _make_kernel(args.kernel, args.features, args.reps, args.mode,
                          args.shots, args.seed, args.gamma, args.allow_overshoot)
    vr = variability_study(ds, ConfigPoint(args.features, args.size), kernel, args.trials,
                           args.seed, args.split_ratio, args.c, args.tol, args.bins)
    doc = variability_to_doc(vr)
    out = Path(args.out)
    write_json(doc, out)
    outputs = [out]
    if args.table:
        write_table(doc, args.table)
        outputs.append(Path(args.table))
    arg_doc = {k: getattr(args, k) for k in
               ("dataset", "size", "features", "kernel", "trials", "seed", "mode", "shots",
                "reps", "gamma", "split_ratio", "c", "tol", "bins", "allow_overshoot")}
    arg_doc["out"] = str(out)
    arg_doc["table"] = str(args.table) if args.table else None
    _write_manifest("variability", arg_doc, [args.dataset], outputs, out)
    print(f"trials={vr.trials} mean={vr.mean:.6f} std={vr.std:.6f}")
    return 0


def cmd_resources(args) -> int:
    feature_counts = _parse_int_list(args.features)
    reps = _parse_int_list(args.reps)
    rows = verification_table(feature_counts, reps, verify=args.verify)
    widths = [max(len(str(h)), 10) for h in TABLE_HEADER]
    print("  ".join(h.ljust(w) for h, w in zip(TABLE_HEADER, widths)))
    for row in rows:
        print("  ".join(str("" if v is None else v).ljust(w) for v, w in zip(row, widths)))
    if args.out:
        out = Path(args.out)
        with open(out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(TABLE_HEADER)
            writer.writerows(rows)
        _write_manifest("resources", {"features": args.features, "reps": args.reps,
                                      "verify": args.verify, "out": str(out)}, [], [out], out)
    if args.verify and not all(row[-1] for row in rows):
        raise CliError("formula/circuit mismatch in resource verification")
    return 0


def cmd_report(args) -> int:
    doc = read_json(args.input)
    out = Path(args.out)
    write_table(doc, out)
    _write_manifest("report", {"input": str(args.input), "out": str(out)}, [args.input], [out], out)
    header, rows = result_table_rows(doc)
    print(f"kind={doc.get('format')} columns={len(header)} rows={len(rows)}")
    return 0


def cmd_replay(args) -> int:
    with open(args.manifest, encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MANIFEST_FORMAT:
        raise CliError(f"{args.manifest}: not a {MANIFEST_FORMAT} file")
    if str(manifest.get("version", "")).split(".")[0] != MANIFEST_VERSION.split(".")[0]:
        raise CliError(f"{args.manifest}: unsupported manifest version {manifest.get('version')}")
    for path, digest in manifest["inputs"].items():
        if not Path(path).exists():
            raise CliError(f"replay input missing: {path}")
        if _sha256(Path(path)) != digest:
            raise CliError(f"replay input changed since the original run: {path}")
    command = manifest["command"]
    argv = [command]
    for key, value in manifest["arguments"].items():
        if value is None or value is False:
            continue
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif command == "replay":
            raise CliError("manifests of replay runs cannot be replayed")
        else:
            argv.extend([flag, str(value)])
    code = main(argv)
    if code != 0:
        return code
    mismatched = [path for path, digest in manifest["outputs"].items()
                  if _sha256(Path(path)) != digest]
    if mismatched:
        raise CliError(f"replay outputs differ from the manifest: {mismatched}")
    print(f"replayed {command}: {len(manifest['outputs'])} output file(s) byte-identical")
    return 0


# --- argument parsing -------------------------------------------------------------

def _add_kernel_flags(sub, with_map_choice: bool = True) -> None:
    if with_map_choice:
        sub.add_argument("--map", choices=KERNEL_CHOICES, required=True)
    sub.add_argument("--reps", type=int, default=2, help="feature-map repetitions (default 2)")
    sub.add_argument("--mode", choices=("exact", "shots"), default="exact")
    sub.add_argument("--shots", type=int, default=SHOT_CAP)
    sub.add_argument("--gamma", type=float, default=None,
                     help="rbf gamma; default derives 1/(F*var) from the train split")
    sub.add_argument("--allow-overshoot", action="store_true",
                     help=f"permit more than {SHOT_CAP} shots")


def _add_svm_flags(sub) -> None:
    sub.add_argument("--c", type=float, default=1.0, help="soft-margin C (default 1.0)")
    sub.add_argument("--tol", type=float, default=1e-3, help="SMO stopping tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkslab",
                                     description="Quantum-kernel SVM laboratory")
    parser.add_argument("--version", action="version", version=f"qkslab {__version__}")
    parser.add_argument("--threads", type=int, default=1,
                        help="parallelism bound; execution is sequential and results "
                             "never depend on this value")
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("ingest", help="parse/join CSVs (or generate synthetic data) into a dataset file")
    s.add_argument("--index", help="index CSV: Date, Price, Open, High, Low, Vol., Change %")
    s.add_argument("--gold", help="gold CSV: Date, Price")
    s.add_argument("--synthetic", type=int, default=None, metavar="SEED",
                   help="generate a deterministic synthetic dataset instead of reading CSVs")
    s.add_argument("--days", type=int, default=460)
    s.add_argument("--columns", default=None, help="comma list of feature columns")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ingest)

    s = subs.add_parser("kernel", help="compute and save a Gram matrix")
    s.add_argument("--dataset", required=True)
    s.add_argument("--features", type=int, required=True)
    s.add_argument("--rows", choices=("train", "test"), default="train")
    s.add_argument("--size", type=int, default=None, help="subset size (default: whole dataset)")
    s.add_argument("--split-ratio", type=float, default=0.7)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--no-psd-clip", action="store_true",
                   help="skip eigenvalue clipping for symmetric shots-mode grams")
    _add_kernel_flags(s)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_kernel)

    s = subs.add_parser("sweep", help="run a (features x size) configuration sweep")
    s.add_argument("--dataset", required=True)
    s.add_argument("--sizes", default=",".join(map(str, DEFAULT_SIZES)))
    s.add_argument("--features", default=",".join(map(str, DEFAULT_FEATURE_COUNTS)))
    s.add_argument("--kernels", default="yyy,rbf", help="comma list from "
                                                        f"{KERNEL_CHOICES}")
    s.add_argument("--trials", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--split-ratio", type=float, default=0.7)
    _add_kernel_flags(s, with_map_choice=False)
    _add_svm_flags(s)
    s.add_argument("--out", required=True)
    s.add_argument("--table", default=None, help="also write a flat CSV of per-trial records")
    s.set_defaults(func=cmd_sweep)

    s = subs.add_parser("ptri", help="ruggedness surfaces from a saved sweep")
    s.add_argument("--sweep", required=True)
    s.add_argument("--methods", default="yyy,rbf")
    s.add_argument("--metric", choices=("balanced_accuracy", "f1"), default="balanced_accuracy")
    s.add_argument("--selection", choices=("all", "reference"), default="all")
    s.add_argument("--baseline", default=None,
                   help="kernel whose BA picks the reference trials (default: the method)")
    s.add_argument("--out", required=True)
    s.add_argument("--table", default=None)
    s.set_defaults(func=cmd_ptri)

    s = subs.add_parser("variability", help="repeated trials at one configuration point")
    s.add_argument("--dataset", required=True)
    s.add_argument("--size", type=int, default=200)
    s.add_argument("--features", type=int, default=5)
    s.add_argument("--kernel", dest="kernel", choices=KERNEL_CHOICES, default="rbf")
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--split-ratio", type=float, default=0.7)
    s.add_argument("--bins", type=int, default=20)
    _add_kernel_flags(s, with_map_choice=False)
    _add_svm_flags(s)
    s.add_argument("--out", required=True)
    s.add_argument("--table", default=None)
    s.set_defaults(func=cmd_variability)

    s = subs.add_parser("resources", help="closed-form gate counts, optionally checked against circuits")
    s.add_argument("--features", default="2,3,4,5,6,7")
    s.add_argument("--reps", default="1,2,3")
    s.add_argument("--verify", action="store_true", help="tally built circuits and compare")
    s.add_argument("--out", default=None, help="also write the table as CSV")
    s.set_defaults(func=cmd_resources)

    s = subs.add_parser("report", help="flatten a result file into a plot-ready CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)

    s = subs.add_parser("replay", help="re-run a manifest and verify byte-identical outputs")
    s.add_argument("manifest")
    s.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) is not None and args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
