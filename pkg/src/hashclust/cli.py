"""Command-line pipeline: synth, hash (+join), cluster, sweep, report.

Every invocation is reproducible from (inputs, flags, seed) and records
a run manifest next to its outputs. Output files are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, corpus, features
from .clustering import KMeansConfig, kmeans_fit, sweep_k
from .errors import HashclustError
from .features import (
    FeatureMatrix,
    jaccard,
    vectorize_imphash,
    vectorize_ssdeep,
    vectorize_tlsh,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

SCHEMES = ("ssdeep", "tlsh", "imphash")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _default_seed() -> int:
    return int(os.environ.get("HASHCLUST_SEED", "0"))


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_manifest(path: Path, command: str, config: dict,
                    inputs: list[str], outputs: list[str],
                    seed: int, started: float) -> None:
    manifest = {
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": outputs,
        "seed": seed,
        "version": __version__,
        "wall_time_s": round(time.monotonic() - started, 6),
    }
    _atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _feature_matrix(records, scheme: str) -> FeatureMatrix:
    ids = [r.sha256 for r in records]
    if scheme == "ssdeep":
        rows = [vectorize_ssdeep(r.ssdeep) for r in records]
        return FeatureMatrix(np.array(rows), ids, scheme)
    if scheme == "tlsh":
        rows = [vectorize_tlsh(r.tlsh) for r in records]
        return FeatureMatrix(np.array(rows), ids, scheme)
    if scheme == "imphash":
        return vectorize_imphash([r.imphash for r in records], ids)
    raise ValueError(f"unknown scheme {scheme!r}")


def _power_iteration(cov: np.ndarray, start: np.ndarray,
                     rounds: int = 200) -> np.ndarray:
    v = start / np.linalg.norm(start)
    for _ in range(rounds):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0:
            break
        v = w / norm
    # Fix the sign so the projection is reproducible.
    if v[int(np.argmax(np.abs(v)))] < 0:
        v = -v
    return v


def project_2d(x: np.ndarray) -> np.ndarray:
    """First two principal axes by deterministic power iteration.

    Plotting aid only; never feeds back into clustering.
    """
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / max(len(centered), 1)
    d = cov.shape[0]
    v1 = _power_iteration(cov, np.ones(d))
    lam1 = float(v1 @ cov @ v1)
    deflated = cov - lam1 * np.outer(v1, v1)
    start2 = np.ones(d) + np.arange(d)  # not parallel to the ones vector
    v2 = _power_iteration(deflated, start2)
    return np.column_stack([centered @ v1, centered @ v2])


def _load_unified(path: str):
    records = corpus.read_unified_csv(Path(path).read_text())
    if not records:
        raise HashclustError(f"no records in {path}")
    return records


# --- commands ---

def cmd_synth(args) -> int:
    started = time.monotonic()
    cfg = corpus.SynthConfig(
        families=args.families,
        samples_per_family=args.samples_per_family,
        mutation_rate=args.mutation_rate,
        seed=args.seed,
    )
    records = corpus.synth_corpus(cfg, args.out)
    out = Path(args.out)
    _write_manifest(out / "run_manifest.json", "synth",
                    {"families": cfg.families,
                     "samples_per_family": cfg.samples_per_family,
                     "mutation_rate": cfg.mutation_rate},
                    [], [str(out / "manifest.csv")], args.seed, started)
    print(f"wrote {len(records)} samples to {out}")
    return EXIT_OK


def cmd_hash(args) -> int:
    started = time.monotonic()
    rows, errors = corpus.hash_directory(args.directory)
    out = Path(args.out)
    outputs = [str(out)]
    if args.metadata:
        metadata = corpus.ingest_metadata(Path(args.metadata).read_bytes())
        unified, drops = corpus.join_and_filter(metadata, rows)
        buf = io.StringIO()
        corpus.write_unified_csv(unified, buf)
        _atomic_write(out, buf.getvalue())
        drop_path = out.with_name(out.name + ".drops.json")
        _atomic_write(drop_path,
                      json.dumps(drops, indent=2, sort_keys=True) + "\n")
        outputs.append(str(drop_path))
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sha256", "size", "ssdeep", "tlsh", "imphash"])
        for r in rows:
            writer.writerow([r.sha256, r.size, str(r.ssdeep),
                             str(r.tlsh) if r.tlsh else "",
                             str(r.imphash) if r.imphash else ""])
        _atomic_write(out, buf.getvalue())
    for path, err in errors:
        print(f"error: {path}: {err}", file=sys.stderr)
    _write_manifest(out.with_name(out.name + ".manifest.json"), "hash",
                    {"metadata": args.metadata},
                    [args.directory], outputs, args.seed, started)
    return EXIT_OK


def cmd_cluster(args) -> int:
    started = time.monotonic()
    records = _load_unified(args.unified)
    matrix = _feature_matrix(records, args.scheme)
    scaled, _ = features.standardize(matrix)
    result = kmeans_fit(scaled, KMeansConfig(k=args.k, seed=args.seed))

    prefix = Path(args.out)
    labels_path = Path(str(prefix) + "labels.csv")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sha256", "cluster", "family"])
    for rec, label in zip(records, result.labels):
        writer.writerow([rec.sha256, int(label), rec.family])
    _atomic_write(labels_path, buf.getvalue())

    proj = project_2d(scaled.values)
    proj_path = Path(str(prefix) + "projection.csv")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sha256", "x", "y"])
    for rec, (px, py) in zip(records, proj):
        writer.writerow([rec.sha256, repr(float(px)), repr(float(py))])
    _atomic_write(proj_path, buf.getvalue())

    _write_manifest(Path(str(prefix) + "manifest.json"), "cluster",
                    {"scheme": args.scheme, "k": args.k,
                     "inertia": result.inertia,
                     "iterations": result.iterations_run},
                    [args.unified], [str(labels_path), str(proj_path)],
                    args.seed, started)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.monotonic()
    records = _load_unified(args.unified)
    matrix = _feature_matrix(records, args.scheme)
    scaled, _ = features.standardize(matrix)
    report = sweep_k(scaled, args.k_min, args.k_max,
                     KMeansConfig(k=args.k_min, seed=args.seed))
    out = Path(args.out)
    if args.format == "json":
        payload = {"per_k": {str(k): v for k, v in report.per_k.items()},
                   "best_k": report.best_k}
        _atomic_write(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "mean_silhouette"])
        for k in sorted(report.per_k):
            writer.writerow([k, repr(report.per_k[k])])
        _atomic_write(out, buf.getvalue())
    _write_manifest(out.with_name(out.name + ".manifest.json"), "sweep",
                    {"scheme": args.scheme, "k_min": args.k_min,
                     "k_max": args.k_max, "best_k": report.best_k},
                    [args.unified], [str(out)], args.seed, started)
    print(f"best_k={report.best_k}")
    return EXIT_OK


def cmd_report(args) -> int:
    started = time.monotonic()
    records = _load_unified(args.unified)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []

    # family x month distribution
    dist = corpus.family_distribution(records)
    families = sorted({fam for fam, _ in dist})
    months = sorted({month for _, month in dist})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["family"] + months)
    for fam in families:
        writer.writerow([fam] + [dist.get((fam, month), 0)
                                 for month in months])
    path = out / "family_distribution.csv"
    _atomic_write(path, buf.getvalue())
    outputs.append(str(path))

    # cluster-vs-family contingency per scheme
    for scheme in SCHEMES:
        matrix = _feature_matrix(records, scheme)
        scaled, _ = features.standardize(matrix)
        result = kmeans_fit(scaled, KMeansConfig(k=args.k, seed=args.seed))
        table: dict[tuple[int, str], int] = {}
        for rec, label in zip(records, result.labels):
            key = (int(label), rec.family)
            table[key] = table.get(key, 0) + 1
        fams = sorted({rec.family for rec in records})
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["cluster"] + fams)
        for cluster in range(args.k):
            writer.writerow([cluster] + [table.get((cluster, fam), 0)
                                         for fam in fams])
        path = out / f"contingency_{scheme}.csv"
        _atomic_write(path, buf.getvalue())
        outputs.append(str(path))

    # pairwise IMPHash agreement (binary match rendered as Jaccard)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sha256_a", "sha256_b", "jaccard"])
    for i, a in enumerate(records):
        for b in records[i + 1:]:
            value = jaccard({str(a.imphash)}, {str(b.imphash)})
            writer.writerow([a.sha256, b.sha256, repr(value)])
    path = out / "imphash_jaccard.csv"
    _atomic_write(path, buf.getvalue())
    outputs.append(str(path))

    _write_manifest(out / "run_manifest.json", "report", {"k": args.k},
                    [args.unified], outputs, args.seed, started)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="hashclust",
                     description="Similarity-hash clustering pipeline")
    parser.add_argument("--error-json", action="store_true",
                        help="emit errors as JSON on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic PE corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--families", type=int, default=6)
    p.add_argument("--samples-per-family", type=int, default=20)
    p.add_argument("--mutation-rate", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("hash", help="digest a directory of samples")
    p.add_argument("directory")
    p.add_argument("--out", required=True)
    p.add_argument("--metadata",
                   help="metadata CSV; joins into a unified table")
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_hash)

    p = sub.add_parser("cluster", help="K-Means over one digest scheme")
    p.add_argument("unified")
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sweep", help="silhouette sweep over a K range")
    p.add_argument("unified")
    p.add_argument("--scheme", choices=SCHEMES, required=True)
    p.add_argument("--k-min", type=int, required=True)
    p.add_argument("--k-max", type=int, required=True)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="distribution and overlay tables")
    p.add_argument("unified")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k", type=int, default=6)
    p.add_argument("--seed", type=int, default=_default_seed())
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "synth" and not 0.0 <= args.mutation_rate <= 1.0:
        parser.error("--mutation-rate must be in [0, 1]")
    if args.command == "cluster" and args.k < 2:
        parser.error("--k must be at least 2")
    if args.command == "sweep" and not 2 <= args.k_min <= args.k_max:
        parser.error("need 2 <= --k-min <= --k-max")
    try:
        return args.func(args)
    except (HashclustError, OSError, ValueError) as exc:
        if args.error_json:
            print(json.dumps({"error": type(exc).__name__,
                              "message": str(exc)}), file=sys.stderr)
        else:
            print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
