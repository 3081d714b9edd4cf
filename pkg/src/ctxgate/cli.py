"""ctxgate: flag oversized and non-code repository files before they reach an LLM context.

    ctxgate scan <dir>         filter a real repository
    ctxgate replay <manifest>  same pipeline against a JSON manifest, no disk reads
    ctxgate sweep <src>...     size-threshold sweep as CSV
    ctxgate density            fit tokens = k * size

Exit status: 0 success, 1 I/O or input-data failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
import warnings
from pathlib import Path

from . import __version__
from .analysis import DEFAULT_THETAS, aggregate_corpus, threshold_sweep
from .filters import FILTER_IDS, FilterConfig, OverrideSet
from .pipeline import run_pipeline
from .scan import RootNotADirectory, RootNotFound, ScanConfig, scan_repository
from .tokens import DegenerateInput, TiktokenCounter, estimate_all, fit_token_density, measure_pairs, read_pairs_csv, write_pairs_csv
from .units import BadThetaSyntax, format_size, parse_size, parse_size_list
from .vfs import LocalFS, MalformedManifest, MemoryFS, VfsError, VirtualManifest, capture_manifest

class UsageError(Exception):
    pass


class InputError(Exception):
    pass


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--filter", choices=FILTER_IDS, default="size")
    p.add_argument("--theta", help="size threshold, e.g. 1MiB, 500KB (default 1MiB)")
    p.add_argument("--report", choices=("json", "csv", "table"), default="json")
    p.add_argument("--overrides", help="file of always-included paths/globs")
    p.add_argument("--config", default=os.environ.get("CTXGATE_CONFIG"),
                   help="JSON filter config (default: $CTXGATE_CONFIG)")
    p.add_argument("--budget", type=int, help="token budget for context packing")
    p.add_argument("--pack-order", choices=("path", "size"), default="path")
    p.add_argument("--tokenizer", help="tiktoken encoding for exact counts of small files")
    p.add_argument("--bpe-file", help="local .tiktoken rank file for --tokenizer")
    p.add_argument("--max-depth", type=int, default=20)
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("-q", "--quiet", action="store_true", help="suppress per-file warnings")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctxgate", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"ctxgate {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scan", help="filter a repository on disk")
    p.add_argument("path")
    p.add_argument("--save-manifest", help="also write a replayable manifest of the scanned tree")
    _add_common(p)

    p = sub.add_parser("replay", help="run the pipeline against a JSON manifest")
    p.add_argument("manifest")
    _add_common(p)

    p = sub.add_parser("sweep", help="size-threshold sweep over one or more repositories")
    p.add_argument("sources", nargs="+", help="directories or manifest .json files")
    p.add_argument("--thetas", default=",".join(str(t) for t in DEFAULT_THETAS))
    p.add_argument("--max-depth", type=int, default=20)
    p.add_argument("--out")

    p = sub.add_parser("density", help="token-density study")
    p.add_argument("root", nargs="?", help="repository to measure (needs --tokenizer)")
    p.add_argument("--pairs", help="CSV with header path,size_bytes,tokens")
    p.add_argument("--tokenizer", default=None)
    p.add_argument("--bpe-file")
    p.add_argument("--ascii-only", action="store_true")
    p.add_argument("--pairs-out", help="write measured pairs as CSV")
    p.add_argument("--include-pairs", action="store_true")
    p.add_argument("--out")
    return parser


def _filter_config(args) -> FilterConfig:
    config = FilterConfig()
    if args.config:
        try:
            config = FilterConfig.load(args.config)
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc.strerror}") from None
        except (ValueError, TypeError) as exc:
            raise UsageError(f"bad config {args.config}: {exc}") from None
    if args.theta:
        config = config.replace(theta=parse_size(args.theta))
    return config


def _overrides(args) -> OverrideSet | None:
    if not args.overrides:
        return None
    try:
        return OverrideSet.load(args.overrides)
    except OSError as exc:
        raise InputError(f"cannot read overrides {args.overrides}: {exc.strerror}") from None


def _tokenizer(args):
    if not args.tokenizer:
        return None
    try:
        return TiktokenCounter(args.tokenizer, args.bpe_file)
    except ImportError:
        raise UsageError("--tokenizer needs the 'tiktoken' package") from None
    except Exception as exc:
        raise InputError(f"cannot load tokenizer {args.tokenizer!r}: {exc}") from None


def _open_source(path: str) -> LocalFS | MemoryFS:
    p = Path(path)
    if p.is_file() and p.suffix == ".json":
        return MemoryFS(_load_manifest(path))
    if not p.exists():
        raise InputError(f"{path}: no such file or directory")
    if not p.is_dir():
        raise InputError(f"{path}: not a directory")
    return LocalFS(p)


def _load_manifest(path: str) -> VirtualManifest:
    try:
        return VirtualManifest.load(path)
    except OSError as exc:
        raise InputError(f"cannot read manifest {path}: {exc.strerror}") from None
    except MalformedManifest as exc:
        raise InputError(f"{path}: {exc}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _warn_flagged(report, quiet: bool) -> None:
    flagged = [r for r in report.rows if r.decision.flagged]
    if quiet:
        return
    for row in flagged:
        print(f"ctxgate: flagged {row.path} ({row.decision.reason.value}, {format_size(row.size)})",
              file=sys.stderr)
    red = report.aggregates.get("reduction", {})
    if red:
        print(f"ctxgate: {len(flagged)} of {len(report.rows)} files flagged, "
              f"{red['reduction_pct']:.1f}% token reduction", file=sys.stderr)


def _run_report(args, fs) -> int:
    config = _filter_config(args)
    overrides = _overrides(args)
    tokenizer = _tokenizer(args)
    report = run_pipeline(fs, args.filter, config, overrides, ScanConfig(max_depth=args.max_depth),
                          tokenizer=tokenizer, budget=args.budget, pack_order=args.pack_order)
    _warn_flagged(report, args.quiet)
    _emit(report.render(args.report), args.out)
    return 0


def cmd_scan(args) -> int:
    root = Path(args.path)
    if not root.exists():
        raise InputError(f"{args.path}: no such directory")
    if not root.is_dir():
        raise InputError(f"{args.path}: not a directory")
    fs = LocalFS(root)
    status = _run_report(args, fs)
    if args.save_manifest:
        paths = [r.path for r in scan_repository(LocalFS(root), "", ScanConfig(max_depth=args.max_depth))]
        manifest = capture_manifest(LocalFS(root), paths, prefix_limit=None, name=str(root))
        Path(args.save_manifest).write_text(manifest.dumps(), encoding="utf-8")
    return status


def cmd_replay(args) -> int:
    fs = MemoryFS(_load_manifest(args.manifest))
    return _run_report(args, fs)


def cmd_sweep(args) -> int:
    thetas = parse_size_list(args.thetas)
    if thetas != sorted(thetas):
        print("ctxgate: warning: thetas were not ascending; sorted them", file=sys.stderr)
        thetas = sorted(thetas)
    per_theta: dict[int, list] = {t: [] for t in thetas}
    for source in args.sources:
        fs = _open_source(source)
        records = scan_repository(fs, "", ScanConfig(max_depth=args.max_depth))
        estimates = estimate_all(records)
        for theta, result in threshold_sweep(records, estimates, thetas):
            per_theta[theta].append(result)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta_bytes", "mean_pct", "std_pct", "min_pct", "max_pct"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for theta in thetas:
            s = aggregate_corpus(per_theta[theta])
            writer.writerow([theta, f"{s.mean:.6f}", f"{s.std:.6f}", f"{s.min:.6f}", f"{s.max:.6f}"])
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_density(args) -> int:
    if bool(args.pairs) == bool(args.root):
        raise UsageError("give either --pairs CSV or a repository root (with --tokenizer)")
    if args.pairs:
        try:
            rows = read_pairs_csv(args.pairs)
        except OSError as exc:
            raise InputError(f"cannot read {args.pairs}: {exc.strerror}") from None
    else:
        tokenizer = _tokenizer(args)
        if tokenizer is None:
            raise UsageError("measuring a repository needs --tokenizer")
        fs = _open_source(args.root)
        records = scan_repository(fs, "")
        rows = measure_pairs(records, fs, tokenizer, ascii_only=args.ascii_only)
        if args.pairs_out:
            with open(args.pairs_out, "w", newline="", encoding="utf-8") as fh:
                write_pairs_csv(rows, fh)
    study = fit_token_density([(size, tokens) for _, size, tokens in rows])
    _emit(study.to_json(args.include_pairs), args.out)
    return 0


COMMANDS = {"scan": cmd_scan, "replay": cmd_replay, "sweep": cmd_sweep, "density": cmd_density}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if getattr(args, "quiet", False) else logging.WARNING,
                        format="ctxgate: %(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, BadThetaSyntax) as exc:
        print(f"ctxgate: error: {exc}", file=sys.stderr)
        return 2
    except (InputError, RootNotFound, RootNotADirectory, DegenerateInput, VfsError) as exc:
        print(f"ctxgate: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"ctxgate: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
