"""scan -> filter -> estimate -> aggregate, producing a complete ScanReport."""

from __future__ import annotations

import logging

import numpy as np

from .analysis import BudgetConfig, bucket_histogram, compute_reduction, pack_context, reduction_from
from .filters import FilterConfig, OverrideSet, run_filter
from .report import ScanReport
from .scan import FileRecord, ScanConfig, scan_repository
from .tokens import TokenEstimate, Tokenizer, estimate_all
from .vfs import FileSystem, LocalFS, MemoryFS

logger = logging.getLogger(__name__)


def latency_stats(latencies_ns) -> dict:
    arr = np.asarray(list(latencies_ns), dtype=float) / 1e6
    if arr.size == 0:
        return {"mean": 0.0, "median": 0.0, "p95": 0.0}
    return {"mean": float(arr.mean()), "median": float(np.median(arr)),
            "p95": float(np.percentile(arr, 95))}


def describe_source(fs: FileSystem) -> dict:
    if isinstance(fs, MemoryFS):
        return {"kind": "manifest", "id": fs.name}
    if isinstance(fs, LocalFS):
        return {"kind": "directory", "id": str(fs.root)}
    return {"kind": type(fs).__name__}


def finalize(report: ScanReport, records: list[FileRecord], estimates: dict[str, TokenEstimate],
             budget: BudgetConfig | None = None, pack_order: str = "path") -> ScanReport:
    """Attach token estimates, aggregates and (optionally) a context pack."""
    for row in report.rows:
        est = estimates[row.path]
        row.tokens, row.method = est.tokens, est.method
    report.aggregates = {
        "reduction": compute_reduction(report, estimates).to_dict(),
        "histogram": bucket_histogram(records).to_dict(),
        "latency_ms": latency_stats(r.latency_ns for r in report.rows),
    }
    if budget is not None:
        allowed = set(report.allowed_paths)
        pool = [r for r in records if r.path in allowed]
        report.pack = pack_context(pool, estimates, budget, pack_order).to_dict()
    return report


def run_pipeline(fs: FileSystem, filter_id: str = "size", config: FilterConfig | None = None,
                 overrides: OverrideSet | None = None, scan_config: ScanConfig | None = None,
                 tokenizer: Tokenizer | None = None, budget: BudgetConfig | int | None = None,
                 root: str = "", workers: int = 1, pack_order: str = "path") -> ScanReport:
    config = config or FilterConfig()
    scan_config = scan_config or ScanConfig()
    records = scan_repository(fs, root, scan_config)
    report = run_filter(filter_id, records, fs, config, overrides, workers=workers)
    # filter-stage counters only; token estimation reads are tallied separately
    filter_io = fs.counters.snapshot()
    estimates = estimate_all(records, fs, tokenizer)
    if isinstance(budget, int):
        budget = BudgetConfig(budget)
    finalize(report, records, estimates, budget, pack_order)
    report.source = describe_source(fs)
    report.config["scan"] = scan_config.to_json()
    report.config["tokenizer"] = getattr(tokenizer, "name", None) if tokenizer else None
    io = fs.counters.snapshot()
    io["filter_content_bytes_read"] = filter_io["content_bytes_read"]
    report.io = io
    for row in report.rows:
        if row.decision.flagged:
            logger.info("flagged %s (%s)", row.path, row.decision.reason.value)
    return report


def verify_report(report: ScanReport | dict) -> list[str]:
    """Recompute aggregates from the rows; return a list of mismatches."""
    if isinstance(report, dict):
        report = ScanReport.from_dict(report)
    problems = []
    paths = [r.path for r in report.rows]
    if paths != sorted(paths, key=lambda p: p.encode("utf-8", "surrogateescape")):
        problems.append("rows are not sorted by path")
    if any(r.tokens is None for r in report.rows):
        return problems + ["rows lack token estimates"]
    red = reduction_from((r.tokens, r.decision.flagged) for r in report.rows).to_dict()
    if red != report.aggregates.get("reduction"):
        problems.append(f"reduction mismatch: {red} != {report.aggregates.get('reduction')}")
    hist = bucket_histogram([r.size for r in report.rows]).to_dict()
    if hist != report.aggregates.get("histogram"):
        problems.append("histogram mismatch")
    return problems
