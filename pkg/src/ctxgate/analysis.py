"""Reduction metrics, size histograms, sweeps, FPR, statistics and packing."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .filters import size_filter
from .report import ScanReport
from .scan import FileRecord
from .tokens import TokenEstimate

logger = logging.getLogger(__name__)


class MissingEstimate(KeyError):
    pass


class EmptyFlaggedSet(ValueError):
    pass


class InvalidProportion(ValueError):
    pass


class TooFewPairs(ValueError):
    pass


def _tokens(estimates: Mapping[str, TokenEstimate | int], path: str) -> int:
    try:
        est = estimates[path]
    except KeyError:
        raise MissingEstimate(path) from None
    return est if isinstance(est, int) else est.tokens


# ---------------------------------------------------------------------------
# Token reduction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReductionResult:
    baseline_tokens: int
    filtered_tokens: int
    flagged_count: int
    allowed_count: int

    @property
    def reduction_pct(self) -> float:
        if self.baseline_tokens == 0:
            return 0.0
        return 100.0 * (1.0 - self.filtered_tokens / self.baseline_tokens)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["reduction_pct"] = self.reduction_pct
        return out


def reduction_from(flags: Iterable[tuple[int, bool]]) -> ReductionResult:
    """Aggregate ``(tokens, flagged)`` pairs."""
    baseline = kept = flagged = allowed = 0
    for tokens, is_flagged in flags:
        baseline += tokens
        if is_flagged:
            flagged += 1
        else:
            kept += tokens
            allowed += 1
    return ReductionResult(baseline, kept, flagged, allowed)


def compute_reduction(report: ScanReport, estimates: Mapping[str, TokenEstimate | int]) -> ReductionResult:
    return reduction_from((_tokens(estimates, row.path), row.decision.flagged) for row in report.rows)


# ---------------------------------------------------------------------------
# Size buckets
# ---------------------------------------------------------------------------

# (label, exclusive lower bound, inclusive upper bound); decimal units
BUCKETS = (
    ("<=100KB", -1, 100_000),
    ("100KB-1MB", 100_000, 1_000_000),
    ("1MB-10MB", 1_000_000, 10_000_000),
    (">10MB", 10_000_000, math.inf),
)


@dataclass
class Bucket:
    label: str
    file_count: int = 0
    total_bytes: int = 0
    pct_of_bytes: float = 0.0


@dataclass
class BucketHistogram:
    buckets: list[Bucket] = field(default_factory=list)

    def __getitem__(self, label: str) -> Bucket:
        for b in self.buckets:
            if b.label == label:
                return b
        raise KeyError(label)

    @property
    def total_bytes(self) -> int:
        return sum(b.total_bytes for b in self.buckets)

    def to_dict(self) -> dict:
        return {b.label: {"file_count": b.file_count, "total_bytes": b.total_bytes,
                          "pct_of_bytes": b.pct_of_bytes} for b in self.buckets}


def bucket_of(size: int) -> int:
    for i, (_, lo, hi) in enumerate(BUCKETS):
        if lo < size <= hi:
            return i
    raise ValueError(f"negative size {size}")


def bucket_histogram(sizes: Iterable[FileRecord | int]) -> BucketHistogram:
    hist = BucketHistogram([Bucket(label) for label, _, _ in BUCKETS])
    for item in sizes:
        size = item if isinstance(item, int) else item.size
        b = hist.buckets[bucket_of(size)]
        b.file_count += 1
        b.total_bytes += size
    total = hist.total_bytes
    if total:
        for b in hist.buckets:
            b.pct_of_bytes = 100.0 * b.total_bytes / total
    return hist


# ---------------------------------------------------------------------------
# Threshold sweep and corpus aggregation
# ---------------------------------------------------------------------------

DEFAULT_THETAS = (50_000, 100_000, 500_000, 1_000_000, 5_000_000)


def threshold_sweep(records: Sequence[FileRecord], estimates: Mapping[str, TokenEstimate | int],
                    thetas: Sequence[int]) -> list[tuple[int, ReductionResult]]:
    if not thetas:
        raise ValueError("thetas must be non-empty")
    if list(thetas) != sorted(thetas):
        raise ValueError("thetas must be sorted ascending")
    tokens = [(_tokens(estimates, r.path), r) for r in records]
    return [(theta, reduction_from((t, size_filter(r, theta).flagged) for t, r in tokens))
            for theta in thetas]


@dataclass(frozen=True)
class CorpusStats:
    n: int
    mean: float
    std: float
    min: float
    max: float

    def to_dict(self) -> dict:
        return asdict(self)


def summarize(values: Sequence[float]) -> CorpusStats:
    """Mean, sample std (n-1), min and max of per-repository percentages."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no values to summarize")
    if arr.size == 1:
        warnings.warn("single-sample aggregate; std reported as 0", RuntimeWarning, stacklevel=2)
        std = 0.0
    else:
        std = float(arr.std(ddof=1))
    return CorpusStats(int(arr.size), float(arr.mean()), std, float(arr.min()), float(arr.max()))


def aggregate_corpus(per_repo: Mapping[str, Sequence[ReductionResult]] | Sequence[ReductionResult]):
    """Table-style aggregate of reduction percentages.

    Accepts either one list of per-repository results, giving a single
    :class:`CorpusStats`, or a mapping ``filter_id -> results`` giving one
    per filter.
    """
    if isinstance(per_repo, Mapping):
        return {fid: summarize([r.reduction_pct for r in results]) for fid, results in per_repo.items()}
    return summarize([r.reduction_pct for r in per_repo])


# ---------------------------------------------------------------------------
# False positive rate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FprResult:
    flagged_count: int
    flagged_relevant_count: int

    @property
    def fpr(self) -> float:
        return self.flagged_relevant_count / self.flagged_count


def compute_fpr(flagged: Iterable[str], relevant: Iterable[str]) -> FprResult:
    flagged = set(flagged)
    if not flagged:
        raise EmptyFlaggedSet("FPR is undefined when nothing is flagged")
    return FprResult(len(flagged), len(flagged & set(relevant)))


def read_relevance_labels(text: str) -> set[str]:
    return {ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")}


# ---------------------------------------------------------------------------
# Wilson interval and Wilcoxon signed-rank test
# ---------------------------------------------------------------------------

def wilson_interval(p_hat: float, n: int, z: float = 1.96) -> tuple[float, float]:
    if not 0.0 <= p_hat <= 1.0 or math.isnan(p_hat):
        raise InvalidProportion(f"proportion must lie in [0, 1], got {p_hat}")
    if n < 1:
        raise InvalidProportion("sample count must be >= 1")
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p_hat + z2 / (2 * n)) / denom
    half = z / denom * math.sqrt(p_hat * (1 - p_hat) / n + z2 / (4 * n * n))
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass(frozen=True)
class WilcoxonResult:
    w_statistic: float
    p_value: float
    n_effective: int
    exact: bool
    w_plus: float
    w_minus: float


EXACT_MAX_N = 12


def signed_ranks(diffs: Sequence[float]) -> tuple[list[float], list[float]]:
    """Drop zeros and rank ``|d|`` with average ranks for ties.

    Returns (nonzero diffs, ranks) in matching order.
    """
    nz = [d for d in diffs if d != 0]
    order = sorted(range(len(nz)), key=lambda i: abs(nz[i]))
    ranks = [0.0] * len(nz)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and abs(nz[order[j + 1]]) == abs(nz[order[i]]):
            j += 1
        avg = (i + j + 2) / 2.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return nz, ranks


def _exact_lower_tail(ranks: Sequence[float], w: float) -> float:
    """P(W+ <= w) under the null, by counting sign patterns.

    Ranks are integers or halves, so doubling them keeps the sum
    distribution on integers.
    """
    doubled = [int(round(2 * r)) for r in ranks]
    counts = {0: 1}
    for r in doubled:
        nxt = dict(counts)
        for s, c in counts.items():
            nxt[s + r] = nxt.get(s + r, 0) + c
        counts = nxt
    limit = int(round(2 * w))
    hits = sum(c for s, c in counts.items() if s <= limit)
    return hits / 2 ** len(doubled)


def wilcoxon_signed_rank(pairs: Sequence[tuple[float, float]], min_pairs: int = 5,
                         exact_max_n: int = EXACT_MAX_N) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    ``W`` is the smaller of the positive and negative rank sums. The p-value
    is exact for ``n_effective <= exact_max_n`` and otherwise uses the
    tie-corrected normal approximation with continuity correction.
    """
    diffs = [a - b for a, b in pairs]
    nz, ranks = signed_ranks(diffs)
    n = len(nz)
    if n < max(1, min_pairs):
        raise TooFewPairs(f"{n} non-zero differences; need at least {max(1, min_pairs)}")
    w_plus = sum(r for d, r in zip(nz, ranks) if d > 0)
    w_minus = sum(r for d, r in zip(nz, ranks) if d < 0)
    w = min(w_plus, w_minus)
    if n <= exact_max_n:
        p = min(1.0, 2.0 * _exact_lower_tail(ranks, w))
        return WilcoxonResult(w, p, n, True, w_plus, w_minus)
    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_sizes ** 3) - tie_sizes).sum())
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    if var <= 0:
        return WilcoxonResult(w, 1.0, n, False, w_plus, w_minus)
    z = (w - mean + 0.5) / math.sqrt(var)
    z = min(z, 0.0)
    p = min(1.0, math.erfc(-z / math.sqrt(2)))
    return WilcoxonResult(w, p, n, False, w_plus, w_minus)


# ---------------------------------------------------------------------------
# Budget packing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BudgetConfig:
    t_mecw: int
    t_mcw: int | None = None

    def __post_init__(self):
        if self.t_mecw < 0:
            raise ValueError("t_mecw must be non-negative")
        if self.t_mcw is not None and self.t_mecw > self.t_mcw:
            raise ValueError("effective budget cannot exceed the nominal window")


@dataclass
class PackResult:
    selected: list[str]
    total_tokens: int
    skipped: list[str]
    budget: int

    def to_dict(self) -> dict:
        return asdict(self)


def pack_context(records: Sequence[FileRecord], estimates: Mapping[str, TokenEstimate | int],
                 budget: BudgetConfig | int, order: str = "path") -> PackResult:
    """Greedily admit whole files while the running total stays within budget.

    A file that does not fit is skipped (never truncated) and packing moves
    on to the next one. ``order`` is ``"path"`` or ``"size"`` (ascending
    size, ties by path).
    """
    if isinstance(budget, int):
        budget = BudgetConfig(budget)
    if order == "path":
        ordered = sorted(records, key=lambda r: r.path)
    elif order == "size":
        ordered = sorted(records, key=lambda r: (r.size, r.path))
    else:
        raise ValueError(f"unknown order {order!r}")
    selected, skipped, total = [], [], 0
    for rec in ordered:
        t = _tokens(estimates, rec.path)
        if total + t <= budget.t_mecw:
            selected.append(rec.path)
            total += t
        else:
            skipped.append(rec.path)
    return PackResult(selected, total, skipped, budget.t_mecw)
