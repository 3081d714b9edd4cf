"""Pre-execution, metadata-first filtering of repository files for LLM context."""

__version__ = "0.1.0"

from .analysis import (
    BudgetConfig,
    ReductionResult,
    bucket_histogram,
    compute_fpr,
    compute_reduction,
    pack_context,
    threshold_sweep,
    wilcoxon_signed_rank,
    wilson_interval,
)
from .decision import FilterDecision, Reason, Verdict
from .filters import (
    FilterConfig,
    OverrideSet,
    apply_overrides,
    binary_filter,
    extension_filter,
    gitignore_filter,
    hybrid_filter,
    minified_filter,
    no_filter,
    run_filter,
    semantic_filter,
    size_filter,
)
from .pipeline import run_pipeline, verify_report
from .report import ScanReport
from .scan import FileRecord, ScanConfig, scan_repository
from .tokens import DensityStudy, TokenEstimate, estimate_tokens, fit_token_density, pearson_r
from .vfs import FileMetadata, LocalFS, ManifestEntry, MemoryFS, VirtualManifest, mount_manifest

__all__ = [
    "BudgetConfig", "ReductionResult", "bucket_histogram", "compute_fpr", "compute_reduction",
    "pack_context", "threshold_sweep", "wilcoxon_signed_rank", "wilson_interval",
    "FilterDecision", "Reason", "Verdict",
    "FilterConfig", "OverrideSet", "apply_overrides", "binary_filter", "extension_filter",
    "gitignore_filter", "hybrid_filter", "minified_filter", "no_filter", "run_filter",
    "semantic_filter", "size_filter",
    "run_pipeline", "verify_report", "ScanReport",
    "FileRecord", "ScanConfig", "scan_repository",
    "DensityStudy", "TokenEstimate", "estimate_tokens", "fit_token_density", "pearson_r",
    "FileMetadata", "LocalFS", "ManifestEntry", "MemoryFS", "VirtualManifest", "mount_manifest",
]
