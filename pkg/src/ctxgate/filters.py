"""The eight filters, the hybrid gate chain and developer overrides.

Every filter takes a :class:`~ctxgate.scan.FileRecord` and returns a
:class:`~ctxgate.decision.FilterDecision`. Filters that inspect content
read a bounded prefix through the ``fs`` backend:

=============  ==================
filter         content read
=============  ==================
none           0
gitignore      0
extension      0
size           0
binary         min(8, size)
semantic       min(4096, size)
minified       min(65536, size)
hybrid         <= 8 + 4096
=============  ==================
"""

from __future__ import annotations

import json
import logging
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .decision import FilterDecision, Reason
from .patterns import PathSpec
from .report import ReportRow, ScanReport
from .scan import FileRecord
from .units import parse_size
from .vfs import FileSystem, MissingContent, VfsError

logger = logging.getLogger(__name__)

MIB = 1 << 20
MAGIC_PREFIX = 8

# (signature, format) -- every signature is 1..8 bytes
DEFAULT_MAGIC_TABLE: tuple[tuple[bytes, str], ...] = (
    (b"\x89PNG\r\n\x1a\n", "png"),
    (b"\xff\xd8\xff", "jpeg"),
    (b"GIF8", "gif"),
    (b"%PDF-", "pdf"),
    (b"PK\x03\x04", "zip"),
    (b"\x1f\x8b", "gzip"),
    (b"SQLite f", "sqlite"),
    (b"\x7fELF", "elf"),
    (b"\xcf\xfa\xed\xfe", "macho64"),
    # pickle protocol >= 2 opens with PROTO (0x80); never a valid UTF-8 lead byte
    (b"\x80", "pickle"),
    (b"\x89HDF\r\n\x1a\n", "hdf5"),
)

DEFAULT_EXTENSION_BLOCKLIST = frozenset({
    "csv", "tsv", "h5", "hdf5", "pkl", "pickle", "sqlite", "db", "log", "bin",
    "onnx", "pt", "npy", "npz", "parquet", "min.js", "map",
})

# Fixture list, not a claim about any particular corpus.
DEFAULT_SEMANTIC_KEYWORDS = (
    "function", "func", "fn", "def", "class", "struct", "interface", "enum", "type",
    "import", "from", "export", "require", "include", "package", "module", "use",
    "return", "yield", "if", "else", "elif", "for", "while", "do", "switch", "case",
    "break", "continue", "try", "catch", "except", "finally", "raise", "throw",
    "new", "this", "self", "var", "let", "const", "static", "public", "private",
    "protected", "void", "int", "string", "bool", "true", "false", "null", "none",
    "nil", "async", "await", "lambda", "pub", "impl", "mut", "end", "then",
)

_WORD = re.compile(rb"[A-Za-z0-9]+")


@dataclass(frozen=True)
class FilterConfig:
    theta: int = MIB
    extension_blocklist: frozenset[str] = DEFAULT_EXTENSION_BLOCKLIST
    magic_table: tuple[tuple[bytes, str], ...] = DEFAULT_MAGIC_TABLE
    min_avg_line_length: float = 500
    minified_prefix: int = 65536
    semantic_prefix: int = 4096
    semantic_keywords: tuple[str, ...] = DEFAULT_SEMANTIC_KEYWORDS
    semantic_density_threshold: float = 0.05

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.minified_prefix <= 0 or self.semantic_prefix <= 0:
            raise ValueError("prefix budgets must be positive")
        for sig, name in self.magic_table:
            if not 1 <= len(sig) <= MAGIC_PREFIX:
                raise ValueError(f"magic signature for {name!r} must be 1-8 bytes")
        set_ = object.__setattr__
        set_(self, "extension_blocklist",
             frozenset(e.lower().lstrip(".") for e in self.extension_blocklist))
        set_(self, "magic_table", tuple((bytes(s), n) for s, n in self.magic_table))
        set_(self, "semantic_keywords", tuple(self.semantic_keywords))
        set_(self, "_keyword_set", frozenset(k.lower() for k in self.semantic_keywords))

    def replace(self, **changes) -> FilterConfig:
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        current.update(changes)
        return FilterConfig(**current)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "extension_blocklist": sorted(self.extension_blocklist),
            "magic_table": [[sig.hex(), name] for sig, name in self.magic_table],
            "min_avg_line_length": self.min_avg_line_length,
            "minified_prefix": self.minified_prefix,
            "semantic_prefix": self.semantic_prefix,
            "semantic_keywords": list(self.semantic_keywords),
            "semantic_density_threshold": self.semantic_density_threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> FilterConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        kwargs = dict(data)
        if "theta" in kwargs and isinstance(kwargs["theta"], str):
            kwargs["theta"] = parse_size(kwargs["theta"])
        if "magic_table" in kwargs:
            kwargs["magic_table"] = tuple((bytes.fromhex(sig), name)
                                          for sig, name in kwargs["magic_table"])
        if "extension_blocklist" in kwargs:
            kwargs["extension_blocklist"] = frozenset(kwargs["extension_blocklist"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | os.PathLike) -> FilterConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


class OverrideSet:
    """Paths and glob patterns that are always admitted."""

    def __init__(self, include: Iterable[str] = ()):
        self.include = tuple(include)
        self._spec = PathSpec.from_lines(self.include, "<overrides>")

    def __repr__(self):
        return f"OverrideSet({self.include!r})"

    def __eq__(self, other):
        return isinstance(other, OverrideSet) and self.include == other.include

    def __hash__(self):
        return hash(self.include)

    @classmethod
    def from_text(cls, text: str) -> OverrideSet:
        lines = [ln.strip() for ln in text.splitlines()]
        return cls(ln for ln in lines if ln and not ln.startswith("#"))

    @classmethod
    def load(cls, path: str | os.PathLike) -> OverrideSet:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def __bool__(self):
        return bool(self.include)

    def matches(self, path: str) -> bool:
        return path in self.include or self._spec.matches(path)


# ---------------------------------------------------------------------------
# Individual filters
# ---------------------------------------------------------------------------

def _read(fs: FileSystem, record: FileRecord, limit: int) -> bytes:
    if record.size == 0:
        return b""
    return fs.read_prefix(record.path, limit)


def _unreadable(record: FileRecord, gate: str, exc: Exception, bytes_read: int = 0) -> FilterDecision:
    logger.warning("%s: unreadable (%s)", record.path, exc)
    return FilterDecision.flag(Reason.UNREADABLE, gate, bytes_read)


def no_filter(record: FileRecord) -> FilterDecision:
    return FilterDecision.allow()


def size_filter(record: FileRecord, theta: int = MIB) -> FilterDecision:
    """Flag files strictly larger than ``theta`` bytes. Metadata only."""
    if record.size > theta:
        return FilterDecision.flag(Reason.SIZE_EXCEEDS_THETA, "size")
    return FilterDecision.allow()


def extension_matches(record: FileRecord, blocklist: Iterable[str]) -> bool:
    name = record.path.rpartition("/")[2].lower()
    for ext in blocklist:
        if "." in ext:
            # compound entries such as "min.js"
            if name.endswith("." + ext) and len(name) > len(ext) + 1:
                return True
        elif ext == record.extension:
            return True
    return False


def extension_filter(record: FileRecord, blocklist: Iterable[str] = DEFAULT_EXTENSION_BLOCKLIST) -> FilterDecision:
    if record.extension and extension_matches(record, blocklist):
        return FilterDecision.flag(Reason.BLOCKED_EXTENSION, "extension")
    return FilterDecision.allow()


def match_magic(prefix: bytes, magic_table=DEFAULT_MAGIC_TABLE) -> str | None:
    """Return the format name whose signature opens ``prefix``, if any."""
    for sig, name in magic_table:
        if prefix.startswith(sig):
            return name
    return None


def binary_filter(record: FileRecord, fs: FileSystem, magic_table=DEFAULT_MAGIC_TABLE) -> FilterDecision:
    try:
        prefix = _read(fs, record, MAGIC_PREFIX)
    except MissingContent:
        raise
    except VfsError as exc:
        return _unreadable(record, "binary", exc)
    if match_magic(prefix, magic_table):
        return FilterDecision.flag(Reason.BINARY_SIGNATURE, "binary", len(prefix))
    return FilterDecision.allow(len(prefix))


def average_line_length(data: bytes) -> float:
    if not data:
        return 0.0
    lines = data.count(b"\n")
    if not data.endswith(b"\n"):
        lines += 1
    return len(data) / lines


def minified_filter(record: FileRecord, fs: FileSystem, config: FilterConfig | None = None) -> FilterDecision:
    config = config or FilterConfig()
    try:
        data = _read(fs, record, config.minified_prefix)
    except MissingContent:
        raise
    except VfsError as exc:
        return _unreadable(record, "minified", exc)
    if average_line_length(data) > config.min_avg_line_length:
        return FilterDecision.flag(Reason.MINIFIED, "minified", len(data))
    return FilterDecision.allow(len(data))


def gitignore_filter(record: FileRecord, patterns: PathSpec) -> FilterDecision:
    if patterns and patterns.matches(record.path):
        return FilterDecision.flag(Reason.GITIGNORED, "gitignore")
    return FilterDecision.allow()


def keyword_density(data: bytes, keywords: frozenset[str]) -> float | None:
    """Fraction of alphanumeric words in ``data`` that are keywords.

    None when there are no words at all.
    """
    words = _WORD.findall(data)
    if not words:
        return None
    hits = sum(1 for w in words if w.decode("ascii").lower() in keywords)
    return hits / len(words)


def semantic_filter(record: FileRecord, fs: FileSystem, config: FilterConfig | None = None) -> FilterDecision:
    config = config or FilterConfig()
    if not config.semantic_keywords:
        raise ValueError("semantic filter needs a non-empty keyword list")
    try:
        data = _read(fs, record, config.semantic_prefix)
    except MissingContent:
        raise
    except VfsError as exc:
        return _unreadable(record, "semantic", exc)
    density = keyword_density(data, config._keyword_set)
    if density is None or density < config.semantic_density_threshold:
        return FilterDecision.flag(Reason.LOW_SEMANTIC_DENSITY, "semantic", len(data))
    return FilterDecision.allow(len(data))


HYBRID_GATES = ("size", "extension", "binary", "semantic")


def hybrid_filter(record: FileRecord, fs: FileSystem, config: FilterConfig | None = None) -> FilterDecision:
    """Size -> extension -> binary -> semantic, stopping at the first flag.

    Gates run in ascending order of content bytes read (0, 0, 8, 4096).
    The returned ``bytes_read`` is the cumulative read of all gates run.
    """
    config = config or FilterConfig()
    spent = 0
    for gate in HYBRID_GATES:
        if gate == "size":
            d = size_filter(record, config.theta)
        elif gate == "extension":
            d = extension_filter(record, config.extension_blocklist)
        elif gate == "binary":
            d = binary_filter(record, fs, config.magic_table)
        else:
            d = semantic_filter(record, fs, config)
        spent += d.bytes_read
        if d.flagged:
            return FilterDecision.flag(d.reason, gate, spent)
    return FilterDecision.allow(spent)


def apply_overrides(decision: FilterDecision, record: FileRecord, overrides: OverrideSet | None) -> FilterDecision:
    if overrides and decision.flagged and overrides.matches(record.path):
        return FilterDecision.allow(decision.bytes_read)
    return decision


# ---------------------------------------------------------------------------
# Running a filter over a corpus
# ---------------------------------------------------------------------------

FILTER_IDS = ("none", "gitignore", "minified", "binary", "extension", "size", "semantic", "hybrid")
CONTENT_FILTERS = frozenset({"binary", "minified", "semantic", "hybrid"})


def load_gitignore(fs: FileSystem, root: str = "") -> PathSpec:
    """Parse the ignore file at the repository root, if any."""
    path = f"{root}/.gitignore" if root else ".gitignore"
    if not fs.exists(path):
        return PathSpec()
    try:
        text = fs.read_all(path).decode("utf-8", "replace")
    except MissingContent:
        raise
    except VfsError as exc:
        logger.warning("cannot read %s: %s", path, exc)
        return PathSpec()
    return PathSpec.from_text(text, path)


def make_filter(filter_id: str, fs: FileSystem | None, config: FilterConfig,
                ignore: PathSpec | None = None) -> Callable[[FileRecord], FilterDecision]:
    """Bind a filter id to its arguments, returning ``record -> decision``."""
    if filter_id == "none":
        return no_filter
    if filter_id == "size":
        return lambda r: size_filter(r, config.theta)
    if filter_id == "extension":
        return lambda r: extension_filter(r, config.extension_blocklist)
    if filter_id == "gitignore":
        spec = ignore if ignore is not None else (load_gitignore(fs) if fs else PathSpec())
        return lambda r: gitignore_filter(r, spec)
    if filter_id not in CONTENT_FILTERS:
        raise ValueError(f"unknown filter {filter_id!r}; choose from {', '.join(FILTER_IDS)}")
    if fs is None:
        raise ValueError(f"filter {filter_id!r} reads content and needs a filesystem")
    if filter_id == "binary":
        return lambda r: binary_filter(r, fs, config.magic_table)
    if filter_id == "minified":
        return lambda r: minified_filter(r, fs, config)
    if filter_id == "semantic":
        return lambda r: semantic_filter(r, fs, config)
    return lambda r: hybrid_filter(r, fs, config)


def run_filter(filter_id: str, records: Sequence[FileRecord], fs: FileSystem | None = None,
               config: FilterConfig | None = None, overrides: OverrideSet | None = None,
               ignore: PathSpec | None = None, workers: int = 1) -> ScanReport:
    """Decide every record and collect the rows into a :class:`ScanReport`.

    Rows carry post-override verdicts and per-file decision latency.
    Aggregates are left empty; :func:`ctxgate.pipeline.finalize` fills them.
    """
    config = config or FilterConfig()
    decide = make_filter(filter_id, fs, config, ignore)

    def one(record: FileRecord) -> ReportRow:
        t0 = time.perf_counter_ns()
        decision = apply_overrides(decide(record), record, overrides)
        elapsed = time.perf_counter_ns() - t0
        return ReportRow(record.path, record.size, decision, elapsed)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, records))
    else:
        rows = [one(r) for r in records]
    rows.sort(key=lambda r: r.path.encode("utf-8", "surrogateescape"))
    snapshot = config.to_dict()
    snapshot["theta_units"] = "bytes"
    if overrides:
        snapshot["overrides"] = list(overrides.include)
    return ScanReport(filter_id=filter_id, rows=rows, config=snapshot)
