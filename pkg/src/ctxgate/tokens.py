"""Token-cost estimation and the size/token density study.

Small files (<= 50 KiB) are tokenized exactly when a tokenizer is supplied;
everything else costs ``floor(size / 4)`` tokens.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass
from typing import Iterable, Protocol, Sequence, runtime_checkable

import numpy as np

from .scan import FileRecord
from .vfs import FileSystem, VfsError

EXACT_LIMIT = 51_200
BYTES_PER_TOKEN = 4
EXACT = "exact"
HEURISTIC = "heuristic"


class DegenerateInput(ValueError):
    pass


@runtime_checkable
class Tokenizer(Protocol):
    def count_tokens(self, data: bytes) -> int: ...


@dataclass(frozen=True)
class TokenEstimate:
    path: str
    tokens: int
    method: str
    fallback: bool = False


def heuristic_tokens(size: int) -> int:
    return size // BYTES_PER_TOKEN


def estimate_tokens(record: FileRecord, fs: FileSystem | None = None,
                    tokenizer: Tokenizer | None = None) -> TokenEstimate:
    if tokenizer is not None and fs is not None and record.size <= EXACT_LIMIT:
        if record.size == 0:
            return TokenEstimate(record.path, 0, EXACT)
        try:
            data = fs.read_all(record.path)
        except VfsError:
            return TokenEstimate(record.path, heuristic_tokens(record.size), HEURISTIC, fallback=True)
        return TokenEstimate(record.path, int(tokenizer.count_tokens(data)), EXACT)
    return TokenEstimate(record.path, heuristic_tokens(record.size), HEURISTIC)


def estimate_all(records: Iterable[FileRecord], fs: FileSystem | None = None,
                 tokenizer: Tokenizer | None = None) -> dict[str, TokenEstimate]:
    return {r.path: estimate_tokens(r, fs, tokenizer) for r in records}


class TiktokenCounter:
    """Exact token counts through ``tiktoken``.

    ``bpe_file`` points at a local ``<name>.tiktoken`` rank file and avoids
    the network fetch tiktoken would otherwise attempt; it is staged into a
    private cache directory under the name tiktoken expects. ``CTXGATE_BPE_FILE``
    supplies a default.
    """

    _URL = "https://openaipublic.blob.core.windows.net/encodings/{}.tiktoken"

    def __init__(self, encoding: str = "cl100k_base", bpe_file: str | os.PathLike | None = None):
        import tiktoken

        bpe_file = bpe_file or os.environ.get("CTXGATE_BPE_FILE")
        if bpe_file:
            cache = tempfile.mkdtemp(prefix="ctxgate-bpe-")
            key = hashlib.sha1(self._URL.format(encoding).encode()).hexdigest()
            shutil.copyfile(bpe_file, os.path.join(cache, key))
            previous = os.environ.get("TIKTOKEN_CACHE_DIR")
            os.environ["TIKTOKEN_CACHE_DIR"] = cache
            try:
                self._enc = tiktoken.get_encoding(encoding)
            finally:
                if previous is None:
                    del os.environ["TIKTOKEN_CACHE_DIR"]
                else:
                    os.environ["TIKTOKEN_CACHE_DIR"] = previous
                shutil.rmtree(cache, ignore_errors=True)
        else:
            self._enc = tiktoken.get_encoding(encoding)
        self.name = encoding

    def count_tokens(self, data: bytes) -> int:
        if not data:
            return 0
        return len(self._enc.encode_ordinary(data.decode("utf-8", "replace")))


# ---------------------------------------------------------------------------
# Density study
# ---------------------------------------------------------------------------

def pearson_r(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DegenerateInput("xs and ys must be 1-d and of equal length")
    if len(x) < 2:
        raise DegenerateInput("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInput("zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


@dataclass
class DensityStudy:
    pairs: list[tuple[int, int]]
    k_hat: float
    pearson_r: float
    r_squared: float
    mean_abs_err_pct: float
    max_err_pct: float

    @property
    def n(self) -> int:
        return len(self.pairs)

    def to_dict(self, include_pairs: bool = False) -> dict:
        out = asdict(self)
        out["n"] = self.n
        if include_pairs:
            out["pairs"] = [list(p) for p in self.pairs]
        else:
            del out["pairs"]
        return out

    def to_json(self, include_pairs: bool = False) -> str:
        return json.dumps(self.to_dict(include_pairs), indent=2, sort_keys=True) + "\n"


def fit_token_density(pairs: Iterable[tuple[int, int]]) -> DensityStudy:
    """Through-origin least-squares fit of tokens = k * size.

    Error percentages are ``100 * |t - k*s| / t`` over pairs with ``t > 0``.
    """
    pairs = [(int(s), int(t)) for s, t in pairs]
    if len(pairs) < 2:
        raise DegenerateInput("need at least two (size, tokens) pairs")
    s = np.array([p[0] for p in pairs], dtype=float)
    t = np.array([p[1] for p in pairs], dtype=float)
    if (s <= 0).any():
        raise DegenerateInput("all sizes must be positive")
    k = float(s @ t) / float(s @ s)
    r = pearson_r(s, t)
    nz = t > 0
    err = np.abs(t[nz] - k * s[nz]) / t[nz] * 100.0
    return DensityStudy(pairs, k, r, r * r,
                        float(err.mean()) if err.size else 0.0,
                        float(err.max()) if err.size else 0.0)


def read_pairs_csv(path: str | os.PathLike) -> list[tuple[str, int, int]]:
    """Read ``path,size_bytes,tokens`` rows."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"path", "size_bytes", "tokens"} - set(reader.fieldnames or ())
        if missing:
            raise DegenerateInput(f"CSV lacks columns: {', '.join(sorted(missing))}")
        for lineno, row in enumerate(reader, 2):
            try:
                rows.append((row["path"], int(row["size_bytes"]), int(row["tokens"])))
            except (TypeError, ValueError):
                raise DegenerateInput(f"{path}:{lineno}: non-integer size or token count") from None
    return rows


def write_pairs_csv(rows: Iterable[tuple[str, int, int]], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["path", "size_bytes", "tokens"])
    writer.writerows(rows)


def measure_pairs(records: Iterable[FileRecord], fs: FileSystem, tokenizer: Tokenizer,
                  max_size: int = EXACT_LIMIT, ascii_only: bool = False) -> list[tuple[str, int, int]]:
    """Tokenize small non-empty text files exactly, returning (path, size, tokens).

    Files that are not valid UTF-8 (or not ASCII with ``ascii_only``) are skipped.
    """
    rows = []
    for rec in records:
        if not 0 < rec.size <= max_size:
            continue
        try:
            data = fs.read_all(rec.path)
        except VfsError:
            continue
        try:
            data.decode("ascii" if ascii_only else "utf-8")
        except UnicodeDecodeError:
            continue
        rows.append((rec.path, len(data), tokenizer.count_tokens(data)))
    return rows
