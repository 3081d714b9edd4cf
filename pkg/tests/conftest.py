import builtins
import contextlib
import io
import math
import os
import random

import pytest

from ctxgate.vfs import ManifestEntry, MemoryFS, VirtualManifest

CODE_LINE = b"def handler(self, value):\n    if value is None:\n        return self.default\n"
CSV_LINE = b"0.1,0.2,0.3,4,5,6,7,8,9,10\n"


class CeilQuarterTokenizer:
    """Oracle tokenizer: ceil(len / 4) tokens."""

    name = "ceil4"

    def count_tokens(self, data: bytes) -> int:
        return math.ceil(len(data) / 4)


class DiskTouched(AssertionError):
    pass


@contextlib.contextmanager
def no_disk():
    """Make every common real-filesystem entry point raise."""

    def boom(*args, **kwargs):
        raise DiskTouched(f"real filesystem touched: {args!r}")

    targets = [(os, "stat"), (os, "lstat"), (os, "scandir"), (os, "listdir"),
               (os, "open"), (builtins, "open"), (io, "open")]
    saved = [(mod, name, getattr(mod, name)) for mod, name in targets]
    try:
        for mod, name in targets:
            setattr(mod, name, boom)
        yield
    finally:
        for mod, name, fn in saved:
            setattr(mod, name, fn)


def repeat_to(pattern: bytes, size: int) -> bytes:
    return (pattern * (size // len(pattern) + 1))[:size]


def mem(files: dict) -> MemoryFS:
    return MemoryFS(VirtualManifest.from_files(files))


def tail_manifest() -> VirtualManifest:
    """990 x 10 KB + 10 x 10 MB, sizes only."""
    entries = [ManifestEntry(f"src/m{i:04d}.py", 10_000) for i in range(990)]
    entries += [ManifestEntry(f"data/blob{i:02d}.bin", 10_000_000) for i in range(10)]
    return VirtualManifest(entries, name="tail")


KINDS = ("code", "csv", "png", "pickle", "minified", "empty")
EXTS = ("py", "js", "csv", "pkl", "txt", "", "min.js", "go")


def random_manifest(rng: random.Random, n_files: int | None = None, max_size: int = 3_000_000,
                    prefix_cap: int = 65_536) -> VirtualManifest:
    """Random corpus with enough stored bytes for every content filter."""
    n = n_files if n_files is not None else rng.randint(1, 40)
    entries = []
    seen = set()
    for i in range(n):
        depth = rng.randint(0, 3)
        parts = [f"d{rng.randint(0, 3)}" for _ in range(depth)]
        ext = rng.choice(EXTS)
        name = f"f{i}" + (f".{ext}" if ext else "")
        path = "/".join(parts + [name])
        if path in seen:
            continue
        seen.add(path)
        kind = rng.choice(KINDS)
        size = 0 if kind == "empty" else rng.choice(
            [rng.randint(1, 2_000), rng.randint(2_000, 80_000), rng.randint(80_000, max_size)])
        head = {
            "code": CODE_LINE,
            "csv": CSV_LINE,
            "png": b"\x89PNG\r\n\x1a\n" + CODE_LINE,
            "pickle": b"\x80\x04\x95" + CSV_LINE,
            "minified": b"var a=1;" * 200,
            "empty": b"",
        }[kind]
        body = repeat_to(head if kind in ("code", "csv", "minified") else head + CODE_LINE * 50, size)
        if size <= prefix_cap:
            entries.append(ManifestEntry(path, size, content=body))
        else:
            entries.append(ManifestEntry(path, size, prefix=body[:prefix_cap]))
    return VirtualManifest(entries, name="random")


@pytest.fixture
def ceil4():
    return CeilQuarterTokenizer()


@pytest.fixture
def rng():
    return random.Random(20261015)


def fixture_repo_files() -> dict:
    """A small but varied repository, one file per filter outcome."""
    return {
        ".gitignore": "build/\n*.log\n",
        "README.md": "# demo\n\nSome words about the project.\n",
        "src/app.py": CODE_LINE * 40,
        "src/util.py": CODE_LINE * 3,
        "src/vendor.min.js": b"var a=1;" * 300,
        "assets/logo.png": b"\x89PNG\r\n\x1a\n" + bytes(range(256)) * 4,
        "data/table.csv": CSV_LINE * 200,
        "data/big.csv": CSV_LINE * 60_000,
        "build/out.txt": "generated\n",
        "run.log": "started\n" * 10,
        "node_modules/dep/index.js": "module.exports = 1;\n",
    }
