"""Depth-limited, pruned, single-pass repository traversal."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .vfs import DIRECTORY, FILE, FileMetadata, FileSystem, NotFound, PermissionDenied, normalize_path

logger = logging.getLogger(__name__)

DEFAULT_PRUNE_DIRS = frozenset({"node_modules", ".git", "__pycache__"})


class ScanError(Exception):
    pass


class RootNotFound(ScanError):
    pass


class RootNotADirectory(ScanError):
    pass


@dataclass(frozen=True)
class ScanConfig:
    max_depth: int = 20
    prune_dirs: frozenset[str] = field(default_factory=lambda: DEFAULT_PRUNE_DIRS)
    follow_hidden: bool = True

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        object.__setattr__(self, "prune_dirs", frozenset(self.prune_dirs))

    def to_json(self) -> dict:
        return {
            "max_depth": self.max_depth,
            "prune_dirs": sorted(self.prune_dirs),
            "follow_hidden": self.follow_hidden,
        }


def file_extension(path: str) -> str:
    """Lowercase suffix after the last dot of the file name.

    Leading dots do not start an extension, so ``.bashrc`` has none.
    """
    name = path.rpartition("/")[2].lstrip(".")
    stem, dot, ext = name.rpartition(".")
    return ext.lower() if dot and stem else ""


@dataclass(frozen=True)
class FileRecord:
    metadata: FileMetadata
    depth: int
    extension: str

    @property
    def path(self) -> str:
        return self.metadata.path

    @property
    def size(self) -> int:
        return self.metadata.size

    @classmethod
    def from_metadata(cls, meta: FileMetadata) -> FileRecord:
        return cls(meta, meta.path.count("/") + 1, file_extension(meta.path))

    @classmethod
    def make(cls, path: str, size: int) -> FileRecord:
        """Convenience constructor for tests and synthetic corpora."""
        return cls.from_metadata(FileMetadata(normalize_path(path), size, FILE))


def scan_repository(fs: FileSystem, root: str = "", config: ScanConfig | None = None) -> list[FileRecord]:
    """Walk ``root`` once and return every non-pruned file, sorted by path.

    Record paths stay relative to the filesystem root so they can be handed
    straight back to ``fs``; depth counts components below ``root`` (its
    children sit at depth 1). Pruned directories are never listed, so they do not consume
    depth. Symlinks are logged and skipped.
    """
    config = config or ScanConfig()
    root = normalize_path(root)
    try:
        meta = fs.stat(root)
    except NotFound:
        raise RootNotFound(root or ".") from None
    if meta.kind != DIRECTORY:
        raise RootNotADirectory(root)

    records: list[FileRecord] = []
    # explicit stack; children pushed reversed so traversal is in sorted order
    stack = [(root, 0)]
    while stack:
        dirpath, depth = stack.pop()
        try:
            children = fs.list_dir(dirpath)
        except PermissionDenied:
            logger.warning("skipping unreadable directory %s", dirpath or ".")
            continue
        subdirs = []
        for child in children:
            name = child.path.rpartition("/")[2]
            if not config.follow_hidden and name.startswith("."):
                continue
            child_depth = depth + 1
            if child.kind == DIRECTORY:
                if name in config.prune_dirs or child_depth >= config.max_depth:
                    continue
                subdirs.append((child.path, child_depth))
            elif child.kind == FILE:
                records.append(FileRecord(child, child_depth, file_extension(child.path)))
            else:
                logger.debug("not following symlink %s", child.path)
        stack.extend(reversed(subdirs))
    records.sort(key=lambda r: r.path.encode("utf-8", "surrogateescape"))
    return records
