"""Filesystem backends with exact I/O accounting.

Two backends share one small surface (``stat``, ``list_dir``,
``read_prefix``, ``read_all``):

* :class:`LocalFS` talks to a real directory tree through ``os``.
* :class:`MemoryFS` serves a :class:`VirtualManifest` and never touches
  the disk, which is what the test suite and ``replay`` mode run on.

All paths are repository-relative strings using ``/`` as separator.
The root itself is ``""``.
"""

from __future__ import annotations

import base64
import binascii
import json
import logging
import os
import stat as stat_mod
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)

FILE = "file"
DIRECTORY = "directory"
SYMLINK = "symlink"
KINDS = (FILE, DIRECTORY, SYMLINK)


class VfsError(Exception):
    """Base class for filesystem-layer errors."""

    def __init__(self, path: str, message: str | None = None):
        self.path = path
        super().__init__(message or f"{self.__class__.__name__}: {path!r}")


class NotFound(VfsError):
    pass


class NotADirectory(VfsError):
    pass


class PermissionDenied(VfsError):
    pass


class DuplicatePath(VfsError):
    pass


class MissingContent(VfsError):
    """A virtual file was read but its manifest entry carries too few bytes.

    This signals a broken fixture or manifest, so it is never turned into
    an ``unreadable`` verdict.
    """


class MalformedManifest(ValueError):
    def __init__(self, message: str, index: int | None = None):
        self.index = index
        where = f" (entry {index})" if index is not None else ""
        super().__init__(f"malformed manifest{where}: {message}")


def normalize_path(path: str) -> str:
    """Canonicalise a repository-relative path.

    Backslashes become ``/``, empty and ``.`` segments are dropped.
    ``..`` is rejected rather than resolved.
    """
    parts = []
    for part in path.replace("\\", "/").split("/"):
        if part in ("", "."):
            continue
        if part == "..":
            raise ValueError(f"path escapes the repository root: {path!r}")
        parts.append(part)
    return "/".join(parts)


def parent_of(path: str) -> str:
    return path.rpartition("/")[0]


def basename(path: str) -> str:
    return path.rpartition("/")[2]


@dataclass(frozen=True)
class FileMetadata:
    path: str
    size: int
    kind: str = FILE

    def __post_init__(self):
        if self.size < 0:
            raise ValueError(f"negative size for {self.path!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")

    @property
    def is_file(self) -> bool:
        return self.kind == FILE

    @property
    def is_dir(self) -> bool:
        return self.kind == DIRECTORY


class IoCounters:
    """Thread-safe, monotonically increasing I/O tallies.

    ``content_bytes_read`` covers prefix reads done by filters;
    ``full_bytes_read`` covers whole-file reads (exact tokenization,
    ignore files). ``real_syscalls`` counts calls into ``os`` and stays
    at zero for :class:`MemoryFS`.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.stat_calls = 0
        self.dir_listings = 0
        self.content_bytes_read = 0
        self.full_bytes_read = 0
        self.real_syscalls = 0
        self.per_file: dict[str, int] = defaultdict(int)

    def _add(self, **deltas: int) -> None:
        with self._lock:
            for name, delta in deltas.items():
                setattr(self, name, getattr(self, name) + delta)

    def add_prefix_read(self, path: str, nbytes: int) -> None:
        with self._lock:
            self.content_bytes_read += nbytes
            self.per_file[path] += nbytes

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "stat_calls": self.stat_calls,
                "dir_listings": self.dir_listings,
                "content_bytes_read": self.content_bytes_read,
                "full_bytes_read": self.full_bytes_read,
                "real_syscalls": self.real_syscalls,
            }

    def __repr__(self):
        return f"IoCounters({self.snapshot()})"


class FileSystem:
    """Common surface of both backends."""

    counters: IoCounters

    def stat(self, path: str) -> FileMetadata:
        raise NotImplementedError

    def list_dir(self, path: str) -> list[FileMetadata]:
        raise NotImplementedError

    def _read(self, path: str, limit: int | None) -> bytes:
        raise NotImplementedError

    def read_prefix(self, path: str, limit: int) -> bytes:
        """Return the first ``min(limit, size)`` bytes of a file."""
        if limit <= 0:
            raise ValueError("limit must be positive")
        path = normalize_path(path)
        data = self._read(path, limit)
        self.counters.add_prefix_read(path, len(data))
        return data

    def read_all(self, path: str) -> bytes:
        path = normalize_path(path)
        data = self._read(path, None)
        self.counters._add(full_bytes_read=len(data))
        return data

    def exists(self, path: str) -> bool:
        try:
            self.stat(path)
        except (NotFound, PermissionDenied):
            return False
        return True


# ---------------------------------------------------------------------------
# In-memory backend
# ---------------------------------------------------------------------------

@dataclass
class ManifestEntry:
    path: str
    size: int
    prefix: bytes | None = None
    content: bytes | None = None
    kind: str = FILE

    def __post_init__(self):
        self.path = normalize_path(self.path)
        if not self.path:
            raise ValueError("manifest entry with empty path")
        if self.size < 0:
            raise ValueError(f"negative size for {self.path!r}")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.content is not None and len(self.content) != self.size:
            raise ValueError(
                f"{self.path!r}: content length {len(self.content)} != size {self.size}")
        if self.prefix is not None and len(self.prefix) > self.size:
            raise ValueError(f"{self.path!r}: prefix longer than size")

    @classmethod
    def from_content(cls, path: str, content: bytes | str) -> ManifestEntry:
        if isinstance(content, str):
            content = content.encode()
        return cls(path, len(content), content=content)

    def available(self) -> bytes | None:
        if self.content is not None:
            return self.content
        return self.prefix

    def to_json(self) -> dict:
        out: dict = {"path": self.path, "size": self.size}
        if self.kind != FILE:
            out["kind"] = self.kind
        if self.content is not None:
            out["content_b64"] = base64.b64encode(self.content).decode("ascii")
        elif self.prefix is not None:
            out["prefix_b64"] = base64.b64encode(self.prefix).decode("ascii")
        return out


@dataclass
class VirtualManifest:
    entries: list[ManifestEntry] = field(default_factory=list)
    name: str = "<memory>"

    def __iter__(self) -> Iterator[ManifestEntry]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_files(cls, files: dict[str, bytes | str | int], name: str = "<memory>"):
        """Build a manifest from ``{path: content}``; an int value is a bare size."""
        entries = []
        for path, value in files.items():
            if isinstance(value, int):
                entries.append(ManifestEntry(path, value))
            else:
                entries.append(ManifestEntry.from_content(path, value))
        return cls(entries, name=name)

    def to_json(self) -> list[dict]:
        return [e.to_json() for e in self.entries]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, data, name: str = "<memory>") -> VirtualManifest:
        if not isinstance(data, list):
            raise MalformedManifest("top level must be a JSON array")
        entries = []
        for i, obj in enumerate(data):
            if not isinstance(obj, dict):
                raise MalformedManifest("entry is not an object", i)
            path, size = obj.get("path"), obj.get("size")
            if not isinstance(path, str):
                raise MalformedManifest("'path' must be a string", i)
            if not isinstance(size, int) or isinstance(size, bool):
                raise MalformedManifest(f"{path!r}: 'size' must be an integer", i)
            try:
                prefix = _b64(obj.get("prefix_b64"))
                content = _b64(obj.get("content_b64"))
                entries.append(ManifestEntry(path, size, prefix, content,
                                             obj.get("kind", FILE)))
            except (ValueError, binascii.Error) as exc:
                raise MalformedManifest(str(exc), i) from None
        return cls(entries, name=name)

    @classmethod
    def loads(cls, text: str, name: str = "<memory>") -> VirtualManifest:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedManifest(
                f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_json(data, name=name)

    @classmethod
    def load(cls, path: str | os.PathLike) -> VirtualManifest:
        return cls.loads(Path(path).read_text(encoding="utf-8"), name=str(path))


def _b64(value) -> bytes | None:
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValueError("base64 fields must be strings")
    return base64.b64decode(value, validate=True)


class MemoryFS(FileSystem):
    """Read-only in-memory tree mounted from a manifest.

    Directories are derived from the parents of file entries; the root
    ``""`` always exists. Construction and every query are pure Python
    dictionary operations.
    """

    def __init__(self, manifest: VirtualManifest | Iterable[ManifestEntry]):
        if not isinstance(manifest, VirtualManifest):
            manifest = VirtualManifest(list(manifest))
        self.name = manifest.name
        self.counters = IoCounters()
        self._entries: dict[str, ManifestEntry] = {}
        self._children: dict[str, set[str]] = {"": set()}
        for entry in manifest:
            if entry.path in self._entries or entry.path in self._children and entry.kind != DIRECTORY:
                raise DuplicatePath(entry.path)
            if entry.kind == DIRECTORY:
                self._add_dir(entry.path)
                continue
            self._entries[entry.path] = entry
            self._add_dir(parent_of(entry.path))
            self._children[parent_of(entry.path)].add(entry.path)
        clash = set(self._entries) & set(self._children)
        if clash:
            raise DuplicatePath(sorted(clash)[0], "path used as both file and directory: "
                                + sorted(clash)[0])

    def _add_dir(self, path: str) -> None:
        while path and path not in self._children:
            self._children[path] = set()
            parent = parent_of(path)
            if parent not in self._children:
                self._add_dir(parent)
            self._children[parent].add(path)
            path = parent

    def _meta(self, path: str) -> FileMetadata:
        entry = self._entries.get(path)
        if entry is not None:
            return FileMetadata(path, entry.size, entry.kind)
        if path in self._children:
            return FileMetadata(path, 0, DIRECTORY)
        raise NotFound(path)

    def stat(self, path: str) -> FileMetadata:
        path = normalize_path(path)
        self.counters._add(stat_calls=1)
        return self._meta(path)

    def list_dir(self, path: str) -> list[FileMetadata]:
        path = normalize_path(path)
        if path not in self._children:
            if path in self._entries:
                raise NotADirectory(path)
            raise NotFound(path)
        self.counters._add(dir_listings=1)
        return [self._meta(p) for p in sorted(self._children[path], key=_byte_key)]

    def _read(self, path: str, limit: int | None) -> bytes:
        entry = self._entries.get(path)
        if entry is None:
            if path in self._children:
                raise VfsError(path, f"is a directory: {path!r}")
            raise NotFound(path)
        want = entry.size if limit is None else min(limit, entry.size)
        if want == 0:
            return b""
        data = entry.available()
        if data is None or len(data) < want:
            have = 0 if data is None else len(data)
            raise MissingContent(
                path, f"manifest entry {path!r} carries {have} bytes but {want} were requested")
        return data[:want]


def mount_manifest(manifest: VirtualManifest) -> MemoryFS:
    return MemoryFS(manifest)


def _byte_key(path: str) -> bytes:
    return path.encode("utf-8", "surrogateescape")


# ---------------------------------------------------------------------------
# Real backend
# ---------------------------------------------------------------------------

class LocalFS(FileSystem):
    """Backend over a real directory. Symlinks are reported, never followed."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)
        self.counters = IoCounters()

    def _abs(self, path: str) -> str:
        path = normalize_path(path)
        return os.path.join(self.root, *path.split("/")) if path else str(self.root)

    def _lstat(self, path: str) -> os.stat_result:
        self.counters._add(real_syscalls=1)
        try:
            return os.lstat(self._abs(path))
        except FileNotFoundError:
            raise NotFound(path) from None
        except NotADirectoryError:
            raise NotFound(path) from None
        except PermissionError:
            raise PermissionDenied(path) from None

    @staticmethod
    def _kind(st: os.stat_result) -> str:
        if stat_mod.S_ISLNK(st.st_mode):
            return SYMLINK
        if stat_mod.S_ISDIR(st.st_mode):
            return DIRECTORY
        return FILE

    def _meta(self, path: str) -> FileMetadata:
        st = self._lstat(path)
        kind = self._kind(st)
        return FileMetadata(path, st.st_size if kind == FILE else 0, kind)

    def stat(self, path: str) -> FileMetadata:
        path = normalize_path(path)
        meta = self._meta(path)
        self.counters._add(stat_calls=1)
        return meta

    def list_dir(self, path: str) -> list[FileMetadata]:
        path = normalize_path(path)
        self.counters._add(real_syscalls=1)
        try:
            with os.scandir(self._abs(path)) as it:
                names = [e.name for e in it]
        except FileNotFoundError:
            raise NotFound(path) from None
        except NotADirectoryError:
            raise NotADirectory(path) from None
        except PermissionError:
            raise PermissionDenied(path) from None
        self.counters._add(dir_listings=1)
        out = []
        for name in names:
            child = f"{path}/{name}" if path else name
            try:
                out.append(self._meta(child))
            except (NotFound, PermissionDenied) as exc:
                # vanished or unreadable between listing and stat
                logger.warning("cannot stat %s: %s", child, exc)
                out.append(FileMetadata(child, 0, FILE))
        out.sort(key=lambda m: _byte_key(m.path))
        return out

    def _read(self, path: str, limit: int | None) -> bytes:
        self.counters._add(real_syscalls=1)
        try:
            with open(self._abs(path), "rb") as fh:
                return fh.read() if limit is None else fh.read(limit)
        except FileNotFoundError:
            raise NotFound(path) from None
        except (PermissionError, IsADirectoryError):
            raise PermissionDenied(path) from None


# ---------------------------------------------------------------------------
# Manifest <-> real tree
# ---------------------------------------------------------------------------

def materialize(manifest: VirtualManifest, dest: str | os.PathLike, fill: bytes = b" ") -> Path:
    """Write ``manifest`` out as a real tree under ``dest``.

    Entries carrying only a prefix are padded with ``fill`` up to their size.
    """
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    for entry in manifest:
        target = dest.joinpath(*entry.path.split("/"))
        if entry.kind == DIRECTORY:
            target.mkdir(parents=True, exist_ok=True)
            continue
        if entry.kind == SYMLINK:
            raise ValueError(f"cannot materialize symlink entry {entry.path!r}")
        target.parent.mkdir(parents=True, exist_ok=True)
        data = entry.available() or b""
        with open(target, "wb") as fh:
            fh.write(data)
            remaining = entry.size - len(data)
            chunk = fill * 65536
            while remaining > 0:
                piece = chunk[:remaining]
                fh.write(piece)
                remaining -= len(piece)
    return dest


def capture_manifest(fs: FileSystem, paths: Iterable[str], prefix_limit: int | None = 65536,
                     name: str = "<captured>") -> VirtualManifest:
    """Snapshot files from ``fs`` into a manifest.

    With ``prefix_limit=None`` the full content of every file is stored.
    Files larger than ``prefix_limit`` keep only their prefix.
    """
    entries = []
    for path in paths:
        meta = fs.stat(path)
        if prefix_limit is None or meta.size <= prefix_limit:
            data = fs.read_all(path) if meta.size else b""
            entries.append(ManifestEntry(path, len(data), content=data))
        else:
            entries.append(ManifestEntry(path, meta.size, prefix=fs.read_prefix(path, prefix_limit)))
    return VirtualManifest(entries, name=name)
