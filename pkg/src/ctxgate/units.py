"""Byte-size strings: decimal (KB, MB, GB) and binary (KiB, MiB, GiB) suffixes."""

from __future__ import annotations

import re

_UNITS = {
    "": 1, "b": 1,
    "kb": 10**3, "mb": 10**6, "gb": 10**9, "tb": 10**12,
    "kib": 2**10, "mib": 2**20, "gib": 2**30, "tib": 2**40,
}
_SIZE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([a-zA-Z]*)\s*$")


class BadThetaSyntax(ValueError):
    pass


def parse_size(text: str | int) -> int:
    """``"50KB"`` -> 50000, ``"1MiB"`` -> 1048576, ``"4096"`` -> 4096."""
    if isinstance(text, int):
        return text
    m = _SIZE.match(text)
    if not m or m.group(2).lower() not in _UNITS:
        raise BadThetaSyntax(f"cannot parse size {text!r} (use e.g. 500KB, 1MiB, 2048)")
    value = float(m.group(1)) * _UNITS[m.group(2).lower()]
    if value != int(value):
        raise BadThetaSyntax(f"size {text!r} is not a whole number of bytes")
    return int(value)


def parse_size_list(text: str) -> list[int]:
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise BadThetaSyntax("empty size list")
    return [parse_size(t) for t in items]


def format_size(n: int) -> str:
    for unit, scale in (("GB", 10**9), ("MB", 10**6), ("KB", 10**3)):
        if n >= scale:
            return f"{n / scale:.1f} {unit}"
    return f"{n} B"
