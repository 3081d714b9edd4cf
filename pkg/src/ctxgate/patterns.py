"""Gitignore-style path patterns.

Supports ``*``, ``?``, ``[...]`` classes, ``**`` segments, leading-``/``
anchoring, trailing-``/`` directory patterns, ``!`` negation and ``\\``
escapes. Evaluation is last-match-wins, and a file below an ignored
directory cannot be re-included (git behaves the same way).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Iterable

logger = logging.getLogger(__name__)


class PatternError(ValueError):
    pass


def _translate(body: str) -> str:
    out = []
    i, n = 0, len(body)
    while i < n:
        c = body[i]
        if c == "*":
            if body.startswith("**", i):
                at_seg_start = i == 0 or body[i - 1] == "/"
                after = body[i + 2] if i + 2 < n else ""
                if at_seg_start and after == "/":
                    out.append("(?:.*/)?")
                    i += 3
                    continue
                if at_seg_start and after == "":
                    out.append(".*")
                    i += 2
                    continue
                out.append("[^/]*")
                i += 2
                continue
            out.append("[^/]*")
        elif c == "?":
            out.append("[^/]")
        elif c == "[":
            j = i + 1
            if j < n and body[j] in "!^":
                j += 1
            if j < n and body[j] == "]":
                j += 1
            while j < n and body[j] != "]":
                j += 1
            if j >= n:
                raise PatternError(f"unterminated character class in {body!r}")
            inner = body[i + 1:j]
            if inner[:1] in ("!", "^"):
                inner = "^" + inner[1:]
            out.append("[" + inner.replace("\\", "\\\\") + "]")
            i = j
        elif c == "\\":
            if i + 1 >= n:
                raise PatternError(f"trailing backslash in {body!r}")
            out.append(re.escape(body[i + 1]))
            i += 1
        else:
            out.append(re.escape(c))
        i += 1
    return "".join(out)


@dataclass(frozen=True)
class Rule:
    pattern: str
    regex: re.Pattern
    negated: bool
    dir_only: bool


def compile_rule(line: str) -> Rule | None:
    """Compile one pattern line. Returns None for blanks and comments."""
    raw = line.rstrip("\n").rstrip("\r")
    # trailing spaces are dropped unless escaped
    stripped = raw.rstrip(" ")
    if stripped.endswith("\\") and len(stripped) < len(raw):
        stripped += " "
    if not stripped or stripped.startswith("#"):
        return None
    body = stripped
    negated = body.startswith("!")
    if negated:
        body = body[1:]
    elif body.startswith("\\!") or body.startswith("\\#"):
        body = body[1:]
    dir_only = body.endswith("/")
    body = body.rstrip("/")
    if not body:
        return None
    anchored = "/" in body
    body = body.lstrip("/")
    regex = _translate(body)
    if not anchored:
        regex = "(?:.*/)?" + regex
    return Rule(stripped, re.compile(regex, re.DOTALL), negated, dir_only)


class PathSpec:
    """An ordered list of gitignore-style rules."""

    def __init__(self, rules: Iterable[Rule] = ()):
        self.rules = list(rules)

    @classmethod
    def from_lines(cls, lines: Iterable[str], source: str = "<patterns>") -> PathSpec:
        rules = []
        for lineno, line in enumerate(lines, 1):
            try:
                rule = compile_rule(line)
            except PatternError as exc:
                logger.warning("%s:%d: skipping malformed pattern: %s", source, lineno, exc)
                continue
            if rule is not None:
                rules.append(rule)
        return cls(rules)

    @classmethod
    def from_text(cls, text: str, source: str = "<patterns>") -> PathSpec:
        return cls.from_lines(text.splitlines(), source)

    def __bool__(self):
        return bool(self.rules)

    def __len__(self):
        return len(self.rules)

    @property
    def patterns(self) -> list[str]:
        return [r.pattern for r in self.rules]

    def _evaluate(self, path: str, is_dir: bool) -> bool:
        hit = False
        for rule in self.rules:
            if rule.dir_only and not is_dir:
                continue
            if rule.regex.fullmatch(path):
                hit = not rule.negated
        return hit

    def matches(self, path: str, is_dir: bool = False) -> bool:
        parts = path.split("/")
        for k in range(1, len(parts)):
            if self._evaluate("/".join(parts[:k]), True):
                return True
        return self._evaluate(path, is_dir)
