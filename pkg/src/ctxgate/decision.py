from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Verdict(str, Enum):
    ALLOWED = "allowed"
    FLAGGED = "flagged"


class Reason(str, Enum):
    NONE = "none"
    SIZE_EXCEEDS_THETA = "size_exceeds_theta"
    BLOCKED_EXTENSION = "blocked_extension"
    BINARY_SIGNATURE = "binary_signature"
    MINIFIED = "minified"
    GITIGNORED = "gitignored"
    LOW_SEMANTIC_DENSITY = "low_semantic_density"
    UNREADABLE = "unreadable"


@dataclass(frozen=True)
class FilterDecision:
    verdict: Verdict
    reason: Reason = Reason.NONE
    gate: str | None = None
    bytes_read: int = 0

    def __post_init__(self):
        if self.verdict is Verdict.ALLOWED and (self.reason is not Reason.NONE or self.gate):
            raise ValueError("an allowed decision carries no reason or gate")
        if self.bytes_read < 0:
            raise ValueError("bytes_read must be >= 0")

    @property
    def flagged(self) -> bool:
        return self.verdict is Verdict.FLAGGED

    @classmethod
    def allow(cls, bytes_read: int = 0) -> FilterDecision:
        return cls(Verdict.ALLOWED, Reason.NONE, None, bytes_read)

    @classmethod
    def flag(cls, reason: Reason, gate: str, bytes_read: int = 0) -> FilterDecision:
        return cls(Verdict.FLAGGED, reason, gate, bytes_read)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "reason": self.reason.value,
            "gate": self.gate,
            "bytes_read": self.bytes_read,
        }
