"""ScanReport: per-file rows plus aggregates, with JSON/CSV/table views.

JSON is canonical; the other formats are projections of it.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from . import __version__
from .decision import FilterDecision, Reason, Verdict

SCHEMA_VERSION = 1
# keys that legitimately differ between otherwise identical runs
VOLATILE_KEYS = ("latency_ms", "latency_ns")


@dataclass
class ReportRow:
    path: str
    size: int
    decision: FilterDecision
    latency_ns: int = 0
    tokens: int | None = None
    method: str | None = None

    def to_json(self, include_latency: bool = True) -> dict:
        row = {
            "path": self.path,
            "size": self.size,
            "verdict": self.decision.verdict.value,
            "reason": self.decision.reason.value,
            "gate": self.decision.gate,
            "bytes_read": self.decision.bytes_read,
            "tokens": self.tokens,
            "method": self.method,
        }
        if include_latency:
            row["latency_ns"] = self.latency_ns
        return row

    @classmethod
    def from_json(cls, obj: dict) -> ReportRow:
        decision = FilterDecision(Verdict(obj["verdict"]), Reason(obj["reason"]),
                                  obj.get("gate"), obj.get("bytes_read", 0))
        return cls(obj["path"], obj["size"], decision, obj.get("latency_ns", 0),
                   obj.get("tokens"), obj.get("method"))


@dataclass
class ScanReport:
    filter_id: str
    rows: list[ReportRow]
    source: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)
    aggregates: dict = field(default_factory=dict)
    io: dict = field(default_factory=dict)
    pack: dict | None = None
    tool_version: str = __version__

    @property
    def decisions(self) -> dict[str, FilterDecision]:
        return {r.path: r.decision for r in self.rows}

    @property
    def flagged_paths(self) -> list[str]:
        return [r.path for r in self.rows if r.decision.flagged]

    @property
    def allowed_paths(self) -> list[str]:
        return [r.path for r in self.rows if not r.decision.flagged]

    def to_dict(self, include_latency: bool = True) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "source": self.source,
            "filter": self.filter_id,
            "config": self.config,
            "rows": [r.to_json(include_latency) for r in self.rows],
            "aggregates": {k: v for k, v in self.aggregates.items()
                           if include_latency or k not in VOLATILE_KEYS},
            "io": self.io,
        }
        if self.pack is not None:
            out["pack"] = self.pack
        return out

    def to_json(self, include_latency: bool = True) -> str:
        return json.dumps(self.to_dict(include_latency), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> ScanReport:
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {data.get('schema')!r}")
        return cls(
            filter_id=data["filter"],
            rows=[ReportRow.from_json(r) for r in data["rows"]],
            source=data.get("source", {}),
            config=data.get("config", {}),
            aggregates=data.get("aggregates", {}),
            io=data.get("io", {}),
            pack=data.get("pack"),
            tool_version=data.get("tool_version", __version__),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["path", "size", "verdict", "reason", "gate", "bytes_read", "tokens", "method"]
        writer = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow(row.to_json(include_latency=False))
        return buf.getvalue()

    def to_table(self) -> str:
        header = ("PATH", "SIZE", "VERDICT", "REASON", "TOKENS")
        body = [(r.path, str(r.size), r.decision.verdict.value,
                 "" if r.decision.reason is Reason.NONE else r.decision.reason.value,
                 "" if r.tokens is None else str(r.tokens)) for r in self.rows]
        widths = [max([len(h)] + [len(b[i]) for b in body]) for i, h in enumerate(header)]
        lines = ["  ".join(c.ljust(w) if i != 1 and i != 4 else c.rjust(w)
                           for i, (c, w) in enumerate(zip(cols, widths)))
                 for cols in [header] + body]
        red = self.aggregates.get("reduction")
        if red:
            lines.append("")
            lines.append(f"baseline {red['baseline_tokens']} tokens -> {red['filtered_tokens']} "
                         f"({red['reduction_pct']:.2f}% reduction, "
                         f"{red['flagged_count']} flagged / {red['allowed_count']} allowed)")
        return "\n".join(line.rstrip() for line in lines) + "\n"

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        if fmt == "table":
            return self.to_table()
        raise ValueError(f"unknown report format {fmt!r}")
