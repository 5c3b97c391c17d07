"""Session traces: the event log every metric and validator is computed from.

A trace serialises to JSON Lines. The first line is a header carrying
``trace_version``; then one line per event in time order; the last line is the
summary. Scores are rounded to 6 decimals and ``-inf`` is written as the
string ``"-inf"`` so files stay byte-stable.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import jsonschema

TRACE_VERSION = 1


def fmt_score(x: float):
    if x == -math.inf:
        return "-inf"
    return round(float(x), 6)


def parse_score(x) -> float:
    return -math.inf if x == "-inf" else float(x)


@dataclass
class ChunkArrival:
    i: int
    arrival_ms: int
    valid_frames: int
    new_states: int = 0
    compute_ms: float = 0.0
    type: str = "chunk"

    @property
    def time_ms(self) -> int:
        return self.arrival_ms


@dataclass
class AsrStep:
    j: int
    time_ms: int
    chunk: int
    beam: list[dict]
    phi_lcp_raw: int
    phi_sh_raw: int
    phi_lcp: int
    phi_sh: int
    type: str = "asr_step"


@dataclass
class Commit:
    t: int
    token: int
    text: str
    phase: str
    time_ms: int
    source_consumed_ms: int
    chunks_consumed: int
    states_consumed: int
    wall_compute_ms: float
    type: str = "commit"


@dataclass
class StreamEnd:
    time_ms: int
    total_source_ms: int
    type: str = "stream_end"


EVENT_TYPES = {"chunk": ChunkArrival, "asr_step": AsrStep, "commit": Commit, "stream_end": StreamEnd}


@dataclass
class SessionTrace:
    header: dict[str, Any]
    events: list = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)

    @property
    def total_source_ms(self) -> int:
        return int(self.header["total_source_ms"])

    @property
    def commits(self) -> list[Commit]:
        return [e for e in self.events if isinstance(e, Commit)]

    @property
    def chunks(self) -> list[ChunkArrival]:
        return [e for e in self.events if isinstance(e, ChunkArrival)]

    @property
    def asr_steps(self) -> list[AsrStep]:
        return [e for e in self.events if isinstance(e, AsrStep)]

    @property
    def translation(self) -> list[int]:
        return [c.token for c in self.commits]

    @property
    def transcript(self) -> list[int]:
        return list(self.summary.get("transcript", []))

    def to_lines(self) -> list[str]:
        dumps = lambda obj: json.dumps(obj, sort_keys=True, separators=(",", ":"))
        lines = [dumps({"trace_version": TRACE_VERSION, **self.header})]
        for ev in self.events:
            obj = asdict(ev)
            if isinstance(ev, ChunkArrival):
                obj["time_ms"] = ev.time_ms
            lines.append(dumps(obj))
        lines.append(dumps({"type": "summary", **self.summary}))
        return lines

    def dumps(self) -> str:
        return "\n".join(self.to_lines()) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def from_lines(cls, lines) -> "SessionTrace":
        objs = [json.loads(line) for line in lines if line.strip()]
        if not objs or objs[0].get("trace_version") != TRACE_VERSION:
            raise ValueError("missing or unsupported trace header")
        header = dict(objs[0])
        header.pop("trace_version")
        events, summary = [], {}
        for obj in objs[1:]:
            kind = obj.get("type")
            if kind == "summary":
                summary = {k: v for k, v in obj.items() if k != "type"}
                continue
            if kind not in EVENT_TYPES:
                raise ValueError(f"unknown trace event type {kind!r}")
            fields = dict(obj)
            if kind == "chunk":
                fields.pop("time_ms", None)
            events.append(EVENT_TYPES[kind](**fields))
        return cls(header, events, summary)

    @classmethod
    def read(cls, path) -> "SessionTrace":
        return cls.from_lines(Path(path).read_text().splitlines())


_SCORE = {"oneOf": [{"type": "number"}, {"const": "-inf"}]}
_COUNT = {"type": "integer", "minimum": 0}

LINE_SCHEMAS = {
    "header": {
        "type": "object",
        "required": ["trace_version", "utt_id", "config", "total_source_ms", "n_frames"],
        "properties": {
            "trace_version": {"const": TRACE_VERSION},
            "utt_id": {"type": "string"},
            "total_source_ms": _COUNT,
            "n_frames": _COUNT,
            "config": {
                "type": "object",
                "required": ["k", "policy", "w", "r", "b", "lookahead", "alpha", "beta", "weights"],
                "properties": {
                    "k": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "inf"}]},
                    "policy": {"enum": ["lcp", "sh"]},
                    "w": {"type": "integer", "minimum": 1},
                    "r": {"type": "integer", "minimum": 1},
                    "b": {"type": "integer", "minimum": 1},
                    "lookahead": _COUNT,
                },
            },
        },
    },
    "chunk": {
        "type": "object",
        "required": ["type", "i", "arrival_ms", "valid_frames", "time_ms", "new_states", "compute_ms"],
        "properties": {"i": {"type": "integer", "minimum": 1}, "arrival_ms": _COUNT, "time_ms": _COUNT,
                       "valid_frames": _COUNT, "new_states": _COUNT,
                       "compute_ms": {"type": "number", "minimum": 0}},
        "additionalProperties": False,
    },
    "asr_step": {
        "type": "object",
        "required": ["type", "j", "time_ms", "chunk", "beam", "phi_lcp_raw", "phi_sh_raw", "phi_lcp", "phi_sh"],
        "properties": {
            "j": _COUNT, "time_ms": _COUNT, "chunk": _COUNT,
            "phi_lcp_raw": _COUNT, "phi_sh_raw": _COUNT, "phi_lcp": _COUNT, "phi_sh": _COUNT,
            "beam": {"type": "array", "minItems": 1, "items": {
                "type": "object", "required": ["prefix", "text", "score", "ctc", "att", "lm"],
                "properties": {"prefix": {"type": "array", "items": _COUNT}, "text": {"type": "string"},
                               "score": _SCORE, "ctc": _SCORE, "att": _SCORE, "lm": _SCORE}}},
        },
        "additionalProperties": False,
    },
    "commit": {
        "type": "object",
        "required": ["type", "t", "token", "text", "phase", "time_ms", "source_consumed_ms",
                     "chunks_consumed", "states_consumed", "wall_compute_ms"],
        "properties": {"t": {"type": "integer", "minimum": 1}, "token": _COUNT, "text": {"type": "string"},
                       "phase": {"enum": ["stream", "tail"]}, "time_ms": _COUNT,
                       "source_consumed_ms": _COUNT, "chunks_consumed": _COUNT,
                       "states_consumed": _COUNT, "wall_compute_ms": {"type": "number", "minimum": 0}},
        "additionalProperties": False,
    },
    "stream_end": {
        "type": "object",
        "required": ["type", "time_ms", "total_source_ms"],
        "properties": {"time_ms": _COUNT, "total_source_ms": _COUNT},
        "additionalProperties": False,
    },
    "summary": {
        "type": "object",
        "required": ["type", "hypothesis", "transcript", "total_source_ms"],
        "properties": {"hypothesis": {"type": "array", "items": _COUNT},
                       "transcript": {"type": "array", "items": _COUNT},
                       "total_source_ms": _COUNT},
    },
}


for _kind, _schema in LINE_SCHEMAS.items():
    if _kind != "header":
        _schema["properties"]["type"] = {"const": _kind}


def schema_errors(lines) -> list[str]:
    """Check every line of a serialised trace against :data:`LINE_SCHEMAS`."""
    errors = []
    lines = [line for line in lines if line.strip()]
    if not lines:
        return ["empty trace"]
    for n, line in enumerate(lines):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            errors.append(f"line {n + 1}: invalid JSON ({exc})")
            continue
        if n == 0:
            kind = "header"
        else:
            kind = obj.get("type") if isinstance(obj, dict) else None
            if kind not in LINE_SCHEMAS or kind == "header":
                errors.append(f"line {n + 1}: unknown event type {kind!r}")
                continue
        for err in jsonschema.Draft7Validator(LINE_SCHEMAS[kind]).iter_errors(obj):
            errors.append(f"line {n + 1} ({kind}): {err.message}")
    try:
        last = json.loads(lines[-1])
    except json.JSONDecodeError:
        last = None
    if not isinstance(last, dict) or last.get("type") != "summary":
        errors.append("last line is not a summary")
    return errors
