"""Semantic junction map and the history log of visits, turns and store entries.

``semantic_map.json`` is an array of ``{"id", "pois", "pose"}`` objects and
``history.jsonl`` holds one event object per line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from agentshop.world_model import POI_NAMES, Direction, Pose2D

MERGE_RADIUS = 1.0
EVENT_KINDS = ("junction_visit", "turn", "store_entry", "grasp", "pickup", "decision")


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.line = line
        self.field = field


def format_pair(direction: Direction, poi: str) -> str:
    return f"{direction.word}: {poi}"


def parse_pair(text: str) -> tuple[Direction, str]:
    word, sep, poi = text.partition(": ")
    if not sep:
        raise ValueError(f"poi pair {text!r} is not '<Direction>: <name>'")
    direction = Direction.from_word(word)
    if poi not in POI_NAMES:
        raise ValueError(f"unknown poi name {poi!r}")
    return direction, poi


@dataclass(frozen=True)
class JunctionRecord:
    id: str
    poi_pairs: tuple[str, ...]
    pose: Pose2D

    def __post_init__(self) -> None:
        seen = set()
        for text in self.poi_pairs:
            direction, _ = parse_pair(text)
            if direction in seen:
                raise ValueError(f"{self.id}: two pairs for {direction.word}")
            seen.add(direction)

    def pairs(self) -> dict[Direction, str]:
        return dict(parse_pair(t) for t in self.poi_pairs)

    def poi(self, direction: Direction) -> str | None:
        return self.pairs().get(direction)

    @property
    def directions(self) -> list[Direction]:
        return sorted(self.pairs())


@dataclass(frozen=True)
class JunctionObservation:
    pose: Pose2D
    pairs: tuple[tuple[Direction, str], ...]
    tag_id: int


@dataclass(frozen=True)
class SemanticMap:
    records: tuple[JunctionRecord, ...] = ()

    def __post_init__(self) -> None:
        ids = [r.id for r in self.records]
        if len(ids) != len(set(ids)):
            raise ValueError("junction ids must be unique")

    def __iter__(self) -> Iterator[JunctionRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, record: object) -> bool:
        return record in self.records

    def get(self, junction_id: str) -> JunctionRecord:
        for r in self.records:
            if r.id == junction_id:
                return r
        raise KeyError(junction_id)

    def order(self, junction_id: str) -> int:
        """Discovery index of a junction."""
        for i, r in enumerate(self.records):
            if r.id == junction_id:
                return i
        raise KeyError(junction_id)

    def match(self, pose: Pose2D, merge_radius: float = MERGE_RADIUS) -> JunctionRecord | None:
        """Earliest-discovered record within ``merge_radius`` of the pose."""
        for r in self.records:
            if r.pose.distance_to(pose) <= merge_radius:
                return r
        return None


def _sorted_pairs(pairs: dict[Direction, str]) -> tuple[str, ...]:
    return tuple(format_pair(d, pairs[d]) for d in sorted(pairs))


def record_junction(m: SemanticMap, obs: JunctionObservation, merge_radius: float = MERGE_RADIUS) -> SemanticMap:
    """Add a signboard observation; re-observations merge into the existing record.

    Merging never drops a pair and keeps the first pose and the first POI seen
    for each direction.
    """
    existing = m.match(obs.pose, merge_radius)
    if existing is None:
        pairs: dict[Direction, str] = {}
        for d, poi in obs.pairs:
            pairs.setdefault(d, poi)
        record = JunctionRecord(f"junction_{len(m) + 1}", _sorted_pairs(pairs), obs.pose)
        return SemanticMap(m.records + (record,))
    pairs = existing.pairs()
    for d, poi in obs.pairs:
        pairs.setdefault(d, poi)
    merged = JunctionRecord(existing.id, _sorted_pairs(pairs), existing.pose)
    if merged == existing:
        return m
    return SemanticMap(tuple(merged if r.id == existing.id else r for r in m.records))


def map_to_json(m: SemanticMap) -> list[dict]:
    return [{"id": r.id, "pois": list(r.poi_pairs), "pose": r.pose.to_dict()} for r in m]


def save_map(m: SemanticMap) -> bytes:
    return (json.dumps(map_to_json(m), indent=2) + "\n").encode("utf-8")


def map_from_json(data: object) -> SemanticMap:
    if not isinstance(data, list):
        raise ParseError("semantic map must be a JSON array")
    records = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise ParseError(f"entry {i} is not an object", field=f"[{i}]")
        for key in ("id", "pois", "pose"):
            if key not in entry:
                raise ParseError(f"entry {i} lacks {key}", field=f"[{i}].{key}")
        try:
            pose = Pose2D.from_dict(entry["pose"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"entry {i} has a bad pose: {exc}", field=f"[{i}].pose") from None
        try:
            records.append(JunctionRecord(str(entry["id"]), tuple(entry["pois"]), pose))
        except (TypeError, ValueError) as exc:
            raise ParseError(f"entry {i}: {exc}", field=f"[{i}].pois") from None
    try:
        return SemanticMap(tuple(records))
    except ValueError as exc:
        raise ParseError(str(exc), field="id") from None


def load_map(raw: bytes | str) -> SemanticMap:
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return map_from_json(data)


# --- history ---------------------------------------------------------------


@dataclass(frozen=True)
class HistoryEvent:
    t: float
    kind: str
    junction_id: str | None = None
    direction: Direction | None = None
    poi: str | None = None
    detail: str = field(default="")

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if self.kind == "turn" and self.direction is None:
            raise ValueError("turn events need a direction")
        if self.kind == "store_entry" and (self.junction_id is None or self.direction is None or self.poi is None):
            raise ValueError("store_entry events need junction_id, direction and poi")
        if not math.isfinite(self.t):
            raise ValueError("event time must be finite")

    @property
    def failed(self) -> bool:
        return self.detail.startswith("failed")

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "kind": self.kind,
            "junction_id": self.junction_id,
            "direction": None if self.direction is None else self.direction.word,
            "poi": self.poi,
            "detail": self.detail,
        }

    @classmethod
    def from_json(cls, data: dict) -> HistoryEvent:
        direction = data.get("direction")
        return cls(
            t=float(data["t"]),
            kind=str(data["kind"]),
            junction_id=data.get("junction_id"),
            direction=None if direction is None else Direction.from_word(direction),
            poi=data.get("poi"),
            detail=str(data.get("detail", "")),
        )

    def line(self) -> str:
        """Human-readable rendering used in prompts and reports."""
        parts = [f"t={self.t:.2f}", self.kind]
        if self.junction_id:
            parts.append(self.junction_id)
        if self.direction is not None:
            parts.append(self.direction.word)
        if self.poi:
            parts.append(self.poi)
        text = " ".join(parts)
        return f"{text}: {self.detail}" if self.detail else text


def dump_history(events: Iterable[HistoryEvent]) -> bytes:
    return "".join(json.dumps(e.to_json()) + "\n" for e in events).encode("utf-8")


def load_history(raw: bytes | str) -> list[HistoryEvent]:
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    events = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            events.append(HistoryEvent.from_json(json.loads(line)))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=n) from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(str(exc), line=n) from None
    return events


def visited_instances(log: Iterable[HistoryEvent]) -> set[tuple[str, Direction, str]]:
    """Store instances entered successfully; failed entries do not count."""
    return {
        (e.junction_id, e.direction, e.poi)
        for e in log
        if e.kind == "store_entry" and not e.failed
    }


def tried_branches(log: Iterable[HistoryEvent]) -> set[tuple[str, Direction]]:
    return {
        (e.junction_id, e.direction)
        for e in log
        if e.kind in ("turn", "store_entry") and e.junction_id is not None and e.direction is not None
    }
