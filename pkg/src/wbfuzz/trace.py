"""Per-evaluation observation record shared by harness and engine."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

LOCATIONS = ("QueryParam", "Header", "BodyField")
INFERRED_TYPES = ("Text", "Number", "Boolean", "Unknown")


@dataclass(frozen=True)
class DiscoveredInput:
    location: str
    name: str
    inferred_type: str = "Text"
    action: int = -1

    def __post_init__(self):
        if self.location not in LOCATIONS:
            raise ValueError(f"bad location {self.location}")
        if self.inferred_type not in INFERRED_TYPES:
            raise ValueError(f"bad inferred type {self.inferred_type}")
        if self.name == "_method":
            raise ValueError("_method is never a discoverable input")


@dataclass(frozen=True)
class TaintSighting:
    taint_id: int
    spec: object  # taint.Specialization
    context: str


@dataclass(frozen=True)
class DtoSighting:
    action: int
    shape: object  # schema.DtoShape
    dto_name: str


@dataclass
class ExecutionTrace:
    heuristics: dict = field(default_factory=dict)
    taint_sightings: list = field(default_factory=list)
    discoveries: list = field(default_factory=list)
    dto_sightings: list = field(default_factory=list)
    empty_selects: list = field(default_factory=list)
    faults: list = field(default_factory=list)
    covered_lines: set = field(default_factory=set)
    background_tasks: list = field(default_factory=list)
    # index of the HTTP action currently executing (-1 outside a call)
    action: int = -1
    sleep_calls: int = 0
    slept: float = 0.0
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False, compare=False)

    def record(self, target: str, h: float) -> None:
        if not (0.0 <= h <= 1.0):
            raise ValueError(f"heuristic {h} out of [0,1] for {target}")
        with self._lock:
            if h > self.heuristics.get(target, -1.0):
                self.heuristics[target] = h

    def line(self, sut_id: str, probe: str) -> None:
        with self._lock:
            self.covered_lines.add((sut_id, probe))
            self.heuristics[f"LINE:{sut_id}:{probe}"] = 1.0

    def sight(self, taint_id: int, spec, context: str) -> None:
        with self._lock:
            self.taint_sightings.append(TaintSighting(taint_id, spec, context))

    def discover(self, d: DiscoveredInput) -> None:
        with self._lock:
            if d not in self.discoveries:
                self.discoveries.append(d)

    def empty_select(self, table: str) -> None:
        with self._lock:
            if table not in self.empty_selects:
                self.empty_selects.append(table)

    def is_empty(self) -> bool:
        return not (self.heuristics or self.taint_sightings or self.discoveries or self.dto_sightings
                    or self.empty_selects or self.faults or self.covered_lines or self.background_tasks)

    def snapshot(self) -> dict:
        """Comparable, order-stable view used by determinism checks."""
        return {
            "heuristics": sorted(self.heuristics.items()),
            "taint": [(s.taint_id, getattr(s.spec, "key", s.spec), s.context) for s in self.taint_sightings],
            "discoveries": list(self.discoveries),
            "empty_selects": list(self.empty_selects),
            "faults": list(self.faults),
            "lines": sorted(self.covered_lines),
        }


@dataclass
class Request:
    verb: str
    path: str
    query: dict = field(default_factory=dict)
    headers: dict = field(default_factory=dict)
    body: Optional[object] = None


@dataclass
class Response:
    status: int
    body: object = None
    error: Optional[str] = None
    entity_crash: bool = False
