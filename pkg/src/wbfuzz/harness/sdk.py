"""Tracked operations that SUT fixtures call instead of the plain ones.

Every wrapper returns exactly what the plain operation returns (or raises
what it raises). On the side it records heuristics for both outcomes,
taint sightings and discovery events into the current ExecutionTrace.
"""

from __future__ import annotations

import logging
import math
import threading
import uuid as _uuid
from typing import Any, Callable, Iterable, Optional

from .. import distance as D
from ..config import Features
from ..schema import DtoShape
from ..taint import Specialization, acceptable_name, fake_location, recognize
from ..trace import DiscoveredInput, DtoSighting, ExecutionTrace, Request
from .clock import TaskInterrupted
from .uris import parse_uri, parse_url, uri_distance

log = logging.getLogger(__name__)

_HEX = set("0123456789abcdefABCDEF")


class HttpError(Exception):
    def __init__(self, status: int, message: str = ""):
        super().__init__(message or f"HTTP {status}")
        self.status = status


class EntityParseCrash(RuntimeError):
    pass


class EnumValueError(ValueError):
    pass


def _digit_distance(s: str, allow_float: bool) -> float:
    if not s:
        return 1.0
    body = s[1:] if s[0] in "+-" else s
    if not body:
        return 1.0
    bad, dots = 0.0, 0
    for c in body:
        if c.isdigit():
            continue
        if allow_float and c == "." and dots == 0:
            dots += 1
            continue
        bad += 1.0 + min(abs(ord(c) - ord("0")), abs(ord(c) - ord("9")))
    return max(bad, 1.0) if bad else 1.0


def _uuid_distance(s: str) -> float:
    d = abs(len(s) - 36) * 16.0
    for i, c in enumerate(s[:36]):
        if i in (8, 13, 18, 23):
            d += 0 if c == "-" else 1
        elif c not in _HEX:
            d += 1
    return max(d, 1.0)


class Sdk:
    """Instrumentation API bound to one harness.

    Handlers receive it as their first argument. ``site`` strings name
    probe sites; together with the SUT id they form stable target ids.
    """

    def __init__(self, harness):
        self._h = harness
        self._local = threading.local()

    # --- plumbing --------------------------------------------------------

    @property
    def features(self) -> Features:
        return self._h.features

    @property
    def trace(self) -> ExecutionTrace:
        task = getattr(self._local, "task", None)
        if task is not None:
            if task.epoch != self._h.epoch:
                raise TaskInterrupted()
            return task.trace
        return self._h.trace

    @property
    def request(self) -> Request:
        return self._h.current_request

    @property
    def db(self):
        self.trace  # kill-switch check
        return self._h.db

    def now(self) -> float:
        return self._h.clock.time()

    def _target(self, site: str, outcome: str) -> str:
        return f"{self._h.sut.id}:{self._h.sut.source}:{site}:{outcome}"

    def _scale(self, d: float) -> float:
        return D.scale(d, self.features.base)

    def _two(self, site: str, result: bool, d_true: float, d_false: float, graded: bool,
             names=("true", "false")) -> None:
        tr = self.trace
        if graded:
            ht = 1.0 if result else self._scale(max(d_true, 1e-12) if d_true == 0 else d_true)
            hf = 1.0 if not result else self._scale(max(d_false, 1e-12) if d_false == 0 else d_false)
        else:
            ht, hf = (1.0, 0.0) if result else (0.0, 1.0)
        tr.record(self._target(site, names[0]), ht)
        tr.record(self._target(site, names[1]), hf)

    def _sight(self, value, spec_kind: str, spec_value, site: str) -> None:
        tid = recognize(value)
        if tid is not None:
            spec = Specialization(spec_kind, spec_value, self._target(site, "true"))
            self.trace.sight(tid, spec, site)

    def _discover_from(self, keys: Iterable, name, site: str) -> None:
        if not self.features.openapi:
            return
        keys = list(keys) if not isinstance(keys, list) else keys
        if len(keys) > self.features.discovery_cap:
            return
        loc = fake_location(keys)
        if loc is None:
            return
        self._emit_discovery(loc, name)

    def _emit_discovery(self, loc: str, name) -> None:
        known = self._h.known_names("query" if loc == "QueryParam" else "header")
        if acceptable_name(name, known):
            self.trace.discover(DiscoveredInput(loc, name, "Text", self.trace.action))

    def _discover_from_equals(self, a, b) -> None:
        if not self.features.openapi:
            return
        for x, y in ((a, b), (b, a)):
            loc = fake_location([x]) if isinstance(x, str) else None
            if loc is not None:
                self._emit_discovery(loc, y)

    def _small(self, n: int) -> bool:
        return n <= self.features.heuristic_size_cap

    # --- coverage and branches ------------------------------------------

    def line(self, probe: str) -> None:
        self.trace.line(self._h.sut.id, probe)

    def cmp(self, site: str, a, op: str, b) -> bool:
        """Tracked numeric comparison ``a <op> b``."""
        result = {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b, "==": a == b, "!=": a != b}[op]
        dt, df = D.compare_distance(op, float(a), float(b))
        self._two(site, result, dt, df, True)
        return result

    # --- strings ---------------------------------------------------------

    def str_equals(self, a, b, site: str) -> bool:
        result = a == b
        if isinstance(a, str) and isinstance(b, str):
            self._two(site, result, D.string_eq_distance(a, b), 1.0, True)
            self._sight(a, "ConstantEquals", b, site)
            self._sight(b, "ConstantEquals", a, site)
            self._discover_from_equals(a, b)
        else:
            self._two(site, result, 1.0, 1.0, False)
        return result

    def str_starts_with(self, s: str, prefix: str, site: str) -> bool:
        result = s.startswith(prefix)
        head = s[:len(prefix)]
        self._two(site, result, D.string_eq_distance(head, prefix), 1.0, True)
        self._sight(s, "ConstantPrefix", prefix, site)
        if self.features.openapi and fake_location([s]) is not None:
            self._emit_discovery(fake_location([s]), prefix)
        return result

    def str_contains(self, s: str, sub: str, site: str) -> bool:
        result = sub in s
        if result:
            d = 0.0
        elif len(s) < len(sub):
            d = D.string_eq_distance(s, sub)
        else:
            d = min(D.string_eq_distance(s[i:i + len(sub)], sub) for i in range(len(s) - len(sub) + 1))
        self._two(site, result, d, 1.0, True)
        return result

    # --- collections -----------------------------------------------------

    def coll_contains(self, xs, e, site: str) -> bool:
        result = e in xs
        items = list(xs)
        if self._small(len(items)):
            self._two(site, result, D.contains_distance(e, items), 1.0, True)
            strs = sorted(x for x in items if isinstance(x, str))
            if strs:
                self._sight(e, "EnumMember", tuple(strs), site)
        else:
            self._two(site, result, 1.0, 1.0, False)
        self._discover_from(items, e, site)
        return result

    def coll_contains_all(self, xs, ys, site: str) -> bool:
        items, wanted = list(xs), list(ys)
        result = all(y in items for y in wanted)
        tr = self.trace
        if self.features.tt and self._small(len(items)):
            h = 1.0 if result else min(D.contains_all_heuristic(wanted, items, self.features.base), 1.0)
            if not result and h >= 1.0:
                h = 1.0 - 1e-9
            tr.record(self._target(site, "true"), h)
            tr.record(self._target(site, "false"), 1.0 if not result else self._scale(1.0))
            strs = tuple(sorted(x for x in items if isinstance(x, str)))
            if strs:
                for y in wanted:
                    self._sight(y, "EnumMember", strs, site)
        else:
            self._two(site, result, 1.0, 1.0, False)
        for y in wanted:
            self._discover_from(items, y, site)
        return result

    def coll_remove(self, xs: list, e, site: str) -> bool:
        items = list(xs)
        try:
            xs.remove(e)
            result = True
        except ValueError:
            result = False
        if self.features.tt and self._small(len(items)):
            self._two(site, result, D.contains_distance(e, items), 1.0, True)
        else:
            self._two(site, result, 1.0, 1.0, False)
        return result

    def coll_remove_all(self, xs: list, ys, site: str) -> bool:
        items, drop = list(xs), list(ys)
        xs[:] = [x for x in items if x not in drop]
        result = len(xs) != len(items)
        if self.features.tt and self._small(len(items)):
            self._two(site, result, D.remove_all_distance(drop, items), 1.0, True)
        else:
            self._two(site, result, 1.0, 1.0, False)
        return result

    def coll_is_empty(self, xs, site: str) -> bool:
        n = len(xs)
        self._two(site, n == 0, float(n), 1.0, True)
        return n == 0

    # --- maps ------------------------------------------------------------

    def _key_heuristics(self, m: dict, key, site: str, present: bool, names) -> None:
        keys = list(m.keys())
        graded = self.features.tt and self._small(len(keys))
        self._two(site, present, D.contains_distance(key, keys) if graded else 1.0, 1.0, graded, names)
        if self.features.tt:
            strs = tuple(sorted(k for k in keys if isinstance(k, str)))
            if strs and self._small(len(keys)):
                self._sight(key, "EnumMember", strs, site)
        self._discover_from(keys, key, site)

    def map_get(self, m: dict, key, site: str):
        value = m.get(key)
        self._key_heuristics(m, key, site, value is not None, ("nonnull", "null"))
        return value

    def map_get_or_default(self, m: dict, key, default, site: str):
        self._key_heuristics(m, key, site, key in m, ("true", "false"))
        return m.get(key, default)

    def map_contains_key(self, m: dict, key, site: str) -> bool:
        result = key in m
        self._key_heuristics(m, key, site, result, ("true", "false"))
        return result

    def map_contains_value(self, m: dict, v, site: str) -> bool:
        values = list(m.values())
        result = v in values
        graded = self.features.tt and self._small(len(values))
        self._two(site, result, D.contains_distance(v, values) if graded else 1.0, 1.0, graded)
        return result

    def map_remove(self, m: dict, key, site: str):
        value = m.get(key)
        self._key_heuristics(m, key, site, value is not None, ("nonnull", "null"))
        m.pop(key, None)
        return value

    def map_replace(self, m: dict, key, value, site: str):
        old = m.get(key)
        self._key_heuristics(m, key, site, key in m, ("true", "false"))
        if key in m:
            m[key] = value
        return old

    def map_is_empty(self, m: dict, site: str) -> bool:
        return self.coll_is_empty(m, site)

    # --- enums, equality, parsing ----------------------------------------

    def enum_value_of(self, values, s, site: str):
        values = tuple(values)
        ok = s in values
        graded = self.features.tt
        self._two(site, ok, D.contains_distance(s, values) if graded else 1.0, 1.0, graded, ("ok", "exception"))
        if graded:
            self._sight(s, "EnumMember", values, site)
        if not ok:
            raise EnumValueError(f"No enum constant {s!r}")
        return s

    def obj_equals(self, a, b, site: str) -> bool:
        result = a == b
        if not self.features.tt:
            self._two(site, result, 1.0, 1.0, False)
            return result
        if D._is_number(a) and D._is_number(b):
            d = D.numeric_eq_distance(float(a), float(b))
        elif isinstance(a, str) and isinstance(b, str):
            d = D.string_eq_distance(a, b)
            self._sight(a, "ConstantEquals", b, site)
            self._sight(b, "ConstantEquals", a, site)
            self._discover_from_equals(a, b)
        else:
            d = 0.0 if result else 1.0
        self._two(site, result, d, 1.0, True)
        return result

    def _parse(self, site: str, s, fn: Callable, d_fn: Callable, spec: str, graded: bool = True):
        try:
            value = fn(s)
        except Exception:
            d = d_fn(s) if isinstance(s, str) else D.MAX_DISTANCE
            self._two(site, False, d if graded else 1.0, 1.0, graded, ("ok", "exception"))
            if graded:
                self._sight(s, spec, None, site)
            raise
        self._two(site, True, 0.0, 1.0, graded, ("ok", "exception"))
        return value

    def parse_int(self, s, site: str) -> int:
        return self._parse(site, s, int, lambda x: _digit_distance(x, False), "IntegerFormat")

    def parse_float(self, s, site: str) -> float:
        return self._parse(site, s, float, lambda x: _digit_distance(x, True), "FloatFormat")

    def uuid_from_string(self, s, site: str) -> _uuid.UUID:
        return self._parse(site, s, _uuid.UUID, _uuid_distance, "UuidFormat", self.features.tt)

    def uri_parse(self, s, site: str):
        return self._parse(site, s, parse_uri, uri_distance, "UriFormat", self.features.tt)

    def url_parse(self, s, site: str):
        return self._parse(site, s, parse_url, uri_distance, "UrlFormat", self.features.tt)

    # --- HTTP request accessors -----------------------------------------

    def req_parameter(self, name: str) -> Optional[str]:
        self._emit_discovery("QueryParam", name)
        return self.request.query.get(name)

    def req_parameter_values(self, name: str) -> list:
        v = self.req_parameter(name)
        return [] if v is None else [v]

    def req_header(self, name: str) -> Optional[str]:
        self._emit_discovery("Header", name)
        lowered = {k.lower(): v for k, v in self.request.headers.items()}
        return lowered.get(name.lower())

    def req_parameter_map(self) -> dict:
        return dict(self.request.query)

    def req_header_map(self) -> dict:
        return dict(self.request.headers)

    def json_body(self, shape: Optional[DtoShape] = None):
        """Request body; a declared ``shape`` is reported when the schema lacks one."""
        if shape is not None and self._h.body_undeclared():
            tr = self.trace
            s = DtoSighting(tr.action, shape, shape.name)
            if s not in tr.dto_sightings:
                tr.dto_sightings.append(s)
        return self.request.body

    # --- bean validation -------------------------------------------------

    def _dto_distances(self, dto, shape: DtoShape, site: str, valids: list, invalids: list) -> bool:
        ok = True
        fields = shape.field_map()
        for fname, f in fields.items():
            v = dto.get(fname) if isinstance(dto, dict) else None
            for c in f.constraints:
                try:
                    dv, di = D.constraint_distance(c, v)
                except D.UnsupportedConstraintError:
                    log.warning("constraint %s on %s.%s not supported for heuristics", c.kind, shape.name, fname)
                    if not _enforce_unsupported(c, v, self.now()):
                        ok = False
                    continue
                valids.append(dv)
                invalids.append(di)
                if dv > 0:
                    ok = False
                if c.kind == "Pattern":
                    self._sight(v, "RegexMatch", c.args[0], site)
                elif c.kind == "EnumMembership":
                    self._sight(v, "EnumMember", tuple(c.args[0]), site)
            if isinstance(f.type, DtoShape) and v is not None:
                if isinstance(v, dict):
                    ok = self._dto_distances(v, f.type, site, valids, invalids) and ok
                else:
                    valids.append(1.0)
                    invalids.append(0.0)
                    ok = False
        return ok

    def validate(self, dto, shape: DtoShape, dto_name: Optional[str] = None) -> bool:
        tmpl = self._h.current_template
        name = dto_name or shape.name
        prefix = f"VALIDATE_{tmpl.verb}:{tmpl.path}_{name}" if tmpl else f"VALIDATE_{name}"
        valids: list = []
        invalids: list = []
        ok = self._dto_distances(dto if dto is not None else {}, shape, prefix, valids, invalids)
        tr = self.trace
        if self.features.tt:
            ht = 1.0 if ok else self._scale(max(D.conjunction(valids), 1e-12))
            hf = 1.0 if not ok else self._scale(max(D.disjunction(invalids), 1e-12))
        else:
            ht, hf = (1.0, 0.0) if ok else (0.0, 1.0)
        tr.record(f"{prefix}_true", ht)
        tr.record(f"{prefix}_false", hf)
        return ok

    # --- time and threads ------------------------------------------------

    def sleep(self, seconds: float) -> float:
        """Sleep, capped when the tt replacements are on."""
        tr = self.trace
        requested = max(0.0, float(seconds))
        actual = min(requested, self.features.sleep_cap) if self.features.tt else requested
        task = getattr(self._local, "task", None)
        with tr._lock:
            tr.sleep_calls += 1
            tr.slept += actual
        return self._h.clock.sleep(actual, self._h.interrupt, task is None)

    def server_sleep(self, seconds: float) -> float:
        """Sleep on behalf of the HTTP dispatch layer; never capped."""
        return self._h.clock.sleep(max(0.0, float(seconds)), self._h.interrupt, True)

    def spawn(self, fn: Callable, *args) -> None:
        """Run ``fn(*args)`` as a background task registered with the harness."""
        self._h.spawn(self, fn, args)

    # --- database facade -------------------------------------------------

    def select(self, table: str, **where) -> list:
        rows = self.db.select(table, where or None)
        if not rows:
            self.trace.empty_select(self._h.db.tables[table.lower()].name)
        return rows

    def insert(self, table: str, row: dict) -> None:
        self.db.insert(table, row)

    def delete(self, table: str, **where) -> int:
        return self.db.delete(table, where or None)

    def deserialize_entity(self, table: str, row: dict, entity) -> dict:
        """Map a row onto ``entity`` the way an ORM would, crashing on misfits."""
        from ..sqlgen import resolve

        binding = resolve(entity, list(self._h.db.tables.values()))
        out = {}
        for f, col in binding.columns:
            v = row.get(col.name)
            if v is None and f.implied_not_null:
                raise EntityParseCrash(
                    f"null value for primitive field {entity.entity_name}.{f.name} ({col.name})")
            if v is not None and f.enum_values is not None and v not in f.enum_values:
                raise EntityParseCrash(
                    f"no enum constant for {entity.entity_name}.{f.name} ({col.name})")
            out[f.name] = v
        return out


def _enforce_unsupported(c: D.ValidationConstraint, v: Any, now: float) -> bool:
    if v is None:
        return True
    if c.kind == "Custom":
        return bool(c.args[1](v))
    if c.kind in ("Future", "FutureOrPresent", "Past", "PastOrPresent") and D._is_number(v):
        return {"Future": v > now, "FutureOrPresent": v >= now,
                "Past": v < now, "PastOrPresent": v <= now}[c.kind]
    return True
