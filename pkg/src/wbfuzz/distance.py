"""Branch distances and their scaling into heuristic values.

Everything here is a pure function. A distance ``d`` is a non-negative real
with ``d == 0`` meaning the predicate holds; a heuristic ``h`` lives in
``[0, 1]`` with ``h == 1`` meaning the target is covered.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from numbers import Real
from typing import Any, Iterable, Sequence

DEFAULT_BASE = 0.1
MAX_DISTANCE = float(2**31)
# penalty per missing/extra character; Java's char range
CHAR_MAX = 0xFFFF


class DistanceConfigError(ValueError):
    pass


class UnsupportedConstraintError(ValueError):
    pass


def scale(d: float, b: float = DEFAULT_BASE) -> float:
    """Map a distance to a heuristic: ``b + (1 - b) / (1 + d)``."""
    if not (0.0 < b < 1.0):
        raise DistanceConfigError(f"base must be in (0,1), got {b}")
    if d < 0:
        raise DistanceConfigError(f"negative distance {d}")
    if d == 0:
        return 1.0
    if math.isinf(d):
        return b
    return b + (1.0 - b) / (1.0 + d)


def _is_number(x: Any) -> bool:
    return isinstance(x, Real) and not isinstance(x, bool)


def numeric_eq_distance(a: float, b: float) -> float:
    if not (math.isfinite(a) and math.isfinite(b)):
        return 0.0 if a == b else MAX_DISTANCE
    return float(abs(a - b))


def compare_distance(op: str, a: float, b: float) -> tuple[float, float]:
    """``(d_true, d_false)`` for ``a <op> b`` (Korel-style, +1 on strict sides)."""
    if not (math.isfinite(a) and math.isfinite(b)):
        truth = {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b, "==": a == b, "!=": a != b}[op]
        return (0.0, MAX_DISTANCE) if truth else (MAX_DISTANCE, 0.0)
    diff = float(a - b)
    if op == "==":
        return (abs(diff), 0.0 if diff != 0 else 1.0)
    if op == "!=":
        t, f = compare_distance("==", a, b)
        return f, t
    if op == "<":
        return (0.0 if diff < 0 else diff + 1.0, 0.0 if diff >= 0 else -diff)
    if op == "<=":
        return (0.0 if diff <= 0 else diff, 0.0 if diff > 0 else -diff + 1.0)
    if op == ">":
        f, t = compare_distance("<=", a, b)
        return t, f
    if op == ">=":
        f, t = compare_distance("<", a, b)
        return t, f
    raise ValueError(f"unknown comparison {op!r}")


def string_eq_distance(s: str, t: str) -> float:
    """Character distance on the aligned prefix plus a penalty per length gap."""
    d = sum(abs(ord(a) - ord(b)) for a, b in zip(s, t))
    return float(d + abs(len(s) - len(t)) * CHAR_MAX)


def element_distance(x: Any, e: Any) -> float:
    if _is_number(x) and _is_number(e):
        return numeric_eq_distance(float(x), float(e))
    if isinstance(x, str) and isinstance(e, str):
        return string_eq_distance(x, e)
    return 0.0 if x == e else 1.0


def contains_distance(e: Any, xs: Iterable[Any]) -> float:
    """``min`` over the collection of the element distance to ``e``."""
    best = MAX_DISTANCE
    for x in xs:
        d = element_distance(x, e)
        if d < best:
            best = d
            if d == 0:
                break
    return best


def contains_all_distance(ys: Iterable[Any], xs: Sequence[Any]) -> float:
    xs = list(xs)
    return sum(contains_distance(y, xs) for y in ys)


def contains_all_heuristic(ys: Iterable[Any], xs: Iterable[Any], b: float = DEFAULT_BASE) -> float:
    """Sum of per-element contains heuristics over ``|Y| + ln|Y|``."""
    ys, xs = list(ys), list(xs)
    if not ys:
        return 1.0
    total = sum(scale(contains_distance(y, xs), b) for y in ys)
    return total / (len(ys) + math.log(len(ys)))


def remove_all_distance(ys: Iterable[Any], xs: Sequence[Any]) -> float:
    """removeAll reports a change when any element of ``ys`` is present."""
    xs = list(xs)
    return min((contains_distance(y, xs) for y in ys), default=MAX_DISTANCE)


def conjunction(ds: Iterable[float]) -> float:
    return float(sum(ds))


def disjunction(ds: Iterable[float]) -> float:
    return float(min(ds, default=MAX_DISTANCE))


# --- bean-validation style constraints ---------------------------------------

SUPPORTED = frozenset({
    "Min", "Max", "Positive", "PositiveOrZero", "Negative", "NegativeOrZero", "Size",
    "NotEmpty", "NotBlank", "Null", "NotNull", "AssertTrue", "AssertFalse", "Pattern",
    "EnumMembership", "ImpliedNotNull",
})
_TIME_KINDS = frozenset({"Future", "FutureOrPresent", "Past", "PastOrPresent"})


@dataclass(frozen=True)
class ValidationConstraint:
    kind: str
    args: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self):
        return f"{self.kind}({', '.join(map(repr, self.args))})" if self.args else self.kind


def _flag(ok: bool) -> tuple[float, float]:
    return (0.0, 1.0) if ok else (1.0, 0.0)


def _num(c: ValidationConstraint, v) -> tuple[float, float]:
    if not _is_number(v) or not math.isfinite(v):
        return (1.0, 0.0)
    k = c.args[0] if c.args else 0
    if c.kind == "Min":
        return (max(0.0, k - v), 0.0 if v < k else v - k + 1.0)
    if c.kind == "Max":
        return (max(0.0, v - k), 0.0 if v > k else k - v + 1.0)
    if c.kind == "Positive":
        return (0.0 if v > 0 else -v + 1.0, 0.0 if v <= 0 else float(v))
    if c.kind == "PositiveOrZero":
        return (max(0.0, -v), 0.0 if v < 0 else v + 1.0)
    if c.kind == "Negative":
        return (0.0 if v < 0 else v + 1.0, 0.0 if v >= 0 else float(-v))
    # NegativeOrZero
    return (max(0.0, v), 0.0 if v > 0 else -v + 1.0)


def constraint_distance(c: ValidationConstraint, v: Any) -> tuple[float, float]:
    """``(d_valid, d_invalid)`` for value ``v`` under constraint ``c``.

    Null handling follows the usual bean-validation rule: ``None`` satisfies
    every constraint except NotNull, NotEmpty, NotBlank and ImpliedNotNull.
    """
    kind = c.kind
    if kind in _TIME_KINDS or kind not in SUPPORTED:
        raise UnsupportedConstraintError(f"unsupported constraint {kind}")
    if kind in ("NotNull", "ImpliedNotNull"):
        return _flag(v is not None)
    if kind == "Null":
        return _flag(v is None)
    if kind == "NotEmpty":
        if v is None or len(v) == 0:
            return (1.0, 0.0)
        return (0.0, float(len(v)))
    if kind == "NotBlank":
        if v is None or not isinstance(v, str) or not v.strip():
            return (1.0, 0.0)
        return (0.0, float(len(v.strip())))
    if v is None:
        return (0.0, 1.0)
    if kind in ("Min", "Max", "Positive", "PositiveOrZero", "Negative", "NegativeOrZero"):
        return _num(c, v)
    if kind == "Size":
        try:
            n = len(v)
        except TypeError:
            return (1.0, 0.0)
        lo, hi = c.args
        dv = max(0, lo - n) + max(0, n - hi)
        return (float(dv), 0.0 if dv else float(min(n - lo + 1, hi - n + 1)))
    if kind == "AssertTrue":
        return _flag(v is True)
    if kind == "AssertFalse":
        return _flag(v is False)
    if kind == "Pattern":
        return _flag(isinstance(v, str) and re.fullmatch(c.args[0], v) is not None)
    # EnumMembership
    values = c.args[0]
    if v in values:
        return (0.0, 1.0)
    d = contains_distance(v, sorted(values))
    return (max(d, 1.0) if d > 0 else 1.0, 0.0)
