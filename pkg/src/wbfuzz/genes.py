"""Genotype trees for every input the fuzzer evolves.

A gene is a mutable node during construction, but the public helpers
:func:`sample` and :func:`mutate` always work on copies, so a gene handed to
the archive is never modified afterwards.
"""

from __future__ import annotations

import base64
import functools
import json
import math
import string
import uuid
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Optional
from urllib.parse import quote

INT32_MIN, INT32_MAX = -(2**31), 2**31 - 1
INT64_MIN, INT64_MAX = -(2**63), 2**63 - 1

PRINTABLE = "".join(chr(c) for c in range(32, 127))
UNRESERVED = string.ascii_letters + string.digits + "-._~"
HOST_ALPHABET = string.ascii_lowercase + string.digits + "-"

DEFAULT_MAX_LEN = 64
# typical sampled length for strings without a lower bound
SHORT_LEN = 16


class GeneConfigError(ValueError):
    """Raised when a gene template carries inconsistent bounds."""


@dataclass
class MutationContext:
    """Knobs the engine passes down into string mutation."""

    taint_probability: float = 0.0
    mint: Optional[Callable[[], str]] = None
    is_taint: Callable[[str], bool] = lambda s: False


_NO_CTX = MutationContext()


class Gene:
    name: str = ""

    def copy(self) -> "Gene":
        raise NotImplementedError

    def randomize(self, rng, ctx: MutationContext = _NO_CTX) -> None:
        raise NotImplementedError

    def mutate_in_place(self, rng, ctx: MutationContext = _NO_CTX) -> None:
        raise NotImplementedError

    def value(self) -> Any:
        """Phenotype as a plain Python value (JSON-compatible)."""
        raise NotImplementedError

    def render(self) -> str:
        v = self.value()
        if v is None:
            return ""
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return repr(v)
        return str(v)

    def children(self) -> list[tuple[str, "Gene"]]:
        return []

    def is_valid(self) -> bool:
        return all(c.is_valid() for _, c in self.children())

    def check(self) -> None:
        for _, c in self.children():
            c.check()

    def is_singleton(self) -> bool:
        return all(c.is_singleton() for _, c in self.children())


def _log_step(rng, span: float) -> float:
    top = math.log2(span) if span > 1 else 0.0
    return 2.0 ** rng.uniform(0.0, top)


@dataclass
class IntegerGene(Gene):
    name: str = ""
    v: int = 0
    min: int = INT32_MIN
    max: int = INT32_MAX
    frozen: bool = False

    def copy(self):
        return IntegerGene(self.name, self.v, self.min, self.max, self.frozen)

    def check(self):
        if self.min > self.max:
            raise GeneConfigError(f"{self.name or 'integer'}: min {self.min} > max {self.max}")

    def randomize(self, rng, ctx=_NO_CTX):
        if self.frozen:
            return
        self.check()
        lo, hi = self.min, self.max
        if hi - lo > 2**16 and rng.random() < 0.5:
            lo, hi = max(lo, -100), min(hi, 100)
            if lo > hi:
                lo, hi = self.min, self.max
        self.v = rng.randint(lo, hi)

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        if self.frozen or self.min == self.max:
            return
        if rng.random() < 0.05:
            old = self.v
            while self.v == old:
                self.v = rng.randint(self.min, self.max)
            return
        step = max(1, int(round(_log_step(rng, self.max - self.min))))
        if rng.random() < 0.5:
            step = -step
        nv = min(self.max, max(self.min, self.v + step))
        if nv == self.v:
            nv = min(self.max, max(self.min, self.v - step))
        self.v = nv

    def value(self):
        return self.v

    def is_valid(self):
        return isinstance(self.v, int) and self.min <= self.v <= self.max

    def is_singleton(self):
        return self.frozen or self.min == self.max


def LongGene(name: str = "", v: int = 0, min: int = INT64_MIN, max: int = INT64_MAX) -> IntegerGene:
    return IntegerGene(name, v, min, max)


@dataclass
class FloatGene(Gene):
    name: str = ""
    v: float = 0.0
    min: float = -1e9
    max: float = 1e9

    def copy(self):
        return FloatGene(self.name, self.v, self.min, self.max)

    def check(self):
        if not (self.min <= self.max):
            raise GeneConfigError(f"{self.name or 'float'}: min {self.min} > max {self.max}")

    def randomize(self, rng, ctx=_NO_CTX):
        self.check()
        lo, hi = self.min, self.max
        if hi - lo > 1e4 and rng.random() < 0.5:
            lo, hi = max(lo, -100.0), min(hi, 100.0)
            if lo > hi:
                lo, hi = self.min, self.max
        self.v = rng.uniform(lo, hi)
        if rng.random() < 0.3:
            self.v = float(min(self.max, max(self.min, round(self.v))))

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        if self.min == self.max:
            return
        old = self.v
        for _ in range(8):
            step = 2.0 ** rng.uniform(-8.0, math.log2(max(self.max - self.min, 1.0)))
            if rng.random() < 0.5:
                step = -step
            nv = min(self.max, max(self.min, self.v + step))
            if rng.random() < 0.2:
                nv = float(min(self.max, max(self.min, round(nv))))
            if nv != old:
                self.v = nv
                return

    def value(self):
        return self.v

    def is_valid(self):
        return math.isfinite(self.v) and self.min <= self.v <= self.max

    def is_singleton(self):
        return self.min == self.max


@dataclass
class BooleanGene(Gene):
    name: str = ""
    v: bool = False

    def copy(self):
        return BooleanGene(self.name, self.v)

    def randomize(self, rng, ctx=_NO_CTX):
        self.v = rng.random() < 0.5

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        self.v = not self.v

    def value(self):
        return self.v

    def is_valid(self):
        return isinstance(self.v, bool)

    def is_singleton(self):
        return False


@dataclass
class StringGene(Gene):
    name: str = ""
    v: str = ""
    min_len: int = 0
    max_len: int = DEFAULT_MAX_LEN
    charset: str = PRINTABLE

    def copy(self):
        return StringGene(self.name, self.v, self.min_len, self.max_len, self.charset)

    def check(self):
        if self.min_len < 0 or self.min_len > self.max_len:
            raise GeneConfigError(f"{self.name or 'string'}: length bounds [{self.min_len},{self.max_len}]")
        if not self.charset:
            raise GeneConfigError(f"{self.name or 'string'}: empty charset")

    def _can_taint(self, text: str) -> bool:
        return self.min_len <= len(text) <= self.max_len and all(c in self.charset for c in text)

    def _random_text(self, rng) -> str:
        hi = self.max_len if rng.random() < 0.1 else min(self.max_len, self.min_len + SHORT_LEN)
        n = rng.randint(self.min_len, hi)
        return "".join(rng.choice(self.charset) for _ in range(n))

    def randomize(self, rng, ctx=_NO_CTX):
        self.check()
        if ctx.mint is not None and ctx.taint_probability > 0 and rng.random() < ctx.taint_probability:
            text = ctx.mint()
            if self._can_taint(text):
                self.v = text
                return
        self.v = self._random_text(rng)

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        if ctx.mint is not None and ctx.taint_probability > 0 and rng.random() < ctx.taint_probability:
            text = ctx.mint()
            if self._can_taint(text) and text != self.v:
                self.v = text
                return
        if ctx.is_taint(self.v) or rng.random() < 0.05:
            old = self.v
            for _ in range(8):
                self.v = self._random_text(rng)
                if self.v != old:
                    return
        self._edit(rng)

    def _edit(self, rng):
        s = self.v
        ops = []
        if s:
            ops.append("replace")
        if len(s) < self.max_len:
            ops.append("insert")
        if len(s) > self.min_len:
            ops.append("delete")
        if not ops:
            return
        op = rng.choice(ops)
        if op == "replace":
            i = rng.randrange(len(s))
            if len(self.charset) == 1:
                return
            c = s[i]
            while c == s[i]:
                c = rng.choice(self.charset)
            self.v = s[:i] + c + s[i + 1:]
        elif op == "insert":
            i = rng.randint(0, len(s))
            self.v = s[:i] + rng.choice(self.charset) + s[i:]
        else:
            i = rng.randrange(len(s))
            self.v = s[:i] + s[i + 1:]

    def value(self):
        return self.v

    def is_valid(self):
        return self.min_len <= len(self.v) <= self.max_len and all(c in self.charset for c in self.v)

    def is_singleton(self):
        return self.max_len == 0 or (len(self.charset) == 1 and self.min_len == self.max_len)


@dataclass
class EnumGene(Gene):
    name: str = ""
    values: tuple = ()
    index: int = 0

    def __post_init__(self):
        self.values = tuple(self.values)

    def copy(self):
        return EnumGene(self.name, self.values, self.index)

    def check(self):
        if not self.values:
            raise GeneConfigError(f"{self.name or 'enum'}: no values")

    def randomize(self, rng, ctx=_NO_CTX):
        self.check()
        self.index = rng.randrange(len(self.values))

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        if len(self.values) < 2:
            return
        i = rng.randrange(len(self.values) - 1)
        self.index = i if i < self.index else i + 1

    def value(self):
        return self.values[self.index]

    def is_valid(self):
        return 0 <= self.index < len(self.values)

    def is_singleton(self):
        return len(self.values) < 2


@dataclass
class ChoiceGene(Gene):
    """Only the active child contributes to the phenotype."""

    name: str = ""
    options: list = field(default_factory=list)
    active: int = 0

    def copy(self):
        return type(self)(self.name, [c.copy() for c in self.options], self.active)

    def check(self):
        if not self.options:
            raise GeneConfigError(f"{self.name or 'choice'}: no children")
        for c in self.options:
            c.check()

    def children(self):
        return [(str(i), c) for i, c in enumerate(self.options)]

    @property
    def current(self) -> Gene:
        return self.options[self.active]

    def randomize(self, rng, ctx=_NO_CTX):
        self.check()
        for c in self.options:
            c.randomize(rng, ctx)
        self.active = rng.randrange(len(self.options))

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        n = len(self.options)
        if n > 1 and (self.current.is_singleton() or rng.random() < 0.3):
            i = rng.randrange(n - 1)
            self.active = i if i < self.active else i + 1
        else:
            self.current.mutate_in_place(rng, ctx)

    def value(self):
        return self.current.value()

    def render(self):
        return self.current.render()

    def is_valid(self):
        return 0 <= self.active < len(self.options) and self.current.is_valid()

    def is_singleton(self):
        return len(self.options) == 1 and self.current.is_singleton()


@dataclass
class ObjectGene(Gene):
    name: str = ""
    fields: dict = field(default_factory=dict)

    def copy(self):
        return ObjectGene(self.name, {k: g.copy() for k, g in self.fields.items()})

    def children(self):
        return list(self.fields.items())

    def randomize(self, rng, ctx=_NO_CTX):
        for g in self.fields.values():
            g.randomize(rng, ctx)

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        candidates = [g for g in self.fields.values() if not g.is_singleton()]
        if candidates:
            rng.choice(candidates).mutate_in_place(rng, ctx)

    def value(self):
        out = {}
        for k, g in self.fields.items():
            if isinstance(g, OptionalGene) and not g.present:
                continue
            out[k] = g.value()
        return out

    def render(self):
        return json.dumps(self.value(), sort_keys=False, separators=(",", ":"))


@dataclass
class OptionalGene(Gene):
    name: str = ""
    child: Gene = None
    present: bool = True
    # probability of being present at sampling time
    inclusion: float = 0.5

    def copy(self):
        return OptionalGene(self.name, self.child.copy(), self.present, self.inclusion)

    def children(self):
        return [("?", self.child)]

    def randomize(self, rng, ctx=_NO_CTX):
        self.child.randomize(rng, ctx)
        self.present = rng.random() < self.inclusion

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        if not self.present or self.child.is_singleton() or rng.random() < 0.1:
            self.present = not self.present
        else:
            self.child.mutate_in_place(rng, ctx)

    def value(self):
        return self.child.value() if self.present else None

    def render(self):
        return self.child.render() if self.present else ""

    def is_singleton(self):
        return False


@dataclass
class ArrayGene(Gene):
    name: str = ""
    template: Gene = None
    elements: list = field(default_factory=list)
    max_size: int = 5

    def copy(self):
        return ArrayGene(self.name, self.template.copy(), [e.copy() for e in self.elements], self.max_size)

    def check(self):
        if self.max_size < 0:
            raise GeneConfigError(f"{self.name or 'array'}: negative max size")
        self.template.check()

    def children(self):
        return [(str(i), e) for i, e in enumerate(self.elements)]

    def _new_element(self, rng, ctx):
        e = self.template.copy()
        e.randomize(rng, ctx)
        return e

    def randomize(self, rng, ctx=_NO_CTX):
        self.check()
        self.elements = [self._new_element(rng, ctx) for _ in range(rng.randint(0, self.max_size))]

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        ops = []
        if len(self.elements) < self.max_size:
            ops.append("add")
        if self.elements:
            ops += ["remove", "mutate", "mutate"]
        if not ops:
            return
        op = rng.choice(ops)
        if op == "add":
            self.elements.insert(rng.randint(0, len(self.elements)), self._new_element(rng, ctx))
        elif op == "remove":
            self.elements.pop(rng.randrange(len(self.elements)))
        else:
            e = rng.choice(self.elements)
            if e.is_singleton():
                self.elements.remove(e)
            else:
                e.mutate_in_place(rng, ctx)

    def value(self):
        return [e.value() for e in self.elements]

    def render(self):
        return json.dumps(self.value(), separators=(",", ":"))

    def is_valid(self):
        return len(self.elements) <= self.max_size and super().is_valid()

    def is_singleton(self):
        return self.max_size == 0


@dataclass
class UuidGene(Gene):
    """128-bit label kept as two signed 64-bit integers."""

    name: str = ""
    msb: IntegerGene = field(default_factory=lambda: LongGene("msb"))
    lsb: IntegerGene = field(default_factory=lambda: LongGene("lsb"))

    def copy(self):
        return UuidGene(self.name, self.msb.copy(), self.lsb.copy())

    def children(self):
        return [("msb", self.msb), ("lsb", self.lsb)]

    def randomize(self, rng, ctx=_NO_CTX):
        self.msb.v = rng.randint(INT64_MIN, INT64_MAX)
        self.lsb.v = rng.randint(INT64_MIN, INT64_MAX)

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        (self.msb if rng.random() < 0.5 else self.lsb).mutate_in_place(rng, ctx)

    def value(self):
        mask = (1 << 64) - 1
        return str(uuid.UUID(int=((self.msb.v & mask) << 64) | (self.lsb.v & mask)))

    def is_singleton(self):
        return False


# --- URI tree -----------------------------------------------------------------


@dataclass
class HostnameGene(Gene):
    """DNS-safe host: dot-separated non-empty labels over [a-z0-9-]."""

    name: str = "hostname"
    labels: list = field(default_factory=lambda: ["localhost"])

    def copy(self):
        return HostnameGene(self.name, list(self.labels))

    def _label(self, rng):
        return "".join(rng.choice(HOST_ALPHABET) for _ in range(rng.randint(1, 10)))

    def randomize(self, rng, ctx=_NO_CTX):
        self.labels = [self._label(rng) for _ in range(rng.randint(1, 3))]

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        r = rng.random()
        if r < 0.2 and len(self.labels) < 4:
            self.labels.insert(rng.randint(0, len(self.labels)), self._label(rng))
        elif r < 0.4 and len(self.labels) > 1:
            self.labels.pop(rng.randrange(len(self.labels)))
        else:
            i = rng.randrange(len(self.labels))
            lab = self.labels[i]
            j = rng.randrange(len(lab))
            c = lab[j]
            while c == lab[j]:
                c = rng.choice(HOST_ALPHABET)
            self.labels[i] = lab[:j] + c + lab[j + 1:]

    def value(self):
        return ".".join(self.labels)

    def is_valid(self):
        return bool(self.labels) and all(
            0 < len(lab) <= 63 and all(c in HOST_ALPHABET for c in lab) for lab in self.labels
        )

    def is_singleton(self):
        return False


@dataclass
class InetGene(ObjectGene):
    """IPv4 address as four octets."""

    def copy(self):
        return InetGene(self.name, {k: g.copy() for k, g in self.fields.items()})

    def value(self):
        return ".".join(str(g.v) for g in self.fields.values())


def inet_gene(name: str = "ipv4", octets=(127, 0, 0, 1)) -> InetGene:
    return InetGene(name, {f"o{i}": IntegerGene(f"o{i}", o, 0, 255) for i, o in enumerate(octets)})


class _Composite(ObjectGene):
    """Object-shaped gene whose phenotype is a formatted string."""

    def copy(self):
        return type(self)(self.name, {k: g.copy() for k, g in self.fields.items()})

    def render(self):
        return self.value()


class UrlHttpGene(_Composite):
    def value(self):
        f = self.fields
        out = f"{f['scheme'].value()}://{f['host'].value()}"
        if f["port"].present:
            out += f":{f['port'].value()}"
        if f["path"].present:
            p = f["path"].value()
            out += p if p.startswith("/") else "/" + p
        return out


class UriDataGene(_Composite):
    def value(self):
        f = self.fields
        payload = f["payload"].value()
        if f["base64"].value():
            return f"data:{f['media'].value()};base64," + base64.b64encode(payload.encode()).decode()
        return f"data:{f['media'].value()}," + quote(payload, safe="")


class UrlFileGene(_Composite):
    def value(self):
        p = self.fields["path"].value()
        return "file://" + (p if p.startswith("/") else "/" + p)


class UrnGene(_Composite):
    def value(self):
        return f"urn:{self.fields['nid'].value()}:{self.fields['nss'].value()}"


PATH_CHARSET = UNRESERVED + "/"
MEDIA_TYPES = ("text/plain", "text/html", "application/json", "image/png")
URN_NIDS = ("isbn", "uuid", "example", "ietf")


def _path(v: str = "/") -> StringGene:
    return StringGene("path", v, 0, 32, PATH_CHARSET)


def url_http_gene(scheme="http", host="localhost", port: Optional[int] = None, path: Optional[str] = None,
                  schemes=("http", "https")) -> UrlHttpGene:
    hosts = ChoiceGene("host", [HostnameGene("hostname", host.split(".")), inet_gene()], 0)
    return UrlHttpGene("http", {
        "scheme": EnumGene("scheme", schemes, list(schemes).index(scheme)),
        "host": hosts,
        "port": OptionalGene("port", IntegerGene("port", port or 8080, 0, 65535), port is not None),
        "path": OptionalGene("path", _path(path or "/"), path is not None),
    })


def uri_data_gene(media="text/plain", b64=False, payload="") -> UriDataGene:
    return UriDataGene("data", {
        "media": EnumGene("media", MEDIA_TYPES, MEDIA_TYPES.index(media)),
        "base64": BooleanGene("base64", b64),
        "payload": StringGene("payload", payload, 0, 32),
    })


def uri_gene(name: str = "", url_only: bool = False) -> ChoiceGene:
    """Scheme choice over http(s), ftp, file, data and urn branches."""
    options = [url_http_gene(), url_http_gene(scheme="ftp", schemes=("ftp",)),
               UrlFileGene("file", {"path": _path("/tmp")})]
    if not url_only:
        options += [uri_data_gene(), UrnGene("urn", {
            "nid": EnumGene("nid", URN_NIDS, 0),
            "nss": StringGene("nss", "x", 1, 16, UNRESERVED),
        })]
    return ChoiceGene(name, options, 0)


# --- regex-conforming strings -------------------------------------------------

import sre_constants as _sc  # noqa: E402
import sre_parse as _sp  # noqa: E402

_REPEAT_CAP = 6
_CATEGORY = {
    _sc.CATEGORY_DIGIT: string.digits,
    _sc.CATEGORY_NOT_DIGIT: string.ascii_letters + "_-",
    _sc.CATEGORY_WORD: string.ascii_letters + string.digits + "_",
    _sc.CATEGORY_NOT_WORD: " -.,;:!",
    _sc.CATEGORY_SPACE: " ",
    _sc.CATEGORY_NOT_SPACE: string.ascii_letters + string.digits,
}


def _in_chars(items) -> str:
    negate = False
    chars: list[str] = []
    for op, av in items:
        if op is _sc.NEGATE:
            negate = True
        elif op is _sc.LITERAL:
            chars.append(chr(av))
        elif op is _sc.RANGE:
            chars.extend(chr(c) for c in range(av[0], av[1] + 1))
        elif op is _sc.CATEGORY:
            chars.extend(_CATEGORY.get(av, ""))
    if negate:
        banned = set(chars)
        return "".join(c for c in PRINTABLE if c not in banned)
    return "".join(dict.fromkeys(chars))


_POOL = object()


def _prepare(tree) -> list:
    """Parsed pattern with character classes expanded to pools once."""
    out = []
    for op, av in tree:
        if op is _sc.IN:
            out.append((_POOL, _in_chars(av)))
        elif op in (_sc.MAX_REPEAT, _sc.MIN_REPEAT):
            out.append((op, (av[0], av[1], _prepare(av[2]))))
        elif op is _sc.SUBPATTERN:
            out.append((op, (_prepare(av[-1]),)))
        elif op is _sc.BRANCH:
            out.append((op, (None, [_prepare(b) for b in av[1]])))
        else:
            out.append((op, av))
    return out


@functools.lru_cache(maxsize=256)
def _compiled(pattern: str) -> list:
    return _prepare(_sp.parse(pattern))


def _gen(tree, rng, depth: int) -> str:
    out = []
    for op, av in tree:
        if op is _POOL:
            if av:
                out.append(rng.choice(av))
        elif op is _sc.LITERAL:
            out.append(chr(av))
        elif op is _sc.NOT_LITERAL:
            out.append(rng.choice([c for c in PRINTABLE if ord(c) != av]))
        elif op is _sc.ANY:
            out.append(rng.choice(string.ascii_letters + string.digits))
        elif op in (_sc.MAX_REPEAT, _sc.MIN_REPEAT):
            lo, hi, sub = av
            hi = min(hi, lo + _REPEAT_CAP) if depth > 0 else lo
            for _ in range(rng.randint(lo, hi)):
                out.append(_gen(sub, rng, depth - 1))
        elif op is _sc.SUBPATTERN:
            out.append(_gen(av[-1], rng, depth - 1))
        elif op is _sc.BRANCH:
            out.append(_gen(rng.choice(av[1]), rng, depth - 1))
        # anchors, lookarounds and backrefs contribute nothing
    return "".join(out)


@dataclass
class RegexGene(Gene):
    """String generated from a (bounded) regular expression."""

    name: str = ""
    pattern: str = ""
    v: str = ""
    depth: int = 8

    def copy(self):
        return RegexGene(self.name, self.pattern, self.v, self.depth)

    def check(self):
        try:
            _compiled(self.pattern)
        except Exception as e:  # re.error
            raise GeneConfigError(f"bad pattern {self.pattern!r}: {e}") from e

    def randomize(self, rng, ctx=_NO_CTX):
        self.v = _gen(_compiled(self.pattern), rng, self.depth)

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        old = self.v
        for _ in range(8):
            self.randomize(rng)
            if self.v != old:
                return

    def value(self):
        return self.v

    def is_singleton(self):
        return False


@dataclass
class ConstantGene(Gene):
    name: str = ""
    v: Any = ""

    def copy(self):
        return ConstantGene(self.name, self.v)

    def randomize(self, rng, ctx=_NO_CTX):
        pass

    def mutate_in_place(self, rng, ctx=_NO_CTX):
        pass

    def value(self):
        return self.v

    def is_singleton(self):
        return True


class SpecializedStringGene(ChoiceGene):
    """Free-form string (option 0) plus learned specializations.

    ``kinds`` holds a hashable key per option so the same specialization is
    never added twice.
    """

    def __init__(self, name="", options=None, active=0, kinds=None):
        super().__init__(name, options or [], active)
        self.kinds = list(kinds) if kinds is not None else [None] * len(self.options)

    def copy(self):
        return SpecializedStringGene(self.name, [c.copy() for c in self.options], self.active, self.kinds)

    @property
    def base(self) -> StringGene:
        return self.options[0]

    def add(self, key, gene: Gene, activate: bool = True) -> bool:
        if key in self.kinds:
            if activate:
                self.active = self.kinds.index(key)
            return False
        self.options.append(gene)
        self.kinds.append(key)
        if activate:
            self.active = len(self.options) - 1
        return True

    def __repr__(self):
        return f"SpecializedStringGene({self.name!r}, kinds={self.kinds}, active={self.active})"


# --- module-level API ----------------------------------------------------------


def sample(template: Gene, rng, ctx: MutationContext = _NO_CTX) -> Gene:
    """Fresh random gene shaped like ``template``."""
    template.check()
    g = template.copy()
    g.randomize(rng, ctx)
    return g


def mutate(g: Gene, rng, ctx: MutationContext = _NO_CTX) -> Gene:
    """Mutated copy of ``g``; ``g`` itself is untouched."""
    out = g.copy()
    out.mutate_in_place(rng, ctx)
    return out


def render(g: Gene) -> str:
    return g.render()


def walk(g: Gene, path: str = "") -> Iterator[tuple[str, Gene]]:
    """Yield ``(path, gene)`` for ``g`` and all descendants."""
    yield path, g
    for key, c in g.children():
        yield from walk(c, f"{path}/{key}" if path else key)


def resolve(g: Gene, path: str) -> Optional[Gene]:
    if not path:
        return g
    node = g
    for key in path.split("/"):
        nxt = dict(node.children()).get(key)
        if nxt is None:
            return None
        node = nxt
    return node


def string_leaves(g: Gene, path: str = "") -> list[tuple[str, StringGene]]:
    """``(path, gene)`` for free-form string leaves that reach the phenotype."""
    out: list[tuple[str, StringGene]] = []

    def visit(node, p):
        if isinstance(node, StringGene):
            out.append((p, node))
        elif isinstance(node, ChoiceGene):
            visit(node.current, f"{p}/{node.active}" if p else str(node.active))
        elif isinstance(node, OptionalGene):
            if node.present:
                visit(node.child, f"{p}/?" if p else "?")
        else:
            for k, c in node.children():
                visit(c, f"{p}/{k}" if p else k)

    visit(g, path)
    return out
