"""Tainted marker strings and the string specializations learned from them."""

from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Optional

from . import genes as G

log = logging.getLogger(__name__)

TAINT_RE = re.compile(r"_EM_(\d+)_XYZ_")

FAKE_HEADER = "x-EMextraHeader123"
FAKE_PARAM = "EMextraParam123"
FAKE_NAMES = (FAKE_HEADER, FAKE_PARAM)
IGNORED_NAMES = frozenset({"_method"})
DISCOVERY_COLLECTION_CAP = 16
DISCOVERY_WINDOW = 0.10


@dataclass(frozen=True)
class TaintedValue:
    id: int

    @property
    def text(self) -> str:
        return f"_EM_{self.id}_XYZ_"


class TaintMinter:
    """Hands out fresh taint ids; ids never repeat for one minter."""

    def __init__(self, start: int = 0):
        self._ids = itertools.count(start)

    def mint(self, rng=None) -> TaintedValue:
        return TaintedValue(next(self._ids))

    def text(self) -> str:
        return self.mint().text


def mint(rng=None, _default=TaintMinter()) -> TaintedValue:
    return _default.mint(rng)


def recognize(s) -> Optional[int]:
    """Taint id if ``s`` is exactly a marker string, else ``None``."""
    if not isinstance(s, str):
        return None
    m = TAINT_RE.fullmatch(s)
    return int(m.group(1)) if m else None


def is_taint(s) -> bool:
    return recognize(s) is not None


# --- specializations ---------------------------------------------------------

KINDS = ("ConstantEquals", "ConstantPrefix", "RegexMatch", "EnumMember",
         "IntegerFormat", "FloatFormat", "UuidFormat", "UriFormat", "UrlFormat")


@dataclass(frozen=True)
class Specialization:
    kind: str
    value: object = None
    source_target: str = ""

    @property
    def key(self) -> tuple:
        return (self.kind, self.value)

    def build_gene(self, rng, name: str = "") -> G.Gene:
        k = self.kind
        if k == "ConstantEquals":
            return G.ConstantGene(name, self.value)
        if k == "ConstantPrefix":
            return G.RegexGene(name, re.escape(self.value) + "[A-Za-z0-9]{0,6}", self.value)
        if k == "RegexMatch":
            g = G.RegexGene(name, self.value)
            g.randomize(rng)
            return g
        if k == "EnumMember":
            return G.EnumGene(name, tuple(self.value), rng.randrange(len(self.value)))
        if k == "IntegerFormat":
            g = G.IntegerGene(name)
        elif k == "FloatFormat":
            g = G.FloatGene(name)
        elif k == "UuidFormat":
            g = G.UuidGene(name)
        elif k == "UriFormat":
            g = G.uri_gene(name)
        elif k == "UrlFormat":
            g = G.uri_gene(name, url_only=True)
        else:
            raise ValueError(f"unknown specialization {k}")
        g.randomize(rng)
        return g


def specialize(gene: G.Gene, spec: Specialization, rng, activate: bool = True) -> G.Gene:
    """Return ``gene`` turned into (or extended as) a specialized string choice."""
    if isinstance(gene, G.SpecializedStringGene):
        gene.add(spec.key, spec.build_gene(rng, gene.name), activate)
        return gene
    if isinstance(gene, G.StringGene):
        out = G.SpecializedStringGene(gene.name, [gene], 0, [None])
        out.add(spec.key, spec.build_gene(rng, gene.name), activate)
        return out
    raise TypeError(f"cannot specialize {type(gene).__name__}")


def _replace_at(root: G.Gene, path: str, new: G.Gene) -> bool:
    parent_path, _, key = path.rpartition("/")
    parent = G.resolve(root, parent_path)
    if parent is None:
        return False
    if isinstance(parent, G.ChoiceGene) and key.isdigit():
        parent.options[int(key)] = new
    elif isinstance(parent, G.OptionalGene):
        parent.child = new
    elif isinstance(parent, G.ArrayGene) and key.isdigit():
        parent.elements[int(key)] = new
    elif isinstance(parent, G.ObjectGene) and key in parent.fields:
        parent.fields[key] = new
    else:
        return False
    return True


def apply_to_gene(root: G.Gene, path: str, spec: Specialization, rng) -> G.Gene:
    """Specialize the string gene at ``path`` inside ``root``.

    Returns the (possibly new) root. Stale paths are dropped silently.
    If the string sits as option 0 of a specialized choice, the choice
    itself is extended rather than nested.
    """
    target = G.resolve(root, path)
    if not isinstance(target, G.StringGene):
        return root
    parent_path, _, key = path.rpartition("/")
    parent = G.resolve(root, parent_path) if path else None
    if isinstance(parent, G.SpecializedStringGene) and key == "0":
        specialize(parent, spec, rng)
        return root
    new = specialize(target, spec, rng)
    if not path:
        return new
    if not _replace_at(root, path, new):
        log.debug("stale gene path %s dropped", path)
    return root


def apply_specializations(individual, sightings: Iterable[tuple[str, Specialization]], rng):
    """Copy of ``individual`` with each sighted string gene specialized.

    ``individual`` must expose ``copy()`` and ``replace_gene(path, fn)``.
    """
    out = individual.copy()
    for path, spec in sightings:
        out.replace_gene(path, lambda g, p, s=spec: apply_to_gene(g, p, s, rng))
    return out


# --- discovery of undeclared params/headers ----------------------------------


def in_discovery_window(consumed: float, total: float, fraction: float = DISCOVERY_WINDOW) -> bool:
    return total > 0 and consumed / total < fraction


def discovery_window_protocol(evaluation_index: int, budget: int, fraction: float = DISCOVERY_WINDOW):
    """Whether fake names are injected at this evaluation, and what to inject."""
    if not in_discovery_window(evaluation_index, budget, fraction):
        return None
    return {"headers": {FAKE_HEADER: "42"}, "query": {FAKE_PARAM: "42"}}


def fake_location(keys: Iterable) -> Optional[str]:
    """Which fake name (if any) a small collection of keys carries."""
    keys = list(keys)
    if len(keys) > DISCOVERY_COLLECTION_CAP:
        return None
    lowered = {k.lower() for k in keys if isinstance(k, str)}
    if FAKE_PARAM.lower() in lowered:
        return "QueryParam"
    if FAKE_HEADER.lower() in lowered:
        return "Header"
    return None


def acceptable_name(name, known: Iterable[str]) -> bool:
    if not isinstance(name, str) or not name:
        return False
    if name in IGNORED_NAMES or name.lower() in {f.lower() for f in FAKE_NAMES}:
        return False
    return name.lower() not in {k.lower() for k in known}
