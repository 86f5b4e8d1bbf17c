"""SQL table schemas, entity constraints, their reconciliation, and inserts.

Both input formats are plain line-oriented text; see ``docs/formats.md``.
"""

from __future__ import annotations

import logging
import re
import string
from dataclasses import dataclass, field
from typing import Optional

from . import genes as G
from .distance import ValidationConstraint

log = logging.getLogger(__name__)

INT_TYPES = {"INTEGER": (G.INT32_MIN, G.INT32_MAX), "INT": (G.INT32_MIN, G.INT32_MAX),
             "SMALLINT": (-32768, 32767), "BIGINT": (G.INT64_MIN, G.INT64_MAX),
             "TIMESTAMP": (0, G.INT32_MAX)}
FLOAT_TYPES = {"DOUBLE", "REAL", "FLOAT", "DECIMAL", "NUMERIC"}
TEXT_TYPES = {"VARCHAR", "TEXT", "CHAR"}
BOOL_TYPES = {"BOOLEAN", "BOOL"}
PRIMITIVES = {"int", "long", "short", "byte", "double", "float", "boolean", "char"}

DEFAULT_VIOLATE_PROBABILITY = 0.05
MAX_INSERTS_PER_TABLE = 3
NULL_PROBABILITY = 0.1


class SchemaFileError(ValueError):
    pass


class ReconciliationError(LookupError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    sql_type: str
    nullable: bool = False
    max_length: Optional[int] = None
    unique: bool = False
    primary_key: bool = False
    check: Optional[tuple] = None  # (lo, hi)


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple

    def column(self, name: str) -> Optional[Column]:
        for c in self.columns:
            if c.name.lower() == name.lower():
                return c
        return None

    @property
    def primary_key(self) -> Optional[Column]:
        return next((c for c in self.columns if c.primary_key), None)

    def ddl(self) -> str:
        cols = []
        for c in self.columns:
            t = c.sql_type if c.max_length is None else f"{c.sql_type}({c.max_length})"
            parts = [c.name, t]
            if c.primary_key:
                parts.append("PRIMARY KEY")
            if not c.nullable and not c.primary_key:
                parts.append("NOT NULL")
            if c.unique and not c.primary_key:
                parts.append("UNIQUE")
            if c.max_length is not None:
                parts.append(f"CHECK (length({c.name}) <= {c.max_length})")
            if c.check is not None:
                parts.append(f"CHECK ({c.name} BETWEEN {c.check[0]} AND {c.check[1]})")
            cols.append(" ".join(parts))
        return f"CREATE TABLE {self.name} ({', '.join(cols)})"


@dataclass(frozen=True)
class EntityField:
    name: str
    java_type: str
    column: Optional[str] = None
    enum_values: Optional[tuple] = None
    validation: tuple = ()

    @property
    def implied_not_null(self) -> bool:
        return self.java_type in PRIMITIVES


@dataclass(frozen=True)
class EntityConstraintSet:
    entity_name: str
    fields: tuple
    table_name: Optional[str] = None


# --- file grammars ------------------------------------------------------------


def _tokens(line: str) -> list[str]:
    return line.split("#", 1)[0].split()


def parse_schema_file(text: str) -> list[TableSchema]:
    """Parse ``table NAME`` blocks of ``column TYPE [flags]`` lines."""
    tables, name, cols = [], None, []

    def close():
        if name is not None:
            names = [c.name.lower() for c in cols]
            if len(names) != len(set(names)):
                raise SchemaFileError(f"table {name}: duplicate column names")
            tables.append(TableSchema(name, tuple(cols)))

    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = _tokens(raw)
        if not toks:
            continue
        if toks[0] == "table":
            close()
            if len(toks) != 2:
                raise SchemaFileError(f"line {lineno}: expected 'table NAME'")
            name, cols = toks[1], []
            continue
        if toks[0] == "end":
            close()
            name, cols = None, []
            continue
        if name is None:
            raise SchemaFileError(f"line {lineno}: column outside a table block")
        if len(toks) < 2:
            raise SchemaFileError(f"line {lineno}: expected 'NAME TYPE [flags]'")
        cname, ctype = toks[0], toks[1].upper()
        m = re.fullmatch(r"([A-Z]+)\((\d+)\)", ctype)
        maxlen = None
        if m:
            ctype, maxlen = m.group(1), int(m.group(2))
        if ctype not in INT_TYPES and ctype not in FLOAT_TYPES | TEXT_TYPES | BOOL_TYPES:
            raise SchemaFileError(f"line {lineno}: unknown type {ctype}")
        kw = dict(nullable=False, unique=False, primary_key=False, check=None)
        i = 2
        while i < len(toks):
            t = toks[i].lower()
            if t == "nullable":
                kw["nullable"] = True
            elif t in ("notnull", "not-null"):
                kw["nullable"] = False
            elif t == "unique":
                kw["unique"] = True
            elif t == "pk":
                kw["primary_key"] = True
            elif t == "maxlen" and i + 1 < len(toks):
                i += 1
                maxlen = int(toks[i])
            elif t == "check" and i + 1 < len(toks):
                i += 1
                m = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", toks[i])
                if not m:
                    raise SchemaFileError(f"line {lineno}: check expects MIN..MAX")
                kw["check"] = (int(m.group(1)), int(m.group(2)))
            else:
                raise SchemaFileError(f"line {lineno}: unexpected token {toks[i]!r}")
            i += 1
        cols.append(Column(cname, ctype, max_length=maxlen, **kw))
    close()
    return tables


def _parse_constraint(tok: str) -> ValidationConstraint:
    m = re.fullmatch(r"(\w+)(?:\((.*)\))?", tok)
    if not m:
        raise SchemaFileError(f"bad constraint {tok!r}")
    kind, raw = m.group(1), m.group(2)
    args: tuple = ()
    if raw:
        if kind == "Pattern":
            args = (raw,)
        else:
            args = tuple(int(a) if re.fullmatch(r"-?\d+", a.strip()) else a.strip() for a in raw.split(","))
    return ValidationConstraint(kind, args)


def parse_entity_file(text: str) -> list[EntityConstraintSet]:
    """Parse ``entity NAME [table T]`` blocks of field lines.

    Field line: ``fieldName JavaType [column COL] [validate C1 C2 ...]``
    where JavaType may be ``enum(A,B)``.
    """
    out, head, fields = [], None, []

    def close():
        if head is not None:
            out.append(EntityConstraintSet(head[0], tuple(fields), head[1]))

    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = _tokens(raw)
        if not toks:
            continue
        if toks[0] == "entity":
            close()
            if len(toks) not in (2, 4) or (len(toks) == 4 and toks[2] != "table"):
                raise SchemaFileError(f"line {lineno}: expected 'entity NAME [table TABLE]'")
            head, fields = (toks[1], toks[3] if len(toks) == 4 else None), []
            continue
        if toks[0] == "end":
            close()
            head, fields = None, []
            continue
        if head is None:
            raise SchemaFileError(f"line {lineno}: field outside an entity block")
        if len(toks) < 2:
            raise SchemaFileError(f"line {lineno}: expected 'FIELD TYPE ...'")
        fname, jtype = toks[0], toks[1]
        enum_values = None
        m = re.fullmatch(r"enum\((.*)\)", jtype)
        if m:
            enum_values = tuple(v.strip() for v in m.group(1).split(",") if v.strip())
            jtype = "String"
        column, validation = None, []
        i = 2
        while i < len(toks):
            if toks[i] == "column" and i + 1 < len(toks):
                column = toks[i + 1]
                i += 2
            elif toks[i] == "validate":
                validation = [_parse_constraint(t) for t in toks[i + 1:]]
                break
            else:
                raise SchemaFileError(f"line {lineno}: unexpected token {toks[i]!r}")
        fields.append(EntityField(fname, jtype, column, enum_values, tuple(validation)))
    close()
    return out


# --- reconciliation -----------------------------------------------------------


def snake_case(name: str) -> str:
    s = re.sub(r"([a-z0-9])([A-Z])", r"\1_\2", name)
    s = re.sub(r"([A-Z]+)([A-Z][a-z])", r"\1_\2", s)
    return s.lower()


@dataclass(frozen=True)
class Binding:
    table: TableSchema
    columns: tuple  # (EntityField, Column) pairs


def resolve(entity: EntityConstraintSet, tables: list[TableSchema]) -> Binding:
    """Bind entity and fields to a table and columns: explicit name first, then snake_case."""
    tname = entity.table_name or snake_case(entity.entity_name)
    table = next((t for t in tables if t.name.lower() == tname.lower()), None)
    if table is None:
        raise ReconciliationError(
            f"entity {entity.entity_name}: no table {tname!r}; candidates: {sorted(t.name for t in tables)}")
    pairs = []
    for f in entity.fields:
        cname = f.column or snake_case(f.name)
        col = table.column(cname)
        if col is None:
            raise ReconciliationError(
                f"entity {entity.entity_name}.{f.name}: no column {cname!r} in {table.name}; "
                f"candidates: {[c.name for c in table.columns]}")
        pairs.append((f, col))
    return Binding(table, tuple(pairs))


@dataclass(frozen=True)
class EffectiveColumn:
    column: Column
    nullable: bool
    enum_values: Optional[tuple] = None
    range: Optional[tuple] = None
    # entity-derived constraints stricter than the table: ("NotNull",), ("Enum",), ("Range",)
    extras: tuple = ()
    contradictory: bool = False

    @property
    def name(self) -> str:
        return self.column.name


@dataclass(frozen=True)
class EffectiveColumnConstraints:
    table: TableSchema
    columns: tuple  # EffectiveColumn, table order
    contradictory: bool = False

    def get(self, name: str) -> EffectiveColumn:
        for c in self.columns:
            if c.name.lower() == name.lower():
                return c
        raise KeyError(name)

    @property
    def violatable(self) -> list:
        return [c for c in self.columns if c.extras]


def table_only(table: TableSchema) -> EffectiveColumnConstraints:
    return EffectiveColumnConstraints(table, tuple(
        EffectiveColumn(c, c.nullable, None, c.check) for c in table.columns))


def _type_range(col: Column) -> Optional[tuple]:
    return INT_TYPES.get(col.sql_type)


def reconcile(table: TableSchema, entity: Optional[EntityConstraintSet]) -> EffectiveColumnConstraints:
    """Strictest merge of table and entity constraints per column."""
    if entity is None:
        return table_only(table)
    binding = resolve(entity, [table])
    by_col = {col.name: f for f, col in binding.columns}
    cols, bad = [], False
    for c in table.columns:
        f = by_col.get(c.name)
        if f is None:
            cols.append(EffectiveColumn(c, c.nullable, None, c.check))
            continue
        extras = []
        nullable = c.nullable
        if nullable and (f.implied_not_null or any(v.kind in ("NotNull", "NotEmpty", "NotBlank")
                                                   for v in f.validation)):
            nullable = False
            extras.append(("NotNull",))
        enum_values = None
        if f.enum_values is not None and c.sql_type in TEXT_TYPES:
            fits = tuple(v for v in f.enum_values if c.max_length is None or len(v) <= c.max_length)
            enum_values = fits
            extras.append(("Enum",))
        rng = c.check
        lo, hi = (None, None)
        for v in f.validation:
            if v.kind == "Min":
                lo = v.args[0] if lo is None else max(lo, v.args[0])
            elif v.kind == "Max":
                hi = v.args[0] if hi is None else min(hi, v.args[0])
            elif v.kind in ("Positive", "PositiveOrZero"):
                b = 1 if v.kind == "Positive" else 0
                lo = b if lo is None else max(lo, b)
            elif v.kind in ("Negative", "NegativeOrZero"):
                b = -1 if v.kind == "Negative" else 0
                hi = b if hi is None else min(hi, b)
        if (lo is not None or hi is not None) and c.sql_type in INT_TYPES:
            base = rng or _type_range(c)
            new = (base[0] if lo is None else max(base[0], lo), base[1] if hi is None else min(base[1], hi))
            if new != tuple(base):
                rng = new
                extras.append(("Range",))
        contradictory = (enum_values is not None and not enum_values) or (rng is not None and rng[0] > rng[1])
        if contradictory:
            log.warning("contradictory constraints on %s.%s; using table-only", table.name, c.name)
            bad = True
            cols.append(EffectiveColumn(c, c.nullable, None, c.check, (), True))
        else:
            cols.append(EffectiveColumn(c, nullable, enum_values, rng, tuple(extras)))
    return EffectiveColumnConstraints(table, tuple(cols), bad)


# --- insert generation --------------------------------------------------------


@dataclass
class SqlInsertAction:
    table: str
    genes: dict  # column -> Gene
    violation: Optional[tuple] = None  # (column, kind)

    def copy(self) -> "SqlInsertAction":
        return SqlInsertAction(self.table, {k: g.copy() for k, g in self.genes.items()}, self.violation)

    def row(self) -> dict:
        return {k: g.value() for k, g in self.genes.items()}


class PkCounter:
    """Monotone primary-key source so inserts never collide."""

    def __init__(self, start: int = 1000):
        self._next: dict[str, int] = {}
        self._start = start

    def take(self, table: str) -> int:
        v = self._next.get(table, self._start)
        self._next[table] = v + 1
        return v


def _value_gene(ec: EffectiveColumn) -> G.Gene:
    c = ec.column
    if ec.enum_values:
        g: G.Gene = G.EnumGene(c.name, ec.enum_values, 0)
    elif c.sql_type in INT_TYPES:
        lo, hi = ec.range or _type_range(c)
        g = G.IntegerGene(c.name, max(lo, min(hi, 0)), lo, hi)
    elif c.sql_type in FLOAT_TYPES:
        g = G.FloatGene(c.name)
    elif c.sql_type in BOOL_TYPES:
        g = G.BooleanGene(c.name)
    else:
        g = G.StringGene(c.name, "", 0, min(c.max_length or G.DEFAULT_MAX_LEN, G.DEFAULT_MAX_LEN),
                         string.ascii_letters + string.digits)
    if ec.nullable:
        g = G.OptionalGene(c.name, g, True, 1.0 - NULL_PROBABILITY)
    return g


def _violating_gene(ec: EffectiveColumn, kind: str, rng) -> G.Gene:
    c = ec.column
    if kind == "NotNull":
        inner = _value_gene(EffectiveColumn(c, False, ec.enum_values, ec.range))
        inner.randomize(rng)
        return G.OptionalGene(c.name, inner, False, 0.0)
    if kind == "Enum":
        n = c.max_length or 10
        alphabet = string.ascii_uppercase + string.digits
        while True:
            v = "".join(rng.choice(alphabet) for _ in range(n))
            if v not in ec.enum_values:
                return G.StringGene(c.name, v, 0, n, alphabet)
    lo, hi = _type_range(c) if c.check is None else c.check
    elo, ehi = ec.range
    options = [x for x in ((elo - 1) if elo - 1 >= lo else None, (ehi + 1) if ehi + 1 <= hi else None)
               if x is not None]
    return G.IntegerGene(c.name, rng.choice(options) if options else elo, lo, hi)


def generate_insert(table: TableSchema, effective: EffectiveColumnConstraints, rng,
                    violate_probability: float = DEFAULT_VIOLATE_PROBABILITY,
                    pk: Optional[PkCounter] = None) -> SqlInsertAction:
    """Random row satisfying all effective constraints.

    With probability ``violate_probability`` one column is drawn uniformly;
    if it carries an entity-only constraint, that constraint is violated.
    Table-level constraints always hold, so the insert itself succeeds.
    """
    genes, violation = {}, None
    target = None
    if not effective.contradictory and rng.random() < violate_probability:
        target = rng.choice(effective.columns)
        if not target.extras:
            target = None
    for ec in effective.columns:
        c = ec.column
        if c.primary_key:
            genes[c.name] = G.IntegerGene(c.name, (pk or _GLOBAL_PK).take(table.name), frozen=True,
                                          min=G.INT64_MIN, max=G.INT64_MAX)
            continue
        if target is not None and ec is target:
            kind = rng.choice(ec.extras)[0]
            genes[c.name] = _violating_gene(ec, kind, rng)
            violation = (c.name, kind)
            continue
        g = _value_gene(ec)
        g.randomize(rng)
        genes[c.name] = g
    return SqlInsertAction(table.name, genes, violation)


_GLOBAL_PK = PkCounter()


def react_to_empty_selects(empty_selects: list, existing: list, tables: dict, effective: dict, rng,
                           violate_probability: float = DEFAULT_VIOLATE_PROBABILITY,
                           pk: Optional[PkCounter] = None,
                           max_per_table: int = MAX_INSERTS_PER_TABLE) -> list[SqlInsertAction]:
    """One new insert per empty-selected table, capped per table per test case."""
    out = []
    for name in empty_selects:
        key = next((k for k in tables if k.lower() == name.lower()), None)
        if key is None:
            continue
        have = sum(1 for a in existing if a.table.lower() == key.lower())
        if have >= max_per_table:
            continue
        out.append(generate_insert(tables[key], effective[key], rng, violate_probability, pk))
    return out
