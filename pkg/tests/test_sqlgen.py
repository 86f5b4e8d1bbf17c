import random
import sqlite3

import pytest

from wbfuzz.fixtures import appsession
from wbfuzz.harness import Database
from wbfuzz.sqlgen import (PkCounter, ReconciliationError, SchemaFileError, generate_insert, parse_entity_file,
                           parse_schema_file, react_to_empty_selects, reconcile, resolve, snake_case, table_only)

TABLE = appsession.TABLES[0]
ENTITY = appsession.SESSION


def test_schema_file_parsed():
    cols = {c.name: c for c in TABLE.columns}
    assert TABLE.name == "app_session" and len(cols) == 11
    assert cols["id"].primary_key and not cols["version"].nullable and cols["tan_counter"].nullable
    assert cols["sot"].max_length == 255


@pytest.mark.parametrize("text,needle", [
    ("id INTEGER\n", "outside"),
    ("table t\n id WIDGET\n", "unknown type"),
    ("table t\n id INTEGER check 5\n", "MIN..MAX"),
    ("table t\n a INTEGER\n a TEXT\n", "duplicate"),
    ("table t\n a INTEGER frobnicate\n", "unexpected"),
])
def test_schema_file_errors(text, needle):
    with pytest.raises(SchemaFileError, match=needle):
        parse_schema_file(text)


def test_entity_file_parsed():
    fields = {f.name: f for f in ENTITY.fields}
    assert ENTITY.table_name == "app_session"
    assert fields["teleTanType"].enum_values == ("TEST", "EVENT") and fields["teleTanType"].column == "teletan_type"
    assert fields["tanCounter"].implied_not_null and not fields["hashedGuid"].implied_not_null


def test_entity_validation_clause():
    (e,) = parse_entity_file("entity Thing\n  size int validate Min(2) Max(9)\n  code String validate Pattern([a-z]+)\n")
    assert [c.kind for c in e.fields[0].validation] == ["Min", "Max"]
    assert e.fields[1].validation[0].args == ("[a-z]+",)


@pytest.mark.parametrize("java,snake", [("VerificationAppSession", "verification_app_session"),
                                        ("tanCounter", "tan_counter"), ("HTTPServer", "http_server"),
                                        ("id", "id")])
def test_snake_case(java, snake):
    assert snake_case(java) == snake


def test_resolve_reports_candidates():
    (bad,) = parse_entity_file("entity Nope\n  x int\n")
    with pytest.raises(ReconciliationError, match="candidates"):
        resolve(bad, [TABLE])
    (bad_col,) = parse_entity_file("entity AppSession table app_session\n  missing int\n")
    with pytest.raises(ReconciliationError, match="tan_counter"):
        resolve(bad_col, [TABLE])


def test_reconcile_extras():
    eff = reconcile(TABLE, ENTITY)
    extras = {c.name: c.extras for c in eff.columns if c.extras}
    assert extras == {"tan_counter": (("NotNull",),), "sot": (("Enum",),), "teletan_type": (("Enum",),)}
    assert not eff.get("tan_counter").nullable
    assert eff.get("sot").enum_values == ("HASHED_GUID", "TELETAN", "CONNECTION")
    assert table_only(TABLE).violatable == []


def test_contradiction_falls_back_to_table(caplog):
    (t,) = parse_schema_file("table box\n  id BIGINT pk\n  size INTEGER check 0..5\n")
    (e,) = parse_entity_file("entity Box\n  id Long\n  size int validate Min(9)\n")
    eff = reconcile(t, e)
    assert eff.contradictory and eff.get("size").range == (0, 5)
    assert "contradictory" in caplog.text


def entity_ok(row):
    if row["tan_counter"] is None:
        return False
    if row["sot"] is not None and row["sot"] not in ("HASHED_GUID", "TELETAN", "CONNECTION"):
        return False
    return row["teletan_type"] is None or row["teletan_type"] in ("TEST", "EVENT")


def test_inserts_satisfy_table_and_entity_without_violations():
    rng = random.Random(0)
    db = Database([TABLE])
    eff = reconcile(TABLE, ENTITY)
    pk = PkCounter()
    for _ in range(500):
        a = generate_insert(TABLE, eff, rng, 0.0, pk)
        assert a.violation is None
        db.insert(a.table, a.row())
        assert entity_ok(a.row())


def test_violations_break_only_the_entity():
    rng = random.Random(1)
    db = Database([TABLE])
    eff = reconcile(TABLE, ENTITY)
    pk = PkCounter()
    seen = set()
    for _ in range(2000):
        a = generate_insert(TABLE, eff, rng, 1.0, pk)
        db.insert(a.table, a.row())
        if a.violation:
            seen.add(a.violation[1])
            assert not entity_ok(a.row())
        else:
            assert entity_ok(a.row())
    assert seen == {"NotNull", "Enum"}


def test_table_constraints_are_enforced_by_the_database():
    db = Database([TABLE])
    with pytest.raises(sqlite3.IntegrityError):
        db.insert("app_session", {"id": 1, "version": None})


def test_empty_select_reaction_is_capped_per_table():
    rng = random.Random(2)
    tables = {TABLE.name: TABLE}
    eff = {TABLE.name: table_only(TABLE)}
    existing = []
    for _ in range(6):
        existing += react_to_empty_selects(["app_session"], existing, tables, eff, rng, 0.0, PkCounter())
    assert len(existing) == 3
    assert react_to_empty_selects(["unknown"], [], tables, eff, rng) == []
