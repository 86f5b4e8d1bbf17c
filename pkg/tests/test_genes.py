import json
import random
import re
import uuid

import pytest
from rfc3986_validator import validate_rfc3986

from wbfuzz import genes as G
from wbfuzz.taint import TaintMinter, is_taint


def kinds():
    return {
        "integer": G.IntegerGene("i", 0, -5, 5),
        "long": G.LongGene("l"),
        "float": G.FloatGene("f", 0.0, -1.0, 1.0),
        "boolean": G.BooleanGene("b"),
        "enum": G.EnumGene("e", ("A", "B", "C"), 0),
        "string": G.StringGene("s", "", 2, 6, "xyz"),
        "regex": G.RegexGene("r", r"[A-Z]{2}-\d{3}(x|yy)?"),
        "object": G.ObjectGene("o", {"a": G.IntegerGene("a"), "b": G.OptionalGene("b", G.StringGene("b"))}),
        "array": G.ArrayGene("arr", G.IntegerGene("n", 0, 0, 9), [], 3),
        "uuid": G.UuidGene("u"),
        "uri": G.uri_gene("uri"),
        "url": G.uri_gene("url", url_only=True),
        "choice": G.ChoiceGene("c", [G.BooleanGene("x"), G.IntegerGene("y", 0, 0, 3)]),
    }


@pytest.mark.parametrize("kind", sorted(kinds()))
def test_sampled_and_mutated_phenotypes_stay_valid(kind):
    rng = random.Random(7)
    g = G.sample(kinds()[kind], rng)
    for _ in range(500):
        assert g.is_valid(), (kind, g)
        g = G.mutate(g, rng)


def test_mutate_never_touches_the_parent():
    rng = random.Random(1)
    parent = G.sample(kinds()["object"], rng)
    before = parent.value()
    for _ in range(50):
        G.mutate(parent, rng)
    assert parent.value() == before


def test_integer_bounds_respected_under_mutation():
    rng = random.Random(3)
    g = G.IntegerGene("i", 0, -3, 3)
    seen = set()
    for _ in range(2000):
        g.mutate_in_place(rng)
        seen.add(g.v)
    assert seen <= set(range(-3, 4)) and len(seen) == 7


def test_bad_bounds_rejected():
    with pytest.raises(G.GeneConfigError):
        G.sample(G.IntegerGene("i", 0, 5, 1), random.Random(0))
    with pytest.raises(G.GeneConfigError):
        G.sample(G.StringGene("s", "", 4, 2), random.Random(0))
    with pytest.raises(G.GeneConfigError):
        G.sample(G.RegexGene("r", "(unclosed"), random.Random(0))


def test_regex_gene_matches_its_pattern():
    rng = random.Random(5)
    pattern = r"[a-z]{2,8}@[a-z]{2,8}\.com"
    g = G.RegexGene("r", pattern)
    for _ in range(300):
        g.randomize(rng)
        assert re.fullmatch(pattern, g.v)


def test_uuid_renders_canonical_form():
    g = G.sample(G.UuidGene("u"), random.Random(2))
    assert str(uuid.UUID(g.value())) == g.value()


def test_uri_genes_produce_rfc3986_uris():
    rng = random.Random(11)
    g = G.sample(G.uri_gene("u"), rng)
    for _ in range(1000):
        assert validate_rfc3986(g.value()), g.value()
        g = G.mutate(g, rng)


def test_optional_absent_field_is_omitted_from_object():
    o = G.ObjectGene("o", {"a": G.OptionalGene("a", G.IntegerGene("a", 4), False), "b": G.IntegerGene("b", 2)})
    assert o.value() == {"b": 2}
    assert json.loads(o.render()) == {"b": 2}


def test_array_respects_max_size():
    rng = random.Random(4)
    g = G.sample(G.ArrayGene("a", G.IntegerGene("n"), [], 2), rng)
    for _ in range(300):
        g = G.mutate(g, rng)
        assert len(g.elements) <= 2


def test_taint_on_sampling_probability():
    rng = random.Random(9)
    minter = TaintMinter()
    ctx = G.MutationContext(0.9, minter.text, is_taint)
    n = 2000
    tainted = sum(is_taint(G.sample(G.StringGene("s"), rng, ctx).v) for _ in range(n))
    sigma = (n * 0.9 * 0.1) ** 0.5
    assert abs(tainted - 0.9 * n) <= 3 * sigma


def test_taint_skipped_when_charset_forbids_it():
    ctx = G.MutationContext(1.0, TaintMinter().text, is_taint)
    g = G.sample(G.StringGene("s", "", 0, 8, "abc"), random.Random(0), ctx)
    assert not is_taint(g.v)


def test_string_leaves_follow_the_phenotype():
    inner = G.StringGene("s", "hi")
    choice = G.ChoiceGene("c", [G.IntegerGene("i"), inner], 1)
    tree = G.ObjectGene("o", {"x": G.OptionalGene("x", choice, True),
                              "y": G.OptionalGene("y", G.StringGene("y", "no"), False)})
    leaves = G.string_leaves(tree, "root")
    assert [(p, g.v) for p, g in leaves] == [("root/x/?/1", "hi")]
    assert G.resolve(tree, "x/?/1") is inner
