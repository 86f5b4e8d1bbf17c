import pytest

from wbfuzz import genes as G
from wbfuzz.schema import (ActionTemplate, FieldShape, OpenApiError, discover_body_dto, dto, expand, parse_openapi,
                           validate_request)
from wbfuzz.trace import DiscoveredInput, Request

DOC = """
openapi: 3.0.0
info: {title: t, version: "1"}
paths:
  /items/{id}:
    parameters:
      - {name: id, in: path, schema: {type: integer, format: int64}}
    get:
      parameters:
        - {name: q, in: query, schema: {type: string, maxLength: 4}}
        - {name: _method, in: query, schema: {type: string}}
        - {name: x-EMextraHeader123, in: header, schema: {type: string}}
        - {name: kind, in: query, required: true, schema: {enum: [a, b]}}
      responses:
        "200":
          description: ok
          content:
            application/json:
              schema: {type: object, properties: {id: {type: integer}}, required: [id]}
    post:
      requestBody:
        content:
          application/json:
            schema: {$ref: "#/components/schemas/Item"}
      responses: {"201": {description: created}}
components:
  schemas:
    Item:
      type: object
      required: [n]
      properties:
        n: {type: integer, minimum: 1, exclusiveMaximum: 10}
        tag: {type: string, pattern: "[a-z]+"}
        link: {type: string, format: uri}
"""


@pytest.fixture
def templates():
    return {t.key: t for t in parse_openapi(DOC)}


def test_one_template_per_operation(templates):
    assert sorted(templates) == ["GET /items/{id}", "POST /items/{id}"]


def test_parameters_merged_and_filtered(templates):
    get = templates["GET /items/{id}"]
    assert [i.name for i in get.path_params] == ["id"] and get.path_params[0].required
    assert [i.name for i in get.query] == ["q", "kind"]
    assert get.headers == ()
    assert isinstance(get.path_params[0].gene, G.IntegerGene) and get.path_params[0].gene.max == G.INT64_MAX


def test_body_schema_bounds(templates):
    body = templates["POST /items/{id}"].body
    n = body.fields["n"]
    assert (n.min, n.max) == (1, 9)
    assert isinstance(body.fields["tag"], G.OptionalGene)
    assert isinstance(body.fields["tag"].child, G.SpecializedStringGene)


def test_response_shapes(templates):
    assert templates["GET /items/{id}"].responses["200"] == {"fields": {"id": "integer"}, "required": ["id"]}


def test_json_and_yaml_equivalent():
    import json
    import yaml

    as_json = json.dumps(yaml.safe_load(DOC))
    assert [t.key for t in parse_openapi(as_json)] == [t.key for t in parse_openapi(DOC)]


@pytest.mark.parametrize("doc,needle", [
    ('{"paths": {', "line 1 column"),
    ("paths:\n  /a: [\n", "line"),
    ("{}", "paths"),
    ('{"paths": {"/a": {"get": {"parameters": [{"$ref": "#/components/parameters/Nope"}]}}}}', "Nope"),
])
def test_malformed_documents(doc, needle):
    with pytest.raises(OpenApiError, match=needle):
        parse_openapi(doc)


def test_ref_cycle_reported():
    doc = {"paths": {"/a": {"post": {"requestBody": {"content": {"application/json": {
        "schema": {"$ref": "#/components/schemas/A"}}}}}}},
        "components": {"schemas": {"A": {"$ref": "#/components/schemas/B"}, "B": {"$ref": "#/components/schemas/A"}}}}
    with pytest.raises(OpenApiError, match="cycl"):
        parse_openapi(doc)


def test_unsupported_construct_degrades_to_string(caplog):
    doc = {"paths": {"/a": {"get": {"parameters": [
        {"name": "p", "in": "query", "schema": {"oneOf": [{"type": "integer"}, {"type": "string"}]}}]}}}}
    (t,) = parse_openapi(doc)
    assert isinstance(t.query[0].gene.child, G.StringGene)
    assert "unsupported" in caplog.text


def test_expand_is_idempotent_and_skips_known(templates):
    get = templates["GET /items/{id}"]
    d = DiscoveredInput("QueryParam", "mc_gross", "Text", 0)
    once = expand(get, d)
    assert expand(once, d) == once
    assert [i.name for i in once.query][-1] == "mc_gross" and once.query[-1].discovered
    assert expand(get, DiscoveredInput("QueryParam", "Q", "Text", 0)) is get


def test_expand_body_field():
    t = ActionTemplate("POST", "/x", body=None, body_opaque=True)
    out = expand(t, DiscoveredInput("BodyField", "a.b", "Number", 0))
    assert out.body.value() == {"a": {"b": 0.0}}


def test_discover_dto_only_when_undeclared(templates):
    shape = dto("Order", item=FieldShape("string"), quantity=FieldShape("integer"))
    t = ActionTemplate("POST", "/o", body_opaque=True)
    got = discover_body_dto(t, shape)
    assert set(got.body.fields) == {"item", "quantity"}
    declared = templates["POST /items/{id}"]
    assert discover_body_dto(declared, shape) is declared


def test_validate_request(templates):
    get = templates["GET /items/{id}"]
    assert validate_request(get, Request("GET", "/items/1", {"kind": "a", "q": "abc"})) == []
    problems = validate_request(get, Request("GET", "/items/1", {"q": "toolong", "zz": "1"}))
    assert any("kind" in p for p in problems)
    assert any("q=" in p for p in problems)
    assert any("undeclared" in p for p in problems)
