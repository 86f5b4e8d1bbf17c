"""OpenAPI ingestion into action templates, and template expansion.

Only a v3 subset is understood: paths, parameters (path/query/header),
JSON request bodies built from object/array/primitive schemas, enums,
numeric bounds, string length bounds, patterns and declared responses.
Anything else degrades to a free-form string with a warning.
"""

from __future__ import annotations

import json
import logging
import math
import random
import re
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Union

import yaml

from . import genes as G
from .distance import ValidationConstraint
from .taint import FAKE_NAMES, IGNORED_NAMES, Specialization, specialize
from .trace import DiscoveredInput, Request

log = logging.getLogger(__name__)

VERBS = ("get", "post", "put", "patch", "delete", "head", "options")


class OpenApiError(ValueError):
    """Malformed or unsupported document; message carries the location."""


# --- DTO shapes ---------------------------------------------------------------


@dataclass(frozen=True)
class FieldShape:
    type: Union[str, "DtoShape"]
    constraints: tuple = ()
    items: Optional["FieldShape"] = None


@dataclass(frozen=True)
class DtoShape:
    name: str
    fields: tuple  # of (name, FieldShape)

    def field_map(self) -> dict:
        return dict(self.fields)


def dto(dto_name: str, /, **fields: FieldShape) -> DtoShape:
    return DtoShape(dto_name, tuple(fields.items()))


def _field_gene(name: str, f: FieldShape) -> G.Gene:
    t = f.type
    if isinstance(t, DtoShape):
        return dto_gene(t, name)
    if t == "integer":
        return G.IntegerGene(name)
    if t == "number":
        return G.FloatGene(name)
    if t == "boolean":
        return G.BooleanGene(name)
    if t == "array":
        return G.ArrayGene(name, _field_gene("item", f.items or FieldShape("string")))
    return G.StringGene(name)


def dto_gene(shape: DtoShape, name: str = "body") -> G.ObjectGene:
    return G.ObjectGene(name, {
        fname: G.OptionalGene(fname, _field_gene(fname, f), True) for fname, f in shape.fields
    })


# --- templates ----------------------------------------------------------------


@dataclass(frozen=True)
class InputSpec:
    name: str
    gene: G.Gene
    required: bool = False
    discovered: bool = False


@dataclass(frozen=True)
class ActionTemplate:
    verb: str
    path: str
    path_params: tuple = ()
    query: tuple = ()
    headers: tuple = ()
    body: Optional[G.Gene] = None
    body_opaque: bool = False
    body_required: bool = False
    responses: dict = field(default_factory=dict)
    body_schema: Optional[dict] = None

    @property
    def key(self) -> str:
        return f"{self.verb} {self.path}"

    def inputs(self, location: str) -> tuple:
        return {"path": self.path_params, "query": self.query, "header": self.headers}[location]

    def known_names(self, location: str) -> set:
        return {i.name for i in self.inputs(location)}

    def with_input_gene(self, location: str, name: str, gene: G.Gene) -> "ActionTemplate":
        attr = {"path": "path_params", "query": "query", "header": "headers"}[location]
        items = tuple(replace(i, gene=gene) if i.name == name else i for i in getattr(self, attr))
        return replace(self, **{attr: items})


@dataclass
class _Ctx:
    doc: dict
    stack: tuple = ()


def _resolve_ref(ref: str, ctx: _Ctx, where: str) -> tuple[dict, _Ctx]:
    if not ref.startswith("#/"):
        raise OpenApiError(f"{where}: only local $ref supported, got {ref}")
    if ref in ctx.stack:
        raise OpenApiError(f"{where}: $ref cycle through {' -> '.join(ctx.stack + (ref,))}")
    node: Any = ctx.doc
    for part in ref[2:].split("/"):
        part = part.replace("~1", "/").replace("~0", "~")
        if not isinstance(node, dict) or part not in node:
            raise OpenApiError(f"{where}: unresolvable $ref {ref}")
        node = node[part]
    return node, _Ctx(ctx.doc, ctx.stack + (ref,))


def _deref(schema: Any, ctx: _Ctx, where: str) -> tuple[dict, _Ctx]:
    while isinstance(schema, dict) and "$ref" in schema:
        schema, ctx = _resolve_ref(schema["$ref"], ctx, where)
    if not isinstance(schema, dict):
        raise OpenApiError(f"{where}: schema must be an object")
    return schema, ctx


def _num_bounds(schema: dict, lo, hi, integer: bool):
    step = 1 if integer else 1e-9
    if "minimum" in schema:
        lo = schema["minimum"]
    if "maximum" in schema:
        hi = schema["maximum"]
    ex_min, ex_max = schema.get("exclusiveMinimum"), schema.get("exclusiveMaximum")
    if ex_min is True:
        lo = lo + step
    elif isinstance(ex_min, (int, float)) and not isinstance(ex_min, bool):
        lo = ex_min + step
    if ex_max is True:
        hi = hi - step
    elif isinstance(ex_max, (int, float)) and not isinstance(ex_max, bool):
        hi = ex_max - step
    if integer:
        lo, hi = int(math.ceil(lo)), int(math.floor(hi))
    return lo, hi


def schema_gene(schema: Any, name: str, ctx: _Ctx, where: str) -> Optional[G.Gene]:
    """Gene template for a schema; ``None`` for an opaque object."""
    schema, ctx = _deref(schema, ctx, where)
    for kw in ("oneOf", "anyOf", "allOf", "not"):
        if kw in schema:
            log.warning("%s: '%s' unsupported, using free-form string", where, kw)
            return G.StringGene(name)
    if "enum" in schema:
        values = tuple(schema["enum"])
        if not values:
            raise OpenApiError(f"{where}: empty enum")
        return G.EnumGene(name, values, 0)
    t = schema.get("type")
    if t is None and "properties" in schema:
        t = "object"
    if t == "integer":
        if schema.get("format") == "int64":
            lo, hi = _num_bounds(schema, G.INT64_MIN, G.INT64_MAX, True)
        else:
            lo, hi = _num_bounds(schema, G.INT32_MIN, G.INT32_MAX, True)
        if lo > hi:
            raise OpenApiError(f"{where}: minimum {lo} > maximum {hi}")
        return G.IntegerGene(name, max(lo, min(hi, 0)), lo, hi)
    if t == "number":
        lo, hi = _num_bounds(schema, -1e9, 1e9, False)
        if lo > hi:
            raise OpenApiError(f"{where}: minimum {lo} > maximum {hi}")
        return G.FloatGene(name, max(lo, min(hi, 0.0)), lo, hi)
    if t == "boolean":
        return G.BooleanGene(name)
    if t == "array":
        items = schema_gene(schema.get("items", {"type": "string"}), "item", ctx, where + ".items")
        return G.ArrayGene(name, items or G.StringGene("item"), [], int(schema.get("maxItems", 5)))
    if t == "object":
        props = schema.get("properties") or {}
        if not props:
            return None
        required = set(schema.get("required", ()))
        fields = {}
        for pname, psch in props.items():
            g = schema_gene(psch, pname, ctx, f"{where}.properties.{pname}")
            if g is None:
                g = G.StringGene(pname)
            fields[pname] = g if pname in required else G.OptionalGene(pname, g, True)
        return G.ObjectGene(name, fields)
    if t not in (None, "string"):
        log.warning("%s: type %r unsupported, using free-form string", where, t)
        return G.StringGene(name)
    lo = int(schema.get("minLength", 0))
    hi = int(schema.get("maxLength", max(G.DEFAULT_MAX_LEN, lo)))
    if lo > hi:
        raise OpenApiError(f"{where}: minLength {lo} > maxLength {hi}")
    fmt = schema.get("format")
    if fmt == "uuid":
        return G.UuidGene(name)
    if fmt in ("uri", "url"):
        return G.uri_gene(name, url_only=fmt == "url")
    base = G.StringGene(name, "", lo, hi)
    if "pattern" in schema:
        pat = schema["pattern"]
        try:
            re.compile(pat)
        except re.error as e:
            raise OpenApiError(f"{where}: bad pattern {pat!r}: {e}") from e
        return specialize(base, Specialization("RegexMatch", pat), random.Random(0))
    return base


def _response_shapes(op: dict, ctx: _Ctx, where: str) -> dict:
    out = {}
    for status, resp in (op.get("responses") or {}).items():
        resp, rctx = _deref(resp, ctx, f"{where}.responses.{status}")
        shape = None
        content = resp.get("content") or {}
        media = content.get("application/json")
        if media and "schema" in media:
            sch, _ = _deref(media["schema"], rctx, f"{where}.responses.{status}.schema")
            if sch.get("type") == "object" or "properties" in sch:
                props = sch.get("properties") or {}
                shape = {
                    "fields": {k: _deref(v, rctx, where)[0].get("type") for k, v in props.items()},
                    "required": list(sch.get("required", list(props))),
                }
        out[str(status)] = shape
    return out


def parse_openapi(document: Union[str, bytes, dict], format: Optional[str] = None) -> list[ActionTemplate]:
    """One :class:`ActionTemplate` per (path, verb) in the document."""
    if isinstance(document, dict):
        doc = document
    else:
        text = document.decode() if isinstance(document, bytes) else document
        fmt = format or ("json" if text.lstrip().startswith("{") else "yaml")
        try:
            doc = json.loads(text) if fmt == "json" else yaml.safe_load(text)
        except json.JSONDecodeError as e:
            raise OpenApiError(f"line {e.lineno} column {e.colno}: {e.msg}") from e
        except yaml.YAMLError as e:
            mark = getattr(e, "problem_mark", None)
            loc = f"line {mark.line + 1} column {mark.column + 1}" if mark else "document"
            raise OpenApiError(f"{loc}: {getattr(e, 'problem', e)}") from e
    if not isinstance(doc, dict) or not isinstance(doc.get("paths"), dict):
        raise OpenApiError("document: missing 'paths' object")
    ctx = _Ctx(doc)
    templates = []
    for path, item in doc["paths"].items():
        if not isinstance(item, dict):
            raise OpenApiError(f"paths.{path}: path item must be an object")
        shared = item.get("parameters", [])
        for verb in VERBS:
            if verb not in item:
                continue
            op = item[verb]
            where = f"paths.{path}.{verb}"
            if not isinstance(op, dict):
                raise OpenApiError(f"{where}: operation must be an object")
            groups = {"path": [], "query": [], "header": []}
            merged = {}
            for i, p in enumerate(list(shared) + list(op.get("parameters", []))):
                pw = f"{where}.parameters[{i}]"
                p, pctx = _deref(p, ctx, pw)
                if "name" not in p or "in" not in p:
                    raise OpenApiError(f"{pw}: parameter needs 'name' and 'in'")
                merged[(p["in"], p["name"])] = (p, pctx, pw)
            for (loc, name), (p, pctx, pw) in merged.items():
                if loc not in groups:
                    log.warning("%s: parameter location %r ignored", pw, loc)
                    continue
                if name in IGNORED_NAMES or name in FAKE_NAMES:
                    continue
                g = schema_gene(p.get("schema", {"type": "string"}), name, pctx, pw) or G.StringGene(name)
                required = bool(p.get("required", loc == "path"))
                if not required:
                    g = G.OptionalGene(name, g, True)
                groups[loc].append(InputSpec(name, g, required))
            body, opaque, body_required, body_schema = None, False, False, None
            rb = op.get("requestBody")
            if rb is not None:
                rb, rctx = _deref(rb, ctx, f"{where}.requestBody")
                body_required = bool(rb.get("required", False))
                media = (rb.get("content") or {}).get("application/json")
                if media is None or "schema" not in media:
                    opaque = True
                else:
                    body_schema = media["schema"]
                    body = schema_gene(media["schema"], "body", rctx, f"{where}.requestBody")
                    opaque = body is None
            templates.append(ActionTemplate(
                verb=verb.upper(), path=path,
                path_params=tuple(groups["path"]), query=tuple(groups["query"]),
                headers=tuple(groups["header"]), body=body, body_opaque=opaque,
                body_required=body_required, responses=_response_shapes(op, ctx, where),
                body_schema=body_schema,
            ))
    return templates


_TYPE_GENES = {
    "Text": lambda n: G.StringGene(n),
    "Unknown": lambda n: G.StringGene(n),
    "Number": lambda n: G.FloatGene(n),
    "Boolean": lambda n: G.BooleanGene(n),
}


def _insert_body_field(body: Optional[G.Gene], dotted: str, leaf: G.Gene) -> Optional[G.Gene]:
    parts = dotted.split(".")
    root = body.copy() if isinstance(body, G.ObjectGene) else G.ObjectGene("body", {})
    node = root
    for part in parts[:-1]:
        nxt = node.fields.get(part)
        if isinstance(nxt, G.OptionalGene):
            nxt = nxt.child
        if not isinstance(nxt, G.ObjectGene):
            if nxt is not None:
                return None
            nxt = G.ObjectGene(part, {})
            node.fields[part] = nxt
        node = nxt
    if parts[-1] in node.fields:
        return None
    node.fields[parts[-1]] = G.OptionalGene(parts[-1], leaf, True)
    return root


def expand(template: ActionTemplate, d: DiscoveredInput) -> ActionTemplate:
    """Template with ``d`` added as an optional, discovered input.

    Idempotent; never removes or retypes an existing input.
    """
    if d.name in IGNORED_NAMES or d.name in FAKE_NAMES:
        return template
    leaf_name = d.name.rsplit(".", 1)[-1]
    gene = _TYPE_GENES[d.inferred_type](leaf_name)
    if d.location == "BodyField":
        body = _insert_body_field(template.body, d.name, gene)
        if body is None:
            return template
        return replace(template, body=body, body_opaque=False)
    loc = "query" if d.location == "QueryParam" else "header"
    if d.name.lower() in {n.lower() for n in template.known_names(loc)}:
        return template
    spec = InputSpec(d.name, G.OptionalGene(d.name, gene, True), False, discovered=True)
    attr = "query" if loc == "query" else "headers"
    return replace(template, **{attr: getattr(template, attr) + (spec,)})


def discover_body_dto(template: ActionTemplate, shape: DtoShape) -> ActionTemplate:
    """Adopt a DTO shape seen at runtime when the declared body is absent or opaque."""
    if template.body is not None and not template.body_opaque:
        return template
    return replace(template, body=dto_gene(shape), body_opaque=False)


# --- structural checks --------------------------------------------------------


def _value_fits(gene: G.Gene, v: Any) -> bool:
    if isinstance(gene, G.OptionalGene):
        return v is None or _value_fits(gene.child, v)
    if isinstance(gene, G.SpecializedStringGene):
        return isinstance(v, str)
    if isinstance(gene, G.IntegerGene):
        if isinstance(v, str):
            try:
                v = int(v)
            except ValueError:
                return False
        return isinstance(v, int) and not isinstance(v, bool) and gene.min <= v <= gene.max
    if isinstance(gene, G.FloatGene):
        if isinstance(v, str):
            try:
                v = float(v)
            except ValueError:
                return False
        return isinstance(v, (int, float)) and not isinstance(v, bool) and gene.min <= v <= gene.max
    if isinstance(gene, G.BooleanGene):
        return isinstance(v, bool) or v in ("true", "false")
    if isinstance(gene, G.EnumGene):
        return v in gene.values or str(v) in {str(x) for x in gene.values}
    if isinstance(gene, G.StringGene):
        return isinstance(v, str) and gene.min_len <= len(v) <= gene.max_len
    if isinstance(gene, G.ArrayGene):
        return isinstance(v, list) and len(v) <= gene.max_size and all(_value_fits(gene.template, x) for x in v)
    if isinstance(gene, (G.UrlHttpGene, G.UriDataGene, G.UrlFileGene, G.UrnGene, G.ChoiceGene, G.UuidGene)):
        return isinstance(v, str)
    if isinstance(gene, G.ObjectGene):
        if not isinstance(v, dict):
            return False
        for k, g in gene.fields.items():
            if k not in v:
                if not isinstance(g, G.OptionalGene):
                    return False
            elif not _value_fits(g, v[k]):
                return False
        return set(v) <= set(gene.fields)
    return True


def validate_request(template: ActionTemplate, req: Request) -> list[str]:
    """Problems with ``req`` relative to ``template`` (empty list = valid)."""
    problems = []
    if req.verb != template.verb:
        problems.append(f"verb {req.verb} != {template.verb}")
    for loc, values in (("query", req.query), ("header", req.headers)):
        specs = {i.name: i for i in template.inputs(loc)}
        for name, spec in specs.items():
            if name not in values:
                if spec.required:
                    problems.append(f"missing required {loc} {name}")
            elif not _value_fits(spec.gene, values[name]):
                problems.append(f"{loc} {name}={values[name]!r} does not fit")
        for name in values:
            if name not in specs:
                problems.append(f"undeclared {loc} {name}")
    if template.body is not None and req.body is not None and not _value_fits(template.body, req.body):
        problems.append("body does not fit")
    return problems


def constraint(kind: str, *args) -> ValidationConstraint:
    return ValidationConstraint(kind, args)
