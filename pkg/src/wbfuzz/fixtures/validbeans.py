"""A single POST endpoint guarded by bean validation of a 20-constraint DTO.

The published schema carries field types only; every constraint lives in
the handler's DTO declaration, as with annotation-driven validation.
"""

from ..harness import App, HttpError, SutDescriptor
from ..schema import FieldShape as F, constraint as C, dto

ADDRESS = dto(
    "Address",
    zip=F("string", (C("Pattern", r"[0-9]{5}"),)),
    street=F("string", (C("NotBlank"),)),
)

VALID_DTO = dto(
    "ValidDto",
    count=F("integer", (C("Min", 1), C("Max", 10))),
    positive=F("integer", (C("Positive"),)),
    nonNegative=F("integer", (C("PositiveOrZero"),)),
    negative=F("integer", (C("Negative"),)),
    nonPositive=F("integer", (C("NegativeOrZero"),)),
    name=F("string", (C("NotBlank"),)),
    code=F("string", (C("Size", 3, 5),)),
    tags=F("array", (C("NotEmpty"),), F("string")),
    email=F("string", (C("Pattern", r"[a-z]{2,8}@[a-z]{2,8}\.com"),)),
    accepted=F("boolean", (C("AssertTrue"),)),
    rejected=F("boolean", (C("AssertFalse"),)),
    legacy=F("string", (C("Null"),)),
    owner=F("string", (C("NotNull"),)),
    kind=F("string", (C("EnumMembership", ("RETAIL", "WHOLESALE", "INTERNAL")),)),
    address=F(ADDRESS, (C("NotNull"),)),
    percent=F("number", (C("Min", 0), C("Max", 100))),
)

OPENAPI = {
    "openapi": "3.0.0",
    "info": {"title": "validbeans", "version": "1"},
    "paths": {
        "/api/valid": {
            "post": {
                "requestBody": {
                    "required": True,
                    "content": {"application/json": {"schema": {"$ref": "#/components/schemas/ValidDto"}}},
                },
                "responses": {
                    "200": {"description": "accepted", "content": {"application/json": {"schema": {
                        "type": "object", "properties": {"id": {"type": "integer"}}, "required": ["id"]}}}},
                    "400": {"description": "rejected"},
                },
            }
        }
    },
    "components": {"schemas": {
        "Address": {"type": "object", "properties": {"zip": {"type": "string"}, "street": {"type": "string"}},
                    "required": ["zip", "street"]},
        "ValidDto": {
            "type": "object",
            "properties": {
                "count": {"type": "integer"}, "positive": {"type": "integer"},
                "nonNegative": {"type": "integer"}, "negative": {"type": "integer"},
                "nonPositive": {"type": "integer"}, "name": {"type": "string"},
                "code": {"type": "string"}, "tags": {"type": "array", "items": {"type": "string"}},
                "email": {"type": "string"}, "accepted": {"type": "boolean"},
                "rejected": {"type": "boolean"}, "legacy": {"type": "string"},
                "owner": {"type": "string"}, "kind": {"type": "string"},
                "address": {"$ref": "#/components/schemas/Address"},
                "percent": {"type": "number"},
            },
            "required": ["count", "positive", "nonNegative", "negative", "nonPositive", "name", "code",
                         "tags", "email", "accepted", "rejected", "kind", "percent"],
        },
    }},
}


def build(app: App) -> None:
    @app.route("POST", "/api/valid")
    def create(sdk):
        body = sdk.json_body()
        if not isinstance(body, dict):
            raise HttpError(400, "body must be an object")
        if not sdk.validate(body, VALID_DTO):
            sdk.line("rejected")
            raise HttpError(400, "validation failed")
        sdk.line("accepted")
        if sdk.str_equals(body["kind"], "INTERNAL", "kind-internal"):
            sdk.line("internal")
        return 200, {"id": 1}


def descriptor() -> SutDescriptor:
    return SutDescriptor("validbeans", OPENAPI, build, description="20-constraint DTO behind bean validation")
