"""String handling branches: a long secret, UUID ids and link parsing."""

from ..harness import App, HttpError, SutDescriptor

# 60 characters; unreachable by blind string mutation
ACTIVATION_KEY = "k7Qx-PLmN2-vR8tZ-wY4cB-Hs6jD-Fe3gA-Ub9nK-Xo5pL-Mi1qS-Vt0rW-J"

OPENAPI = """
openapi: 3.0.0
info: {title: stringops, version: "1"}
paths:
  /api/activate:
    get:
      parameters:
        - {name: key, in: query, required: true, schema: {type: string}}
      responses:
        "200": {description: activated}
        "403": {description: wrong key}
  /api/items/{itemId}:
    get:
      parameters:
        - {name: itemId, in: path, required: true, schema: {type: string}}
      responses:
        "200": {description: item}
        "400": {description: malformed id}
  /api/links:
    post:
      parameters:
        - {name: target, in: query, required: true, schema: {type: string}}
      responses:
        "201": {description: stored}
        "400": {description: malformed link}
"""


def build(app: App) -> None:
    @app.route("GET", "/api/activate")
    def activate(sdk):
        key = sdk.request.query.get("key", "")
        if sdk.str_equals(key, ACTIVATION_KEY, "activation-key"):
            sdk.line("activated")
            return 200, {"activated": True}
        raise HttpError(403, "wrong key")

    @app.route("GET", "/api/items/{itemId}")
    def item(sdk, itemId):
        try:
            uid = sdk.uuid_from_string(itemId, "item-uuid")
        except ValueError:
            raise HttpError(400, "malformed id")
        sdk.line("uuid-ok")
        if sdk.cmp("uuid-v4", uid.version or 0, "==", 4):
            sdk.line("uuid-v4")
        return 200, {"id": str(uid)}

    @app.route("POST", "/api/links")
    def link(sdk):
        target = sdk.request.query.get("target", "")
        try:
            uri = sdk.uri_parse(target, "link-uri")
        except ValueError:
            raise HttpError(400, "malformed link")
        sdk.line("uri-ok")
        if sdk.str_starts_with(target, "https:", "link-https"):
            sdk.line("secure-link")
        return 201, {"scheme": uri.scheme}


def descriptor() -> SutDescriptor:
    return SutDescriptor("stringops", OPENAPI, build, description="long constant, UUID and URI parsing")
