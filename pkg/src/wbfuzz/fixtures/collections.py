"""Branches decided by collection, map, enum and equality checks."""

from ..harness import App, EnumValueError, HttpError, SutDescriptor

ALLOWED_ROLES = ["ADMIN", "AUDITOR", "VIEWER"]
SETTINGS = {"max-upload": "10MB", "theme": "dark", "locale": "en-GB"}
COLORS = ("RED", "GREEN", "BLUE")
DEFAULT_TAGS = ("alpha", "beta", "gamma", "delta")

OPENAPI = """
openapi: 3.0.0
info: {title: collections, version: "1"}
paths:
  /api/roles:
    get:
      parameters:
        - {name: roles, in: query, required: true, schema: {type: string}}
      responses:
        "200": {description: granted}
        "403": {description: denied}
  /api/settings/{key}:
    get:
      parameters:
        - {name: key, in: path, required: true, schema: {type: string}}
      responses:
        "200": {description: setting}
        "404": {description: unknown}
  /api/paint:
    post:
      parameters:
        - {name: color, in: query, required: true, schema: {type: string}}
        - {name: shade, in: query, required: false, schema: {type: integer}}
      responses:
        "200": {description: painted}
        "400": {description: unknown color}
  /api/tags:
    delete:
      parameters:
        - {name: tag, in: query, required: true, schema: {type: string}}
        - {name: also, in: query, required: false, schema: {type: string}}
      responses:
        "200": {description: remaining tags}
"""


def build(app: App) -> None:
    @app.route("GET", "/api/roles")
    def roles(sdk):
        requested = [r for r in sdk.request.query.get("roles", "").split(",") if r]
        if sdk.coll_is_empty(requested, "roles-empty"):
            raise HttpError(403, "no roles")
        if not sdk.coll_contains_all(ALLOWED_ROLES, requested, "roles-allowed"):
            raise HttpError(403, "role not allowed")
        sdk.line("roles-granted")
        if sdk.coll_contains(requested, "ADMIN", "roles-admin"):
            sdk.line("admin")
        return 200, {"roles": requested}

    @app.route("GET", "/api/settings/{key}")
    def setting(sdk, key):
        value = sdk.map_get(SETTINGS, key, "settings-get")
        if value is None:
            raise HttpError(404, "unknown setting")
        sdk.line("setting-found")
        if sdk.obj_equals(value, "dark", "settings-dark"):
            sdk.line("dark-theme")
        return 200, {"key": key, "value": value}

    @app.route("POST", "/api/paint")
    def paint(sdk):
        try:
            color = sdk.enum_value_of(COLORS, sdk.request.query.get("color"), "paint-color")
        except EnumValueError:
            raise HttpError(400, "unknown color")
        sdk.line("color-ok")
        shade = sdk.request.query.get("shade")
        if shade is not None and sdk.obj_equals(int(shade), 42, "paint-shade"):
            sdk.line("shade-42")
        return 200, {"color": color}

    @app.route("DELETE", "/api/tags")
    def tags(sdk):
        current = list(DEFAULT_TAGS)
        if sdk.coll_remove(current, sdk.request.query.get("tag"), "tags-remove"):
            sdk.line("tag-removed")
        also = sdk.request.query.get("also")
        if also is not None and sdk.coll_remove_all(current, also.split(","), "tags-remove-all"):
            sdk.line("tags-removed")
        return 200, {"tags": current}


def descriptor() -> SutDescriptor:
    return SutDescriptor("collections", OPENAPI, build, description="containsAll, map, enum and equals branches")
