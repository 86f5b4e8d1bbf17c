"""Read-only session API over a table whose entity is stricter than its DDL."""

from importlib import resources

from ..harness import App, HttpError, SutDescriptor
from ..sqlgen import parse_entity_file, parse_schema_file

TABLES = parse_schema_file(resources.files(__package__).joinpath("appsession.schema").read_text())
ENTITIES = parse_entity_file(resources.files(__package__).joinpath("appsession.entities").read_text())
SESSION = ENTITIES[0]

OPENAPI = """
openapi: 3.0.0
info: {title: appsession, version: "1"}
paths:
  /api/sessions:
    get:
      responses:
        "200":
          description: all sessions
          content:
            application/json:
              schema: {type: object, properties: {count: {type: integer}, events: {type: integer}}, required: [count]}
  /api/sessions/{hashedGuid}:
    get:
      parameters:
        - {name: hashedGuid, in: path, required: true, schema: {type: string}}
      responses:
        "200": {description: one session}
        "404": {description: unknown guid}
"""


def build(app: App) -> None:
    def load(sdk, rows):
        return [sdk.deserialize_entity("app_session", r, SESSION) for r in rows]

    @app.route("GET", "/api/sessions")
    def all_sessions(sdk):
        sessions = load(sdk, sdk.select("app_session"))
        events = 0
        for s in sessions:
            if sdk.str_equals(s["teleTanType"], "EVENT", "session-event"):
                events += 1
                sdk.line("event-session")
            if sdk.cmp("tan-exhausted", s["tanCounter"], ">=", 3):
                sdk.line("tan-exhausted")
        return 200, {"count": len(sessions), "events": events}

    @app.route("GET", "/api/sessions/{hashedGuid}")
    def by_guid(sdk, hashedGuid):
        sessions = load(sdk, sdk.select("app_session", hashed_guid=hashedGuid))
        if not sessions:
            raise HttpError(404, "no session")
        s = sessions[0]
        if sdk.str_equals(s["sourceOfTrust"], "TELETAN", "session-teletan"):
            sdk.line("teletan-trust")
        return 200, {"hashedGuid": hashedGuid, "tanCounter": s["tanCounter"]}


def descriptor() -> SutDescriptor:
    return SutDescriptor("appsession", OPENAPI, build, tables=TABLES, entities=ENTITIES,
                         description="entity enums and primitives stricter than the table")
