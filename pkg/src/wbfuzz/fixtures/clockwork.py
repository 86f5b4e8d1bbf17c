"""Time-driven behaviour: a cron-style cleaner, slow requests and detached work."""

from ..harness import App, HttpError, SutDescriptor
from ..sqlgen import parse_schema_file

TABLES = parse_schema_file("""
table job
  id    BIGINT pk
  name  VARCHAR(32)
  state VARCHAR(16)
end
""")

BASELINE = {"job": [
    {"id": 1, "name": "nightly-export", "state": "DONE"},
    {"id": 2, "name": "reindex", "state": "PENDING"},
]}

OPENAPI = """
openapi: 3.0.0
info: {title: clockwork, version: "1"}
paths:
  /api/delay:
    post:
      parameters:
        - {name: delayMs, in: query, required: true, schema: {type: integer, minimum: 0}}
      responses:
        "200": {description: waited}
  /api/jobs:
    get:
      responses:
        "200": {description: job list}
    post:
      parameters:
        - {name: name, in: query, required: false, schema: {type: string, maxLength: 32}}
      responses:
        "202": {description: scheduled}
"""


def build(app: App) -> None:
    @app.scheduled(0.001)
    def purge(sdk):
        sdk.delete("job", state="DONE")
        sdk.insert("job", {"id": 9_000_000 + int(sdk.now() * 1000) % 1_000_000, "name": "purge", "state": "DONE"})

    @app.route("POST", "/api/delay")
    def delay(sdk):
        raw = sdk.request.query.get("delayMs", "0")
        try:
            ms = sdk.parse_int(raw, "delay-parse")
        except ValueError:
            raise HttpError(400, "delayMs must be an integer")
        slept = sdk.sleep(ms / 1000.0)
        if sdk.cmp("delay-long", ms, ">", 1000):
            sdk.line("long-delay")
        return 200, {"requestedMs": ms, "sleptMs": round(slept * 1000)}

    def run_job(sdk, name):
        sdk.sleep(5.0)
        sdk.insert("job", {"id": 5000, "name": name, "state": "DONE"})

    @app.route("POST", "/api/jobs")
    def submit(sdk):
        name = (sdk.request.query.get("name") or "adhoc")[:32]
        sdk.spawn(run_job, name)
        return 202, {"name": name}

    @app.route("GET", "/api/jobs")
    def jobs(sdk):
        rows = sdk.select("job")
        pending = [r for r in rows if r["state"] == "PENDING"]
        if sdk.coll_is_empty(pending, "jobs-none-pending"):
            sdk.line("all-done")
        return 200, {"count": len(rows)}


def descriptor() -> SutDescriptor:
    return SutDescriptor("clockwork", OPENAPI, build, tables=TABLES, baseline=BASELINE,
                         description="scheduled job, request sleeps and background tasks")
