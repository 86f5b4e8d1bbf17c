"""In-process SUT harness: routing, execution, reset and fault capture."""

from __future__ import annotations

import copy
import logging
import re
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Optional
from urllib.parse import unquote

from ..config import Features
from ..schema import ActionTemplate, parse_openapi
from ..sqlgen import EntityConstraintSet, TableSchema
from ..trace import ExecutionTrace, Request, Response
from .clock import TaskInterrupted, VirtualClock
from .db import Database, HarnessConfigError
from .scheduler import Scheduler
from .sdk import EntityParseCrash, HttpError, Sdk

log = logging.getLogger(__name__)

_JOIN_TIMEOUT = 5.0


@dataclass
class Route:
    verb: str
    path: str
    handler: Callable
    pattern: re.Pattern = None

    def __post_init__(self):
        regex = re.sub(r"\\\{(\w+)\\\}", r"(?P<\1>[^/]+)", re.escape(self.path))
        self.pattern = re.compile(regex + "$")


class App:
    """Route and job registry a fixture populates at build time."""

    def __init__(self):
        self.routes: list[Route] = []
        self.jobs: list[tuple[float, Callable]] = []

    def route(self, verb: str, path: str):
        def deco(fn):
            self.routes.append(Route(verb.upper(), path, fn))
            return fn
        return deco

    def scheduled(self, interval: float):
        def deco(fn):
            self.jobs.append((interval, fn))
            return fn
        return deco


@dataclass
class SutDescriptor:
    id: str
    openapi: Any
    build: Callable[[App], None]
    tables: list = field(default_factory=list)
    entities: list = field(default_factory=list)
    baseline: dict = field(default_factory=dict)
    source: str = ""
    description: str = ""

    def __post_init__(self):
        if not self.source:
            self.source = f"{self.id}.py"

    def entity_for(self, table: str) -> Optional[EntityConstraintSet]:
        from ..sqlgen import ReconciliationError, resolve

        for e in self.entities:
            try:
                if resolve(e, self.tables).table.name.lower() == table.lower():
                    return e
            except ReconciliationError:
                continue
        return None


class _Task:
    def __init__(self, epoch: int, trace: ExecutionTrace):
        self.epoch = epoch
        self.trace = trace


class Harness:
    """Runs one SUT in-process. Not thread-safe across concurrent evaluations."""

    def __init__(self, sut: SutDescriptor, features: Features, clock=None):
        self.sut = sut
        self.features = features
        self.clock = clock or VirtualClock()
        self.templates: list[ActionTemplate] = parse_openapi(sut.openapi)
        self.db = Database(list(sut.tables), sut.baseline)
        self.app = App()
        sut.build(self.app)
        self.scheduler = Scheduler()
        for interval, fn in self.app.jobs:
            self.scheduler.register(interval, self._job(fn))
        self.scheduler.set_enabled(not features.suppress_scheduled)
        self.scheduler.start()
        self.sdk = Sdk(self)
        self.epoch = 0
        self.interrupt = threading.Event()
        self.trace = ExecutionTrace()
        self.current_request: Optional[Request] = None
        self.current_template: Optional[ActionTemplate] = None
        self._threads: list[threading.Thread] = []

    # --- lifecycle -------------------------------------------------------

    def _job(self, fn):
        def run():
            try:
                fn(self.sdk)
            except TaskInterrupted:
                pass
            except Exception:
                log.debug("scheduled job failed", exc_info=True)
        return run

    def reset_sut(self) -> ExecutionTrace:
        """Stop stale background work, restore the baseline DB, start a fresh trace."""
        self.epoch += 1
        self.interrupt.set()
        for t in self._threads:
            t.join(_JOIN_TIMEOUT)
            if t.is_alive():
                log.warning("background task %s outlived reset", t.name)
        self._threads = []
        self.interrupt = threading.Event()
        self.db.reset()
        self.trace = ExecutionTrace()
        self.current_request = None
        self.current_template = None
        return self.trace

    def close(self) -> None:
        self.reset_sut()
        self.scheduler.stop()

    def spawn(self, sdk: Sdk, fn: Callable, args: tuple) -> None:
        task = _Task(self.epoch, self.trace)
        self.trace.background_tasks.append(getattr(fn, "__name__", "task"))

        def body():
            sdk._local.task = task
            try:
                fn(sdk, *args)
            except TaskInterrupted:
                pass
            except Exception:
                log.debug("background task failed", exc_info=True)

        t = threading.Thread(target=body, daemon=True, name=f"bg-{self.epoch}")
        self._threads.append(t)
        t.start()

    # --- request context ------------------------------------------------

    def known_names(self, location: str) -> set:
        if self.current_template is None:
            return set()
        return self.current_template.known_names(location)

    def body_undeclared(self) -> bool:
        t = self.current_template
        return t is None or t.body is None or t.body_opaque

    def template_for(self, verb: str, path: str) -> Optional[ActionTemplate]:
        for t in self.templates:
            if t.verb == verb and t.path == path:
                return t
        return None

    # --- execution -------------------------------------------------------

    def _route(self, req: Request):
        path_hit = False
        for r in self.app.routes:
            m = r.pattern.match(req.path)
            if m is None:
                continue
            path_hit = True
            if r.verb == req.verb.upper():
                return r, {k: unquote(v) for k, v in m.groupdict().items()}
        return None, 405 if path_hit else 404

    def execute(self, req: Request, action: int = 0, template: Optional[ActionTemplate] = None) -> Response:
        route, params = self._route(req)
        if route is None:
            return Response(params, {"error": "no route"})
        self.current_request = Request(req.verb.upper(), req.path, dict(req.query), dict(req.headers),
                                       copy.deepcopy(req.body))
        self.current_template = template or self.template_for(route.verb, route.path)
        self.trace.action = action
        self.trace.line(self.sut.id, f"{route.verb} {route.path}")
        try:
            out = route.handler(self.sdk, **params)
        except HttpError as e:
            resp = Response(e.status, {"error": str(e)}, str(e))
            if e.status >= 500:
                self._fault(route, e, resp)
            return resp
        except EntityParseCrash as e:
            msg = f"{type(e).__name__}: {e}"
            resp = Response(500, {"error": msg}, msg, entity_crash=True)
            self._fault(route, e, resp)
            return resp
        except TaskInterrupted:
            raise
        except HarnessConfigError:
            raise
        except Exception as e:
            msg = f"{type(e).__name__}: {e}"
            resp = Response(500, {"error": msg}, msg)
            self._fault(route, e, resp)
            return resp
        finally:
            self.trace.action = -1
        if isinstance(out, tuple):
            status, body = out
        else:
            status, body = 200, out
        return Response(status, copy.deepcopy(body))

    def _fault(self, route: Route, e: BaseException, resp: Response) -> None:
        self.trace.faults.append({"verb": route.verb, "endpoint": route.path, "status": resp.status,
                                  "error": resp.error or "", "entity_crash": resp.entity_crash})
