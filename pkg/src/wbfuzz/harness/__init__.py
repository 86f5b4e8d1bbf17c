from ..trace import DiscoveredInput, ExecutionTrace, Request, Response
from .clock import RealClock, TaskInterrupted, VirtualClock
from .core import App, Harness, SutDescriptor
from .db import Database, HarnessConfigError
from .scheduler import Scheduler
from .sdk import EntityParseCrash, EnumValueError, HttpError, Sdk

__all__ = [
    "App", "Database", "DiscoveredInput", "EntityParseCrash", "EnumValueError", "ExecutionTrace",
    "Harness", "HarnessConfigError", "HttpError", "RealClock", "Request", "Response", "Scheduler",
    "Sdk", "SutDescriptor", "TaskInterrupted", "VirtualClock",
]
