"""Clocks and interruptible sleeping."""

from __future__ import annotations

import threading
import time


class TaskInterrupted(BaseException):
    """Raised inside a background task once its evaluation has been reset.

    Derives from BaseException so SUT code catching ``Exception`` cannot
    swallow it.
    """


class VirtualClock:
    """Deterministic time: foreground sleeps advance ``now`` instantly.

    Background sleepers park until the evaluation is reset, which is
    indistinguishable from a sleep outliving the evaluation.
    """

    virtual = True

    def __init__(self):
        self.now = 0.0
        self._lock = threading.Lock()

    def time(self) -> float:
        return self.now

    def sleep(self, seconds: float, interrupt: threading.Event, foreground: bool) -> float:
        if foreground:
            with self._lock:
                self.now += seconds
            return seconds
        interrupt.wait()
        raise TaskInterrupted()


class RealClock:
    virtual = False

    def time(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float, interrupt: threading.Event, foreground: bool) -> float:
        start = time.monotonic()
        if interrupt.wait(seconds):
            raise TaskInterrupted()
        return time.monotonic() - start
