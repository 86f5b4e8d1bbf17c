"""Scheduled background jobs, suppressed unless explicitly enabled."""

from __future__ import annotations

import threading
from typing import Callable


class Scheduler:
    def __init__(self):
        self.jobs: list[tuple[float, Callable]] = []
        self.enabled = False
        self.executions = 0
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []
        self._lock = threading.Lock()

    def register(self, interval: float, task: Callable) -> None:
        self.jobs.append((interval, task))

    def set_enabled(self, flag: bool) -> None:
        self.enabled = flag
        if not flag:
            self.stop()

    def start(self) -> None:
        if not self.enabled or self._threads:
            return
        self._stop.clear()
        for interval, task in self.jobs:
            t = threading.Thread(target=self._loop, args=(interval, task), daemon=True)
            self._threads.append(t)
            t.start()

    def _loop(self, interval: float, task: Callable) -> None:
        while not self._stop.wait(interval):
            with self._lock:
                self.executions += 1
            task()

    def stop(self) -> None:
        self._stop.set()
        for t in self._threads:
            t.join(timeout=2.0)
        self._threads = []
