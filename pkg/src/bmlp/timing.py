"""Cooperative deadlines for long-running solvers."""

from __future__ import annotations

import time


class SolveTimeout(RuntimeError):
    pass


class Deadline:
    """Raises :class:`SolveTimeout` from :meth:`check` once ``seconds`` have elapsed.

    The clock is consulted only every ``stride`` calls so hot loops can call
    ``check`` per item.
    """

    def __init__(self, seconds: float | None, stride: int = 1024, clock=time.perf_counter):
        self.seconds = seconds
        self._clock = clock
        self._stride = stride
        self._count = 0
        self._end = None if seconds is None else clock() + seconds

    def check(self) -> None:
        if self._end is None:
            return
        self._count += 1
        if self._count % self._stride == 0:
            self.enforce()

    def enforce(self) -> None:
        if self._end is not None and self._clock() >= self._end:
            raise SolveTimeout(f"exceeded {self.seconds} s")


NO_DEADLINE = Deadline(None)
