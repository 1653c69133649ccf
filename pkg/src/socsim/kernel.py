"""Deterministic discrete-event kernel.

A single priority queue holds every pending event as a
``(time, rank, seq, action)`` tuple.  ``rank`` is the fixed tie-break
position a component receives when it registers with the simulator, so
two events at the same cycle always fire in registration order, and two
events from the same component fire in scheduling order via ``seq``.
Nothing about the ordering depends on hash values, id(), or wall-clock,
which is what makes whole runs reproducible byte for byte.
"""

from __future__ import annotations

import heapq
from typing import Callable

from .errors import SimulationError


class Simulator:
    """Event queue plus the global cycle counter."""

    def __init__(self) -> None:
        self._queue: list[tuple[int, int, int, Callable[[], None]]] = []
        self._seq = 0
        self._next_rank = 0
        self.now = 0
        self.scheduled = 0
        self.processed = 0

    def register(self, name: str = "") -> int:
        """Hand out the next tie-break rank.

        Components must register in a fixed topology order; the rank is
        the only thing that orders same-cycle events between components.
        """
        rank = self._next_rank
        self._next_rank += 1
        return rank

    def schedule(self, time: int, rank: int, action: Callable[[], None]) -> None:
        if time < self.now:
            raise SimulationError(
                f"event scheduled at t={time} before current cycle t={self.now}"
            )
        heapq.heappush(self._queue, (time, rank, self._seq, action))
        self._seq += 1
        self.scheduled += 1

    def run(self, until: int) -> None:
        """Process events up to and including cycle ``until``."""
        while self._queue and self._queue[0][0] <= until:
            time, _rank, _seq, action = heapq.heappop(self._queue)
            assert time >= self.now, "event queue went backwards"
            self.now = time
            self.processed += 1
            action()
        # land on the horizon even if the queue drained early
        if self.now < until:
            self.now = until

    def pending(self) -> int:
        return len(self._queue)
