"""Deterministic discrete-event engine.

Virtual time is integer milliseconds. Occurrences fire in strict
(fire_at, seq) order, where seq is assigned at scheduling time, so ties at
the same instant resolve in scheduling order. Cancellation is
tombstone-based: a cancelled occurrence stays in the heap and is skipped
when popped.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from typing import Callable

from .errors import SchedulingInPastError

SimTime = int  # integer milliseconds since simulation start


class RandomSource:
    """Seeded pseudo-random source with named, non-interleaving streams.

    Backed by CPython's Mersenne Twister (mt19937), seeded from the string
    "<seed>/<stream>" (hashed with SHA-512 by the stdlib seeder), so an
    identical (seed, stream) pair yields an identical draw sequence on
    every platform. Components that draw independently (trace generation,
    steal victim selection) get distinct stream names to keep their
    sequences from interleaving.
    """

    ALGORITHM = "mt19937"

    def __init__(self, seed: int, stream: str = "main"):
        self.seed = seed
        self.stream = stream
        self._rng = random.Random(f"{seed}/{stream}")

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        return self._rng.random()

    def randint(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi], both ends inclusive."""
        return self._rng.randint(lo, hi)

    def expovariate(self, mean: float) -> float:
        """Exponential draw with the given mean (> 0)."""
        return self._rng.expovariate(1.0 / mean)


@dataclass(slots=True)
class Occurrence:
    """A scheduled occurrence; also serves as its own cancellation handle."""

    fire_at: int
    seq: int
    action: Callable[[], None]
    label: str
    cancelled: bool = False

    def cancel(self) -> None:
        self.cancelled = True


class Engine:
    """Single-owner event loop; state is mutated only from handlers.

    When ``record_log`` is set, every processed occurrence is appended to
    ``log`` as (fire_at, seq, label), which makes replay comparisons exact.
    """

    def __init__(self, record_log: bool = False):
        self._heap: list[tuple[int, int, Occurrence]] = []
        self._seq = 0
        self._now = 0
        self.record_log = record_log
        self.log: list[tuple[int, int, str]] = []

    def now(self) -> int:
        return self._now

    def schedule(self, at: int, action: Callable[[], None], label: str = "") -> Occurrence:
        """Enqueue an occurrence at virtual time ``at`` (>= now)."""
        if at < self._now:
            raise SchedulingInPastError(
                f"cannot schedule at t={at}; clock is already at t={self._now}"
            )
        occ = Occurrence(at, self._seq, action, label)
        self._seq += 1
        heapq.heappush(self._heap, (at, occ.seq, occ))
        return occ

    def _fire(self, occ: Occurrence) -> None:
        self._now = occ.fire_at
        if self.record_log:
            self.log.append((occ.fire_at, occ.seq, occ.label))
        occ.action()

    def run_until(self, horizon: int) -> int:
        """Process every occurrence with fire_at <= horizon, then advance
        the clock to the horizon. Returns the number processed (cancelled
        tombstones are skipped and not counted)."""
        if horizon < self._now:
            raise SchedulingInPastError(
                f"horizon t={horizon} is behind the clock t={self._now}"
            )
        processed = 0
        while self._heap and self._heap[0][0] <= horizon:
            _, _, occ = heapq.heappop(self._heap)
            if occ.cancelled:
                continue
            self._fire(occ)
            processed += 1
        self._now = horizon
        return processed

    def run(self) -> int:
        """Drain the queue completely; the clock ends at the last fire time."""
        processed = 0
        while self._heap:
            _, _, occ = heapq.heappop(self._heap)
            if occ.cancelled:
                continue
            self._fire(occ)
            processed += 1
        return processed

    def pending(self) -> int:
        """Occurrences still queued, tombstones included."""
        return len(self._heap)
