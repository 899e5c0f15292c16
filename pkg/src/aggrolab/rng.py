"""Keyed random streams.

Every draw in the package comes from a :class:`Stream`, a value object holding
a master seed and a tuple of integer ids (replicate, path, ...).  The
generator behind a stream is a counter-based Philox keyed through
:class:`numpy.random.SeedSequence`, so the numbers produced for a given key do
not depend on which worker asks for them or in what order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Stream:
    seed: int
    key: tuple[int, ...] = ()

    def __post_init__(self):
        if int(self.seed) < 0:
            raise ValueError("seed must be non-negative")
        if any(int(k) < 0 for k in self.key):
            raise ValueError("stream ids must be non-negative")

    def child(self, *ids: int) -> "Stream":
        """Sub-stream for the given ids, independent of every sibling."""
        return Stream(self.seed, self.key + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=self.key)
        return np.random.Generator(np.random.Philox(ss))

    @property
    def lineage(self) -> dict:
        return {"seed": int(self.seed), "key": list(self.key)}


def as_stream(stream) -> Stream:
    """Accept a Stream or a bare integer seed."""
    if isinstance(stream, Stream):
        return stream
    if isinstance(stream, (int, np.integer)):
        return Stream(int(stream))
    raise TypeError(f"expected Stream or int seed, got {type(stream).__name__}")
