"""Counter-based random streams.

Every random draw made by a run comes from a Philox4x64 stream whose key is
``(seed, run)`` and whose counter starts at ``(0, 0, phase, generation)``
(lowest word first).  Draws inside one ``(generation, phase)`` block consume
the two low counter words only, so blocks never overlap and any block can be
reproduced without replaying earlier generations.

This is the documented seed-splitting function: run ``r`` of master seed ``s``
uses key ``(s, r)``.  It is stable across versions.
"""
from __future__ import annotations

import enum

import numpy as np

_MASK64 = (1 << 64) - 1


class Phase(enum.IntEnum):
    INIT = 0
    NOISE = 1
    SELECT = 2
    CROSSOVER = 3
    MUTATION = 4
    QUERY = 5


class KeyedStream:
    """Random stream for one run, addressable by (generation, phase)."""

    def __init__(self, seed: int, run: int = 0):
        if not 0 <= seed <= _MASK64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        if not 0 <= run <= _MASK64:
            raise ValueError(f"run index must fit in 64 bits, got {run}")
        self.seed = seed
        self.run = run
        self._key = np.array([seed, run], dtype=np.uint64)
        self._bitgen = np.random.Philox(key=self._key)
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state
        self._counter = self._state["state"]["counter"]

    def at(self, generation: int, phase: int) -> np.random.Generator:
        """Reposition the stream at the start of block (generation, phase).

        The returned generator is shared; it is only valid until the next call.
        """
        st = self._state
        self._counter[:] = (0, 0, phase, generation)
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        self._bitgen.state = st
        return self._gen

    def __repr__(self) -> str:
        return f"KeyedStream(seed={self.seed}, run={self.run})"
