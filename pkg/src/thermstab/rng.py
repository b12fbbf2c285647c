"""Counter-based per-shot random streams.

Draw ``k`` of shot ``s`` is a pure function of ``(master_seed, s, k)``: a
SplitMix64 finalizer applied to a per-shot key plus a Weyl counter.  Shots
can therefore run on any thread, in any order, and replay bit-exactly.
"""

from __future__ import annotations

import numpy as np

from . import _kernels

SEED_MASK = (1 << 64) - 1


class ShotRng:
    """Random stream of one shot; the state array is shared with the kernels."""

    __slots__ = ("state", "master_seed", "shot_index")

    def __init__(self, master_seed: int, shot_index: int = 0) -> None:
        if shot_index < 0:
            raise ValueError("shot_index must be >= 0")
        self.master_seed = int(master_seed) & SEED_MASK
        self.shot_index = int(shot_index)
        self.state = np.zeros(2, dtype=np.uint64)
        self.state[0] = _kernels.stream_key(np.uint64(self.master_seed), np.uint64(self.shot_index))

    def copy(self) -> "ShotRng":
        """Independent stream at the same position."""
        other = ShotRng.__new__(ShotRng)
        other.master_seed, other.shot_index = self.master_seed, self.shot_index
        other.state = self.state.copy()
        return other

    @property
    def draws(self) -> int:
        """Number of draws consumed so far."""
        return int(self.state[1])

    def random(self, size: int | None = None):
        if size is None:
            return float(_kernels.next_uniform(self.state))
        out = np.empty(size, dtype=np.float64)
        _kernels.fill_uniform(self.state, out)
        return out


def shot_rng(master_seed: int, shot_index: int) -> ShotRng:
    return ShotRng(master_seed, shot_index)
