"""Growing replay window holding the most recent ceil(c_b * k) transitions."""
from __future__ import annotations

import math
from collections import deque

import numpy as np

from .errors import ParameterError, StateError
from .sampling import RngStream, Transition

BufferDistribution = np.ndarray


def window_size(c_b: float, k: int) -> int:
    # rounding guards float products like 0.7 * 10 = 7.000000000000001
    return max(1, math.ceil(round(c_b * k, 9)))


class ReplayBuffer:
    """Window of the last ``max(1, ceil(c_b * k))`` transitions after k pushes.

    Visit counts per (s, a) are kept alongside the entries so the empirical
    distribution is available without a scan.
    """

    def __init__(self, num_states: int, num_actions: int, c_b: float):
        if not 0.0 < c_b <= 1.0:
            raise ParameterError(f"c_b must lie in (0, 1], got {c_b}")
        self.shape = (int(num_states), int(num_actions))
        self.c_b = float(c_b)
        self.k = 0
        self.entries: deque[Transition] = deque()
        self._counts = np.zeros(self.shape, dtype=np.int64)

    def __len__(self):
        return len(self.entries)

    def push(self, t: Transition) -> None:
        self.k += 1
        self.entries.append(t)
        self._counts[t.s, t.a] += 1
        target = window_size(self.c_b, self.k)
        while len(self.entries) > target:
            old = self.entries.popleft()
            self._counts[old.s, old.a] -= 1

    def sample_uniform(self, rng: RngStream) -> Transition:
        if not self.entries:
            raise StateError("cannot sample from an empty buffer")
        return self.entries[rng.integer(len(self.entries))]

    def distribution(self) -> BufferDistribution:
        """b(s, a): fraction of buffered transitions that start at (s, a)."""
        if not self.entries:
            raise StateError("empty buffer has no distribution")
        return self._counts / len(self.entries)

    def copy(self) -> "ReplayBuffer":
        other = ReplayBuffer(*self.shape, self.c_b)
        other.k = self.k
        other.entries = deque(self.entries)
        other._counts = self._counts.copy()
        return other


def drift_bound_check(before, after, len_after: int) -> bool:
    """True iff ||after - before||_2 <= 2 / len_after."""
    before = np.asarray(before, dtype=float)
    after = np.asarray(after, dtype=float)
    if before.shape != after.shape:
        raise ParameterError(f"shape mismatch {before.shape} vs {after.shape}")
    if len_after < 1:
        raise ParameterError("len_after must be positive")
    return bool(np.linalg.norm(after - before) <= 2.0 / len_after + 1e-12)
