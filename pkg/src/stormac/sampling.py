"""Seeded random streams and the samplers built on them."""
from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from typing import NamedTuple

import numpy as np

from .mdp import TabularMdp

# stream ids, one per purpose inside a training run
ACTOR_STREAM = 0
CRITIC_STREAM = 1
AUX_STREAM = 2


class Transition(NamedTuple):
    s: int
    a: int
    s_next: int


class OccupancyTruncationWarning(RuntimeWarning):
    """The geometric-horizon chain hit its hard step cap."""


class RngStream:
    """Independent uniform stream keyed by ``(seed, stream_id)``.

    Backed by PCG64 seeded through ``SeedSequence([seed, stream_id])``, so
    distinct ids never share state. Uniforms are drawn in blocks and handed
    out one at a time; the sequence depends only on the key.
    """

    _BLOCK = 4096

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence([self.seed, self.stream_id])))
        self._buf: list[float] = []
        self._pos = 0

    def uniform(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(self._BLOCK).tolist()
            self._pos = 0
        u = self._buf[self._pos]
        self._pos += 1
        return u

    def integer(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        return min(int(self.uniform() * n), n - 1)

    def normal(self, size):
        """Gaussian block for verification helpers (separate from the uniform buffer)."""
        return self._gen.standard_normal(size)

    def generator(self) -> np.random.Generator:
        return self._gen

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"


def _inverse_cdf(cdf, u: float) -> int:
    return min(bisect_right(cdf, u), len(cdf) - 1)


def occupancy_step_cap(gamma: float) -> int:
    return int(10 * math.ceil(1.0 / (1.0 - gamma)) * math.log(1e12))


def sample_occupancy_state(mdp: TabularMdp, pi, rng: RngStream, pi_cdf=None) -> int:
    """Draw a state from the discounted occupancy measure d^pi.

    Start at s ~ mu; at every step stop with probability 1 - gamma and return
    the current state, otherwise move one step under pi. ``pi_cdf`` lets a
    caller pass precomputed row CDFs of pi.
    """
    if pi_cdf is None:
        pi_cdf = np.cumsum(pi, axis=1).tolist()
    stop = 1.0 - mdp.gamma
    p_cdf = mdp._p_cdf
    s = _inverse_cdf(mdp._mu_cdf, rng.uniform())
    cap = occupancy_step_cap(mdp.gamma)
    for _ in range(cap):
        if rng.uniform() < stop:
            return s
        a = _inverse_cdf(pi_cdf[s], rng.uniform())
        s = _inverse_cdf(p_cdf[s][a], rng.uniform())
    warnings.warn(f"occupancy chain forced to stop after {cap} steps", OccupancyTruncationWarning)
    return s


def sample_action(pi, s: int, rng: RngStream) -> int:
    return _inverse_cdf(np.cumsum(pi[s]).tolist(), rng.uniform())


def sample_next_state(mdp: TabularMdp, s: int, a: int, rng: RngStream) -> int:
    return _inverse_cdf(mdp._p_cdf[s][a], rng.uniform())
