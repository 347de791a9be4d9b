"""Exact per-checkpoint convergence quantities and their cross-seed summaries.

For the iterate (theta_k, Q_k, h) a record holds

    J  return of pi_k                a  J* - J
    z  ||Q_k - Q^{pi_k}||_2           y  ||grad J(theta_k)||_2
    w  ||h - V||_2                    x  eta_k a + eta_k z^2 + w^2

where V = b ⊙ (T^pi Q - Q) is the expected momentum target. h was formed from
the snapshot pair (Q_{k-1}, pi_{k-1}) and the current buffer, so V is taken
from that same pair.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .errors import FitError, ParameterError
from .mdp import TabularMdp, softmax_policy
from .oracles import (
    bellman_operator,
    deterministic_policy,
    occupancy,
    optimal_return,
    value_function,
)

BOUND_TOL = 1e-9
NUMERIC_FIELDS = ("J", "a", "z", "y", "w", "x")


@dataclass(frozen=True)
class DiagnosticsRecord:
    k: int
    J: float
    a: float
    z: float
    y: float
    w: float
    x: float
    gdl_ok: bool
    bounds_ok: bool
    lip_ok: Optional[bool] = None  # None when not evaluated

    def as_dict(self):
        return asdict(self)


def optimum_of(mdp: TabularMdp):
    """(J*, greedy actions, d^{pi*}) for reuse across checkpoints."""
    j_star, greedy = optimal_return(mdp)
    return j_star, greedy, occupancy(mdp, deterministic_policy(mdp, greedy))


def snapshot(mdp: TabularMdp, state, schedules, optimum=None) -> DiagnosticsRecord:
    if optimum is None:
        optimum = optimum_of(mdp)
    j_star, greedy, d_star = optimum
    S, A = mdp.shape
    gamma = mdp.gamma

    pi = softmax_policy(state.theta)
    v = value_function(mdp, pi)
    J = float(mdp.mu @ v)
    a = j_star - J
    q_true = mdp.R + gamma * mdp.P @ v
    z = float(np.linalg.norm(state.q - q_true))

    d = occupancy(mdp, pi)
    adv = q_true - v[:, None]
    grad = d[:, None] * pi * adv / (1.0 - gamma)
    y = float(np.linalg.norm(grad))

    if len(state.buffer):
        snap = state.snapshot
        b = state.buffer.distribution()
        V = b * (bellman_operator(mdp, snap.pi_prev, snap.q_prev) - snap.q_prev)
    else:
        V = np.zeros(mdp.shape)
    w = float(np.linalg.norm(state.h - V))

    eta = schedules.eta(state.k)
    x = eta * a + eta * z * z + w * w

    c = float(np.min(pi[np.arange(S), greedy]))
    rhs = c / (math.sqrt(S) * float(np.max(d_star / d))) * a
    gdl_ok = y >= rhs - 1e-10

    scale = 2.0 / (1.0 - gamma)
    big = 2.0 * math.sqrt(S * A) / (1.0 - gamma)
    bounds_ok = a <= scale + BOUND_TOL and z <= big + BOUND_TOL and y <= scale + BOUND_TOL and w <= big + BOUND_TOL
    return DiagnosticsRecord(state.k, J, a, z, y, w, x, bool(gdl_ok), bool(bounds_ok))


class Monitor:
    """Produces records for one run, caching the optimum and tracking the
    occupancy Lipschitz check between consecutive iterations."""

    def __init__(self, mdp: TabularMdp, schedules, track_lipschitz: bool = False):
        self.mdp = mdp
        self.schedules = schedules
        self.optimum = optimum_of(mdp)
        self.track_lipschitz = track_lipschitz
        self._prev = None  # (k, theta, d)
        self._lip_const = math.sqrt(mdp.num_actions) / (2.0 * (1.0 - mdp.gamma) ** 2)

    def record(self, state) -> DiagnosticsRecord:
        rec = snapshot(self.mdp, state, self.schedules, self.optimum)
        if not self.track_lipschitz:
            return rec
        theta = state.theta.copy()
        d = occupancy(self.mdp, softmax_policy(theta))
        lip_ok = None
        if self._prev is not None and self._prev[0] == state.k - 1:
            _, theta_prev, d_prev = self._prev
            bound = self._lip_const * float(np.abs(theta - theta_prev).sum()) + 1e-10
            lip_ok = bool(np.max(np.abs(d - d_prev)) <= bound)
        self._prev = (state.k, theta, d)
        return DiagnosticsRecord(**{**rec.as_dict(), "lip_ok": lip_ok})


def _field_values(records, field):
    out = []
    for r in records:
        out.append(r[field] if isinstance(r, dict) else getattr(r, field))
    return np.asarray(out, dtype=float)


def fit_rate_arrays(ks, values, tail_fraction: float):
    """Least-squares slope and intercept of log(value) against log(k) on the tail."""
    if not 0.0 < tail_fraction < 1.0:
        raise ParameterError(f"tail_fraction must lie in (0, 1), got {tail_fraction}")
    ks = np.asarray(ks, dtype=float)
    values = np.asarray(values, dtype=float)
    n = len(ks)
    start = n - max(1, math.ceil(tail_fraction * n))
    ks, values = ks[start:], values[start:]
    keep = ks > 0
    ks, values = ks[keep], values[keep]
    if len(ks) < 10:
        raise FitError(f"need at least 10 checkpoints with k > 0 in the tail, got {len(ks)}")
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise FitError("rate fit needs strictly positive finite values in the tail window")
    slope, intercept = np.polyfit(np.log(ks), np.log(values), 1)
    return float(slope), float(intercept)


def fit_rate(records: Sequence, field: str, tail_fraction: float = 0.5):
    return fit_rate_arrays(_field_values(records, "k"), _field_values(records, field), tail_fraction)


@dataclass
class Aggregate:
    ks: np.ndarray
    mean: dict
    std: dict
    n: int


def aggregate(per_seed: Sequence[Sequence[DiagnosticsRecord]]) -> Aggregate:
    """Per-checkpoint mean and (population) standard deviation across seeds."""
    if not per_seed:
        raise ParameterError("no runs to aggregate")
    ks = _field_values(per_seed[0], "k")
    for run in per_seed[1:]:
        other = _field_values(run, "k")
        if other.shape != ks.shape or np.any(other != ks):
            raise ParameterError("runs do not share a checkpoint grid")
    mean, std = {}, {}
    for f in NUMERIC_FIELDS:
        table = np.stack([_field_values(run, f) for run in per_seed])
        mean[f] = table.mean(axis=0)
        std[f] = table.std(axis=0)
    return Aggregate(ks.astype(int), mean, std, len(per_seed))


RECORD_FIELDS = tuple(f.name for f in fields(DiagnosticsRecord))
