"""Momentum-free single-timescale actor-critic used as the comparison baseline.

The actor step is shared with the STORM trainer; the critic moves only the
visited coordinate with the expected-next-value TD error
R(s,a) + gamma sum_a' pi(a'|s') Q(s',a') - Q(s,a).
"""
from __future__ import annotations

from .errors import ParameterError
from .mdp import TabularMdp
from .storm import StepSchedules, TrainerState, _check_finite, actor_step, bootstrap_error

BASELINE_DECAY = 2.0 / 3.0


def baseline_schedules(eta_scale: float = 1.0, beta_scale: float = 1.0) -> StepSchedules:
    return StepSchedules(eta_scale=eta_scale, beta_scale=beta_scale, decay=BASELINE_DECAY)


def train_baseline(
    mdp: TabularMdp,
    eta_scale: float = 1.0,
    beta_scale: float = 1.0,
    iterations: int = 20000,
    seed: int = 0,
    log_every: int = 100,
    track_lipschitz: bool | None = None,
    return_state: bool = False,
):
    from .diagnostics import Monitor

    if iterations < 1 or log_every < 1:
        raise ParameterError("iterations and log_every must be >= 1")
    schedules = baseline_schedules(eta_scale, beta_scale)
    # buffer and h stay empty/zero; c_b is irrelevant
    state = TrainerState.initial(mdp, 1.0, seed)
    monitor = Monitor(mdp, schedules, track_lipschitz=(log_every == 1) if track_lipschitz is None else track_lipschitz)
    records = [monitor.record(state)]
    for k in range(iterations):
        state.k = k
        q_k, pi_k = state.q, state.pi
        state, t = actor_step(state, mdp, schedules.eta(k))
        delta = bootstrap_error(mdp, q_k, pi_k, t)
        q = q_k.copy()
        q[t.s, t.a] += schedules.beta(k) * delta
        state.q = q
        state.k = k + 1
        _check_finite(state, k, records)
        if (k + 1) % log_every == 0 or k + 1 == iterations:
            records.append(monitor.record(state))
    return (records, state) if return_state else records
