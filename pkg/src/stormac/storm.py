"""Single-timescale actor-critic with a STORM-momentum critic and a replay window.

Per iteration k:

1. actor: s_k ~ d^{pi_k}, a_k ~ pi_k(.|s_k), s'_k ~ P(.|s_k, a_k);
   theta(s_k, a_k) += eta_k * (Q_k(s_k, a_k) - sum_a pi_k(a|s_k) Q_k(s_k, a));
   the transition is pushed into the buffer.
2. critic sample: (s, a, s') uniform from the buffer.
3. momentum: h_k = u 1_{(s,a)} + (1 - nu_{k-1}) (h_{k-1} - u_hat 1_{(s,a)}), where
   u and u_hat are bootstrap errors of (Q_k, pi_k) and (Q_{k-1}, pi_{k-1}).
4. snapshot (Q_k, theta_k) for the next iteration's u_hat.
5. critic: Q_{k+1} = Q_k + beta_k h_k.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buffer import ReplayBuffer
from .errors import DivergenceError, ParameterError
from .mdp import TabularMdp, softmax_policy
from .sampling import (
    ACTOR_STREAM,
    CRITIC_STREAM,
    RngStream,
    Transition,
    sample_action,
    sample_next_state,
    sample_occupancy_state,
)


@dataclass(frozen=True)
class StepSchedules:
    """eta_k = eta_scale (1+k)^-decay, beta_k = beta_scale (1+k)^-decay, nu_k = 1/(1 + nu_rate k)."""

    eta_scale: float = 1.0
    beta_scale: float = 1.0
    nu_rate: float = 0.001
    decay: float = 0.5

    def __post_init__(self):
        if self.eta_scale <= 0 or self.beta_scale <= 0 or self.nu_rate <= 0 or self.decay <= 0:
            raise ParameterError(f"schedule parameters must be positive: {self}")

    def eta(self, k: int) -> float:
        return self.eta_scale * (1.0 + k) ** -self.decay

    def beta(self, k: int) -> float:
        return self.beta_scale * (1.0 + k) ** -self.decay

    def nu(self, k: int) -> float:
        return 1.0 / (1.0 + self.nu_rate * k)

    @property
    def c_eta(self) -> float:
        return self.beta_scale / self.eta_scale


@dataclass
class StormSnapshot:
    q_prev: np.ndarray
    theta_prev: np.ndarray
    pi_prev: np.ndarray


@dataclass
class TrainerState:
    k: int
    theta: np.ndarray
    pi: np.ndarray
    q: np.ndarray
    h: np.ndarray
    snapshot: StormSnapshot
    buffer: ReplayBuffer
    rng_actor: RngStream
    rng_critic: RngStream

    @classmethod
    def initial(cls, mdp: TabularMdp, c_b: float, seed: int) -> "TrainerState":
        theta = np.zeros(mdp.shape)
        pi = softmax_policy(theta)
        q = np.zeros(mdp.shape)
        return cls(
            k=0,
            theta=theta,
            pi=pi,
            q=q,
            h=np.zeros(mdp.shape),
            snapshot=StormSnapshot(q.copy(), theta.copy(), pi.copy()),
            buffer=ReplayBuffer(*mdp.shape, c_b),
            rng_actor=RngStream(seed, ACTOR_STREAM),
            rng_critic=RngStream(seed, CRITIC_STREAM),
        )


def critic_advantage(q, pi, s: int, a: int) -> float:
    """A_k(s, a) = Q(s, a) - sum_a' pi(a'|s) Q(s, a')."""
    return float(q[s, a] - np.dot(pi[s], q[s]))


def bootstrap_error(mdp: TabularMdp, q, pi, t: Transition) -> float:
    """R(s,a) + gamma sum_a' pi(a'|s') Q(s',a') - Q(s,a) on one transition."""
    return float(mdp.R[t.s, t.a] + mdp.gamma * np.dot(pi[t.s_next], q[t.s_next]) - q[t.s, t.a])


def actor_step(state: TrainerState, mdp: TabularMdp, eta_k: float):
    """Sample a transition under pi_k and move the single logit theta(s_k, a_k).

    Replaces ``state.theta`` and ``state.pi`` with fresh arrays (the old ones
    stay valid as theta_k, pi_k) and returns ``(state, transition)``.
    """
    rng = state.rng_actor
    pi = state.pi
    s = sample_occupancy_state(mdp, pi, rng)
    a = sample_action(pi, s, rng)
    s_next = sample_next_state(mdp, s, a, rng)
    step = eta_k * critic_advantage(state.q, pi, s, a)
    if step != 0.0:
        theta = state.theta.copy()
        theta[s, a] += step
        new_pi = pi.copy()
        new_pi[s] = softmax_policy(theta[s])
        state.theta, state.pi = theta, new_pi
    return state, Transition(s, a, s_next)


def storm_step(h, mdp: TabularMdp, t: Transition, q, pi, q_prev, pi_prev, nu_prev: float) -> np.ndarray:
    """New momentum table; only the sampled coordinate receives u - (1-nu) u_hat."""
    u = bootstrap_error(mdp, q, pi, t)
    u_hat = bootstrap_error(mdp, q_prev, pi_prev, t)
    keep = 1.0 - nu_prev
    h_new = keep * h
    h_new[t.s, t.a] += u - keep * u_hat
    return h_new


def critic_step(q, h, beta_k: float) -> np.ndarray:
    return q + beta_k * h


def checkpoint_grid(iterations: int, log_every: int) -> list[int]:
    ks = list(range(0, iterations + 1, log_every))
    if ks[-1] != iterations:
        ks.append(iterations)
    return ks


def _check_finite(state: TrainerState, k: int, records):
    if not (np.all(np.isfinite(state.theta)) and np.all(np.isfinite(state.q)) and np.all(np.isfinite(state.h))):
        raise DivergenceError(k, records)


def train(
    mdp: TabularMdp,
    schedules: StepSchedules,
    c_b: float,
    iterations: int,
    seed: int,
    log_every: int = 100,
    track_lipschitz: bool | None = None,
    return_state: bool = False,
):
    """Run the STORM actor-critic and return its diagnostics records.

    Records are taken at k = 0, every ``log_every`` iterations and at the final
    iteration. Raises DivergenceError (with the records so far) when theta, Q or
    h becomes non-finite.
    """
    from .diagnostics import Monitor

    if iterations < 1 or log_every < 1:
        raise ParameterError("iterations and log_every must be >= 1")
    state = TrainerState.initial(mdp, c_b, seed)
    monitor = Monitor(mdp, schedules, track_lipschitz=(log_every == 1) if track_lipschitz is None else track_lipschitz)
    records = [monitor.record(state)]
    for k in range(iterations):
        state.k = k
        q_k, pi_k, theta_k = state.q, state.pi, state.theta

        state, t_act = actor_step(state, mdp, schedules.eta(k))
        state.buffer.push(t_act)

        t = state.buffer.sample_uniform(state.rng_critic)
        snap = state.snapshot
        state.h = storm_step(state.h, mdp, t, q_k, pi_k, snap.q_prev, snap.pi_prev, schedules.nu(max(k - 1, 0)))

        state.snapshot = StormSnapshot(q_k, theta_k, pi_k)
        state.q = critic_step(q_k, state.h, schedules.beta(k))

        state.k = k + 1
        _check_finite(state, k, records)
        if (k + 1) % log_every == 0 or k + 1 == iterations:
            records.append(monitor.record(state))
    return (records, state) if return_state else records
