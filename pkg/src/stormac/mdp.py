"""Tabular MDPs, softmax policies and the kernels they induce."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import NumericError, ParameterError

# Type aliases: logits theta[s, a], policy pi[s, a] (rows on the simplex).
PolicyParams = np.ndarray
PolicyMatrix = np.ndarray

_PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite discounted MDP.

    P has shape (S, A, S) with ``P[s, a, s'] = P(s'|s, a)``, R has shape (S, A)
    and mu is the initial state distribution. Arrays are copied and frozen.
    """

    P: np.ndarray
    R: np.ndarray
    gamma: float
    mu: np.ndarray
    # inverse-CDF tables for the samplers; derived, not part of the value
    _p_cdf: list = field(init=False, repr=False, compare=False)
    _mu_cdf: list = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        R = np.array(self.R, dtype=float)
        mu = np.array(self.mu, dtype=float)
        gamma = float(self.gamma)
        if P.ndim != 3 or P.shape[0] != P.shape[2] or P.shape[0] < 1 or P.shape[1] < 1:
            raise ParameterError(f"P must have shape (S, A, S), got {P.shape}")
        S, A = P.shape[:2]
        if R.shape != (S, A):
            raise ParameterError(f"R must have shape {(S, A)}, got {R.shape}")
        if mu.shape != (S,):
            raise ParameterError(f"mu must have shape {(S,)}, got {mu.shape}")
        if not 0.0 <= gamma < 1.0:
            raise ParameterError(f"gamma must lie in [0, 1), got {gamma}")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(R)) and np.all(np.isfinite(mu))):
            raise ParameterError("MDP arrays must be finite")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > _PROB_TOL:
            raise ParameterError("every P(.|s,a) must be a probability vector")
        if np.max(np.abs(R)) > 1.0:
            raise ParameterError("rewards must satisfy |R(s,a)| <= 1")
        if np.any(mu <= 0) or abs(mu.sum() - 1.0) > _PROB_TOL:
            raise ParameterError("mu must be a strictly positive probability vector")
        for arr in (P, R, mu):
            arr.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "_p_cdf", np.cumsum(P, axis=2).tolist())
        object.__setattr__(self, "_mu_cdf", np.cumsum(mu).tolist())

    @property
    def num_states(self) -> int:
        return self.P.shape[0]

    @property
    def num_actions(self) -> int:
        return self.P.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.P.shape[0], self.P.shape[1]

    def with_gamma(self, gamma: float) -> "TabularMdp":
        return TabularMdp(self.P, self.R, gamma, self.mu)

    def with_rewards(self, R) -> "TabularMdp":
        return TabularMdp(self.P, R, self.gamma, self.mu)


def random_mdp(S: int, A: int, gamma: float, seed: int, reward_range: str = "unit") -> TabularMdp:
    """Draw a random MDP with full-support transitions.

    Each P(.|s,a) is a flat Dirichlet sample (normalised exponentials). Rewards
    are uniform on [0, 1] (``reward_range="unit"``) or [-1, 1]
    (``"symmetric"``); mu is uniform over states.
    """
    if int(S) != S or S < 1 or int(A) != A or A < 1:
        raise ParameterError(f"S and A must be positive integers, got S={S}, A={A}")
    if not 0.0 <= gamma < 1.0:
        raise ParameterError(f"gamma must lie in [0, 1), got {gamma}")
    S, A = int(S), int(A)
    rng = np.random.default_rng(seed)
    E = rng.exponential(size=(S, A, S))
    P = E / E.sum(axis=2, keepdims=True)
    if reward_range == "unit":
        R = rng.uniform(0.0, 1.0, size=(S, A))
    elif reward_range == "symmetric":
        R = rng.uniform(-1.0, 1.0, size=(S, A))
    else:
        raise ParameterError(f"unknown reward_range {reward_range!r}")
    mu = np.full(S, 1.0 / S)
    return TabularMdp(P, R, gamma, mu)


def softmax_policy(theta: PolicyParams) -> PolicyMatrix:
    theta = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(theta)):
        raise NumericError("softmax logits must be finite")
    z = np.exp(theta - theta.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def _check_policy(mdp: TabularMdp, pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=float)
    if pi.shape != mdp.shape:
        raise ParameterError(f"policy shape {pi.shape} does not match MDP {mdp.shape}")
    return pi


def policy_kernel(mdp: TabularMdp, pi: PolicyMatrix) -> np.ndarray:
    """State-to-state kernel ``P^pi[s, s'] = sum_a pi(a|s) P(s'|s,a)``."""
    pi = _check_policy(mdp, pi)
    return np.einsum("sa,sat->st", pi, mdp.P)


def expected_reward(mdp: TabularMdp, pi: PolicyMatrix) -> np.ndarray:
    pi = _check_policy(mdp, pi)
    return np.einsum("sa,sa->s", pi, mdp.R)


def state_action_kernel(mdp: TabularMdp, pi: PolicyMatrix) -> np.ndarray:
    """(SA x SA) kernel ``P_pi[(s,a), (s',a')] = P(s'|s,a) pi(a'|s')``, row-major in (s, a)."""
    pi = _check_policy(mdp, pi)
    S, A = mdp.shape
    return (mdp.P[:, :, :, None] * pi[None, None, :, :]).reshape(S * A, S * A)


# -- plain-text serialisation ------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".16e")


def format_mdp(mdp: TabularMdp) -> str:
    S, A = mdp.shape
    lines = [f"{S} {A} {_fmt(mdp.gamma)}", " ".join(_fmt(v) for v in mdp.mu)]
    lines += [" ".join(_fmt(v) for v in mdp.R[s]) for s in range(S)]
    lines += [" ".join(_fmt(v) for v in mdp.P[s, a]) for s in range(S) for a in range(A)]
    return "\n".join(lines) + "\n"


def parse_mdp(text: str) -> TabularMdp:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    try:
        S, A, gamma = int(rows[0][0]), int(rows[0][1]), float(rows[0][2])
        if len(rows) != 2 + S + S * A:
            raise ParameterError(f"expected {2 + S + S * A} lines, found {len(rows)}")
        mu = np.array(rows[1], dtype=float)
        R = np.array(rows[2:2 + S], dtype=float)
        P = np.array(rows[2 + S:], dtype=float).reshape(S, A, S)
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed MDP file: {exc}") from exc
    return TabularMdp(P, R, gamma, mu)


def save_mdp(mdp: TabularMdp, path) -> None:
    Path(path).write_text(format_mdp(mdp), encoding="utf-8", newline="\n")


def load_mdp(path) -> TabularMdp:
    return parse_mdp(Path(path).read_text(encoding="utf-8"))
