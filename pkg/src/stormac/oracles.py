"""Exact dynamic-programming quantities used as ground truth.

Everything here is a dense direct solve; S*A is small enough that no
iterative policy evaluation is needed.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import linalg

from .errors import NumericError
from .mdp import (
    TabularMdp,
    expected_reward,
    policy_kernel,
    softmax_policy,
    _check_policy,
)


def _solve(M, rhs):
    try:
        x = linalg.solve(M, rhs)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"linear solve failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise NumericError("linear solve returned non-finite values")
    return x


def value_function(mdp: TabularMdp, pi) -> np.ndarray:
    """v^pi solving (I - gamma P^pi) v = R^pi."""
    Ppi = policy_kernel(mdp, pi)
    Rpi = expected_reward(mdp, pi)
    return _solve(np.eye(mdp.num_states) - mdp.gamma * Ppi, Rpi)


def _q_from_v(mdp: TabularMdp, v) -> np.ndarray:
    return mdp.R + mdp.gamma * mdp.P @ v


def q_function(mdp: TabularMdp, pi) -> np.ndarray:
    return _q_from_v(mdp, value_function(mdp, pi))


def advantage(mdp: TabularMdp, pi) -> np.ndarray:
    pi = _check_policy(mdp, pi)
    v = value_function(mdp, pi)
    return _q_from_v(mdp, v) - v[:, None]


def occupancy(mdp: TabularMdp, pi) -> np.ndarray:
    """Discounted state occupancy d^pi = (1 - gamma) mu^T (I - gamma P^pi)^{-1}."""
    Ppi = policy_kernel(mdp, pi)
    M = np.eye(mdp.num_states) - mdp.gamma * Ppi
    return (1.0 - mdp.gamma) * _solve(M.T, mdp.mu)


def policy_return(mdp: TabularMdp, pi) -> float:
    return float(mdp.mu @ value_function(mdp, pi))


def exact_gradient(mdp: TabularMdp, theta) -> np.ndarray:
    """dJ/dtheta(s,a) = d(s) pi(a|s) A(s,a) / (1 - gamma) for softmax logits."""
    pi = softmax_policy(theta)
    d = occupancy(mdp, pi)
    return d[:, None] * pi * advantage(mdp, pi) / (1.0 - mdp.gamma)


def bellman_operator(mdp: TabularMdp, pi, q) -> np.ndarray:
    pi = _check_policy(mdp, pi)
    next_v = np.einsum("sa,sa->s", pi, np.asarray(q, dtype=float))
    return mdp.R + mdp.gamma * mdp.P @ next_v


def optimal_return(mdp: TabularMdp, tol: float = 1e-12, max_sweeps: int = 10**6):
    """Optimal return J* and the greedy action per state (ties -> lowest index).

    Value iteration runs until the sup-norm residual drops below ``tol``; the
    greedy policy is then evaluated exactly and J* is its return.
    """
    v = np.zeros(mdp.num_states)
    for _ in range(max_sweeps):
        q = _q_from_v(mdp, v)
        v_new = q.max(axis=1)
        residual = np.max(np.abs(v_new - v))
        v = v_new
        if residual < tol:
            break
    else:
        raise NumericError(f"value iteration did not reach residual {tol} in {max_sweeps} sweeps")
    greedy = np.argmax(_q_from_v(mdp, v), axis=1)
    pi_star = deterministic_policy(mdp, greedy)
    v_star = value_function(mdp, pi_star)
    return float(mdp.mu @ v_star), greedy


def deterministic_policy(mdp: TabularMdp, actions) -> np.ndarray:
    pi = np.zeros(mdp.shape)
    pi[np.arange(mdp.num_states), np.asarray(actions)] = 1.0
    return pi


def gradient_domination_check(mdp: TabularMdp, theta, optimum=None, tol: float = 1e-10):
    """Per-iterate gradient domination inequality.

    Returns ``(lhs, rhs, holds)`` with lhs = ||grad J||_2 and
    rhs = min_s pi(a*(s)|s) / (sqrt(S) max_s d*(s)/d(s)) * (J* - J).
    ``optimum`` may carry a precomputed ``(J*, greedy, d*)`` triple.
    """
    pi = softmax_policy(theta)
    if optimum is None:
        j_star, greedy = optimal_return(mdp)
        d_star = occupancy(mdp, deterministic_policy(mdp, greedy))
    else:
        j_star, greedy, d_star = optimum
    d = occupancy(mdp, pi)
    grad = d[:, None] * pi * advantage(mdp, pi) / (1.0 - mdp.gamma)
    lhs = float(np.linalg.norm(grad))
    c = float(np.min(pi[np.arange(mdp.num_states), greedy]))
    mismatch = float(np.max(d_star / d))
    gap = j_star - float(mdp.mu @ value_function(mdp, pi))
    rhs = c / (math.sqrt(mdp.num_states) * mismatch) * gap
    return lhs, rhs, lhs >= rhs - tol
