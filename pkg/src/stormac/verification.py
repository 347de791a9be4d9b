"""Numerical checks of deterministic identities and inequalities.

None of these depend on a training run; each returns either a worst residual
or a pass flag so the CLI can print one line per check.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import ParameterError
from .mdp import TabularMdp, softmax_policy, state_action_kernel
from .oracles import bellman_operator, q_function
from .sampling import RngStream


def check_bellman_rewrite(mdp: TabularMdp, pi, q, rhs_gamma: float | None = None) -> float:
    """max |(R + gamma P_pi Q - Q) - (I - gamma P_pi)(Q^pi - Q)|.

    ``rhs_gamma`` replaces gamma on the right-hand side only; it exists so a
    negative control can break the identity on purpose.
    """
    S, A = mdp.shape
    q = np.asarray(q, dtype=float).reshape(S * A)
    P_sa = state_action_kernel(mdp, pi)
    lhs = mdp.R.reshape(-1) + mdp.gamma * P_sa @ q - q
    g = mdp.gamma if rhs_gamma is None else rhs_gamma
    diff = q_function(mdp, pi).reshape(-1) - q
    rhs = diff - g * P_sa @ diff
    return float(np.max(np.abs(lhs - rhs)))


def check_vk_identity(mdp: TabularMdp, pi, q, b) -> float:
    """max |b ⊙ (T^pi Q - Q) - b ⊙ (I - gamma P_pi)(Q^pi - Q)|."""
    S, A = mdp.shape
    q = np.asarray(q, dtype=float)
    b = np.asarray(b, dtype=float)
    lhs = b * (bellman_operator(mdp, pi, q) - q)
    diff = (q_function(mdp, pi) - q).reshape(-1)
    rhs = b * (diff - mdp.gamma * state_action_kernel(mdp, pi) @ diff).reshape(S, A)
    return float(np.max(np.abs(lhs - rhs)))


def hadamard_worst_excess(trials: int, dim: int, rng: RngStream) -> float:
    """Largest ``lhs - rhs`` over both Hadamard bounds on random Gaussian pairs."""
    if trials < 1 or dim < 1:
        raise ParameterError("trials and dim must be >= 1")
    a = rng.normal((trials, dim))
    b = rng.normal((trials, dim))
    had = np.linalg.norm(a * b, axis=1)
    first = had - np.linalg.norm(a, axis=1) * np.max(np.abs(b), axis=1)
    second = had - np.abs(a).sum(axis=1) * np.linalg.norm(b, axis=1)
    return float(max(first.max(), second.max()))


def check_hadamard_norm(trials: int, dim: int, rng: RngStream) -> bool:
    """||a ⊙ b||_2 <= ||a||_2 ||b||_inf and ||a ⊙ b||_2 <= ||a||_1 ||b||_2 on random pairs."""
    return hadamard_worst_excess(trials, dim, rng) <= 1e-12


def ode_envelope(eta0_sq: float, omega1: float, omega2: float, k):
    """eta_k^2 solving d(eta^2)/dk = -(omega1 - omega2) eta^4 from eta0_sq."""
    if eta0_sq == 0.0:
        return np.zeros_like(np.asarray(k, dtype=float))
    return 1.0 / (1.0 / eta0_sq + (omega1 - omega2) * np.asarray(k, dtype=float))


def ode_worst_gap(x0: float, omega1: float, omega2: float, eta0_sq: float, steps: int) -> float:
    """max_k (x_k - eta_k^2) along x_{k+1} = x_k - omega1 x_k^2 + omega2 eta_k^4.

    The recursion is run with equality (its worst case) and eta_k^2 is the
    comparison flow from ``ode_envelope``.
    """
    if not 1.0 > omega1 > omega2 > 0.0:
        raise ParameterError(f"need 1 > omega1 > omega2 > 0, got {omega1}, {omega2}")
    if eta0_sq < 0 or x0 < 0 or eta0_sq > min(1.0 / (2.0 * omega1), x0):
        raise ParameterError("need 0 <= eta0^2 <= min(1/(2 omega1), x0)")
    if steps < 0:
        raise ParameterError("steps must be nonnegative")
    env = ode_envelope(eta0_sq, omega1, omega2, np.arange(steps + 1)).tolist()
    x = float(x0)
    worst = -math.inf
    for e2 in env:
        worst = max(worst, x - e2)
        x = x - omega1 * x * x + omega2 * e2 * e2
    return worst


def check_ode_domination(x0: float, omega1: float, omega2: float, eta0_sq: float, steps: int) -> bool:
    return ode_worst_gap(x0, omega1, omega2, eta0_sq, steps) <= 1e-12


def estimate_exploration_lambda(mdp: TabularMdp, trials: int, rng: RngStream) -> float:
    """Smallest observed <Q^pi - Q, T^pi Q - Q>_D / ||Q^pi - Q||^2 over random draws.

    pi comes from logits uniform on [-3, 3], Q is uniform on
    [-1/(1-gamma), 1/(1-gamma)] and D is a random positive diagonal with unit
    trace. Returns +inf if every draw was skipped.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    gen = rng.generator()
    S, A = mdp.shape
    vmax = 1.0 / (1.0 - mdp.gamma)
    best = math.inf
    for _ in range(trials):
        pi = softmax_policy(gen.uniform(-3.0, 3.0, size=(S, A)))
        q = gen.uniform(-vmax, vmax, size=(S, A))
        D = gen.exponential(size=(S, A))
        D /= D.sum()
        diff = q_function(mdp, pi) - q
        denom = float(np.sum(diff * diff))
        if denom < 1e-16:
            continue
        ratio = float(np.sum(D * diff * (bellman_operator(mdp, pi, q) - q))) / denom
        best = min(best, ratio)
    return best
