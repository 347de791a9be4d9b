"""Shared fixtures and independent reference implementations.

The helpers here deliberately avoid the package's own linear algebra: values
come from truncated power series, explicit loops or exhaustive enumeration so
that agreement with the package is evidence rather than tautology.
"""
import itertools

import numpy as np
import pytest

from stormac.mdp import TabularMdp, random_mdp

# Frozen from an LP solve (scipy.optimize.linprog, HiGHS) and a 2000-term power
# series on random_mdp(10, 5, 0.9, seed=0); see tests/test_oracles.py.
SEED0_J_STAR = 8.04690949728257
SEED0_J_UNIFORM = 4.634675178473662
SEED0_Q_UNIFORM_NORM = 32.82618220766784


def series_value(mdp, pi, terms=None):
    """v^pi as a truncated Neumann series sum_t (gamma P^pi)^t R^pi."""
    S, A = mdp.shape
    Ppi = np.zeros((S, S))
    Rpi = np.zeros(S)
    for s in range(S):
        for a in range(A):
            Ppi[s] += pi[s, a] * mdp.P[s, a]
            Rpi[s] += pi[s, a] * mdp.R[s, a]
    if terms is None:
        terms = int(np.ceil(np.log(1e-16) / np.log(max(mdp.gamma, 1e-3)))) + 50
    v = np.zeros(S)
    term = Rpi.copy()
    for _ in range(terms):
        v += term
        term = mdp.gamma * (Ppi @ term)
    return v


def series_occupancy(mdp, pi, terms=None):
    S, A = mdp.shape
    Ppi = sum(pi[:, a][:, None] * mdp.P[:, a, :] for a in range(A))
    if terms is None:
        terms = int(np.ceil(np.log(1e-16) / np.log(max(mdp.gamma, 1e-3)))) + 50
    d = np.zeros(S)
    x = mdp.mu.copy()
    for _ in range(terms):
        d += (1 - mdp.gamma) * x
        x = mdp.gamma * (x @ Ppi)
    return d


def enumerate_best_return(mdp):
    """max over all A^S deterministic policies of their exact return."""
    S, A = mdp.shape
    best = -np.inf
    for actions in itertools.product(range(A), repeat=S):
        pi = np.zeros((S, A))
        pi[np.arange(S), actions] = 1.0
        best = max(best, float(mdp.mu @ series_value(mdp, pi)))
    return best


def constant_reward_mdp(S=4, A=3, gamma=0.9, c=0.5, seed=3):
    base = random_mdp(S, A, gamma, seed)
    return base.with_rewards(np.full((S, A), c))


def deterministic_mdp(S=4, A=2, gamma=0.8, seed=5):
    rng = np.random.default_rng(seed)
    P = np.zeros((S, A, S))
    targets = rng.integers(0, S, size=(S, A))
    for s in range(S):
        for a in range(A):
            P[s, a, targets[s, a]] = 1.0
    R = rng.uniform(-1, 1, size=(S, A))
    return TabularMdp(P, R, gamma, np.full(S, 1.0 / S))


def tv_distance(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@pytest.fixture(scope="session")
def seed0_mdp():
    return random_mdp(10, 5, 0.9, 0)
