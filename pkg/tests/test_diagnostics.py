import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stormac.diagnostics import (
    DiagnosticsRecord,
    aggregate,
    fit_rate,
    fit_rate_arrays,
    snapshot,
)
from stormac.errors import FitError, ParameterError
from stormac.mdp import random_mdp, softmax_policy
from stormac.oracles import bellman_operator
from stormac.sampling import Transition
from stormac.storm import StepSchedules, StormSnapshot, TrainerState, train

from conftest import SEED0_J_STAR, SEED0_J_UNIFORM, SEED0_Q_UNIFORM_NORM, constant_reward_mdp


def _rec(k, **kw):
    base = dict(J=0.0, a=1.0, z=1.0, y=1.0, w=1.0, x=1.0, gdl_ok=True, bounds_ok=True)
    base.update(kw)
    return DiagnosticsRecord(k=k, **base)


def test_initial_snapshot_frozen_values(seed0_mdp):
    state = TrainerState.initial(seed0_mdp, 0.1, 0)
    r = snapshot(seed0_mdp, state, StepSchedules())
    assert r.k == 0
    assert r.J == pytest.approx(SEED0_J_UNIFORM, abs=1e-10)
    assert r.a == pytest.approx(SEED0_J_STAR - SEED0_J_UNIFORM, abs=1e-9)
    assert r.z == pytest.approx(SEED0_Q_UNIFORM_NORM, abs=1e-9)
    assert r.w == 0.0
    assert r.x == pytest.approx(r.a + r.z ** 2, rel=1e-12)
    assert r.gdl_ok and r.bounds_ok


def test_constant_reward_snapshot():
    m = constant_reward_mdp()
    state = TrainerState.initial(m, 0.1, 0)
    state.theta = np.random.default_rng(0).normal(size=m.shape)
    r = snapshot(m, state, StepSchedules())
    assert abs(r.a) < 1e-10 and abs(r.y) < 1e-12


def test_w_zero_when_h_equals_target():
    m = random_mdp(4, 3, 0.9, 2)
    rng = np.random.default_rng(2)
    state = TrainerState.initial(m, 1.0, 2)
    for _ in range(6):
        state.buffer.push(Transition(int(rng.integers(4)), int(rng.integers(3)), int(rng.integers(4))))
    q_prev = rng.normal(size=(4, 3))
    theta_prev = rng.normal(size=(4, 3))
    pi_prev = softmax_policy(theta_prev)
    state.snapshot = StormSnapshot(q_prev, theta_prev, pi_prev)
    state.k = 6
    state.h = state.buffer.distribution() * (bellman_operator(m, pi_prev, q_prev) - q_prev)
    assert snapshot(m, state, StepSchedules()).w < 1e-15
    state.h = state.h + 0.5
    assert snapshot(m, state, StepSchedules()).w > 0.1


def test_fit_rate_power_law_and_constant():
    ks = np.arange(0, 20001, 100)
    recs = [_rec(int(k), a=(k ** -0.5 if k else 1.0)) for k in ks]
    slope, intercept = fit_rate(recs, "a", 0.5)
    assert slope == pytest.approx(-0.5, abs=1e-9) and intercept == pytest.approx(0.0, abs=1e-8)
    recs = [_rec(int(k), a=0.3) for k in ks]
    assert fit_rate(recs, "a", 0.5)[0] == pytest.approx(0.0, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.01, 100.0), st.floats(0.1, 0.9))
def test_fit_rate_recovers_any_power_law(p, c, tail):
    ks = np.arange(1, 501) * 10
    slope, intercept = fit_rate_arrays(ks, c * ks.astype(float) ** p, tail)
    assert slope == pytest.approx(p, abs=1e-8)
    assert intercept == pytest.approx(np.log(c), abs=1e-6)


def test_fit_rate_errors():
    ks = np.arange(1, 40)
    with pytest.raises(FitError):
        fit_rate_arrays(ks, np.r_[np.ones(30), np.zeros(9)], 0.5)
    with pytest.raises(FitError):
        fit_rate_arrays(np.arange(1, 8), np.ones(7), 0.5)
    with pytest.raises(ParameterError):
        fit_rate_arrays(ks, np.ones(39), 1.0)


def test_fit_rate_accepts_dict_records():
    ks = np.arange(1, 101)
    recs = [{"k": int(k), "a": float(k) ** -1.0} for k in ks]
    assert fit_rate(recs, "a", 0.5)[0] == pytest.approx(-1.0, abs=1e-9)


def test_aggregate_single_seed_and_mirror():
    run = [_rec(k, J=float(k), a=2.0 * k + 1) for k in (0, 10, 20)]
    agg = aggregate([run])
    assert np.array_equal(agg.mean["a"], [1.0, 21.0, 41.0])
    assert np.all(agg.std["a"] == 0.0) and agg.n == 1
    plus = [_rec(k, J=float(k + 1)) for k in (0, 10)]
    minus = [_rec(k, J=-float(k + 1)) for k in (0, 10)]
    agg = aggregate([plus, minus])
    assert np.array_equal(agg.mean["J"], [0.0, 0.0])
    assert np.allclose(agg.std["J"], [1.0, 11.0])


def test_aggregate_rejects_mismatched_grids():
    with pytest.raises(ParameterError):
        aggregate([[_rec(0), _rec(10)], [_rec(0), _rec(20)]])
    with pytest.raises(ParameterError):
        aggregate([])


@pytest.mark.slow
def test_aggregate_resampling_sanity():
    # 20-seed mean within 3 standard errors of a disjoint 40-seed mean
    m = random_mdp(4, 3, 0.9, 1)
    runs = [train(m, StepSchedules(), 0.1, 2000, seed, log_every=200) for seed in range(60)]
    small, big = aggregate(runs[:20]), aggregate(runs[20:])
    tol = 3 * big.std["a"] / np.sqrt(20) + 1e-12
    assert np.all(np.abs(small.mean["a"] - big.mean["a"]) <= tol)


def test_record_bounds_flag_fails_when_out_of_range():
    m = random_mdp(3, 2, 0.9, 0)
    state = TrainerState.initial(m, 0.1, 0)
    state.q = np.full((3, 2), 1e3)
    assert not snapshot(m, state, StepSchedules()).bounds_ok
