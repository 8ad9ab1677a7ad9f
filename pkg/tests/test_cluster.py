import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slsoh.cluster import (
    ClassificationState,
    TrainingCell,
    TrainingSet,
    bibo_bound,
    classification_index_sequence,
    classify_step,
    estimate_ct,
    lambda_from_sequence,
    lambda_weights,
    load_state,
    save_state,
    trajectory_distance,
)
from slsoh.errors import EmptyState, GridMismatch, OutOfRangeGrid, PrefixOutOfRange
from slsoh.trajectory import Trajectory

GRID = np.array([1.0, 2.0, 3.0])


def training(q_ages, q_bars=None, grid=GRID):
    q_bars = q_bars or [np.ones(len(grid))] * len(q_ages)
    return TrainingSet(
        tuple(
            TrainingCell(f"t{k}", Trajectory(grid, qa), Trajectory(grid, qb), 30.0)
            for k, (qa, qb) in enumerate(zip(q_ages, q_bars))
        )
    )


def stream(train, test_values, grid=GRID):
    state = ClassificationState(train.K)
    for ah, q in zip(grid, test_values):
        classify_step(state, train, q, ah)
    return state


def test_distance_examples():
    assert trajectory_distance([1, 2], [1.3, 2.4], 2) == pytest.approx(0.5, abs=1e-15)
    q = Trajectory(GRID, [1, 2, 3])
    assert trajectory_distance(q, q, 3) == 0.0


def test_distance_guards():
    a = Trajectory(GRID, [1, 2, 3])
    b = Trajectory(GRID + 0.5, [1, 2, 3])
    with pytest.raises(GridMismatch):
        trajectory_distance(a, b, 2)
    with pytest.raises(PrefixOutOfRange):
        trajectory_distance(a, a, 0)
    with pytest.raises(PrefixOutOfRange):
        trajectory_distance(a, a, 4)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(-100, 100), st.floats(-100, 100)), min_size=1, max_size=50))
def test_distance_symmetric_nonnegative(pairs):
    x, y = zip(*pairs)
    n = len(x)
    d = trajectory_distance(x, y, n)
    assert d >= 0 and d == trajectory_distance(y, x, n)


def test_classification_examples():
    one = training([[1, 1, 1]])
    assert stream(one, [5, -3, 2]).s_seq == [1, 1, 1]
    two = training([[1, 1, 1], [2, 2, 2]])
    state = stream(two, [1.9, 1.2, 1.2])
    assert state.s_seq == [2, 2, 1]
    assert math.sqrt(state.sq_accum[0]) == pytest.approx(0.943, abs=1e-3)
    assert math.sqrt(state.sq_accum[1]) == pytest.approx(1.136, abs=1e-3)
    three = training([[1, 2, 3], [3, 1, 2], [2, 3, 1]])
    assert stream(three, [3, 1, 2]).s_seq == [2, 2, 2]


def test_ties_go_to_lowest_index():
    tied = training([[2, 2, 2], [1, 1, 1], [2, 2, 2]])
    assert stream(tied, [2, 2, 2]).s_seq == [1, 1, 1]


def test_batch_reference_matches_examples():
    two = training([[1, 1, 1], [2, 2, 2]])
    assert classification_index_sequence(Trajectory(GRID, [1.9, 1.2, 1.2]), two) == [2, 2, 1]


def test_stale_point_rejected():
    two = training([[1, 1, 1], [2, 2, 2]])
    state = stream(two, [1.9, 1.2])
    with pytest.raises(GridMismatch):
        classify_step(state, two, 1.0, 2.0)
    with pytest.raises(OutOfRangeGrid):
        classify_step(state, two, 1.0, 3.5)


def test_lambda_examples():
    assert lambda_from_sequence([2, 2, 2], [1, 2, 3], 3).tolist() == [0.0, 1.0, 0.0]
    assert lambda_from_sequence([1, 1, 2], [1, 2, 3], 2).tolist() == [0.5, 0.5]
    with pytest.raises(EmptyState):
        lambda_weights(ClassificationState(3))
    # before any classification the weights are uniform
    assert ClassificationState(4).lam.tolist() == [0.25] * 4


def test_lambda_with_only_zero_ah_is_uniform():
    assert lambda_from_sequence([1], [0.0], 2).tolist() == [0.5, 0.5]
    # the Ah = 0 point carries no mass once later points arrive
    assert lambda_from_sequence([1, 2], [0.0, 5.0], 2).tolist() == [0.0, 1.0]


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 10), st.data())
def test_lambda_simplex(K, data):
    n = data.draw(st.integers(1, 60))
    s = data.draw(st.lists(st.integers(1, K), min_size=n, max_size=n))
    ah = np.cumsum(data.draw(st.lists(st.floats(1e-3, 1e3), min_size=n, max_size=n)))
    lam = lambda_from_sequence(s, ah, K)
    assert np.all(lam >= 0) and abs(lam.sum() - 1) <= 1e-12


def test_estimate_examples():
    flat = training([[1, 1, 1], [2, 2, 2]])
    assert estimate_ct(flat, [0.3, 0.7], 31.0, 2.0) == pytest.approx(31.0, rel=1e-15)
    tr = training([[1, 1, 1], [2, 2, 2]], [np.ones(3), np.full(3, 1.08)])
    assert estimate_ct(tr, [0.25, 0.75], 30.0, 2.0) == pytest.approx(31.8, abs=1e-12)
    assert estimate_ct(tr, [0.0, 1.0], 30.0, 1.5) == pytest.approx(30 * 1.08)
    with pytest.raises(OutOfRangeGrid):
        estimate_ct(tr, [0.5, 0.5], 30.0, 4.0)
    with pytest.raises(ValueError):
        estimate_ct(tr, [0.5, 0.6], 30.0, 2.0)


def random_fleet(rng, K, N):
    grid = np.cumsum(rng.uniform(1, 50, N))
    base = rng.normal(25, 2, K)
    train = training([b + rng.normal(0, 0.3, N).cumsum() for b in base], grid=grid)
    test = rng.normal(25, 2) + rng.normal(0, 0.3, N).cumsum()
    return grid, train, test


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.integers(1, 40))
def test_incremental_equals_batch(seed, K, N):
    grid, train, test = random_fleet(np.random.default_rng(seed), K, N)
    state = stream(train, test, grid)
    assert state.s_seq == classification_index_sequence(Trajectory(grid, test), train)
    brute = [trajectory_distance(test, c.q_age.values, N) ** 2 for c in train.cells]
    np.testing.assert_allclose(state.sq_accum, brute, rtol=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
def test_scaling_preserves_classification(seed, c):
    grid, train, test = random_fleet(np.random.default_rng(seed), 4, 20)
    scaled = training([cell.q_age.values * c for cell in train.cells], grid=grid)
    assert stream(scaled, test * c, grid).s_seq == stream(train, test, grid).s_seq


def test_bibo_bound_holds_on_batch_estimate(small_dataset):
    from slsoh.cluster import batch_estimate
    from slsoh.harness import build_training_set

    ids = sorted(small_dataset)
    test = small_dataset[ids[0]]
    train = build_training_set([small_dataset[i] for i in ids[1:]])
    lo, hi = train.span
    keep = (test.q_age.ah >= lo) & (test.q_age.ah <= min(hi, test.truth.ah[-1]))
    q = Trajectory(test.q_age.ah[keep], test.q_age.values[keep])
    est = batch_estimate(q, train, test.q0)
    err = np.max(np.abs(est - test.truth(q.ah)))
    assert err <= bibo_bound(train, test.q_bar, test.q0, q.ah) + 1e-9


def test_state_round_trip(tmp_path):
    two = training([[1, 1, 1], [2, 2, 2]])
    state = stream(two, [1.9, 1.2, 1.2])
    save_state(state, tmp_path / "s.txt")
    back = load_state(tmp_path / "s.txt")
    assert back.s_seq == state.s_seq and back.ah_seen == state.ah_seen
    np.testing.assert_array_equal(back.sq_accum, state.sq_accum)
    np.testing.assert_array_equal(back.lam, state.lam)
    empty = ClassificationState(3)
    save_state(empty, tmp_path / "e.txt")
    assert len(load_state(tmp_path / "e.txt")) == 0
