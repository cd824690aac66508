import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from imcsim.wagonn import (
    IruCostModel,
    TrackingVector,
    build_tracking_vector,
    iru_latency,
    remap_inputs,
    remap_weights,
    row_sums,
)

bit_matrices = st.integers(1, 24).flatmap(
    lambda n: st.integers(1, 12).flatmap(lambda c: arrays(np.int8, (n, c), elements=st.integers(0, 1))))


def test_row_sums_examples():
    assert row_sums(np.array([[1, 0], [1, 1]])).tolist() == [1, 2]
    assert row_sums(np.zeros((5, 7))).tolist() == [0] * 5


def test_row_sums_constructed():
    rng = np.random.default_rng(0)
    w = np.zeros((128, 128), int)
    for r in range(128):
        w[r, rng.choice(128, 37, replace=False)] = 1
    assert (row_sums(w) == 37).all()


def test_tracking_vector_examples():
    assert build_tracking_vector([3, 5, 1]).tolist() == [1, 2, 0]
    assert build_tracking_vector([7, 7, 7]).tolist() == [0, 1, 2]
    assert build_tracking_vector([0, 2, 2, 9]).tolist() == [0, 1, 2, 3]


def test_tracking_vector_one_based_example():
    # second of 64 rows has the highest row-sum -> its 1-based destination is 64
    sums = np.ones(64, int)
    sums[1] = 10
    tv = build_tracking_vector(sums)
    assert tv.dest[1] + 1 == 64


def test_remap_examples():
    w = np.array([[1, 0], [0, 1], [1, 1]])
    assert remap_weights(w, TrackingVector([1, 0, 2])).tolist() == [[0, 1], [1, 0], [1, 1]]
    assert np.array_equal(remap_weights(w, TrackingVector.identity(3)), w)
    assert remap_inputs(["a", "b", "c"], TrackingVector([1, 0, 2])).tolist() == ["b", "a", "c"]


def test_remap_dimension_mismatch():
    with pytest.raises(ValueError):
        remap_weights(np.zeros((3, 2)), TrackingVector.identity(4))


def test_tracking_vector_rejects_non_permutation():
    with pytest.raises(ValueError):
        TrackingVector([0, 0, 1])


@settings(max_examples=200)
@given(bit_matrices)
def test_remap_properties(w):
    tv = build_tracking_vector(row_sums(w))
    assert sorted(tv.tolist()) == list(range(w.shape[0]))
    r = remap_weights(w, tv)
    assert np.all(np.diff(row_sums(r)) >= 0)
    assert sorted(row_sums(r).tolist()) == sorted(row_sums(w).tolist())
    assert np.array_equal(remap_weights(r, tv.inverse()), w)


@settings(max_examples=200)
@given(bit_matrices, st.data())
def test_ideal_dot_products_preserved(w, data):
    x = np.array(data.draw(st.lists(st.integers(0, 255), min_size=w.shape[0], max_size=w.shape[0])))
    perm = data.draw(st.permutations(range(w.shape[0])))
    tv = TrackingVector(np.array(perm))
    assert np.array_equal(remap_inputs(x, tv) @ remap_weights(w, tv), x @ w)


def test_iru_latency():
    lat = iru_latency(IruCostModel(128, 1, 10, 128))
    assert lat.remap_cycles == 128
    assert lat.baseline_mvm_cycles == 1280
    one = iru_latency(IruCostModel(128, 1, 10, 128)).overhead_fraction
    sixteen = iru_latency(IruCostModel(128, 16, 10, 128)).overhead_fraction
    assert sixteen == pytest.approx(16 * one, rel=1e-15)
    assert iru_latency(IruCostModel(64, 64, 1, 64)).overhead_fraction == 64


def test_iru_validation():
    with pytest.raises(ValueError):
        IruCostModel(128, 256, 1, 128)
    with pytest.raises(ValueError):
        IruCostModel(0, 1, 1, 128)
