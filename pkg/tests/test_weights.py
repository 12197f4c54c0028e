import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from goodweights import sampler, weights
from goodweights.weights import (ClassBounds, InternalWeights, RowClass,
                                 classify_row, effective_range, features,
                                 pointwise_fractions, row_class_counts)

BOUNDS = ClassBounds()


def iw_of(w, b):
    return InternalWeights(w_in=np.atleast_2d(np.asarray(w, dtype=float)),
                           b_in=np.atleast_1d(np.asarray(b, dtype=float)))


def test_features_zero_weights():
    iw = iw_of(np.zeros((4, 3)), np.zeros(4))
    assert np.array_equal(features(iw, np.array([1.0, -2.0, 3.0])), np.zeros(4))


def test_features_saturation():
    iw = iw_of(np.zeros((4, 3)), np.full(4, 10.0))
    assert np.all(np.abs(features(iw, np.array([0.3, 0.1, -1.0])) - 1.0) < 1e-8)


def test_features_scalar_tanh():
    iw = iw_of([[1.0]], [0.0])
    assert features(iw, np.array([1.0]))[0] == pytest.approx(0.761594, abs=1e-6)


def test_features_dimension_mismatch():
    iw = iw_of(np.zeros((4, 3)), np.zeros(4))
    with pytest.raises(ValueError):
        features(iw, np.zeros(2))


def test_classify_constant_good(small_train):
    mid = 0.5 * (BOUNDS.l0 + BOUNDS.l1)
    assert classify_row(np.zeros(3), mid, small_train) is RowClass.GOOD


def test_classify_constant_linear(small_train):
    assert classify_row(np.zeros(3), 0.0, small_train) is RowClass.LINEAR


def test_classify_mixed_scan():
    data = np.array([[0.1, 1.0]])
    assert classify_row(np.array([1.0]), 0.0, data) is RowClass.MIXED


def test_classify_boundary_ties_close_the_partition():
    # max |arg| exactly l0 -> linear; min exactly l1 -> saturated
    assert classify_row(np.array([1.0]), 0.0, np.array([[0.2, 0.4]])) is RowClass.LINEAR
    assert classify_row(np.array([1.0]), 0.0, np.array([[3.5, 4.0]])) is RowClass.SATURATED


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_classify_sign_flip_invariance(seed):
    rng = np.random.default_rng(seed)
    data = rng.normal(scale=5.0, size=(3, 20))
    w = rng.normal(scale=0.1, size=3)
    b = rng.uniform(-4, 4)
    assert classify_row(w, b, data) is classify_row(-w, -b, data)


def test_good_rows_satisfy_strict_inequalities(small_train):
    """The defining band holds on every data point, no tolerance."""
    cfg = sampler.SamplerConfig()
    w, b, _ = sampler.sample_rows(small_train, 200, cfg, seed=42)
    args = np.abs(w @ small_train.states + b[:, None])
    assert np.all(args > BOUNDS.l0) and np.all(args < BOUNDS.l1)


def test_fractions_all_linear():
    iw = iw_of(np.zeros((5, 3)), np.zeros(5))
    f = pointwise_fractions(iw, np.ones((3, 7)))
    assert (f.p_g, f.p_l, f.p_s) == (0.0, 1.0, 0.0)


def test_fractions_two_point_enumeration():
    iw = iw_of([[1.0]], [0.0])
    f = pointwise_fractions(iw, np.array([[0.1, 1.0]]))
    assert (f.p_g, f.p_l, f.p_s) == (0.5, 0.5, 0.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fractions_partition(seed):
    rng = np.random.default_rng(seed)
    iw = iw_of(rng.normal(size=(6, 3)), rng.normal(size=6))
    f = pointwise_fractions(iw, rng.normal(scale=8.0, size=(3, 30)))
    assert abs(f.p_g + f.p_l + f.p_s - 1.0) < 1e-12


def test_fractions_of_good_matrix_is_one(small_train):
    cfg = sampler.SamplerConfig()
    iw = sampler.sample_internal_weights(small_train, 64, 1.0, cfg, seed=9)
    f = pointwise_fractions(iw, small_train)
    assert f.p_g == 1.0


def test_effective_range_zero_rows():
    iw = iw_of(np.zeros((3, 2)), np.array([0.5, 1.0, -2.0]))
    assert effective_range(iw, np.ones((2, 5))) == 0.0


def test_effective_range_two_rows():
    iw = iw_of(np.array([[1.0], [0.0]]), np.array([0.0, 0.5]))
    assert effective_range(iw, np.array([[0.0, 1.0]])) == pytest.approx(0.5)


def test_effective_range_of_good_rows_bounded(small_train):
    cfg = sampler.SamplerConfig()
    iw = sampler.sample_internal_weights(small_train, 128, 1.0, cfg, seed=4)
    m, big = weights.row_abs_extremes(iw.w_in, iw.b_in, small_train)
    assert np.all(big - m <= BOUNDS.l1 - BOUNDS.l0)
    assert effective_range(iw, small_train) > 0.0


def test_row_class_counts_constructed(small_train):
    cfg = sampler.SamplerConfig()
    gw, gb, _ = sampler.sample_rows(small_train, 10, cfg, seed=1)
    lw, lb, _ = sampler.sample_rows(small_train, 5, cfg, seed=2,
                                    target=RowClass.LINEAR)
    iw = InternalWeights(w_in=np.vstack([gw, lw]), b_in=np.hstack([gb, lb]))
    assert row_class_counts(iw, small_train) == (10, 5, 0, 0)


def test_row_class_counts_all_zero():
    iw = iw_of(np.zeros((7, 3)), np.zeros(7))
    assert row_class_counts(iw, np.ones((3, 4))) == (0, 7, 0, 0)


def test_counts_sum_to_dr(small_train, rng):
    iw = iw_of(rng.normal(scale=0.05, size=(40, 3)), rng.uniform(-4, 4, 40))
    assert sum(row_class_counts(iw, small_train)) == 40


def test_bounds_validation():
    with pytest.raises(ValueError):
        ClassBounds(l0=0.0, l1=1.0)
    with pytest.raises(ValueError):
        ClassBounds(l0=2.0, l1=1.0)


def test_internal_weights_validation():
    with pytest.raises(ValueError):
        InternalWeights(w_in=np.zeros((3, 2)), b_in=np.zeros(4))
    with pytest.raises(ValueError):
        InternalWeights(w_in=np.full((2, 2), np.inf), b_in=np.zeros(2))


def test_weights_binary_roundtrip(tmp_path, rng):
    iw = iw_of(rng.normal(size=(17, 3)), rng.normal(size=17))
    path = tmp_path / "w.bin"
    weights.save_weights(iw, path)
    back = weights.load_weights(path)
    assert np.array_equal(back.w_in, iw.w_in)
    assert np.array_equal(back.b_in, iw.b_in)


def test_weights_binary_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 12)
    with pytest.raises(ValueError):
        weights.load_weights(path)
    path.write_bytes(b"GWIW" + b"\x01\x00\x00\x00" + b"\x02\x00\x00\x00"
                     + b"\x03\x00\x00\x00" + b"\x00" * 8)
    with pytest.raises(ValueError):
        weights.load_weights(path)


def test_weights_csv_dump(tmp_path, small_train):
    cfg = sampler.SamplerConfig()
    iw = sampler.sample_internal_weights(small_train, 8, 0.5, cfg, seed=3)
    path = tmp_path / "w.csv"
    weights.weights_to_csv(iw, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "w_0,w_1,w_2,b,class"
    assert len(lines) == 9
