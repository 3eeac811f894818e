import numpy as np
import pytest

from rffmmd.core import (
    DimensionMismatch,
    NonFiniteInput,
    SampleSet,
    SignificanceLevel,
    TooFewSamples,
    derive_stream,
    validate_pair,
)


def test_validate_pair_concatenates_in_order():
    x = SampleSet(np.array([[0.0], [1.0]]))
    y = SampleSet(np.array([[2.0], [3.0]]))
    z = validate_pair(x, y)
    assert (z.N, z.n1, z.n2, z.d) == (4, 2, 2, 1)
    np.testing.assert_array_equal(z.z.data.ravel(), [0.0, 1.0, 2.0, 3.0])
    np.testing.assert_array_equal(z.x().data, x.data)
    np.testing.assert_array_equal(z.y().data, y.data)


def test_validate_pair_dimension_mismatch():
    x = SampleSet(np.zeros((2, 2)))
    y = SampleSet(np.zeros((2, 3)))
    with pytest.raises(DimensionMismatch):
        validate_pair(x, y)


def test_validate_pair_too_few_samples():
    x = SampleSet(np.zeros((1, 1)))
    y = SampleSet(np.zeros((5, 1)))
    with pytest.raises(TooFewSamples):
        validate_pair(x, y)


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_sample_set_rejects_non_finite(bad):
    with pytest.raises(NonFiniteInput):
        SampleSet(np.array([[0.0], [bad]]))


def test_sample_set_promotes_1d():
    s = SampleSet(np.arange(3.0))
    assert (s.n, s.d) == (3, 1)


def test_significance_level_bounds():
    SignificanceLevel(0.05)
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            SignificanceLevel(bad)


def test_derive_stream_is_deterministic():
    a = derive_stream(42, "perm/0").generator().standard_normal(8)
    b = derive_stream(42, "perm/0").generator().standard_normal(8)
    np.testing.assert_array_equal(a, b)


def test_derive_stream_separates_labels_and_seeds():
    s0 = derive_stream(42, "perm/0")
    s1 = derive_stream(42, "perm/1")
    s2 = derive_stream(43, "freq")
    s3 = derive_stream(42, "freq")
    assert s0.stream_id != s1.stream_id
    assert s2.seed != s3.seed
    assert not np.allclose(
        s0.generator().standard_normal(4), s1.generator().standard_normal(4)
    )


def test_child_streams_differ_from_parent():
    parent = derive_stream(7, "root")
    kid = parent.child("sub")
    assert kid.stream_id != parent.stream_id
    assert kid.seed == parent.seed
    assert parent.child("sub").stream_id == kid.stream_id


def test_stream_independence_correlation():
    a = derive_stream(123, "stream-a").generator().standard_normal(100_000)
    b = derive_stream(123, "stream-b").generator().standard_normal(100_000)
    r = np.corrcoef(a, b)[0, 1]
    assert abs(r) < 0.02
