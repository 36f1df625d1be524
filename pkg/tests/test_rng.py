import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from stresscast.rng import derive_key, rng_for


def test_same_tags_same_stream():
    a = rng_for(7, "sample_windows", "Test").standard_normal(8)
    b = rng_for(7, "sample_windows", "Test").standard_normal(8)
    assert np.array_equal(a, b)


def test_different_tags_different_streams():
    a = rng_for(7, "sample_windows", "Test").standard_normal(8)
    b = rng_for(7, "sample_windows", "Val").standard_normal(8)
    c = rng_for(8, "sample_windows", "Test").standard_normal(8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_integer_tags_distinct_from_strings():
    assert derive_key(0, (1,)) != derive_key(0, ("1x",))


@given(st.integers(min_value=0, max_value=2**31), st.text(max_size=20))
def test_derive_key_stable_and_in_range(seed, tag):
    key = derive_key(seed, (tag,))
    assert key == derive_key(seed, (tag,))
    assert 0 <= key < 2**128


def test_tag_concatenation_is_unambiguous():
    assert derive_key(0, ("ab", "c")) != derive_key(0, ("a", "bc"))
