from collections import Counter

import pytest
from hypothesis import given, strategies as st

from instructmill import rng


def test_same_key_same_sequence():
    a = rng.stream(7, "ds", "split")
    b = rng.stream(7, "ds", "split")
    assert [a.next_uint64() for _ in range(50)] == [
        b.next_uint64() for _ in range(50)
    ]


def test_different_parts_diverge():
    a = rng.stream(7, "ds", "split")
    b = rng.stream(7, "ds", "dev")
    assert [a.next_uint64() for _ in range(10)] != [
        b.next_uint64() for _ in range(10)
    ]


def test_part_boundaries_matter():
    # ("ab", "c") and ("a", "bc") must not collide just because their
    # concatenation does.
    assert rng.derive_key(0, "ab", "c") != rng.derive_key(0, "a", "bc")


def test_non_string_parts_key_by_str():
    assert rng.derive_key(3, 14) == rng.derive_key(3, "14")


def test_randrange_bounds():
    gen = rng.stream(0, "bounds")
    for n in (1, 2, 3, 17, 1000):
        for _ in range(200):
            assert 0 <= gen.randrange(n) < n


def test_randrange_one_is_zero():
    gen = rng.stream(0, "one")
    assert all(gen.randrange(1) == 0 for _ in range(10))


def test_randrange_rejects_nonpositive():
    gen = rng.stream(0, "bad")
    with pytest.raises(ValueError):
        gen.randrange(0)
    with pytest.raises(ValueError):
        gen.randrange(-3)


def test_randrange_roughly_uniform():
    gen = rng.stream(123, "uniform")
    counts = Counter(gen.randrange(4) for _ in range(40000))
    for value in range(4):
        assert abs(counts[value] - 10000) < 500


@given(st.lists(st.integers(), max_size=200), st.integers(0, 2**32))
def test_shuffle_is_permutation(items, seed):
    gen = rng.stream(seed, "perm")
    assert Counter(gen.shuffled(items)) == Counter(items)


def test_shuffled_leaves_input_intact():
    items = [1, 2, 3, 4, 5]
    rng.stream(9, "copy").shuffled(items)
    assert items == [1, 2, 3, 4, 5]


def test_shuffle_depends_on_key_only():
    items = list(range(30))
    first = rng.stream(5, "a").shuffled(items)
    second = rng.stream(5, "a").shuffled(items)
    other = rng.stream(5, "b").shuffled(items)
    assert first == second
    assert first != other
