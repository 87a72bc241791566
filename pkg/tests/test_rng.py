import numpy as np

from prodconc.rng import derive_rng


def test_same_triple_same_stream():
    a = derive_rng(123, "purpose", 4).random(8)
    b = derive_rng(123, "purpose", 4).random(8)
    assert np.array_equal(a, b)


def test_streams_separate_by_purpose_and_index():
    base = derive_rng(123, "purpose", 0).random(8)
    other_purpose = derive_rng(123, "other", 0).random(8)
    other_index = derive_rng(123, "purpose", 1).random(8)
    other_seed = derive_rng(124, "purpose", 0).random(8)
    assert not np.array_equal(base, other_purpose)
    assert not np.array_equal(base, other_index)
    assert not np.array_equal(base, other_seed)


def test_index_defaults_to_zero():
    assert np.array_equal(derive_rng(5, "x").random(4),
                          derive_rng(5, "x", 0).random(4))
