import json

import numpy as np
import pytest

from prodconc.errors import CapExceededError, SpaceValidationError
from prodconc.spaces import (
    BlockSpace,
    Event,
    ProductSpace,
    bernoulli_cube,
    block_norm,
    enumerate_outcomes,
    event_matrix,
    event_probability,
    load_space,
    outcome_vector,
    save_space,
    space_from_dict,
    space_to_dict,
    validate_space,
)


def two_block_space():
    b1 = BlockSpace(points=np.array([[0.0], [1.0]]), norm="L2",
                    probs=np.array([0.25, 0.75]))
    b2 = BlockSpace(points=np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]),
                    norm="L1", probs=np.array([0.5, 0.3, 0.2]))
    return ProductSpace(blocks=(b1, b2), outer_p=2.0)


def test_block_norm_values():
    v = np.array([3.0, -4.0])
    assert block_norm(v, "L1") == 7.0
    assert block_norm(v, "L2") == 5.0
    assert block_norm(v, "LINF") == 4.0


def test_block_norm_rejects_unknown_tag():
    with pytest.raises(ValueError):
        block_norm(np.array([1.0]), "L3")


def test_block_shape_mismatch_rejected():
    with pytest.raises(SpaceValidationError):
        BlockSpace(points=np.array([[0.0], [1.0]]), norm="L2",
                   probs=np.array([0.5, 0.3, 0.2]))


def test_validate_space_flags_bad_probabilities():
    bad = BlockSpace(points=np.array([[0.0], [1.0]]), norm="L2",
                     probs=np.array([0.5, 0.6]))
    diag = validate_space(ProductSpace(blocks=(bad,), outer_p=2.0))
    assert not diag.ok
    assert any("probabilities" in v for v in diag.violations)


def test_enumeration_weights_sum_to_one():
    space = two_block_space()
    outcomes = list(enumerate_outcomes(space))
    assert len(outcomes) == 6
    assert sum(w for _o, w in outcomes) == pytest.approx(1.0, abs=1e-14)
    # weights are the products of per-block probabilities
    weights = dict(outcomes)
    assert weights[(0, 1)] == pytest.approx(0.25 * 0.3, abs=1e-15)
    assert weights[(1, 2)] == pytest.approx(0.75 * 0.2, abs=1e-15)


def test_event_probability_matches_hand_sum():
    space = two_block_space()
    event = Event(outcomes=((0, 0), (1, 2)))
    assert event_probability(space, event) == pytest.approx(
        0.25 * 0.5 + 0.75 * 0.2, abs=1e-15)


def test_outcome_vector_and_event_matrix():
    space = two_block_space()
    v = outcome_vector(space, (1, 2))
    assert v.tolist() == [1.0, 2.0, 0.0]
    M = event_matrix(space, Event(outcomes=((0, 1), (1, 0))))
    assert M.shape == (2, 3)
    assert M[0].tolist() == [0.0, 1.0, 1.0]


def test_bernoulli_cube_shape():
    space = bernoulli_cube(5, 0.3)
    assert space.n_blocks == 5
    assert space.n_outcomes() == 32
    assert space.blocks[0].probs.tolist() == [0.7, 0.3]
    diag = validate_space(space)
    assert diag.ok


def test_enumeration_cap_enforced():
    space = bernoulli_cube(8, 0.5)
    with pytest.raises(CapExceededError):
        list(enumerate_outcomes(space, cap=100))


def test_json_roundtrip(tmp_path):
    space = two_block_space()
    path = tmp_path / "space.json"
    save_space(space, path)
    loaded = load_space(path)
    assert space_to_dict(loaded) == space_to_dict(space)
    # and the dict form survives a JSON round trip unchanged
    blob = json.dumps(space_to_dict(space))
    again = space_from_dict(json.loads(blob))
    assert again.outer_p == space.outer_p
    assert np.array_equal(again.blocks[1].points, space.blocks[1].points)
