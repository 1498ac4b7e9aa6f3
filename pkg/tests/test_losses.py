import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgeboost.core import InvalidInputError
from edgeboost.losses import (
    DiscriminatorOutputs,
    ExitLosses,
    discriminator_expectation,
    multi_exit_detection_loss,
    stage1_loss,
    stage2_loss,
)

probs = st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=1, max_size=20)


@pytest.mark.parametrize(
    "values, expected",
    [([1.0, 1.0], 0.0), ([0.5], -0.6931471805599453), ([0.0], math.log(1e-12))],
)
def test_discriminator_expectation(values, expected):
    assert discriminator_expectation(values) == pytest.approx(expected, abs=1e-12)


def test_discriminator_expectation_rejects_empty_and_bad():
    with pytest.raises(InvalidInputError):
        discriminator_expectation([])
    with pytest.raises(InvalidInputError):
        discriminator_expectation([1.2])


def test_stage1_perfect_discriminator():
    assert stage1_loss(DiscriminatorOutputs([1.0], [0.0], [1.0], [0.0])) == 0.0


def test_stage1_coin_flip():
    assert stage1_loss(DiscriminatorOutputs([0.5], [0.5], [0.5], [0.5])) == pytest.approx(
        4 * math.log(0.5), abs=1e-12
    )


def test_stage1_mixed_matches_scalar_evaluation():
    expected = math.log(0.9) + math.log(1 - 0.2) + math.log(0.8) + math.log(1 - 0.1)
    got = stage1_loss(DiscriminatorOutputs([0.9], [0.2], [0.8], [0.1]))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(-0.657008, abs=1e-6)


def test_stage1_rejects_empty_list():
    with pytest.raises(InvalidInputError):
        stage1_loss(DiscriminatorOutputs([0.5], [], [0.5], [0.5]))


@pytest.mark.parametrize("exits, expected", [([2, 2, 2], 2.0), ([1, 2, 3], 2.0), ([0, 0, 0, 0], 0.0)])
def test_multi_exit_mean(exits, expected):
    assert multi_exit_detection_loss(ExitLosses(exits)) == expected


def test_exit_losses_validation():
    with pytest.raises(InvalidInputError):
        ExitLosses([])
    with pytest.raises(InvalidInputError):
        ExitLosses([1.0, -0.5])


@pytest.mark.parametrize(
    "exits, s1, expected",
    [([1, 2, 3], -0.5, 1.5), ([0, 0, 0], 0.0, 0.0), ([2, 2], 4 * math.log(0.5), 2 + 4 * math.log(0.5))],
)
def test_stage2(exits, s1, expected):
    assert stage2_loss(ExitLosses(exits), s1) == pytest.approx(expected, abs=1e-12)


def test_stage2_composed_value():
    assert stage2_loss([2, 2], -2.772589) == pytest.approx(-0.772589, abs=1e-12)


@given(probs)
def test_expectation_non_positive(values):
    assert discriminator_expectation(values) <= 0.0


@given(probs, probs, probs, probs, st.randoms())
def test_stage1_permutation_invariant(a, b, c, d, rnd):
    base = stage1_loss(DiscriminatorOutputs(a, b, c, d))
    shuffled = []
    for lst in (a, b, c, d):
        lst = lst[:]
        rnd.shuffle(lst)
        shuffled.append(lst)
    assert stage1_loss(DiscriminatorOutputs(*shuffled)) == pytest.approx(base, abs=1e-12)


@given(probs, probs, probs, probs)
def test_stage1_maximum_only_at_perfect_discriminator(a, b, c, d):
    value = stage1_loss(DiscriminatorOutputs(a, b, c, d))
    perfect = all(p == 1.0 for p in a + c) and all(p == 0.0 for p in b + d)
    assert value <= 0.0
    assert (value == 0.0) == perfect


def test_stage1_strictly_decreasing_in_generated_probability():
    rng = random.Random(3)
    for _ in range(200):
        lo = rng.uniform(0.0, 0.9)
        hi = rng.uniform(lo + 1e-6, 0.999)
        a = stage1_loss(DiscriminatorOutputs([0.7], [lo, 0.3], [0.6], [0.2]))
        b = stage1_loss(DiscriminatorOutputs([0.7], [hi, 0.3], [0.6], [0.2]))
        assert b < a
