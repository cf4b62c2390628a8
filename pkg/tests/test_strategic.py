import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from seqalloc.expectation import expected_utilities_general
from seqalloc.limits import SizeLimitError
from seqalloc.model import (
    Policy,
    Profile,
    ScoringFunction,
    bundle_utility,
    enumerate_profiles,
    truthful_play,
)
from seqalloc.strategic import (
    expected_strategic_utilities,
    is_reversal_symmetric,
    reverse_policy,
    root_deviation_values,
    spne_play,
    verify_strategic_optimality,
)


def naive_spne(turns, rankings, scoring):
    """Plain game-tree search without memoisation; returns (utilities, bundles)."""
    n = len(rankings)

    def score(agent, item):
        return scoring(rankings[agent - 1].index(item) + 1)

    def play(step, remaining):
        if step == len(turns):
            return [Fraction(0)] * n, {a: [] for a in range(1, n + 1)}
        mover = turns[step]
        best = None
        for item in rankings[mover - 1]:
            if item not in remaining:
                continue
            utils, bundles = play(step + 1, remaining - {item})
            mine = utils[mover - 1] + score(mover, item)
            if best is None or mine > best[0]:
                utils = list(utils)
                utils[mover - 1] = mine
                bundles = {a: list(b) for a, b in bundles.items()}
                bundles[mover].insert(0, item)
                best = (mine, utils, bundles)
        return best[1], best[2]

    return play(0, frozenset(range(1, len(turns) + 1)))


def random_profile(rng, n, p):
    rankings = []
    for _ in range(n):
        r = list(range(1, p + 1))
        rng.shuffle(r)
        rankings.append(tuple(r))
    return Profile(tuple(rankings))


def test_spne_fixture():
    out = spne_play(Policy.parse("121"), Profile(((1, 2, 3), (2, 3, 1))))
    assert out.allocation.bundle(1) == {1, 2} and out.allocation.bundle(2) == {3}
    assert out.utilities == (5, 2)
    assert out.manipulated
    truthful = truthful_play(Policy.parse("121"), Profile(((1, 2, 3), (2, 3, 1))))
    borda = ScoringFunction.borda(3)
    assert (bundle_utility(truthful, Profile(((1, 2, 3), (2, 3, 1))), borda, 1),
            bundle_utility(truthful, Profile(((1, 2, 3), (2, 3, 1))), borda, 2)) == (4, 3)


def test_spne_matches_naive_search():
    rng = random.Random(8)
    for _ in range(40):
        n = rng.randint(1, 3)
        p = rng.randint(1, 6)
        policy = Policy(tuple(rng.randint(1, n) for _ in range(p)), n)
        profile = random_profile(rng, n, p)
        scoring = rng.choice([ScoringFunction.borda(p), ScoringFunction.lexicographic(p),
                              ScoringFunction.approval(p, max(1, p // 2))])
        out = spne_play(policy, profile, scoring)
        utils, bundles = naive_spne(policy.turns, profile.rankings, scoring)
        assert list(out.utilities) == utils
        assert {a: list(b) for a, b in out.allocation.bundles.items()} == bundles


@pytest.mark.parametrize("text", ["1", "12", "11", "122"])
def test_short_policies_have_no_manipulation(text):
    policy = Policy.parse(text)
    for profile in enumerate_profiles(policy.n, policy.p):
        assert not spne_play(policy, profile).manipulated


def test_identical_orders_equal_truthful():
    for p in range(1, 7):
        for turns in itertools.product((1, 2), repeat=p):
            policy = Policy(turns, 2)
            r = tuple(random.Random(p).sample(range(1, p + 1), p))
            profile = Profile((r, r))
            out = spne_play(policy, profile)
            truthful = truthful_play(policy, profile)
            assert out.allocation.bundle(1) == truthful.bundle(1)
            assert not out.manipulated


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 3), st.integers(1, 7), st.randoms(use_true_random=False))
def test_spne_is_valid_and_rational(n, p, rnd):
    policy = Policy(tuple(rnd.randint(1, n) for _ in range(p)), n)
    profile = random_profile(rnd, n, p)
    out = spne_play(policy, profile)
    assert sorted(out.allocation.items()) == list(range(1, p + 1))
    for agent, count in enumerate(policy.turn_counts(), 1):
        assert len(out.allocation.bundles[agent]) == count
        assert out.utilities[agent - 1] == bundle_utility(out.allocation, profile,
                                                          ScoringFunction.borda(p), agent)
    spne, truthful_first = root_deviation_values(policy, profile)
    assert spne >= truthful_first


def test_spne_guards_and_shape_errors():
    with pytest.raises(ValueError):
        spne_play(Policy.parse("12"), Profile(((1, 2, 3), (3, 2, 1))))
    with pytest.raises(SizeLimitError):
        spne_play(Policy.parse("1212"), Profile(((1, 2, 3, 4), (4, 3, 2, 1))), limit=3)


@pytest.mark.parametrize("text, expected", [("1212", True), ("1221", True), ("1121", False),
                                            ("121", True), ("112", False), ("123321", True)])
def test_reversal_symmetry(text, expected):
    assert is_reversal_symmetric(Policy.parse(text)) is expected


def test_reverse_policy():
    assert str(reverse_policy(Policy.parse("1122"))) == "2211"


def test_expected_strategic_fixtures():
    assert expected_strategic_utilities(Policy.parse("12")).utilities == (2, Fraction(3, 2))
    ev = expected_strategic_utilities(Policy.parse("121"))
    assert ev.utilities == (Fraction(14, 3), Fraction(5, 2))


def test_expected_strategic_matches_naive_average():
    for text in ["121", "112", "1212", "1122"]:
        policy = Policy.parse(text)
        g = ScoringFunction.borda(policy.p)
        sums = [Fraction(0)] * 2
        count = 0
        for profile in enumerate_profiles(2, policy.p):
            utils, _ = naive_spne(policy.turns, profile.rankings, g)
            sums = [a + b for a, b in zip(sums, utils)]
            count += 1
        assert expected_strategic_utilities(policy).utilities == tuple(s / count for s in sums)


def test_expected_strategic_sampled_is_deterministic():
    policy = Policy.parse("12121")
    a = expected_strategic_utilities(policy, mode="sampled", trials=500, seed=4)
    b = expected_strategic_utilities(policy, mode="sampled", trials=500, seed=4)
    assert a == b
    exact = expected_strategic_utilities(policy).sw
    assert abs(a.sw_mean - float(exact)) < 1.5
    with pytest.raises(ValueError):
        expected_strategic_utilities(policy, mode="other")


def test_verify_strategic_optimality_small():
    rep = verify_strategic_optimality(2)
    assert rep.argmax == ["12"] and rep.alternating_optimal
    assert rep.reversal_symmetric == ["11", "12"]
    rep = verify_strategic_optimality(3)
    assert rep.argmax == ["121"]
    assert rep.max_sw == Fraction(43, 6)


def test_reversal_symmetric_policies_keep_truthful_welfare():
    rep = verify_strategic_optimality(4)
    for key in rep.reversal_symmetric:
        assert rep.strategic_sw[key] == rep.truthful_sw[key]
    assert rep.strategic_sw["1121"] != rep.truthful_sw["1121"]


@pytest.mark.slow
def test_verify_strategic_optimality_five():
    rep = verify_strategic_optimality(5)
    assert rep.argmax == ["12121"]
    assert rep.max_sw == expected_utilities_general(Policy.parse("12121")).sw


def test_strategic_guard():
    with pytest.raises(SizeLimitError, match="SEQALLOC_MAX_STRATEGIC_ITEMS"):
        verify_strategic_optimality(6)
