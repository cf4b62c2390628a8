import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from seqalloc.expectation import expected_utilities_borda
from seqalloc.model import Policy
from seqalloc.numerics import (
    delta,
    exact_payload,
    format_exact,
    gamma,
    gamma_bar,
    gamma_product,
    parse_exact,
    to_decimal,
)


@pytest.mark.parametrize("k, expected", [(1, 1), (2, 1), (3, Fraction(3, 2)), (4, Fraction(3, 2)),
                                         (7, Fraction(35, 16))])
def test_gamma_values(k, expected):
    assert gamma(k) == expected


@pytest.mark.parametrize("k, expected", [(2, Fraction(1, 2)), (4, Fraction(3, 8)), (5, Fraction(3, 8))])
def test_gamma_bar_values(k, expected):
    assert gamma_bar(k) == expected


def test_gamma_memo_matches_product():
    for k in range(1, 200):
        assert gamma(k) == gamma_product(k)


@pytest.mark.parametrize("fn", [gamma, gamma_bar])
def test_gamma_rejects_zero(fn):
    with pytest.raises(ValueError):
        fn(0)


def test_delta_values():
    assert delta(2) == 1
    assert delta(3) == Fraction(1, 2)
    assert round(float(delta(11)), 4) == 2.7643
    with pytest.raises(ValueError):
        delta(1)


def test_gamma_bar_recursion_and_bounds():
    for k in range(2, 2000):
        nxt = gamma_bar(k) if k % 2 == 0 else Fraction(k, k + 1) * gamma_bar(k)
        assert gamma_bar(k + 1) == nxt
        assert 0 < gamma_bar(k + 1) <= gamma_bar(k) <= Fraction(1, 2)


def test_gamma_asymptotic():
    k = 10 ** 4
    assert abs(float(gamma(k)) / math.sqrt(2 * k / math.pi) - 1) < 0.01


def test_delta_is_alternating_gap():
    for p in range(1, 51):
        u = expected_utilities_borda(Policy.alternating(2, p))
        assert delta(p + 1) == u[1] - u[2]


def test_serialization():
    assert format_exact(Fraction(595, 48)) == "595/48"
    assert format_exact(14) == "14/1"
    assert parse_exact("595/48") == Fraction(595, 48)
    assert to_decimal(Fraction(1267, 48)) == 26.395833
    # round half even at the last place
    assert to_decimal(Fraction(1, 8), 2) == 0.12
    assert to_decimal(Fraction(3, 8), 2) == 0.38
    assert exact_payload(Fraction(-1, 3), 3) == {"exact": "-1/3", "decimal": -0.333}


@given(st.fractions())
def test_exact_roundtrip(x):
    assert parse_exact(format_exact(x)) == x
    assert format_exact(parse_exact(format_exact(x))) == format_exact(x)
