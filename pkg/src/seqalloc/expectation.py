"""Polynomial-time expected utilities of a picking sequence.

Both engines peel off the first mover and recurse on the remaining policy.
For Borda scoring the mover gains ``p`` on top of her expectation in the
suffix game and every other agent's expectation scales by ``(p + 1) / p``,
which is O(np) overall. For arbitrary scoring we track, per agent, the
probability ``a_i(q)`` of receiving the item of *value index* ``q`` (the item
she ranks ``p - q + 1``); this costs O(np^2).

Closed forms for the alternating policy, BestPref and Random live here too.
"""

from __future__ import annotations

import math
from fractions import Fraction

from seqalloc.model import ExpectationVector, Policy, ScoringFunction, _resolve_scoring
from seqalloc.numerics import gamma

__all__ = [
    "ExpectationVector",
    "expected_utilities_borda",
    "pick_probabilities",
    "expected_utilities_general",
    "expected_sw",
    "alt_closed_form_two_agents",
    "alt_residue_closed_form",
    "alt_bounds",
    "bestpref_expected_sw",
    "random_expected_sw",
]


def _check(policy: Policy) -> None:
    if policy.p < 1:
        raise ValueError("empty policy")


def expected_utilities_borda(policy: Policy) -> ExpectationVector:
    _check(policy)
    turns = policy.turns
    u = [Fraction(0)] * policy.n
    for length, mover in enumerate(reversed(turns), start=1):
        scale = Fraction(length + 1, length)
        u = [x + length if agent == mover else x * scale
             for agent, x in enumerate(u, start=1)]
    return ExpectationVector(tuple(u))


def _scaled_pick_counts(policy: Policy) -> list[list[int]]:
    """``a_i(q) * p!`` as integers, rows indexed by agent, columns by ``q - 1``.

    With ``A = a * L!`` for the suffix of length ``L`` the recursion is integral:
    non-movers ``A(q) = (q - 1) A'(q - 1) + (L - q) A'(q)``, and the mover keeps
    ``A(q) = L * A'(q)`` for ``q < L`` with ``A(L) = L!``.
    """
    n = policy.n
    rows = [[] for _ in range(n)]
    fact = 1
    for length, mover in enumerate(reversed(policy.turns), start=1):
        fact *= length
        new_rows = []
        for agent in range(1, n + 1):
            prev = rows[agent - 1]
            if agent == mover:
                row = [length * x for x in prev]
                row.append(fact)
            else:
                row = [0] * length
                for q in range(1, length + 1):
                    below = prev[q - 2] if q >= 2 else 0
                    same = prev[q - 1] if q <= length - 1 else 0
                    row[q - 1] = (q - 1) * below + (length - q) * same
            new_rows.append(row)
        rows = new_rows
    return rows


def pick_probabilities(policy: Policy) -> list[list[Fraction]]:
    """Matrix ``a[i - 1][q - 1]``: probability agent ``i`` gets her value-``q`` item."""
    _check(policy)
    fact = math.factorial(policy.p)
    return [[Fraction(x, fact) for x in row] for row in _scaled_pick_counts(policy)]


def expected_utilities_general(policy: Policy, scoring: ScoringFunction | None = None) -> ExpectationVector:
    """``u_i = sum_q a_i(q) * g(p - q + 1)``; ``g`` is read on preference ranks."""
    _check(policy)
    scoring = _resolve_scoring(scoring, policy.p)
    p = policy.p
    g, den = scoring.integer_table()
    by_value = g[::-1]  # by_value[q - 1] == g(p - q + 1)
    scale = math.factorial(p) * den
    return ExpectationVector(tuple(
        Fraction(sum(a * v for a, v in zip(row, by_value)), scale)
        for row in _scaled_pick_counts(policy)
    ))


def expected_sw(policy: Policy, scoring: ScoringFunction | None = None) -> Fraction:
    if scoring is None or scoring.name == "borda":
        return expected_utilities_borda(policy).sw
    return expected_utilities_general(policy, scoring).sw


# -- closed forms ------------------------------------------------------------

def alt_closed_form_two_agents(p: int) -> ExpectationVector:
    """Alternating policy 1212..., two agents, Borda."""
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    lead = Fraction(p * (p + 1), 3)
    trail = Fraction(p * p - 1, 3)
    bonus = gamma(p + 1) / 3
    if p % 2 == 0:
        return ExpectationVector((lead, trail + bonus))
    return ExpectationVector((lead + bonus, trail))


def alt_sw_two_agents(p: int) -> Fraction:
    return ((2 * p - 1) * (p + 1) + gamma(p + 1)) / 3


def alt_residue_closed_form(n: int, p: int, i: int) -> Fraction:
    """Agent ``i`` of the n-agent alternating policy when ``p = i - 1 (mod n)``."""
    if not 1 <= i <= n:
        raise ValueError(f"agent must lie in 1..{n}, got {i}")
    if p < 1:
        raise ValueError(f"need p >= 1, got {p}")
    if p % n != (i - 1) % n:
        raise ValueError(
            f"closed form for agent {i} of {n} needs p = {(i - 1) % n} (mod {n}); got p={p}"
        )
    return Fraction((p - i + 1) * (p + 1), n + 1)


def alt_bounds(n: int, p: int, i: int) -> tuple[Fraction, Fraction]:
    """``p^2/(n+1) - 2p <= u_i <= p^2/(n+1) + 2p + n`` for the alternating policy."""
    centre = Fraction(p * p, n + 1)
    return centre - 2 * p, centre + 2 * p + n


def bestpref_expected_sw(n: int, p: int) -> Fraction:
    """Exact BestPref welfare under Borda: ``p * (p - p^-n * sum_{j<p} j^n)``."""
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    tail = sum(j ** n for j in range(1, p))
    return p * (p - Fraction(tail, p ** n))


def random_expected_sw(n: int, p: int) -> Fraction:
    return Fraction(p * (p + 1), 2)
