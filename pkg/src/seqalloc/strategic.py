"""Strategic play: the subgame-perfect equilibrium of the picking game.

The game has perfect information, so backward induction over the set of
remaining items solves it. The step is implied by how many items remain, so
the memo key is just a bitmask over items (``p <= 15`` by default).

When several picks give the mover the same final utility she takes the one
she ranks highest. SPNE utilities can depend on this rule in principle, so it
is fixed here and used everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from seqalloc import limits
from seqalloc.expectation import expected_utilities_general
from seqalloc.model import (
    Allocation,
    ExpectationVector,
    Policy,
    Profile,
    ScoringFunction,
    _raw_profiles,
    _resolve_scoring,
    canonicalize,
    count_profiles,
    sample_profiles,
    truthful_play,
)
from seqalloc.optimality import enumerate_policies


@dataclass(frozen=True)
class StrategicOutcome:
    allocation: Allocation
    utilities: tuple[Fraction, ...]
    manipulated: bool


def _solve(turns: Sequence[int], rankings: Sequence[Sequence[int]], g: Sequence[int],
           n: int) -> tuple[list[tuple[int, ...]], list[int]]:
    """Backward induction with integer utilities.

    Returns per-mask continuation values and chosen item (0-based), where a mask
    bit ``j`` set means item ``j + 1`` is still available.
    """
    p = len(turns)
    # worth[i][j]: utility for agent i of item j (both 0-based)
    worth = []
    order = []
    for r in rankings:
        w = [0] * p
        for pos, item in enumerate(r):
            w[item - 1] = g[pos]
        worth.append(w)
        order.append([item - 1 for item in r])
    full = (1 << p) - 1
    value: list[tuple[int, ...]] = [()] * (full + 1)
    choice = [-1] * (full + 1)
    value[0] = (0,) * n
    by_size: list[list[int]] = [[] for _ in range(p + 1)]
    for mask in range(1, full + 1):
        by_size[mask.bit_count()].append(mask)
    for size in range(1, p + 1):
        mover = turns[p - size] - 1
        w = worth[mover]
        for mask in by_size[size]:
            best = None
            best_item = -1
            for j in order[mover]:
                bit = 1 << j
                if not mask & bit:
                    continue
                total = w[j] + value[mask ^ bit][mover]
                if best is None or total > best:
                    best, best_item = total, j
            cont = list(value[mask ^ (1 << best_item)])
            cont[mover] += w[best_item]
            value[mask] = tuple(cont)
            choice[mask] = best_item
    return value, choice


def _spne_values(turns, rankings, g, n) -> tuple[int, ...]:
    value, _ = _solve(turns, rankings, g, n)
    return value[-1]


def spne_play(policy: Policy, profile: Profile, scoring: ScoringFunction | None = None,
              limit: int | None = None) -> StrategicOutcome:
    if profile.p != policy.p or profile.n != policy.n:
        raise ValueError(
            f"profile is {profile.n} agents x {profile.p} items, policy is n={policy.n}, p={policy.p}"
        )
    limits.check("spne_items", policy.p, limit, f"backward induction over 2^{policy.p} states")
    scoring = _resolve_scoring(scoring, policy.p)
    g, den = scoring.integer_table()
    value, choice = _solve(policy.turns, profile.rankings, g, policy.n)
    mask = (1 << policy.p) - 1
    bundles: dict[int, list[int]] = {i: [] for i in range(1, policy.n + 1)}
    for agent in policy.turns:
        j = choice[mask]
        bundles[agent].append(j + 1)
        mask ^= 1 << j
    allocation = Allocation({i: tuple(b) for i, b in bundles.items()})
    truthful = truthful_play(policy, profile)
    manipulated = any(allocation.bundle(i) != truthful.bundle(i) for i in bundles)
    return StrategicOutcome(
        allocation=allocation,
        utilities=tuple(Fraction(v, den) for v in value[-1]),
        manipulated=manipulated,
    )


def root_deviation_values(policy: Policy, profile: Profile,
                          scoring: ScoringFunction | None = None) -> tuple[Fraction, Fraction]:
    """First mover's SPNE utility and her utility when she picks truthfully first
    and everyone then plays the SPNE of the remaining game."""
    scoring = _resolve_scoring(scoring, policy.p)
    g, den = scoring.integer_table()
    value, _ = _solve(policy.turns, profile.rankings, g, policy.n)
    mover = policy.turns[0]
    top = profile.rankings[mover - 1][0] - 1
    full = (1 << policy.p) - 1
    truthful_first = g[0] + value[full ^ (1 << top)][mover - 1]
    return Fraction(value[full][mover - 1], den), Fraction(truthful_first, den)


# -- reversal symmetry -------------------------------------------------------

def reverse_policy(policy: Policy) -> Policy:
    return Policy(policy.turns[::-1], policy.n)


def is_reversal_symmetric(policy: Policy) -> bool:
    # equal up to a bijection on agents iff the first-appearance relabelings agree
    return canonicalize(reverse_policy(policy)).turns == canonicalize(policy).turns


# -- expectations ------------------------------------------------------------

@dataclass(frozen=True)
class SampledStrategic:
    means: tuple[float, ...]
    sw_mean: float
    trials: int
    seed: int


def expected_strategic_utilities(policy: Policy, scoring: ScoringFunction | None = None,
                                 mode: str = "exact", trials: int = 1000, seed: int = 0,
                                 limit: int | None = None):
    """Average SPNE utilities over profiles.

    ``mode="exact"`` enumerates every profile and returns an
    :class:`ExpectationVector`; ``mode="sampled"`` draws ``trials`` seeded
    profiles and returns a :class:`SampledStrategic`.
    """
    scoring = _resolve_scoring(scoring, policy.p)
    limits.check("spne_items", policy.p, None, f"backward induction over 2^{policy.p} states")
    g, den = scoring.integer_table()
    n, turns = policy.n, policy.turns
    if mode == "exact":
        sums = [0] * n
        total = 0
        for rankings in _raw_profiles(n, policy.p, limit):
            for i, v in enumerate(_spne_values(turns, rankings, g, n)):
                sums[i] += v
            total += 1
        return ExpectationVector(tuple(Fraction(s, total * den) for s in sums))
    if mode == "sampled":
        sums = [0] * n
        for rankings in sample_profiles(n, policy.p, trials, seed):
            for i, v in enumerate(_spne_values(turns, rankings.tolist(), g, n)):
                sums[i] += v
        means = tuple(s / (trials * den) for s in sums)
        return SampledStrategic(means, sum(means), trials, seed)
    raise ValueError(f"mode must be 'exact' or 'sampled', got {mode!r}")


@dataclass
class StrategicReport:
    items: int
    scoring: str
    strategic_sw: dict[str, Fraction]
    truthful_sw: dict[str, Fraction]
    argmax: list[str]
    max_sw: Fraction
    alternating: str
    reversal_symmetric: list[str]

    @property
    def alternating_optimal(self) -> bool:
        return self.strategic_sw[self.alternating] == self.max_sw


def verify_strategic_optimality(p: int, scoring: ScoringFunction | None = None,
                                limit: int | None = None) -> StrategicReport:
    """Exact strategic welfare of every canonical two-agent policy of length ``p``."""
    limits.check("strategic_items", p, limit,
                 f"exact strategic welfare for all policies at p={p} "
                 f"({count_profiles(2, p):,} profiles each)")
    scoring = _resolve_scoring(scoring, p)
    strategic: dict[str, Fraction] = {}
    truthful: dict[str, Fraction] = {}
    symmetric = []
    for policy in enumerate_policies(2, p):
        key = str(policy)
        strategic[key] = expected_strategic_utilities(policy, scoring).sw
        truthful[key] = expected_utilities_general(policy, scoring).sw
        if is_reversal_symmetric(policy):
            symmetric.append(key)
    best = max(strategic.values())
    return StrategicReport(
        items=p,
        scoring=scoring.name,
        strategic_sw=strategic,
        truthful_sw=truthful,
        argmax=[k for k, v in strategic.items() if v == best],
        max_sw=best,
        alternating=str(Policy.alternating(2, p)),
        reversal_symmetric=symmetric,
    )
