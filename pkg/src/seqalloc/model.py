"""Policies, preference profiles, scoring functions and truthful play.

Items are labelled ``1..p`` and agents ``1..n``. A profile stores, for every
agent, her ranking of the items with the most preferred item first; a scoring
function maps a *rank* (1 = best) to a utility. Everything exact is a
:class:`fractions.Fraction`.

The brute-force routines here enumerate all ``(p!)**n`` profiles and are the
reference oracle for the polynomial-time engine in :mod:`seqalloc.expectation`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from seqalloc import limits


# -- policies ----------------------------------------------------------------

@dataclass(frozen=True)
class Policy:
    """A picking sequence: ``turns[t]`` is the agent choosing at step ``t + 1``."""

    turns: tuple[int, ...]
    n: int = 0

    def __post_init__(self):
        turns = tuple(int(t) for t in self.turns)
        if not turns:
            raise ValueError("a policy needs at least one turn")
        n = self.n or max(turns)
        if min(turns) < 1 or max(turns) > n:
            raise ValueError(f"policy turns must lie in 1..{n}, got {turns}")
        object.__setattr__(self, "turns", turns)
        object.__setattr__(self, "n", n)

    @classmethod
    def parse(cls, text: str, n: int | None = None) -> "Policy":
        """Parse ``"121212"`` or, for agents >= 10, ``"1,2,10"``."""
        text = text.strip()
        if not text:
            raise ValueError("empty policy string")
        parts = text.split(",") if "," in text else list(text)
        try:
            turns = tuple(int(s) for s in parts)
        except ValueError:
            raise ValueError(f"malformed policy string {text!r}") from None
        return cls(turns, n or 0)

    @classmethod
    def alternating(cls, n: int, p: int) -> "Policy":
        return cls(tuple(t % n + 1 for t in range(p)), n)

    @property
    def p(self) -> int:
        return len(self.turns)

    def turn_counts(self) -> list[int]:
        counts = [0] * self.n
        for t in self.turns:
            counts[t - 1] += 1
        return counts

    def __str__(self) -> str:
        if self.n < 10:
            return "".join(map(str, self.turns))
        return ",".join(map(str, self.turns))

    def __len__(self) -> int:
        return len(self.turns)


def relabel_by_first_appearance(policy: Policy) -> tuple[Policy, dict[int, int]]:
    """Canonical form plus the ``old -> new`` agent mapping.

    Agents that never move keep the remaining labels in increasing order.
    """
    mapping: dict[int, int] = {}
    for t in policy.turns:
        if t not in mapping:
            mapping[t] = len(mapping) + 1
    for agent in range(1, policy.n + 1):
        if agent not in mapping:
            mapping[agent] = len(mapping) + 1
    return Policy(tuple(mapping[t] for t in policy.turns), policy.n), mapping


def canonicalize(policy: Policy) -> Policy:
    return relabel_by_first_appearance(policy)[0]


def is_balanced(policy: Policy) -> bool:
    n = policy.n
    turns = policy.turns
    full = len(turns) - len(turns) % n
    for start in range(0, full, n):
        if sorted(turns[start:start + n]) != list(range(1, n + 1)):
            return False
    tail = turns[full:]
    return len(set(tail)) == len(tail)


# -- profiles and scoring ----------------------------------------------------

@dataclass(frozen=True)
class Profile:
    rankings: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        rankings = tuple(tuple(int(x) for x in r) for r in self.rankings)
        if not rankings:
            raise ValueError("a profile needs at least one agent")
        p = len(rankings[0])
        universe = list(range(1, p + 1))
        for i, r in enumerate(rankings, 1):
            if sorted(r) != universe:
                raise ValueError(f"ranking of agent {i} is not a permutation of 1..{p}: {r}")
        object.__setattr__(self, "rankings", rankings)

    @classmethod
    def from_json(cls, text: str) -> "Profile":
        return cls(tuple(tuple(r) for r in json.loads(text)))

    @property
    def n(self) -> int:
        return len(self.rankings)

    @property
    def p(self) -> int:
        return len(self.rankings[0])

    def rank(self, agent: int, item: int) -> int:
        return self.rankings[agent - 1].index(item) + 1


@dataclass(frozen=True)
class ScoringFunction:
    """Utility ``table[k - 1]`` of the item an agent ranks ``k``-th."""

    table: tuple[Fraction, ...]
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(Fraction(v) for v in self.table))

    def __len__(self) -> int:
        return len(self.table)

    def __call__(self, rank: int) -> Fraction:
        return self.table[rank - 1]

    @classmethod
    def borda(cls, p: int) -> "ScoringFunction":
        return cls(tuple(p - k + 1 for k in range(1, p + 1)), "borda")

    @classmethod
    def approval(cls, p: int, k: int) -> "ScoringFunction":
        if not 0 <= k <= p:
            raise ValueError(f"approval threshold must lie in 0..{p}, got {k}")
        return cls(tuple(1 if i <= k else 0 for i in range(1, p + 1)), f"{k}-approval")

    @classmethod
    def quasi_indifferent(cls, p: int, big: int | Fraction) -> "ScoringFunction":
        return cls(tuple(big + (p - k + 1) for k in range(1, p + 1)), f"quasi-indifferent(N={big})")

    @classmethod
    def linear(cls, p: int, alpha: Fraction | int, beta: Fraction | int) -> "ScoringFunction":
        alpha, beta = Fraction(alpha), Fraction(beta)
        if alpha > 0:
            raise ValueError(f"linear scoring needs alpha <= 0, got {alpha}")
        return cls(tuple(alpha * k + beta for k in range(1, p + 1)), f"linear({alpha},{beta})")

    @classmethod
    def lexicographic(cls, p: int) -> "ScoringFunction":
        return cls(tuple(2 ** (p - k) for k in range(1, p + 1)), "lexicographic")

    def integer_table(self) -> tuple[list[int], int]:
        """Table scaled to integers, with the common denominator."""
        den = math.lcm(*(v.denominator for v in self.table))
        return [int(v * den) for v in self.table], den


def _resolve_scoring(scoring: ScoringFunction | None, p: int) -> ScoringFunction:
    if scoring is None:
        return ScoringFunction.borda(p)
    if len(scoring) != p:
        raise ValueError(f"scoring table has length {len(scoring)}, instance has p={p}")
    return scoring


# -- allocations -------------------------------------------------------------

@dataclass
class Allocation:
    """Items per agent, in the order they were picked."""

    bundles: dict[int, tuple[int, ...]] = field(default_factory=dict)

    def bundle(self, agent: int) -> set[int]:
        return set(self.bundles.get(agent, ()))

    def items(self) -> list[int]:
        return [x for b in self.bundles.values() for x in b]


def truthful_play(policy: Policy, profile: Profile) -> Allocation:
    """Every mover takes her highest-ranked remaining item."""
    if profile.p != policy.p:
        raise ValueError(f"profile has {profile.p} items but policy has length {policy.p}")
    if profile.n != policy.n:
        raise ValueError(f"profile has {profile.n} agents but policy has n={policy.n}")
    picks = _truthful_picks(policy.turns, profile.rankings)
    bundles: dict[int, list[int]] = {i: [] for i in range(1, policy.n + 1)}
    for agent, item in zip(policy.turns, picks):
        bundles[agent].append(item)
    return Allocation({i: tuple(b) for i, b in bundles.items()})


def _truthful_picks(turns: Sequence[int], rankings: Sequence[Sequence[int]]) -> list[int]:
    p = len(turns)
    taken = [False] * (p + 1)
    cursor = [0] * len(rankings)
    picks = []
    for agent in turns:
        r = rankings[agent - 1]
        c = cursor[agent - 1]
        while taken[r[c]]:
            c += 1
        cursor[agent - 1] = c + 1
        taken[r[c]] = True
        picks.append(r[c])
    return picks


def _truthful_ranks(turns: Sequence[int], rankings: Sequence[Sequence[int]]) -> list[int]:
    """Like :func:`_truthful_picks` but returns the mover's rank of each pick."""
    p = len(turns)
    taken = [False] * (p + 1)
    cursor = [0] * len(rankings)
    ranks = []
    for agent in turns:
        r = rankings[agent - 1]
        c = cursor[agent - 1]
        while taken[r[c]]:
            c += 1
        cursor[agent - 1] = c + 1
        taken[r[c]] = True
        ranks.append(c + 1)
    return ranks


def bundle_utility(allocation: Allocation, profile: Profile, scoring: ScoringFunction,
                   agent: int) -> Fraction:
    if not 1 <= agent <= profile.n:
        raise ValueError(f"unknown agent {agent}; profile has agents 1..{profile.n}")
    scoring = _resolve_scoring(scoring, profile.p)
    return sum((scoring(profile.rank(agent, x)) for x in allocation.bundles.get(agent, ())),
               Fraction(0))


def social_welfare(allocation: Allocation, profile: Profile, scoring: ScoringFunction) -> Fraction:
    return sum((bundle_utility(allocation, profile, scoring, i) for i in range(1, profile.n + 1)),
               Fraction(0))


def bestpref_play(profile: Profile) -> Allocation:
    """Each item goes to an agent ranking it highest; ties go to the lowest index."""
    bundles: dict[int, list[int]] = {i: [] for i in range(1, profile.n + 1)}
    for item in range(1, profile.p + 1):
        best = min(range(1, profile.n + 1), key=lambda i: (profile.rank(i, item), i))
        bundles[best].append(item)
    return Allocation({i: tuple(b) for i, b in bundles.items()})


# -- exhaustive oracle -------------------------------------------------------

@dataclass(frozen=True)
class ExpectationVector:
    utilities: tuple[Fraction, ...]

    @property
    def sw(self) -> Fraction:
        return sum(self.utilities, Fraction(0))

    def __getitem__(self, agent: int) -> Fraction:
        """1-based access: ``ev[1]`` is agent 1."""
        return self.utilities[agent - 1]

    def __len__(self) -> int:
        return len(self.utilities)


def count_profiles(n: int, p: int) -> int:
    return math.factorial(p) ** n


def enumerate_profiles(n: int, p: int, limit: int | None = None) -> Iterator[Profile]:
    """All ``(p!)**n`` profiles, lexicographic in the concatenated permutations."""
    for rankings in _raw_profiles(n, p, limit):
        yield Profile(rankings)


def _raw_profiles(n: int, p: int, limit: int | None = None):
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    limits.check("profiles", count_profiles(n, p), limit, f"enumerating (p!)^n profiles for n={n}, p={p}")
    perms = list(itertools.permutations(range(1, p + 1)))
    return itertools.product(perms, repeat=n)


def brute_force_rank_counts(policy: Policy, limit: int | None = None) -> tuple[list[list[int]], int]:
    """``counts[i][r - 1]``: number of profiles where agent ``i + 1`` gets her rank-``r`` item."""
    p, n = policy.p, policy.n
    counts = [[0] * p for _ in range(n)]
    total = 0
    turns = policy.turns
    for rankings in _raw_profiles(n, p, limit):
        for agent, r in zip(turns, _truthful_ranks(turns, rankings)):
            counts[agent - 1][r - 1] += 1
        total += 1
    return counts, total


def brute_force_expectation(policy: Policy, scoring: ScoringFunction | None = None,
                            limit: int | None = None) -> ExpectationVector:
    """Literal average of truthful-play utilities over every profile."""
    scoring = _resolve_scoring(scoring, policy.p)
    counts, total = brute_force_rank_counts(policy, limit)
    return ExpectationVector(tuple(
        sum((c * g for c, g in zip(row, scoring.table)), Fraction(0)) / total
        for row in counts
    ))


def brute_force_pick_probabilities(policy: Policy, limit: int | None = None) -> list[list[Fraction]]:
    """Oracle for :func:`seqalloc.expectation.pick_probabilities` (value-indexed rows)."""
    counts, total = brute_force_rank_counts(policy, limit)
    p = policy.p
    return [[Fraction(row[p - q], total) for q in range(1, p + 1)] for row in counts]


def brute_force_bestpref_sw(n: int, p: int, scoring: ScoringFunction | None = None,
                            limit: int | None = None) -> Fraction:
    scoring = _resolve_scoring(scoring, p)
    g, den = scoring.integer_table()
    acc = 0
    total = 0
    for rankings in _raw_profiles(n, p, limit):
        best = [p] * (p + 1)
        for r in rankings:
            for pos, item in enumerate(r):
                if pos < best[item]:
                    best[item] = pos
        acc += sum(g[pos] for pos in best[1:])
        total += 1
    return Fraction(acc, total * den)


def brute_force_random_sw(n: int, p: int, scoring: ScoringFunction | None = None,
                          limit: int | None = None) -> Fraction:
    """Average over profiles of the coin-flip mechanism's conditional expected welfare."""
    scoring = _resolve_scoring(scoring, p)
    g, den = scoring.integer_table()
    acc = 0
    total = 0
    for rankings in _raw_profiles(n, p, limit):
        # each item lands with each agent w.p. 1/n
        acc += sum(g[pos] for r in rankings for pos in range(p))
        total += 1
    return Fraction(acc, total * den * n)


# -- sampling ----------------------------------------------------------------

@dataclass(frozen=True)
class SampleEstimate:
    means: tuple[float, ...]
    stderrs: tuple[float | None, ...]
    sw_mean: float
    sw_stderr: float | None
    trials: int
    seed: int
    generator: str = "numpy.random.PCG64"


_CHUNK = 8192


def sample_profiles(n: int, p: int, trials: int, seed: int) -> Iterator[np.ndarray]:
    """Yield ``(n, p)`` arrays of uniformly random rankings, reproducibly.

    Uses ``numpy.random.default_rng(seed)`` (PCG64) and ``Generator.permuted``
    (Fisher-Yates) in fixed-size chunks, so output depends only on ``seed``.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    base = np.arange(1, p + 1)
    left = trials
    while left:
        size = min(_CHUNK, left)
        block = rng.permuted(np.tile(base, (size * n, 1)), axis=1).reshape(size, n, p)
        for rankings in block:
            yield rankings
        left -= size


def _summarize(values: np.ndarray) -> tuple[float, float | None]:
    mean = float(values.mean())
    if len(values) < 2:
        return mean, None
    return mean, float(values.std(ddof=1) / math.sqrt(len(values)))


def sample_expectation(policy: Policy, scoring: ScoringFunction | None = None, trials: int = 10_000,
                       seed: int = 0) -> SampleEstimate:
    scoring = _resolve_scoring(scoring, policy.p)
    g, den = scoring.integer_table()
    turns = policy.turns
    rows = np.zeros((trials, policy.n), dtype=np.float64)
    for t, rankings in enumerate(sample_profiles(policy.n, policy.p, trials, seed)):
        rankings = rankings.tolist()
        for agent, r in zip(turns, _truthful_ranks(turns, rankings)):
            rows[t, agent - 1] += g[r - 1]
    rows /= den
    stats = [_summarize(rows[:, i]) for i in range(policy.n)]
    sw_mean, sw_err = _summarize(rows.sum(axis=1))
    return SampleEstimate(
        means=tuple(m for m, _ in stats),
        stderrs=tuple(e for _, e in stats),
        sw_mean=sw_mean,
        sw_stderr=sw_err,
        trials=trials,
        seed=seed,
    )


@dataclass(frozen=True)
class GapEstimate:
    """BestPref welfare minus AltPolicy welfare on sampled two-agent Borda profiles."""

    items: int
    epsilon: float
    threshold: float
    exceed_frequency: float
    mean_gap: float
    gap_stderr: float | None
    trials: int
    seed: int


def sample_mechanism_gap(p: int, epsilon: float, trials: int, seed: int) -> GapEstimate:
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    turns = Policy.alternating(2, p).turns
    threshold = p / (6 * epsilon)
    gaps = np.empty(trials)
    for t, rankings in enumerate(sample_profiles(2, p, trials, seed)):
        rankings = rankings.tolist()
        alt = sum(p - r + 1 for r in _truthful_ranks(turns, rankings))
        pos = [0] * (p + 1)
        for k, item in enumerate(rankings[0]):
            pos[item] = k
        best = sum(p - min(pos[item], k) for k, item in enumerate(rankings[1]))
        gaps[t] = best - alt
    mean, err = _summarize(gaps)
    return GapEstimate(
        items=p,
        epsilon=epsilon,
        threshold=threshold,
        exceed_frequency=float((gaps >= threshold).mean()),
        mean_gap=mean,
        gap_stderr=err,
        trials=trials,
        seed=seed,
    )
