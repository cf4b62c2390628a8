"""Optimal-policy search and the difference-set machinery for two agents.

For a policy ``pi`` of length ``k`` let ``(a, b)`` be the agents' expected
Borda utilities minus those of the alternating policy of the same length.
``A_k`` is the multiset of these points over all canonical policies; ``a + b``
is the welfare difference, so the alternating policy is optimal iff every
point has a non-positive coordinate sum.

``A_{k+1}`` is generated from ``A_k`` by two maps: ``f_k`` (the policy keeps
alternating, the left branch of the policy tree) and ``g_k`` (the first mover
repeats, the right branch). ``G_km`` iterates ``g`` ``m`` times and ``F_km``
applies ``f_k`` once followed by ``m - 1`` steps of ``g``; both have explicit
closed forms which are checked against the compositions here.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from seqalloc import limits
from seqalloc.expectation import expected_sw, expected_utilities_borda
from seqalloc.model import Policy, ScoringFunction
from seqalloc.numerics import delta, gamma_bar

Point = tuple[Fraction, Fraction]


# -- policy enumeration and search -------------------------------------------

def enumerate_policies(n: int, p: int, limit: int | None = None) -> Iterator[Policy]:
    """Canonical policies (agents labelled by first appearance), each once.

    Policies are restricted growth strings: ``turns[0] == 1`` and every later
    turn is at most one more than the largest label used so far.
    """
    if n < 1 or p < 1:
        raise ValueError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
    limits.check("policies", n ** (p - 1), limit, f"enumerating n^(p-1) policies for n={n}, p={p}")

    def grow(prefix: list[int], top: int):
        if len(prefix) == p:
            yield Policy(tuple(prefix), n)
            return
        for agent in range(1, min(top + 1, n) + 1):
            prefix.append(agent)
            yield from grow(prefix, max(top, agent))
            prefix.pop()

    yield from grow([1], 1)


@dataclass(frozen=True)
class SearchResult:
    argmax: tuple[Policy, ...]
    max_sw: Fraction
    evaluated: int


def optimal_policy(n: int, p: int, scoring: ScoringFunction | None = None,
                   limit: int | None = None) -> SearchResult:
    """Exhaustive exact argmax of expected welfare; ties are all reported."""
    best: list[Policy] = []
    best_sw = None
    count = 0
    for policy in enumerate_policies(n, p, limit):
        sw = expected_sw(policy, scoring)
        count += 1
        if best_sw is None or sw > best_sw:
            best, best_sw = [policy], sw
        elif sw == best_sw:
            best.append(policy)
    return SearchResult(tuple(best), best_sw, count)


def approval_witness(max_items: int = 8) -> tuple[int, int, SearchResult] | None:
    """First ``(p, k)`` where the alternating policy is not a k-approval argmax."""
    for p in range(2, max_items + 1):
        alt = Policy.alternating(2, p)
        for k in range(1, p):
            result = optimal_policy(2, p, ScoringFunction.approval(p, k))
            if alt not in result.argmax:
                return p, k, result
    return None


# -- policy tree -------------------------------------------------------------

def follow(policy: Policy) -> Policy:
    """Prepend the agent who did not move first, then relabel."""
    return Policy((1,) + tuple(3 - t for t in policy.turns), 2)


def deviate(policy: Policy) -> Policy:
    """Prepend another turn of the first mover."""
    return Policy((1,) + policy.turns, 2)


@dataclass
class PolicyTreeNode:
    policy: Policy
    sw: Fraction
    left: "PolicyTreeNode | None" = None
    right: "PolicyTreeNode | None" = None

    def walk(self, path: str) -> "PolicyTreeNode":
        """Follow a string of ``L``/``R`` moves, e.g. ``"LLRL"``."""
        node = self
        for step in path.upper():
            nxt = node.left if step == "L" else node.right if step == "R" else None
            if step not in "LR":
                raise ValueError(f"path steps are L or R, got {step!r}")
            if nxt is None:
                raise ValueError(f"path {path!r} leaves the tree")
            node = nxt
        return node

    def leaves(self) -> list["PolicyTreeNode"]:
        if self.left is None:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def to_json(self, places: int = 6) -> dict:
        from seqalloc.numerics import format_exact, to_decimal

        return {
            "policy": str(self.policy),
            "sw_exact": format_exact(self.sw),
            "sw_decimal": to_decimal(self.sw, places),
            "left": self.left.to_json(places) if self.left else None,
            "right": self.right.to_json(places) if self.right else None,
        }


def policy_tree(depth: int, limit: int | None = None) -> PolicyTreeNode:
    """Full binary tree of canonical two-agent policies of length 1..depth."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    limits.check("tree_depth", depth, limit, f"policy tree of depth {depth}")

    def build(policy: Policy) -> PolicyTreeNode:
        node = PolicyTreeNode(policy, expected_utilities_borda(policy).sw)
        if policy.p < depth:
            node.left = build(follow(policy))
            node.right = build(deviate(policy))
        return node

    return build(Policy((1,), 2))


# -- the maps f, g, G, F -----------------------------------------------------

def apply_f(k: int, point: Point) -> Point:
    x, y = point
    return y, Fraction(k + 2, k + 1) * x


def apply_g(k: int, point: Point) -> Point:
    x, y = point
    d = delta(k + 1)
    return x + d, Fraction(k + 2, k + 1) * (y - d)


def G_composed(k: int, m: int, point: Point) -> Point:
    for j in range(k, k + m):
        point = apply_g(j, point)
    return point


def F_composed(k: int, m: int, point: Point) -> Point:
    if m < 1:
        raise ValueError(f"F needs m >= 1, got {m}")
    return G_composed(k + 1, m - 1, apply_f(k, point))


def G_explicit(k: int, m: int, point: Point) -> Point:
    if k < 1 or m < 0:
        raise ValueError(f"G needs k >= 1 and m >= 0, got k={k}, m={m}")
    x, y = point
    shift = sum((delta(k + j) for j in range(1, m + 1)), Fraction(0))
    damp = sum((delta(k + j) / (k + j) for j in range(1, m + 1)), Fraction(0))
    return x + shift, (k + m + 1) * (y / (k + 1) - damp)


def F_explicit(k: int, m: int, point: Point) -> Point:
    if k < 1 or m < 1:
        raise ValueError(f"F needs k >= 1 and m >= 1, got k={k}, m={m}")
    x, y = point
    shift = sum((delta(k + j) for j in range(2, m + 1)), Fraction(0))
    damp = sum((delta(k + j) / (k + j) for j in range(2, m + 1)), Fraction(0))
    return y + shift, (k + m + 1) * (x / (k + 1) - damp)


def coordinate_sum_G(k: int, m: int, point: Point) -> Fraction:
    """``x' + y'`` for ``G_km`` via the parity-split gamma-bar formulas."""
    if k < 1 or m < 0:
        raise ValueError(f"G needs k >= 1 and m >= 0, got k={k}, m={m}")
    x, y = point
    base = x + y + Fraction(m, k + 1) * y - Fraction(m * (m + 1), 6)
    if k % 2:
        tail = sum((gamma_bar(k + 2 * j - 1) for j in range(1, (m + 1) // 2 + 1)), Fraction(0))
        return base - tail / 3
    tail = sum((gamma_bar(k + 2 * j) for j in range(1, m // 2 + 1)), Fraction(0))
    return base + Fraction(m, 3) * gamma_bar(k + 1) - tail / 3


def coordinate_sum_F(k: int, m: int, point: Point) -> Fraction:
    """``x' + y'`` for ``F_km`` via the parity-split gamma-bar formulas."""
    if k < 1 or m < 1:
        raise ValueError(f"F needs k >= 1 and m >= 1, got k={k}, m={m}")
    x, y = point
    base = x + y + Fraction(m, k + 1) * x - Fraction((m - 1) * m, 6)
    if k % 2:
        tail = sum((gamma_bar(k + 2 * j + 1) for j in range(1, (m - 1) // 2 + 1)), Fraction(0))
        return base + Fraction(m - 1, 3) * gamma_bar(k + 2) - tail / 3
    tail = sum((gamma_bar(k + 2 * j) for j in range(1, m // 2 + 1)), Fraction(0))
    return base - tail / 3


# -- difference sets ---------------------------------------------------------

@dataclass(frozen=True)
class AkPoint:
    a: Fraction
    b: Fraction
    policy: Policy | None = field(default=None, compare=False)

    @property
    def xy(self) -> Point:
        return self.a, self.b


def ak_from_recursion(k: int, provenance: bool = False, limit: int | None = None) -> list[AkPoint]:
    """Build ``A_k`` from ``A_1 = {(0, 0)}`` with ``f`` and ``g``; a multiset of ``2^(k-1)`` points."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    limits.check("ak_depth", k, limit, f"A_k with k={k} (2^(k-1) points)")
    root = Policy((1,), 2) if provenance else None
    level = [AkPoint(Fraction(0), Fraction(0), root)]
    for j in range(1, k):
        nxt = []
        for pt in level:
            fx = apply_f(j, pt.xy)
            gx = apply_g(j, pt.xy)
            nxt.append(AkPoint(*fx, follow(pt.policy) if provenance else None))
            nxt.append(AkPoint(*gx, deviate(pt.policy) if provenance else None))
        level = nxt
    return level


def ak_from_definition(k: int, limit: int | None = None) -> list[AkPoint]:
    """``A_k`` computed policy by policy with the Borda recursion."""
    alt = expected_utilities_borda(Policy.alternating(2, k))
    out = []
    for policy in enumerate_policies(2, k, limit):
        u = expected_utilities_borda(policy)
        out.append(AkPoint(u[1] - alt[1], u[2] - alt[2], policy))
    return out


def same_multiset(xs: list[AkPoint], ys: list[AkPoint]) -> bool:
    return Counter(p.xy for p in xs) == Counter(p.xy for p in ys)


# -- verification sweeps -----------------------------------------------------

@dataclass
class Report:
    name: str
    checked: int = 0
    violations: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"check": self.name, "checked": self.checked, "ok": self.ok,
                "violations": self.violations[:20], "violation_count": len(self.violations)}


def verify_gamma_inequalities(k_max: int, m_max: int) -> Report:
    """Both gamma-bar gap inequalities on ``2 <= k <= k_max``, ``0 <= m <= m_max``."""
    if k_max < 2:
        raise ValueError(f"k_max must be >= 2, got {k_max}")
    report = Report("gamma-bar inequalities")
    for k in range(2, k_max + 1):
        for m in range(0, m_max + 1):
            lhs1 = gamma_bar(k) - gamma_bar(k + 2 * ((m + 1) // 2))
            rhs1 = Fraction(m * (m + 1), 2 * k)
            lhs2 = gamma_bar(k + 1) - gamma_bar(k + 2 * (m // 2) + 1)
            rhs2 = Fraction(m * m, 2 * k)
            report.checked += 2
            if lhs1 > rhs1:
                report.violations.append({"k": k, "m": m, "which": 1, "lhs": str(lhs1), "rhs": str(rhs1)})
            if lhs2 > rhs2:
                report.violations.append({"k": k, "m": m, "which": 2, "lhs": str(lhs2), "rhs": str(rhs2)})
    return report


def _sum_coefficients(k: int, m_max: int) -> list[tuple[Fraction, Fraction]]:
    """``(S1, S2)`` with ``S1 = sum_{j<=m} delta(k+j)``, ``S2 = sum delta(k+j)/(k+j)``, for m = 0..m_max."""
    out = [(Fraction(0), Fraction(0))]
    s1 = s2 = Fraction(0)
    for j in range(1, m_max + 1):
        d = delta(k + j)
        s1 += d
        s2 += d / (k + j)
        out.append((s1, s2))
    return out


def coordinate_sum_sweep(k: int, points, m_max: int):
    """Yield ``(op, m, point, x' + y')`` for ``G_km`` (m >= 0) and ``F_km`` (m >= 1).

    Uses the explicit forms with prefix sums, so each (point, m) costs O(1).
    """
    g_coef = _sum_coefficients(k, m_max)
    f_coef = _sum_coefficients(k + 1, m_max)  # F sums start at j = 2, i.e. shifted by one
    for x, y in points:
        for m in range(0, m_max + 1):
            s1, s2 = g_coef[m]
            yield "G", m, (x, y), x + s1 + (k + m + 1) * (y / (k + 1) - s2)
            if m >= 1:
                s1, s2 = f_coef[m - 1]
                yield "F", m, (x, y), y + s1 + (k + m + 1) * (x / (k + 1) - s2)


def verify_coordinate_sums(k_max: int, m_max: int, limit: int | None = None) -> Report:
    """For every point of ``A_k``, ``k <= k_max``: ``G_km`` and ``F_km`` keep ``x + y <= 0``."""
    report = Report("G/F coordinate sums non-positive")
    for k in range(1, k_max + 1):
        points = (pt.xy for pt in ak_from_recursion(k, limit=limit))
        for op, m, (x, y), total in coordinate_sum_sweep(k, points, m_max):
            report.checked += 1
            if total > 0:
                report.violations.append({"op": op, "k": k, "m": m, "point": [str(x), str(y)],
                                          "sum": str(total)})
    return report


def verify_ak(k_max: int, limit: int | None = None) -> Report:
    """``a + b <= 0`` for every point of ``A_k``, ``k <= k_max``."""
    report = Report("A_k coordinate sums non-positive")
    for k in range(1, k_max + 1):
        for pt in ak_from_recursion(k, limit=limit):
            report.checked += 1
            if pt.a + pt.b > 0:
                report.violations.append({"k": k, "point": [str(pt.a), str(pt.b)]})
    return report
