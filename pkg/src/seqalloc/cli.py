"""Command-line interface.

Every command prints one JSON (or CSV) payload on stdout and echoes its parsed
configuration under ``"config"``. Exit status: 0 success, 1 a verification
found a violation (the witness is in the payload), 2 usage error.

Guards default as in :mod:`seqalloc.limits`; override them with the
``SEQALLOC_MAX_*`` environment variables.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from seqalloc import expectation, limits, model, optimality, strategic
from seqalloc.model import Policy, Profile, ScoringFunction
from seqalloc.numerics import DEFAULT_PLACES, exact_payload, format_exact


class UsageError(Exception):
    pass


# -- helpers -----------------------------------------------------------------

def _policy(args) -> Policy:
    if args.policy is None:
        raise UsageError("--policy is required")
    try:
        return Policy.parse(args.policy, getattr(args, "agents", None))
    except ValueError as exc:
        raise UsageError(f"bad --policy: {exc}") from None


def _scoring(args, p: int) -> ScoringFunction:
    name = args.scoring
    if name == "borda":
        return ScoringFunction.borda(p)
    if name == "approval":
        if args.k is None:
            raise UsageError("--scoring approval needs --k")
        return ScoringFunction.approval(p, args.k)
    if name == "quasi":
        return ScoringFunction.quasi_indifferent(p, Fraction(args.big))
    if name == "linear":
        return ScoringFunction.linear(p, Fraction(args.alpha), Fraction(args.beta))
    if name == "lex":
        return ScoringFunction.lexicographic(p)
    if name == "table":
        if not args.table:
            raise UsageError("--scoring table needs --table g1,g2,...")
        values = [Fraction(v) for v in args.table.split(",")]
        if len(values) != p:
            raise UsageError(f"--table has {len(values)} entries, need p={p}")
        return ScoringFunction(tuple(values), "table")
    raise UsageError(f"unknown scoring {name!r}")


def _vector(ev, places: int) -> dict:
    return {
        "agents": [{"agent": i, **exact_payload(u, places)} for i, u in enumerate(ev.utilities, 1)],
        "sw": exact_payload(ev.sw, places),
    }


def _config(args) -> dict:
    return {k: v for k, v in vars(args).items() if k != "func"}


# -- commands ----------------------------------------------------------------

def cmd_expect(args):
    policy = _policy(args)
    scoring = _scoring(args, policy.p)
    if args.engine == "borda":
        if scoring.name != "borda":
            raise UsageError("--engine borda only supports --scoring borda")
        ev = expectation.expected_utilities_borda(policy)
    else:
        ev = expectation.expected_utilities_general(policy, scoring)
    return {"policy": str(policy), "scoring": scoring.name, **_vector(ev, args.places)}, 0


def cmd_probabilities(args):
    policy = _policy(args)
    matrix = expectation.pick_probabilities(policy)
    return {
        "policy": str(policy),
        "index": "a[agent][q]: probability of the item ranked p-q+1, q = 1..p",
        "rows": [{"agent": i, "a": [format_exact(x) for x in row]} for i, row in enumerate(matrix, 1)],
    }, 0


def cmd_optimize(args):
    scoring = _scoring(args, args.items)
    result = optimality.optimal_policy(args.agents, args.items, scoring)
    alt = Policy.alternating(args.agents, args.items)
    return {
        "agents": args.agents,
        "items": args.items,
        "scoring": scoring.name,
        "evaluated": result.evaluated,
        "argmax": [str(p) for p in result.argmax],
        "max_sw": exact_payload(result.max_sw, args.places),
        "alternating_in_argmax": alt in result.argmax,
    }, 0


def cmd_compare(args):
    n, p = args.agents, args.items
    alt = expectation.expected_utilities_borda(Policy.alternating(n, p)).sw
    best = expectation.bestpref_expected_sw(n, p)
    rand = expectation.random_expected_sw(n, p)
    rows = [("AltPolicy", alt), ("BestPref", best), ("Random", rand)]
    payload = {
        "title": "Expected utilitarian social welfare for different mechanisms",
        "agents": n,
        "items": p,
        "mechanisms": [{"mechanism": name, **exact_payload(v, args.places)} for name, v in rows],
        "ordering_ok": rand <= alt <= best,
    }
    if n == 2:
        payload["alt_closed_form"] = exact_payload(expectation.alt_sw_two_agents(p), args.places)
    return payload, 0


def cmd_tree(args):
    return {"depth": args.depth, "tree": optimality.policy_tree(args.depth).to_json(args.places)}, 0


def cmd_aksets(args):
    points = optimality.ak_from_recursion(args.k, provenance=args.provenance)
    payload = {
        "k": args.k,
        "size": len(points),
        "points": [
            {"a": format_exact(pt.a), "b": format_exact(pt.b),
             "sum": exact_payload(pt.a + pt.b, args.places),
             **({"policy": str(pt.policy)} if pt.policy else {})}
            for pt in points
        ] if not args.summary else None,
        "max_sum": exact_payload(max(pt.a + pt.b for pt in points), args.places),
    }
    status = 0
    if args.verify:
        witnesses = [pt for pt in points if pt.a + pt.b > 0]
        checks = {"nonpositive_sums": not witnesses}
        if args.k <= args.definition_max:
            checks["matches_definition"] = optimality.same_multiset(
                points, optimality.ak_from_definition(args.k))
        payload["verify"] = checks
        if witnesses:
            payload["witness"] = {"a": format_exact(witnesses[0].a), "b": format_exact(witnesses[0].b)}
        if not all(checks.values()):
            status = 1
    return payload, status


def cmd_lemmas(args):
    reports = [optimality.verify_gamma_inequalities(args.k_max, args.m_max).to_json()]

    comp = optimality.Report("explicit G/F equal compositions, parity sum formulas")
    pts = [(Fraction(0), Fraction(0)), (Fraction(3, 7), Fraction(-5, 11)), (Fraction(-2), Fraction(9, 4))]
    for k in range(1, args.ops_k + 1):
        for m in range(0, args.ops_m + 1):
            for pt in pts:
                g = optimality.G_explicit(k, m, pt)
                comp.checked += 1
                if g != optimality.G_composed(k, m, pt) or sum(g) != optimality.coordinate_sum_G(k, m, pt):
                    comp.violations.append({"op": "G", "k": k, "m": m, "point": [str(x) for x in pt]})
                if m >= 1:
                    f = optimality.F_explicit(k, m, pt)
                    comp.checked += 1
                    if f != optimality.F_composed(k, m, pt) or sum(f) != optimality.coordinate_sum_F(k, m, pt):
                        comp.violations.append({"op": "F", "k": k, "m": m, "point": [str(x) for x in pt]})
    reports.append(comp.to_json())
    reports.append(optimality.verify_coordinate_sums(args.sums_k, args.sums_m).to_json())
    ok = all(r["ok"] for r in reports)
    return {"reports": reports, "ok": ok}, 0 if ok else 1


def cmd_oracle(args):
    policy = _policy(args)
    scoring = _scoring(args, policy.p)
    if args.strategy == "truthful":
        ev = model.brute_force_expectation(policy, scoring)
    else:
        ev = strategic.expected_strategic_utilities(policy, scoring, mode="exact")
    return {"policy": str(policy), "strategy": args.strategy, "scoring": scoring.name,
            "profiles": model.count_profiles(policy.n, policy.p), **_vector(ev, args.places)}, 0


def cmd_strategic(args):
    if args.check_optimality:
        if args.items is None:
            raise UsageError("--check-optimality needs --items")
        scoring = _scoring(args, args.items)
        rep = strategic.verify_strategic_optimality(args.items, scoring)
        payload = {
            "items": rep.items,
            "scoring": rep.scoring,
            "argmax": rep.argmax,
            "max_sw": exact_payload(rep.max_sw, args.places),
            "alternating": rep.alternating,
            "alternating_optimal": rep.alternating_optimal,
            "reversal_symmetric": [
                {"policy": k, "truthful_sw": exact_payload(rep.truthful_sw[k], args.places),
                 "strategic_sw": exact_payload(rep.strategic_sw[k], args.places)}
                for k in rep.reversal_symmetric
            ],
        }
        return payload, 0 if rep.alternating_optimal else 1
    policy = _policy(args)
    scoring = _scoring(args, policy.p)
    if args.profile:
        try:
            profile = Profile.from_json(args.profile)
        except (ValueError, TypeError) as exc:
            raise UsageError(f"bad --profile: {exc}") from None
        out = strategic.spne_play(policy, profile, scoring)
        truthful = model.truthful_play(policy, profile)
        return {
            "policy": str(policy),
            "profile": [list(r) for r in profile.rankings],
            "strategic": {
                "bundles": {str(i): list(b) for i, b in out.allocation.bundles.items()},
                "utilities": [exact_payload(u, args.places) for u in out.utilities],
            },
            "truthful": {
                "bundles": {str(i): list(b) for i, b in truthful.bundles.items()},
                "utilities": [exact_payload(model.bundle_utility(truthful, profile, scoring, i), args.places)
                              for i in range(1, policy.n + 1)],
            },
            "manipulated": out.manipulated,
        }, 0
    if args.trials is not None:
        est = strategic.expected_strategic_utilities(policy, scoring, mode="sampled",
                                                     trials=args.trials, seed=args.seed)
        return {"policy": str(policy), "mode": "sampled", "trials": est.trials, "seed": est.seed,
                "means": [round(m, args.places) for m in est.means],
                "sw_mean": round(est.sw_mean, args.places)}, 0
    ev = strategic.expected_strategic_utilities(policy, scoring, mode="exact")
    return {"policy": str(policy), "mode": "exact", **_vector(ev, args.places)}, 0


def cmd_sample(args):
    places = args.places
    if args.gap_event:
        if args.items is None:
            raise UsageError("--gap-event needs --items")
        est = model.sample_mechanism_gap(args.items, args.epsilon, args.trials, args.seed)
        holds = est.exceed_frequency <= est.epsilon
        return {
            "check": "P(BestPref sw - AltPolicy sw >= p/(6 eps)) <= eps",
            "items": est.items, "epsilon": est.epsilon, "threshold": round(est.threshold, places),
            "exceed_frequency": round(est.exceed_frequency, places),
            "mean_gap": round(est.mean_gap, places),
            "gap_stderr": None if est.gap_stderr is None else round(est.gap_stderr, places),
            "mean_gap_bound": round(est.items / 6, places),
            "holds": holds, "trials": est.trials, "seed": est.seed,
            "generator": "numpy.random.PCG64",
        }, 0 if holds else 1
    policy = _policy(args)
    scoring = _scoring(args, policy.p)
    est = model.sample_expectation(policy, scoring, args.trials, args.seed)

    def r(x):
        return None if x is None else round(x, places)

    return {
        "policy": str(policy), "scoring": scoring.name, "trials": est.trials, "seed": est.seed,
        "generator": est.generator,
        "agents": [{"agent": i, "mean": r(m), "stderr": r(e)}
                   for i, (m, e) in enumerate(zip(est.means, est.stderrs), 1)],
        "sw": {"mean": r(est.sw_mean), "stderr": r(est.sw_stderr)},
    }, 0


def cmd_explore_convex(args):
    """Exploratory: is the alternating policy an argmax under a convex scoring?"""
    out = []
    for p in range(2, args.items + 1):
        scoring = _scoring(args, p)
        result = optimality.optimal_policy(2, p, scoring)
        out.append({"items": p, "argmax": [str(x) for x in result.argmax],
                    "alternating_in_argmax": Policy.alternating(2, p) in result.argmax,
                    "max_sw": exact_payload(result.max_sw, args.places)})
    return {"note": "exploratory search; no claim is asserted", "scoring": args.scoring, "results": out}, 0


# -- output ------------------------------------------------------------------

def _csv(payload: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "agents" in payload and isinstance(payload["agents"], list) and "sw" in payload:
        label = payload.get("policy", "")
        keys = [k for k in payload["agents"][0] if k != "agent"]
        w.writerow(["policy", "row", *keys])
        for row in payload["agents"]:
            w.writerow([label, f"agent{row['agent']}", *(row[k] for k in keys)])
        w.writerow([label, "sw", *(payload["sw"].get(k) for k in keys)])
        return buf.getvalue()
    if "mechanisms" in payload:
        w.writerow(["mechanism", "exact", "decimal"])
        for row in payload["mechanisms"]:
            w.writerow([row["mechanism"], row["exact"], row["decimal"]])
        return buf.getvalue()
    w.writerow(["key", "value"])
    for key, value in _flatten(payload):
        w.writerow([key, value])
    return buf.getvalue()


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


# -- parser ------------------------------------------------------------------

def _scoring_parent(default: str) -> argparse.ArgumentParser:
    # parents share action objects, so each default needs its own parent
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--scoring", default=default,
                        choices=["borda", "approval", "quasi", "linear", "lex", "table"])
    parent.add_argument("--k", type=int, help="approval threshold")
    parent.add_argument("--big", default="100", help="N for quasi-indifferent scoring")
    parent.add_argument("--alpha", default="-1", help="slope for linear scoring (<= 0)")
    parent.add_argument("--beta", default="0", help="intercept for linear scoring")
    parent.add_argument("--table", help="explicit comma-separated g(1),...,g(p)")
    return parent


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--places", type=int, default=DEFAULT_PLACES, help="decimal places in renderings")

    scoring = _scoring_parent("borda")

    pol = argparse.ArgumentParser(add_help=False)
    pol.add_argument("--policy", help='picking sequence, e.g. "121212" or "1,2,10"')
    pol.add_argument("--agents", type=int, help="agent count if larger than the largest label")

    parser = argparse.ArgumentParser(prog="seqalloc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("expect", parents=[common, scoring, pol], help="exact expected utilities")
    p.add_argument("--engine", choices=["borda", "general"], default="general")
    p.set_defaults(func=cmd_expect)

    p = sub.add_parser("probabilities", parents=[common, pol], help="pick-probability matrix")
    p.set_defaults(func=cmd_probabilities)

    p = sub.add_parser("optimize", parents=[common, scoring], help="exhaustive optimal-policy search")
    p.add_argument("--agents", type=int, default=2)
    p.add_argument("--items", type=int, required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compare", parents=[common], help="AltPolicy vs BestPref vs Random")
    p.add_argument("--agents", type=int, default=2)
    p.add_argument("--items", type=int, required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("tree", parents=[common], help="policy tree with expected welfare")
    p.add_argument("--depth", type=int, default=5)
    p.set_defaults(func=cmd_tree)

    p = sub.add_parser("aksets", parents=[common], help="difference sets A_k")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--provenance", action="store_true", help="attach the policy of each point")
    p.add_argument("--summary", action="store_true", help="omit the point list")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--definition-max", type=int, default=12,
                   help="also compare with per-policy computation up to this k")
    p.set_defaults(func=cmd_aksets)

    p = sub.add_parser("lemmas", parents=[common], help="operator identities and inequality sweeps")
    p.add_argument("--k-max", type=int, default=200)
    p.add_argument("--m-max", type=int, default=200)
    p.add_argument("--ops-k", type=int, default=20)
    p.add_argument("--ops-m", type=int, default=20)
    p.add_argument("--sums-k", type=int, default=14)
    p.add_argument("--sums-m", type=int, default=30)
    p.set_defaults(func=cmd_lemmas)

    p = sub.add_parser("oracle", parents=[common, scoring, pol], help="brute force over all profiles")
    p.add_argument("--strategy", choices=["truthful", "spne"], default="truthful")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("strategic", parents=[common, scoring, pol], help="subgame-perfect play")
    p.add_argument("--profile", help="JSON list of rankings for a single game")
    p.add_argument("--items", type=int)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="enumerate all profiles (default)")
    mode.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--check-theorem3", "--check-optimality", dest="check_optimality", action="store_true",
                   help="exact strategic welfare of every policy at --items")
    p.set_defaults(func=cmd_strategic)

    p = sub.add_parser("sample", parents=[common, scoring, pol], help="seeded Monte Carlo estimates")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gap-event", action="store_true", help="BestPref/AltPolicy gap event check")
    p.add_argument("--items", type=int)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("explore-convex", parents=[common, _scoring_parent("lex")],
                       help="exploratory optimal-policy search under convex scoring")
    p.add_argument("--items", type=int, default=8)
    p.set_defaults(func=cmd_explore_convex)

    return parser


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        payload, status = args.func(args)
    except (UsageError, ValueError, limits.SizeLimitError) as exc:
        print(f"seqalloc {args.command}: {exc}", file=sys.stderr)
        return 2
    payload["config"] = _config(args)
    if args.format == "csv":
        stdout.write(_csv(payload))
    else:
        stdout.write(json.dumps(payload, indent=2) + "\n")
    if status:
        print(f"seqalloc {args.command}: verification failed", file=sys.stderr)
    return status


def main() -> None:
    sys.exit(run())
