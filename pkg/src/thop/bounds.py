"""Profit upper bound and an exhaustive exact solver for tiny instances.

The fractional-knapsack bound ignores routing and time entirely, which makes
it a valid (if loose) upper bound for any feasible solution; the ant colony
uses it inside its fitness transform. The brute-force solver is the
correctness oracle for the test suite.
"""

from __future__ import annotations

import itertools
from typing import Optional, Tuple

from .evaluation import EPS_T, PackingPlan, Solution, evaluate
from .instance import Instance


class BruteForceGuardError(ValueError):
    """Instance exceeds the exhaustive-enumeration size guards."""


class NoFeasibleRouteError(ValueError):
    """Even the direct route [1, n] exceeds the time limit."""


def fractional_kp_ub(inst: Instance) -> float:
    """Optimal fractional knapsack value over all m items: greedy by density.

    O(m log m). Dominates every feasible profit because any feasible plan is
    a 0/1 knapsack solution of the same capacity.
    """
    profit, weight, _ = inst.item_columns()
    order = sorted(range(inst.m), key=lambda k: (-(profit[k] / weight[k]), k))
    cap = inst.W
    ub = 0.0
    for k in order:
        if cap <= 0:
            break
        take = min(weight[k], cap)
        ub += profit[k] * (take / weight[k])
        cap -= take
    return float(ub)


def brute_force_solve(inst: Instance, guard_n: int = 8, guard_m: int = 8) -> Solution:
    """Provably optimal solution by exhaustive enumeration.

    Enumerates ordered subsets of the middle cities (increasing size, cities
    in increasing index, permutations in lexicographic order) crossed with all
    feasible item subsets of the routed items. Ties break toward shorter
    travel time, then the lexicographically smaller route.
    """
    if inst.n > guard_n:
        raise BruteForceGuardError(f"n={inst.n} exceeds guard_n={guard_n}")
    if inst.m > guard_m:
        raise BruteForceGuardError(f"m={inst.m} exceeds guard_m={guard_m}")

    profit_col, weight_col, _ = inst.item_columns()
    middle = list(range(2, inst.n))

    best: Optional[Tuple[float, float, Tuple[int, ...], PackingPlan]] = None

    def consider(route, plan) -> None:
        nonlocal best
        ev = evaluate(inst, route, plan, strict=False)
        if not ev.feasible:
            return
        if best is None:
            best = (plan.total_profit, ev.travel_time, tuple(route), plan)
            return
        b_profit, b_time, b_route, _ = best
        if (
            plan.total_profit > b_profit
            or (plan.total_profit == b_profit and ev.travel_time < b_time)
            or (plan.total_profit == b_profit and ev.travel_time == b_time and tuple(route) < b_route)
        ):
            best = (plan.total_profit, ev.travel_time, tuple(route), plan)

    if evaluate(inst, [1, inst.n], PackingPlan.empty(), strict=False).travel_time > inst.T + EPS_T:
        raise NoFeasibleRouteError(f"direct route 1->{inst.n} already exceeds T={inst.T}")

    for size in range(len(middle) + 1):
        for subset in itertools.combinations(middle, size):
            for perm in itertools.permutations(subset):
                route = [1, *perm, inst.n]
                # Adding items only slows the thief: an empty-plan overrun
                # rules out the whole route.
                if evaluate(inst, route, PackingPlan.empty(), strict=False).travel_time > inst.T + EPS_T:
                    continue
                on_route = [k for c in perm for k in inst.items_at(c)]
                on_route.sort()
                for r in range(len(on_route) + 1):
                    for combo in itertools.combinations(on_route, r):
                        w = sum(weight_col[k - 1] for k in combo)
                        if w > inst.W:
                            continue
                        consider(route, PackingPlan.from_picks(inst, combo))

    assert best is not None  # [1, n] with the empty plan is always considered
    _, _, route, plan = best
    return Solution.build(inst, route, plan, strict=True)
