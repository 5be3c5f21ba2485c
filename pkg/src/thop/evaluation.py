"""Exact evaluation of (route, packing plan) solutions.

Semantics: the thief arrives at a city, loads the items picked there, and the
new weight slows every subsequent leg: t_next = t + d / (vmax - nu * q) where
q is the knapsack weight after leaving the current city. Evaluation is pure
and sequential so results are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

from .instance import Instance

# Tolerance on t <= T comparisons, shared with the constraint verifier.
EPS_T = 1e-6

Route = List[int]


class InfeasibleSolutionError(ValueError):
    """Raised by strict evaluation when a solution violates a constraint."""


def validate_route(inst: Instance, route: Sequence[int]) -> None:
    """Structural route checks: starts at 1, ends at n, no repeats, valid cities."""
    if len(route) < 2:
        raise ValueError(f"route must contain at least [1, n], got {list(route)}")
    if route[0] != 1:
        raise ValueError(f"route must start at city 1, got {route[0]}")
    if route[-1] != inst.n:
        raise ValueError(f"route must end at city {inst.n}, got {route[-1]}")
    seen = set()
    for c in route:
        if not (1 <= c <= inst.n):
            raise ValueError(f"route city {c} out of range 1..{inst.n}")
        if c in seen:
            raise ValueError(f"route repeats city {c}")
        seen.add(c)


def speed(inst: Instance, w: float) -> float:
    """Travel speed with knapsack weight w: vmax - nu * w."""
    if w < 0 or w > inst.W:
        raise ValueError(f"weight {w} outside [0, {inst.W}]")
    return inst.vmax - inst.nu * w


@dataclass(frozen=True)
class PackingPlan:
    """Picked-item set with cached totals. `picks` is the sorted id tuple."""

    picks: Tuple[int, ...]
    total_profit: float
    total_weight: float

    @classmethod
    def from_picks(cls, inst: Instance, picks: Iterable[int]) -> "PackingPlan":
        ids = sorted(set(int(k) for k in picks))
        if ids and not (1 <= ids[0] and ids[-1] <= inst.m):
            raise ValueError(f"item id out of range 1..{inst.m}: {ids}")
        profit, weight, _ = inst.item_columns()
        total_p = 0.0
        total_w = 0.0
        for k in ids:
            total_p += profit[k - 1]
            total_w += weight[k - 1]
        return cls(tuple(ids), total_p, total_w)

    @classmethod
    def empty(cls) -> "PackingPlan":
        return cls((), 0.0, 0.0)

    def z_vector(self, m: int) -> List[int]:
        """Dense 0/1 indicator list of length m (index = item id - 1)."""
        z = [0] * m
        for k in self.picks:
            z[k - 1] = 1
        return z


@dataclass(frozen=True)
class Evaluation:
    profit: float
    travel_time: float
    final_weight: float
    feasible: bool
    per_leg: Tuple[Tuple[int, float, float], ...]  # (city, arrival time, weight after loading)
    infeasibility: Optional[str] = None


def evaluate(inst: Instance, route: Sequence[int], plan: PackingPlan, strict: bool = False) -> Evaluation:
    """Compute profit, arrival times, and feasibility for a candidate solution.

    Structural route defects always raise. Constraint violations (pick at an
    unrouted city, capacity, time limit) raise only when strict=True;
    otherwise the evaluation is returned with feasible=False and a reason.
    """
    validate_route(inst, route)
    profit_col, weight_col, city_col = inst.item_columns()

    routed = set(route)
    problem: Optional[str] = None
    for k in plan.picks:
        if city_col[k - 1] not in routed:
            problem = f"item {k} picked at unrouted city {city_col[k - 1]}"
            break

    picked = set(plan.picks)
    total_weight = plan.total_weight
    if problem is None and total_weight > inst.W:
        problem = f"total weight {total_weight} exceeds capacity {inst.W}"

    nu = inst.nu
    vmax = inst.vmax
    dist = inst.dist_matrix
    t = 0.0
    q = 0.0
    per_leg: List[Tuple[int, float, float]] = []
    for idx, city in enumerate(route):
        if idx > 0:
            prev = route[idx - 1]
            v = vmax - nu * min(q, inst.W)  # clamp keeps overweight solutions finite
            t += dist[prev - 1, city - 1] / v
        for k in inst.items_at(city):
            if k in picked:
                q += weight_col[k - 1]
        per_leg.append((city, t, q))

    if problem is None and t > inst.T + EPS_T:
        problem = f"travel time {t} exceeds limit {inst.T}"

    if strict and problem is not None:
        raise InfeasibleSolutionError(problem)

    return Evaluation(
        profit=plan.total_profit,
        travel_time=t,
        final_weight=q,
        feasible=problem is None,
        per_leg=tuple(per_leg),
        infeasibility=problem,
    )


@dataclass(frozen=True)
class Solution:
    """A route/plan pair with its cached evaluation."""

    route: Tuple[int, ...]
    plan: PackingPlan
    evaluation: Evaluation

    @classmethod
    def build(cls, inst: Instance, route: Sequence[int], plan: PackingPlan, strict: bool = True) -> "Solution":
        return cls(tuple(route), plan, evaluate(inst, route, plan, strict=strict))

    @property
    def profit(self) -> float:
        return self.plan.total_profit

    @property
    def travel_time(self) -> float:
        return self.evaluation.travel_time


def solution_stats(inst: Instance, route: Sequence[int], plan: PackingPlan) -> Tuple[float, float, float]:
    """(D, %T, %W): distance per visited city, and time/capacity utilization."""
    ev = evaluate(inst, route, plan, strict=False)
    if not ev.feasible:
        raise InfeasibleSolutionError(f"stats require a feasible solution: {ev.infeasibility}")
    dist = inst.dist_matrix
    total_dist = sum(dist[a - 1, b - 1] for a, b in zip(route[:-1], route[1:]))
    d_ratio = total_dist / len(route)
    pct_t = 100.0 * ev.travel_time / inst.T
    pct_w = 100.0 * ev.final_weight / inst.W
    return d_ratio, pct_t, pct_w


# ---- two-line solution text format -----------------------------------------


def format_solution(route: Sequence[int], plan: PackingPlan) -> str:
    """Two lines: `[c1,c2,...]` then `[i1,i2,...]` (empty list as [])."""
    line1 = "[" + ",".join(str(c) for c in route) + "]"
    line2 = "[" + ",".join(str(k) for k in plan.picks) + "]"
    return line1 + "\n" + line2 + "\n"


def parse_solution(text: str) -> Tuple[List[int], List[int]]:
    """Inverse of format_solution; returns (route, picked item ids)."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) != 2:
        raise ValueError(f"solution text must have exactly 2 non-empty lines, got {len(lines)}")

    def parse_list(s: str, what: str) -> List[int]:
        if not (s.startswith("[") and s.endswith("]")):
            raise ValueError(f"{what} must be bracketed, got {s!r}")
        body = s[1:-1].strip()
        if not body:
            return []
        return [int(tok) for tok in body.split(",")]

    return parse_list(lines[0], "route"), parse_list(lines[1], "picks")
