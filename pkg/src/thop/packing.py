"""Randomized packing heuristic for a fixed route.

Each attempt scores every item k available on the route by

    score(k) = p_k^(A+dA) / (w_k^(B+dB) * d_k^(C+dC))

where d_k is the remaining route distance from k's city to the final city and
dA/dB/dC are per-attempt uniform perturbations. Items are inserted greedily in
descending score, skipping insertions that would violate the capacity or the
time limit; the best feasible plan over all attempts wins.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .evaluation import EPS_T, PackingPlan, evaluate, validate_route
from .instance import Instance


@dataclass(frozen=True)
class PackingParams:
    ptries: int = 3
    base_exponents: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    perturbation_width: float = 0.2
    rng_seed: Optional[int] = None  # used only when pack() is called without an rng

    def __post_init__(self):
        if self.ptries < 1:
            raise ValueError(f"ptries must be >= 1, got {self.ptries}")
        if self.perturbation_width < 0:
            raise ValueError(f"perturbation_width must be >= 0, got {self.perturbation_width}")


@njit(cache=True, nogil=True)
def _greedy_insert(leg_dist, item_pos, profit, weight, dist_to_end, a, b, c, W, T, vmax, nu, eps):
    """One scored greedy-insertion attempt; returns the pick indicator array.

    Keeps an incremental suffix-time cache: t[j] is the arrival time at route
    position j under the current picks. Recomputing the suffix from the
    insertion point reproduces a from-scratch sequential evaluation exactly
    (same additions in the same order).
    """
    nc = profit.shape[0]
    nlegs = leg_dist.shape[0]
    picks = np.zeros(nc, dtype=np.bool_)

    # q[j] = knapsack weight on leg j (i.e. after leaving route position j)
    q = np.zeros(nlegs, dtype=np.float64)
    t = np.zeros(nlegs + 1, dtype=np.float64)
    for j in range(nlegs):
        t[j + 1] = t[j] + leg_dist[j] / vmax
    if t[nlegs] > T + eps:
        return picks  # the bare route is already late; nothing can be added

    score = np.empty(nc, dtype=np.float64)
    for k in range(nc):
        score[k] = profit[k] ** a / (weight[k] ** b * dist_to_end[k] ** c)
    order = np.argsort(-score, kind="mergesort")  # stable: equal scores by lower id

    total_w = 0.0
    for oi in range(nc):
        k = order[oi]
        wk = weight[k]
        if total_w + wk > W:
            continue
        pos = item_pos[k]
        s = t[pos]
        feasible = True
        for j in range(pos, nlegs):
            s += leg_dist[j] / (vmax - nu * (q[j] + wk))
            if s > T + eps:
                feasible = False
                break
        if not feasible:
            continue
        picks[k] = True
        total_w += wk
        cur = t[pos]
        for j in range(pos, nlegs):
            q[j] += wk
            cur += leg_dist[j] / (vmax - nu * q[j])
            t[j + 1] = cur
    return picks


def _route_item_arrays(inst: Instance, route: Sequence[int]):
    """Candidate items on the route plus the geometry arrays the kernel needs.

    Ants revisit the same handful of routes thousands of times per run, so the
    assembled arrays are memoized per instance under the route tuple.
    """
    cache = inst.__dict__.setdefault("_pack_cache", {})
    key = tuple(route)
    hit = cache.get(key)
    if hit is not None:
        return hit

    profit_col, weight_col, city_col = inst.item_columns()
    route_arr = np.asarray(route, dtype=np.int64)
    leg_dist = inst.dist_matrix[route_arr[:-1] - 1, route_arr[1:] - 1].astype(np.float64)

    ids_parts = [inst.items_at(c) for c in route[1:-1]]
    ids = np.sort(np.concatenate(ids_parts)) if ids_parts else np.empty(0, dtype=np.int64)
    if ids.size == 0:
        result = (ids, None)
    else:
        pos_of_city = {c: i for i, c in enumerate(route)}
        suffix = np.concatenate([np.cumsum(leg_dist[::-1])[::-1], [0.0]])
        positive = leg_dist[leg_dist > 0]
        floor = positive.min() if positive.size else 1.0

        item_pos = np.array([pos_of_city[int(city_col[k - 1])] for k in ids], dtype=np.int64)
        dist_to_end = np.maximum(suffix[item_pos], floor)
        result = (
            ids,
            (leg_dist, item_pos, profit_col[ids - 1], weight_col[ids - 1], dist_to_end),
        )

    if len(cache) >= 8192:
        cache.clear()
    cache[key] = result
    return result


def _attempt(inst: Instance, arrays, exponents) -> np.ndarray:
    leg_dist, item_pos, profit, weight, dist_to_end = arrays
    a, b, c = exponents
    return _greedy_insert(
        leg_dist, item_pos, profit, weight, dist_to_end,
        float(a), float(b), float(c),
        float(inst.W), float(inst.T), float(inst.vmax), float(inst.nu), EPS_T,
    )


def pack(
    inst: Instance,
    route: Sequence[int],
    params: PackingParams,
    rng: Optional[random.Random] = None,
) -> PackingPlan:
    """Best feasible plan over ptries randomized attempts (ties: earliest attempt).

    All randomness is drawn from `rng`; exactly three uniforms per attempt,
    regardless of perturbation width, so streams stay aligned across
    configurations.
    """
    if rng is None:
        rng = random.Random(params.rng_seed)
    validate_route(inst, route)
    ids, arrays = _route_item_arrays(inst, route)
    if ids.size == 0:
        return PackingPlan.empty()

    base_a, base_b, base_c = params.base_exponents
    width = params.perturbation_width
    item_profit = arrays[2]
    best_picks = None
    best_profit = -1.0
    for _ in range(params.ptries):
        da = rng.uniform(-width, width)
        db = rng.uniform(-width, width)
        dc = rng.uniform(-width, width)
        picks = _attempt(inst, arrays, (base_a + da, base_b + db, base_c + dc))
        attempt_profit = float(item_profit[picks].sum())
        if best_picks is None or attempt_profit > best_profit:
            best_picks = picks
            best_profit = attempt_profit
    best_plan = PackingPlan.from_picks(inst, ids[best_picks])

    # The kernel's incremental times mirror evaluate() exactly; enforce that
    # contract on every call (cheap: one O(|route|+m) evaluation). A route
    # whose bare travel already misses T legitimately yields the empty plan.
    if best_plan.picks:
        ev = evaluate(inst, route, best_plan, strict=False)
        if not ev.feasible:
            raise AssertionError(f"packing produced an infeasible plan: {ev.infeasibility}")
    return best_plan


def pack_deterministic(
    inst: Instance,
    route: Sequence[int],
    exponents: Tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> PackingPlan:
    """Single unperturbed attempt; the degenerate ptries=1, width=0 case."""
    validate_route(inst, route)
    ids, arrays = _route_item_arrays(inst, route)
    if ids.size == 0:
        return PackingPlan.empty()
    picks = _attempt(inst, arrays, exponents)
    return PackingPlan.from_picks(inst, ids[picks])
