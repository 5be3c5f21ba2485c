"""End-to-end solve loop: construct routes, pack, local-search, prune, update.

Per iteration each ant builds a route and a packing plan; with local search
enabled the shortened route is kept only if it packs strictly better. The
best solution is recorded with its pruned route (cities without picks
removed), pheromones are deposited from the iteration best (global best every
`global_best_every` iterations), and the loop stops on wall clock or an
optional iteration cap.
"""

from __future__ import annotations

import json
import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from .aco import AcoParams, PheromoneState, construct_route, local_search, update_pheromones
from .bounds import fractional_kp_ub
from .evaluation import EPS_T, PackingPlan, Solution, evaluate
from .instance import Instance
from .packing import PackingParams, pack

STATUS_OK = "ok"
STATUS_NO_ROUTE = "no_feasible_route"


@dataclass(frozen=True)
class SolverConfig:
    aco: AcoParams = field(default_factory=AcoParams)
    packing: PackingParams = field(default_factory=PackingParams)
    time_budget: Optional[float] = None  # None -> ceil(0.1 * m) seconds
    seed: int = 1
    threads: int = 1
    max_iterations: Optional[int] = None
    global_best_every: int = 25

    def __post_init__(self):
        if self.time_budget is not None and self.time_budget <= 0:
            raise ValueError(f"time_budget must be positive, got {self.time_budget}")
        if self.threads < 1:
            raise ValueError(f"threads must be >= 1, got {self.threads}")
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")

    def resolved_budget(self, inst: Instance) -> float:
        if self.time_budget is not None:
            return self.time_budget
        if self.max_iterations is not None:
            return math.inf  # iteration-capped runs may ignore the clock
        return default_time_budget(inst)

    def params_dict(self) -> dict:
        a, p = self.aco, self.packing
        return {
            "ants": a.ants,
            "alpha": a.alpha,
            "beta": a.beta,
            "rho": a.rho,
            "localsearch": a.localsearch,
            "candidate_list": a.candidate_list,
            "ptries": p.ptries,
            "pack_exponents": list(p.base_exponents),
            "pack_width": p.perturbation_width,
            "global_best_every": self.global_best_every,
        }


def default_time_budget(inst: Instance) -> float:
    """Benchmark convention: ceil(0.1 * m) seconds, at least 1."""
    return float(max(1, math.ceil(0.1 * inst.m)))


@dataclass
class RunLog:
    """Chronological best-profit trace plus the run's parameter echo.

    In iteration-capped (clockless) mode elapsed values are omitted from the
    serialized form so identical runs serialize byte-identically.
    """

    instance: str
    seed: int
    budget: float
    params: dict
    clocked: bool = True
    records: List[Tuple[float, int, float]] = field(default_factory=list)  # (elapsed, iteration, best profit)
    status: str = STATUS_OK
    iterations: int = 0
    elapsed: float = 0.0
    final_profit: float = 0.0

    def add(self, elapsed: float, iteration: int, best_profit: float) -> None:
        self.records.append((elapsed, iteration, best_profit))

    def to_json_lines(self) -> str:
        meta = {
            "instance": self.instance,
            "seed": self.seed,
            "params": self.params,
            "clock": "wall" if self.clocked else "off",
        }
        if self.clocked:
            meta["budget"] = self.budget
        lines = [json.dumps({"meta": meta}, sort_keys=True)]
        for elapsed, iteration, best in self.records:
            rec = {"iteration": iteration, "best_profit": float(best)}
            if self.clocked:
                rec["elapsed"] = round(float(elapsed), 3)
            lines.append(json.dumps(rec, sort_keys=True))
        summary = {
            "status": self.status,
            "iterations": self.iterations,
            "final_profit": float(self.final_profit),
        }
        if self.clocked:
            summary["elapsed"] = round(float(self.elapsed), 3)
        lines.append(json.dumps({"summary": summary}, sort_keys=True))
        return "\n".join(lines) + "\n"


def prune_route(inst: Instance, route: Sequence[int], plan: PackingPlan) -> List[int]:
    """Drop cities where nothing is picked (keeping 1 and n).

    Valid only under the triangle inequality; instances flagged otherwise are
    returned unchanged.
    """
    if not inst.triangle_ok:
        return list(route)
    keep = {1, inst.n}
    _, _, city_col = inst.item_columns()
    for k in plan.picks:
        keep.add(int(city_col[k - 1]))
    return [c for c in route if c in keep]


def nearest_neighbor_route(inst: Instance) -> List[int]:
    """Greedy full route 1 -> ... -> n visiting every city (n last)."""
    dist = inst.dist_matrix
    unvisited = set(range(2, inst.n))
    route = [1]
    cur = 1
    while unvisited:
        nxt = min(unvisited, key=lambda j: (dist[cur - 1, j - 1], j))
        route.append(nxt)
        unvisited.remove(nxt)
        cur = nxt
    route.append(inst.n)
    return route


_ANT_STRIDE = 1 << 20  # > any plausible iteration or colony count


def _ant_rng(seed: int, iteration: int, ant: int) -> random.Random:
    # Injective integer mix: stable across processes/platforms and much
    # cheaper to seed than a string key.
    return random.Random((seed * _ANT_STRIDE + iteration) * _ANT_STRIDE + ant)


def solve(inst: Instance, cfg: SolverConfig) -> Tuple[Optional[Solution], RunLog]:
    """Run the full metaheuristic; returns (best solution or None, RunLog)."""
    t0 = time.perf_counter()
    budget = cfg.resolved_budget(inst)
    log = RunLog(
        instance=inst.name,
        seed=cfg.seed,
        budget=budget,
        params=cfg.params_dict(),
        clocked=cfg.max_iterations is None,
    )

    direct = evaluate(inst, [1, inst.n], PackingPlan.empty(), strict=False)
    if direct.travel_time > inst.T + EPS_T and inst.triangle_ok:
        # No route can beat the direct leg under the triangle inequality.
        log.status = STATUS_NO_ROUTE
        log.elapsed = time.perf_counter() - t0
        return None, log

    best: Optional[Solution] = None
    if direct.feasible:
        best = Solution.build(inst, [1, inst.n], PackingPlan.empty())

    if inst.m == 0:
        log.final_profit = 0.0
        log.elapsed = time.perf_counter() - t0
        if best is None:
            log.status = STATUS_NO_ROUTE
            return None, log
        log.add(log.elapsed, 0, 0.0)
        return best, log

    ub = fractional_kp_ub(inst)
    pher = PheromoneState(inst, cfg.aco, ub)
    ls_kind = cfg.aco.localsearch

    def run_ant(iteration: int, ant: int):
        rng = _ant_rng(cfg.seed, iteration, ant)
        route = construct_route(inst, pher, cfg.aco, rng)
        plan = pack(inst, route, cfg.packing, rng)
        if ls_kind != "none":
            shorter = local_search(inst, route, ls_kind)
            plan2 = pack(inst, shorter, cfg.packing, rng)
            if plan2.total_profit > plan.total_profit:
                route, plan = shorter, plan2
        return route, plan

    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    iteration = 0
    out_of_time = False
    try:
        while not out_of_time:
            iteration += 1
            iter_best: Optional[Tuple[List[int], PackingPlan]] = None
            if pool is not None:
                results = list(pool.map(lambda a: run_ant(iteration, a), range(cfg.aco.ants)))
            else:
                results = None
            for ant in range(cfg.aco.ants):
                route, plan = results[ant] if results is not None else run_ant(iteration, ant)
                if iter_best is None or plan.total_profit > iter_best[1].total_profit:
                    iter_best = (route, plan)
                if time.perf_counter() - t0 >= budget:
                    out_of_time = True
                    break
            if iter_best is not None:
                pruned = prune_route(inst, iter_best[0], iter_best[1])
                iter_sol = Solution.build(inst, pruned, iter_best[1], strict=False)
                if iter_sol.evaluation.feasible:
                    if best is None or iter_sol.profit > best.profit:
                        best = iter_sol
                        pher.refresh_bounds(best.profit)
                        log.add(time.perf_counter() - t0, iteration, best.profit)
                    if not out_of_time:
                        deposit_from = best if (iteration % cfg.global_best_every == 0) else iter_sol
                        update_pheromones(pher, deposit_from, cfg.aco)
            if cfg.max_iterations is not None and iteration >= cfg.max_iterations:
                break
            if time.perf_counter() - t0 >= budget:
                break
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    log.iterations = iteration
    log.elapsed = time.perf_counter() - t0
    if best is None:
        log.status = STATUS_NO_ROUTE
        return None, log
    log.final_profit = best.profit
    return best, log
