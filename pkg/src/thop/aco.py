"""MAX-MIN ant system over variable-length start-to-end routes.

Ants walk from city 1 and stop the moment they select city n, so route
lengths vary. Pheromones are clamped into [tau_min, tau_max]; by default the
bounds follow tau_max = 1/(rho_eff * (UB + 1 - p_best)), tau_min = tau_max/(2n)
and are recomputed whenever the global best improves. Construction uses
nearest-neighbor candidate lists with a full-scan fallback.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from numba import njit

from .evaluation import PackingPlan, Solution, validate_route
from .instance import Instance

LOCAL_SEARCH_KINDS = ("none", "2opt", "2.5opt", "3opt")

# Table of legal tuning domains; values outside them work but warrant a warning.
PARAM_DOMAINS = {
    "ants": (10, 20, 50, 100, 200, 500, 1000),
    "alpha": (0.0, 10.0),
    "beta": (0.0, 10.0),
    "rho": (0.0, 1.0),
    "ptries": (1, 5),
}

_MIN_RHO_FOR_BOUNDS = 1e-3  # rho=0 is legal; the bound schedule needs a floor


@dataclass(frozen=True)
class AcoParams:
    ants: int = 100
    alpha: float = 1.0
    beta: float = 4.0  # desk-tuned: higher values over-commit to near hops on small n
    rho: float = 0.4
    localsearch: str = "2opt"
    tau_min: Optional[float] = None  # None -> automatic MAX-MIN schedule
    tau_max: Optional[float] = None
    candidate_list: int = 20

    def __post_init__(self):
        if self.ants < 1:
            raise ValueError(f"ants must be >= 1, got {self.ants}")
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError(f"rho must be within [0, 1], got {self.rho}")
        if self.localsearch not in LOCAL_SEARCH_KINDS:
            raise ValueError(f"localsearch must be one of {LOCAL_SEARCH_KINDS}, got {self.localsearch!r}")
        if (self.tau_min is None) != (self.tau_max is None):
            raise ValueError("tau_min and tau_max must be given together")
        if self.tau_min is not None and self.tau_min > self.tau_max:
            raise ValueError(f"tau_min {self.tau_min} exceeds tau_max {self.tau_max}")
        if self.candidate_list < 1:
            raise ValueError("candidate_list must be >= 1")


class PheromoneState:
    """Trail matrix plus the MAX-MIN bookkeeping (bounds, cached best fitness)."""

    def __init__(self, inst: Instance, params: AcoParams, ub: float):
        self.inst = inst
        self.params = params
        self.ub = float(ub)
        self._fixed_bounds = params.tau_min is not None
        if self._fixed_bounds:
            self.tau_min = float(params.tau_min)
            self.tau_max = float(params.tau_max)
        else:
            self.tau_max = self._schedule_tau_max(0.0)
            self.tau_min = self.tau_max / (2 * inst.n)
        self.tau = np.full((inst.n, inst.n), self.tau_max, dtype=np.float64)
        np.fill_diagonal(self.tau, 0.0)
        self.iteration_best_fitness = 0.0
        self.global_best_fitness = 0.0

    def _schedule_tau_max(self, best_profit: float) -> float:
        rho_eff = max(self.params.rho, _MIN_RHO_FOR_BOUNDS)
        return 1.0 / (rho_eff * (self.ub + 1.0 - best_profit))

    def refresh_bounds(self, best_profit: float) -> None:
        """Recompute bounds after a global-best improvement and re-clamp."""
        if self._fixed_bounds:
            return
        self.tau_max = self._schedule_tau_max(best_profit)
        self.tau_min = self.tau_max / (2 * self.inst.n)
        _clip_offdiag(self.tau, self.tau_min, self.tau_max)


def _clip_offdiag(tau: np.ndarray, lo: float, hi: float) -> None:
    np.clip(tau, lo, hi, out=tau)
    np.fill_diagonal(tau, 0.0)


# ---- route construction ------------------------------------------------------


@njit(cache=True, nogil=True)
def _construct(tau_pow, eta_pow, cand, uniforms, n):
    """Walk from city index 0 until index n-1 is drawn; returns visit buffer + length."""
    route = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=np.bool_)
    route[0] = 0
    visited[0] = True
    length = 1
    cur = 0
    end = n - 1
    ncand = cand.shape[1]
    weights = np.empty(n, dtype=np.float64)
    choices = np.empty(n, dtype=np.int64)
    for step in range(n - 1):
        nch = 0
        has_end = False
        for ci in range(ncand):
            j = cand[cur, ci]
            if j < 0:
                break
            if not visited[j]:
                choices[nch] = j
                nch += 1
                if j == end:
                    has_end = True
        if nch == 0:
            # candidate list exhausted: fall back to every unvisited city
            for j in range(1, n):
                if not visited[j]:
                    choices[nch] = j
                    nch += 1
        elif not has_end:
            choices[nch] = end  # the destination is always eligible
            nch += 1
        total = 0.0
        for ci in range(nch):
            j = choices[ci]
            w = tau_pow[cur, j] * eta_pow[cur, j]
            weights[ci] = w
            total += w
        nxt = choices[nch - 1]
        if total > 0.0:
            threshold = uniforms[step] * total
            acc = 0.0
            for ci in range(nch):
                acc += weights[ci]
                if acc >= threshold:
                    nxt = choices[ci]
                    break
        route[length] = nxt
        visited[nxt] = True
        length += 1
        cur = nxt
        if nxt == end:
            break
    return route[:length]


class _AntContext:
    """Per-(instance, params) arrays shared by every construction call."""

    def __init__(self, inst: Instance, params: AcoParams):
        n = inst.n
        dist = inst.dist_matrix
        eta = 1.0 / np.maximum(dist, 1.0)
        self.eta_pow = eta ** params.beta
        k = min(params.candidate_list, max(n - 2, 1))
        cand = np.full((n, k), -1, dtype=np.int64)
        order = np.argsort(dist, axis=1, kind="stable")
        for i in range(n):
            picked = 0
            for j in order[i]:
                if j == i or j == 0:  # never propose returning to the start
                    continue
                cand[i, picked] = j
                picked += 1
                if picked == k:
                    break
        self.cand = cand
        self.beta = params.beta
        self.k = k


_context_cache: dict = {}


def _context_for(inst: Instance, params: AcoParams) -> _AntContext:
    key = (id(inst), params.beta, params.candidate_list)
    hit = _context_cache.get(key)
    if hit is not None and hit[0] is inst:
        return hit[1]
    ctx = _AntContext(inst, params)
    if len(_context_cache) > 16:
        _context_cache.clear()
    _context_cache[key] = (inst, ctx)
    return ctx


def construct_route(
    inst: Instance,
    pher: PheromoneState,
    params: AcoParams,
    rng: random.Random,
) -> List[int]:
    """Sample one route; consumes exactly n uniforms from rng."""
    ctx = _context_for(inst, params)
    uniforms = np.array([rng.random() for _ in range(inst.n)], dtype=np.float64)
    tau_pow = pher.tau ** params.alpha if params.alpha != 1.0 else pher.tau
    idx = _construct(tau_pow, ctx.eta_pow, ctx.cand, uniforms, inst.n)
    return [int(c) + 1 for c in idx]


# ---- local search ------------------------------------------------------------


@njit(cache=True, nogil=True)
def _two_opt(route, dist):
    """First-improvement 2-opt on a path; endpoints stay fixed. In-place."""
    n = route.shape[0]
    improved = True
    while improved:
        improved = False
        for i in range(1, n - 2):
            a = route[i - 1]
            b = route[i]
            for j in range(i + 1, n - 1):
                c = route[j]
                d = route[j + 1]
                delta = dist[a, c] + dist[b, d] - dist[a, b] - dist[c, d]
                if delta < -1e-9:
                    lo = i
                    hi = j
                    while lo < hi:
                        tmp = route[lo]
                        route[lo] = route[hi]
                        route[hi] = tmp
                        lo += 1
                        hi -= 1
                    improved = True
                    b = route[i]
            # fall through: keep scanning from the next i
    return route


@njit(cache=True, nogil=True)
def _reinsert_pass(route, dist):
    """Move single cities to their best position (or-opt of length 1). In-place."""
    n = route.shape[0]
    improved = True
    any_change = False
    while improved:
        improved = False
        for i in range(1, n - 1):
            b = route[i]
            a = route[i - 1]
            c = route[i + 1]
            removal_gain = dist[a, b] + dist[b, c] - dist[a, c]
            if removal_gain <= 1e-9:
                continue
            best_delta = 1e-9  # strict improvement only, else this never terminates
            best_pos = -1
            for j in range(0, n - 1):
                if j == i or j == i - 1:
                    continue
                u = route[j]
                v = route[j + 1]
                insert_cost = dist[u, b] + dist[b, v] - dist[u, v]
                delta = removal_gain - insert_cost
                if delta > best_delta:
                    best_delta = delta
                    best_pos = j
            if best_pos >= 0:
                if best_pos < i:
                    for t in range(i, best_pos + 1, -1):
                        route[t] = route[t - 1]
                    route[best_pos + 1] = b
                else:
                    for t in range(i, best_pos):
                        route[t] = route[t + 1]
                    route[best_pos] = b
                improved = True
                any_change = True
    return any_change


@njit(cache=True, nogil=True)
def _route_length(route, dist):
    total = 0.0
    for i in range(route.shape[0] - 1):
        total += dist[route[i], route[i + 1]]
    return total


@njit(cache=True, nogil=True)
def _three_opt(route, dist):
    """First-improvement 3-opt on a path via segment reordering/reversal."""
    n = route.shape[0]
    improved = True
    while improved:
        improved = False
        for i in range(1, n - 3):
            for j in range(i + 1, n - 2):
                for k in range(j + 1, n - 1):
                    # segments: X = [..i-1], Y = [i..j], Z = [j+1..k], tail from k+1
                    x_end = route[i - 1]
                    y_start = route[i]
                    y_end = route[j]
                    z_start = route[j + 1]
                    z_end = route[k]
                    w_start = route[k + 1]
                    removed = dist[x_end, y_start] + dist[y_end, z_start] + dist[z_end, w_start]
                    best_case = 0
                    best_gain = 1e-9
                    # 1: reverse Y            2: reverse Z           3: reverse both
                    # 4: swap to Z then Y     5: Z then rev(Y)       6: rev(Z) then Y
                    # 7: rev(Z) then rev(Y)
                    g = removed - (dist[x_end, y_end] + dist[y_start, z_start] + dist[z_end, w_start])
                    if g > best_gain:
                        best_gain = g
                        best_case = 1
                    g = removed - (dist[x_end, y_start] + dist[y_end, z_end] + dist[z_start, w_start])
                    if g > best_gain:
                        best_gain = g
                        best_case = 2
                    g = removed - (dist[x_end, y_end] + dist[y_start, z_end] + dist[z_start, w_start])
                    if g > best_gain:
                        best_gain = g
                        best_case = 3
                    g = removed - (dist[x_end, z_start] + dist[z_end, y_start] + dist[y_end, w_start])
                    if g > best_gain:
                        best_gain = g
                        best_case = 4
                    g = removed - (dist[x_end, z_start] + dist[z_end, y_end] + dist[y_start, w_start])
                    if g > best_gain:
                        best_gain = g
                        best_case = 5
                    g = removed - (dist[x_end, z_end] + dist[z_start, y_start] + dist[y_end, w_start])
                    if g > best_gain:
                        best_gain = g
                        best_case = 6
                    g = removed - (dist[x_end, z_end] + dist[z_start, y_end] + dist[y_start, w_start])
                    if g > best_gain:
                        best_gain = g
                        best_case = 7
                    if best_case == 0:
                        continue
                    y = route[i : j + 1].copy()
                    z = route[j + 1 : k + 1].copy()
                    if best_case == 1:
                        route[i : j + 1] = y[::-1]
                    elif best_case == 2:
                        route[j + 1 : k + 1] = z[::-1]
                    elif best_case == 3:
                        route[i : j + 1] = y[::-1]
                        route[j + 1 : k + 1] = z[::-1]
                    else:
                        if best_case == 4:
                            seg1, seg2 = z, y
                        elif best_case == 5:
                            seg1, seg2 = z, y[::-1].copy()
                        elif best_case == 6:
                            seg1, seg2 = z[::-1].copy(), y
                        else:
                            seg1, seg2 = z[::-1].copy(), y[::-1].copy()
                        route[i : i + seg1.shape[0]] = seg1
                        route[i + seg1.shape[0] : k + 1] = seg2
                    improved = True
    return route


def local_search(inst: Instance, route: Sequence[int], kind: str) -> List[int]:
    """Shorten a route without changing its city set; endpoints stay fixed."""
    if kind not in LOCAL_SEARCH_KINDS:
        raise ValueError(f"unknown local search kind: {kind!r}")
    validate_route(inst, route)
    if kind == "none" or len(route) <= 3:
        return list(route)
    arr = np.asarray(route, dtype=np.int64) - 1
    dist = inst.dist_matrix
    if kind == "2opt":
        _two_opt(arr, dist)
    elif kind == "2.5opt":
        changed = True
        while changed:
            _two_opt(arr, dist)
            changed = _reinsert_pass(arr, dist)
    else:  # 3opt
        _three_opt(arr, dist)
    return [int(c) + 1 for c in arr]


# ---- fitness & pheromone update ----------------------------------------------


def fitness(ub: float, plan: PackingPlan) -> float:
    """Profit mapped to 1/(UB + 1 - p): higher profit, higher fitness, max 1."""
    p = plan.total_profit
    if p > ub + 1e-9:
        raise ValueError(f"profit {p} exceeds upper bound {ub}: bound or packing bug")
    return 1.0 / (ub + 1.0 - p)


def update_pheromones(pher: PheromoneState, best: "Solution", params: AcoParams) -> PheromoneState:
    """Evaporate all trails, deposit fitness on the best route's arcs, clamp.

    Mutates and returns `pher`. Deposits are symmetric (the instances are).
    """
    deposit = fitness(pher.ub, best.plan)
    pher.tau *= 1.0 - params.rho
    idx = np.asarray(best.route, dtype=np.int64) - 1
    pher.tau[idx[:-1], idx[1:]] += deposit
    pher.tau[idx[1:], idx[:-1]] += deposit
    _clip_offdiag(pher.tau, pher.tau_min, pher.tau_max)
    pher.iteration_best_fitness = deposit
    if deposit > pher.global_best_fitness:
        pher.global_best_fitness = deposit
    return pher
