"""Shared test helpers: instance builders, random generators, criterion recorder."""

from __future__ import annotations

import math
import random
from typing import Dict, List, Optional, Sequence, Tuple

from thop import evaluate, nearest_neighbor_route, parse_instance
from thop.evaluation import PackingPlan
from thop.instance import Instance


def build_instance_text(
    coords: Sequence[Tuple[float, float]],
    items: Sequence[Tuple[float, float, int]],
    W: float,
    T: float,
    vmax: float = 1.0,
    vmin: float = 0.5,
    name: str = "generated",
) -> str:
    """Render instance text from (x, y) coords and (profit, weight, city) items."""

    def num(x: float) -> str:
        return str(int(x)) if float(x).is_integer() else repr(float(x))

    lines = [
        f"PROBLEM NAME: {name}",
        f"DIMENSION: {len(coords)}",
        f"NUMBER OF ITEMS: {len(items)}",
        f"CAPACITY OF KNAPSACK: {num(W)}",
        f"MAX TIME: {num(T)}",
        f"MIN SPEED: {num(vmin)}",
        f"MAX SPEED: {num(vmax)}",
        "NODE_COORD_SECTION (INDEX, X, Y):",
    ]
    for i, (x, y) in enumerate(coords, start=1):
        lines.append(f"{i} {num(x)} {num(y)}")
    lines.append("ITEMS SECTION (INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER):")
    for k, (p, w, c) in enumerate(items, start=1):
        lines.append(f"{k} {num(p)} {num(w)} {c}")
    return "\n".join(lines) + "\n"


def make_instance(coords, items, W, T, vmax=1.0, vmin=0.5, name="generated") -> Instance:
    return parse_instance(build_instance_text(coords, items, W, T, vmax, vmin, name), name=name)


def _distinct_points(rng: random.Random, n: int, span: int) -> List[Tuple[int, int]]:
    points: List[Tuple[int, int]] = []
    seen = set()
    while len(points) < n:
        pt = (rng.randint(0, span), rng.randint(0, span))
        if pt not in seen:
            seen.add(pt)
            points.append(pt)
    return points


def _empty_route_time(inst: Instance, route) -> float:
    return evaluate(inst, route, PackingPlan.empty()).travel_time


def random_tiny_instance(rng: random.Random, name: str = "tiny") -> Instance:
    """Small instance in the oracle-tractable regime: n in [4,7], m in [2,6]."""
    n = rng.randint(4, 7)
    m = rng.randint(2, 6)
    coords = _distinct_points(rng, n, span=50)
    items = []
    for _ in range(m):
        items.append((rng.randint(1, 100), rng.randint(1, 50), rng.randint(2, n - 1)))
    total_w = sum(w for _, w, _ in items)
    lo = max(min(w for _, w, _ in items), math.ceil(0.3 * total_w))
    hi = max(lo, math.ceil(0.7 * total_w))
    W = rng.randint(lo, hi)
    vmin = round(rng.uniform(0.1, 0.9), 2)

    probe = make_instance(coords, items, W=W, T=1.0, vmin=vmin, name=name)
    direct = probe.distance(1, n) / probe.vmax
    nn_time = _empty_route_time(probe, nearest_neighbor_route(probe))
    T = direct + rng.uniform(0.15, 1.2) * (nn_time - direct) + 0.5
    return make_instance(coords, items, W=W, T=round(T, 3), vmin=vmin, name=name)


def synthetic_benchmark_text(
    n: int,
    items_per_city: int,
    ktype: str,
    cap_class: int,
    time_class: int,
    seed: int,
    base: str = "synth",
) -> str:
    """Benchmark-style instance: grid coords, per-city item lists, class-scaled W and T.

    ktype: 'unc' independent profit/weight, 'usw' near-constant weights,
    'bsc' profit tied to weight (strongly correlated).
    """
    rng = random.Random(f"bench:{base}:{n}:{items_per_city}:{ktype}:{cap_class}:{time_class}:{seed}")
    coords = _distinct_points(rng, n, span=500)
    items = []
    for city in range(2, n):
        for _ in range(items_per_city):
            if ktype == "unc":
                w = rng.randint(1, 1000)
                p = rng.randint(1, 1000)
            elif ktype == "usw":
                w = rng.randint(1000, 1010)
                p = rng.randint(1, 1000)
            elif ktype == "bsc":
                w = rng.randint(1, 1000)
                p = w + 100
            else:
                raise ValueError(f"unknown ktype {ktype!r}")
            items.append((p, w, city))
    total_w = sum(w for _, w, _ in items)
    W = math.ceil(cap_class / 11.0 * total_w)
    vmax, vmin = 1.0, 0.1

    name = f"{base}{n}_{items_per_city:02d}_{ktype}_{cap_class:02d}_{time_class:02d}"
    probe = parse_instance(
        build_instance_text(coords, items, W=W, T=1.0, vmax=vmax, vmin=vmin, name=name), name=name
    )
    direct = probe.distance(1, n) / vmax
    nn_route = nearest_neighbor_route(probe)
    slow_nn = _empty_route_time(probe, nn_route) * (vmax / vmin)
    T = math.ceil(direct + time_class / 10.0 * (slow_nn - direct))
    return build_instance_text(coords, items, W=W, T=T, vmax=vmax, vmin=vmin, name=name)


def synthetic_benchmark(n, items_per_city, ktype, cap_class, time_class, seed, base="synth") -> Instance:
    text = synthetic_benchmark_text(n, items_per_city, ktype, cap_class, time_class, seed, base)
    name = f"{base}{n}_{items_per_city:02d}_{ktype}_{cap_class:02d}_{time_class:02d}"
    return parse_instance(text, name=name)


# ---- acceptance criterion reporting ---------------------------------------------

_CRITERION_LINES: Dict[int, str] = {}


def record_criterion(num: int, passed: Optional[bool], detail: str = "") -> None:
    tag = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    line = f"[criterion {num}] {tag}: {detail}" if detail else f"[criterion {num}] {tag}"
    _CRITERION_LINES[num] = line
    print(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _CRITERION_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for num in sorted(_CRITERION_LINES):
            terminalreporter.write_line(_CRITERION_LINES[num])
