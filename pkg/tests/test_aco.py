import math
import random
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_instance, random_tiny_instance
from thop import (
    AcoParams,
    PackingPlan,
    PheromoneState,
    Solution,
    construct_route,
    fitness,
    fractional_kp_ub,
    local_search,
    update_pheromones,
)

SQUARE = [(0, 0), (3, 0), (3, 4), (6, 4)]
ITEMS = [(10, 4, 2), (6, 3, 3), (9, 10, 3)]


def square_instance():
    return make_instance(SQUARE, ITEMS, W=10, T=100)


def route_length(inst, route):
    return sum(inst.distance(a, b) for a, b in zip(route[:-1], route[1:]))


def test_param_validation():
    AcoParams()  # defaults are legal
    with pytest.raises(ValueError):
        AcoParams(ants=0)
    with pytest.raises(ValueError):
        AcoParams(rho=1.5)
    with pytest.raises(ValueError):
        AcoParams(rho=-0.1)
    with pytest.raises(ValueError):
        AcoParams(localsearch="4opt")
    with pytest.raises(ValueError):
        AcoParams(tau_min=0.1)  # partner missing
    with pytest.raises(ValueError):
        AcoParams(tau_min=0.5, tau_max=0.1)
    with pytest.raises(ValueError):
        AcoParams(candidate_list=0)


def test_trail_bound_schedule_frozen_values():
    inst = square_instance()
    pher = PheromoneState(inst, AcoParams(rho=0.4), ub=10.0)
    assert pher.tau_max == pytest.approx(1.0 / (0.4 * 11.0))
    assert pher.tau_min == pytest.approx(pher.tau_max / 8.0)  # 2n = 8
    off = pher.tau[~np.eye(inst.n, dtype=bool)]
    assert np.all(off == pher.tau_max)  # optimistic start
    assert np.all(np.diag(pher.tau) == 0.0)

    pher.refresh_bounds(best_profit=5.0)
    assert pher.tau_max == pytest.approx(1.0 / (0.4 * 6.0))
    assert pher.tau_min == pytest.approx(pher.tau_max / 8.0)


def test_trail_bounds_rho_floor():
    inst = square_instance()
    pher = PheromoneState(inst, AcoParams(rho=0.0), ub=10.0)
    assert pher.tau_max == pytest.approx(1.0 / (1e-3 * 11.0))
    assert math.isfinite(pher.tau_max)


def test_fixed_bounds_skip_schedule():
    inst = square_instance()
    pher = PheromoneState(inst, AcoParams(tau_min=0.125, tau_max=0.5), ub=10.0)
    assert (pher.tau_min, pher.tau_max) == (0.125, 0.5)
    pher.refresh_bounds(best_profit=9.0)
    assert (pher.tau_min, pher.tau_max) == (0.125, 0.5)


def test_fitness_transform():
    inst = square_instance()
    ub = fractional_kp_ub(inst)
    full = PackingPlan.from_picks(inst, [1, 2])
    assert fitness(ub, full) == pytest.approx(1.0 / (ub + 1.0 - 16.0))
    assert fitness(ub, PackingPlan.empty()) == pytest.approx(1.0 / (ub + 1.0))
    assert fitness(ub, full) > fitness(ub, PackingPlan.from_picks(inst, [1]))
    with pytest.raises(ValueError):
        fitness(5.0, full)  # profit above the bound is a contract violation


def test_update_deposits_on_route_arcs_and_clamps():
    inst = square_instance()
    params = AcoParams(rho=0.4)
    ub = fractional_kp_ub(inst)
    pher = PheromoneState(inst, params, ub=ub)
    best = Solution.build(inst, [1, 2, 3, 4], PackingPlan.from_picks(inst, [1, 2]))
    update_pheromones(pher, best, params)

    deposit = 1.0 / (ub + 1.0 - 16.0)
    # arcs on the best route may hit the upper clamp; the rest only evaporate
    expected_off_route = 0.6 * pher.tau_max  # tau started at tau_max
    assert pher.tau[0, 2] == pytest.approx(expected_off_route)
    assert pher.tau[0, 1] == pytest.approx(min(expected_off_route + deposit, pher.tau_max))
    assert pher.tau[1, 0] == pher.tau[0, 1]  # symmetric deposit
    assert pher.iteration_best_fitness == pytest.approx(deposit)
    assert np.all(np.diag(pher.tau) == 0.0)


def test_bounds_hold_after_thousand_updates():
    rng = random.Random(8)
    inst = random_tiny_instance(rng, name="bounds")
    params = AcoParams(rho=0.2, localsearch="none")
    ub = fractional_kp_ub(inst)
    pher = PheromoneState(inst, params, ub=ub)
    middles = list(range(2, inst.n))
    for step in range(1000):
        rng.shuffle(middles)
        route = [1] + middles[: rng.randint(0, len(middles))] + [inst.n]
        sol = Solution.build(inst, route, PackingPlan.empty(), strict=False)
        update_pheromones(pher, sol, params)
        if step % 97 == 0:
            pher.refresh_bounds(best_profit=0.0)
        off = pher.tau[~np.eye(inst.n, dtype=bool)]
        assert np.all(off >= pher.tau_min - 1e-12)
        assert np.all(off <= pher.tau_max + 1e-12)


def _routes_are_valid(inst, route):
    assert route[0] == 1
    assert route[-1] == inst.n
    assert len(set(route)) == len(route)
    assert all(1 <= c <= inst.n for c in route)


def test_construct_route_validity_and_stream():
    rng = random.Random(12)
    for k in range(20):
        inst = random_tiny_instance(rng, name=f"cr{k}")
        params = AcoParams()
        pher = PheromoneState(inst, params, ub=fractional_kp_ub(inst))
        lane = random.Random(k)
        route = construct_route(inst, pher, params, lane)
        _routes_are_valid(inst, route)
        # exactly n uniforms consumed, independent of route length
        ref = random.Random(k)
        for _ in range(inst.n):
            ref.random()
        assert lane.random() == ref.random()


def test_first_step_roulette_is_uniform_when_unbiased():
    # equal trails and beta=0 make every first hop equally likely
    inst = square_instance()
    params = AcoParams(beta=0.0)
    pher = PheromoneState(inst, params, ub=10.0)
    rng = random.Random(1234)
    draws = 3000
    counts = Counter(construct_route(inst, pher, params, rng)[1] for _ in range(draws))
    assert set(counts) == {2, 3, 4}
    expected = draws / 3
    sigma = math.sqrt(draws * (1 / 3) * (2 / 3))
    for city in (2, 3, 4):
        assert abs(counts[city] - expected) <= 3 * sigma


def test_biased_trails_steer_construction():
    inst = square_instance()
    params = AcoParams(beta=0.0, alpha=1.0, tau_min=1e-6, tau_max=1.0)
    pher = PheromoneState(inst, params, ub=10.0)
    pher.tau[0, :] = 1e-6
    pher.tau[0, 2] = 1.0  # push the first hop toward city 3
    pher.tau[0, 0] = 0.0
    rng = random.Random(5)
    first = Counter(construct_route(inst, pher, params, rng)[1] for _ in range(500))
    assert first[3] > 490


def test_local_search_shortens_crossed_route():
    coords = [(0, 0), (1, 0), (2, 0), (3, 0)]
    inst = make_instance(coords, [(1, 1, 2)], W=5, T=1000)
    fixed = local_search(inst, [1, 3, 2, 4], "2opt")
    assert fixed == [1, 2, 3, 4]
    assert route_length(inst, fixed) == 3


def test_local_search_none_and_short_routes():
    inst = square_instance()
    assert local_search(inst, [1, 3, 2, 4], "none") == [1, 3, 2, 4]
    assert local_search(inst, [1, 4], "3opt") == [1, 4]
    with pytest.raises(ValueError):
        local_search(inst, [1, 3, 2, 4], "best-of-breed")
    with pytest.raises(ValueError):
        local_search(inst, [4, 2, 3, 1], "2opt")


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_local_search_never_lengthens(data):
    rng = random.Random(data.draw(st.integers(0, 50_000), label="seed"))
    inst = random_tiny_instance(rng, name="ls")
    middles = list(range(2, inst.n))
    rng.shuffle(middles)
    route = [1] + middles[: rng.randint(0, len(middles))] + [inst.n]
    kind = data.draw(st.sampled_from(["none", "2opt", "2.5opt", "3opt"]), label="kind")
    improved = local_search(inst, route, kind)
    assert improved[0] == 1 and improved[-1] == inst.n
    assert sorted(improved) == sorted(route)  # same city set
    assert route_length(inst, improved) <= route_length(inst, route)
