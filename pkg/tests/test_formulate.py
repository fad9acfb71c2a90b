import numpy as np
import pytest

from mfnipr.formulate import (
    PlanPool,
    build_master,
    build_mfnip,
    build_subproblem,
    check_dual_equivalence,
)
from mfnipr.milp import solve_mip
from mfnipr.network import max_flow, split_nodes
from mfnipr.restructure import (
    InterdictionPlan,
    RestructurePlan,
    enumerate_Y,
    enumerate_Z,
    permissions,
    project,
)

from instances import random_layered, tiny_instance


def random_y(net, rng, p=0.3):
    return InterdictionPlan(frozenset(i for i in range(net.n) if rng.random() < p))


class TestMfnip:
    @pytest.mark.parametrize("seed", range(8))
    def test_matches_enumeration(self, seed):
        inst = tiny_instance(seed)
        net = inst.network
        snet = split_nodes(net)
        budget = 2.0 * min(v.cost for v in net.nodes if v.cost > 0)
        want = min(max_flow(snet, y).value for y in enumerate_Y(net, budget))
        sol = solve_mip(build_mfnip(net, budget, snet=snet).mip, backend="highs")
        assert sol.ok and abs(sol.objective - want) <= 1e-6

    def test_zero_budget_is_base_flow(self):
        net = tiny_instance(3).network
        sol = solve_mip(build_mfnip(net, 0.0).mip, backend="highs")
        assert abs(sol.objective - max_flow(split_nodes(net)).value) <= 1e-6

    def test_all_users_affordable_gives_zero(self):
        net = tiny_instance(5).network
        budget = sum(net.nodes[u].cost for u in net.users())
        sol = solve_mip(build_mfnip(net, budget).mip, backend="highs")
        assert sol.ok and abs(sol.objective) <= 1e-9

    def test_builtin_backend_agrees(self):
        net = tiny_instance(1).network
        mip = build_mfnip(net, 3.0).mip
        a, b = solve_mip(mip), solve_mip(mip, backend="highs")
        assert abs(a.objective - b.objective) <= 1e-6


class TestDualEquivalence:
    @pytest.mark.parametrize("seed", range(10))
    def test_random_triples(self, seed):
        net, _ = random_layered(seed, layers=3, width=3, rarcs=4, integer_caps=False)
        rng = np.random.default_rng([seed, 1])
        y = random_y(net, rng)
        z = RestructurePlan(frozenset(e for e in range(len(net.restructurable_arcs))
                                      if rng.random() < 0.5))
        rep = check_dual_equivalence(net, y, z)
        assert abs(rep.capacity_weighted - rep.max_flow) <= 1e-6
        assert abs(rep.shifted - rep.max_flow) <= 1e-6


class TestSubproblem:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_enumeration(self, seed):
        inst = tiny_instance(seed)
        net, rules = inst.network, inst.rules
        snet = split_nodes(net)
        y = random_y(net, np.random.default_rng([seed, 2]))
        want = max(max_flow(snet, y, z).value for z in enumerate_Z(net, rules, y))
        model = build_subproblem(net, rules, y, snet)
        sol = solve_mip(model.mip, backend="highs")
        assert sol.ok and abs(sol.objective - want) <= 1e-6
        assert abs(max_flow(snet, y, model.plan(sol.x)).value - want) <= 1e-6


class TestMaster:
    def test_null_pool_equals_mfnip(self):
        inst = tiny_instance(4)
        net = inst.network
        a = solve_mip(build_master(net, inst.rules, PlanPool.seeded(), 3.0).mip, backend="highs")
        b = solve_mip(build_mfnip(net, 3.0).mip, backend="highs")
        assert abs(a.objective - b.objective) <= 1e-6

    def test_empty_pool_rejected(self):
        inst = tiny_instance(0)
        with pytest.raises(ValueError, match="null plan"):
            build_master(inst.network, inst.rules, PlanPool(), 1.0)

    @pytest.mark.parametrize("seed", range(6))
    def test_master_block_is_projected_flow(self, seed):
        """With ``y`` fixed, a one-plan block values ``y`` at the projected plan's flow."""
        inst = tiny_instance(seed)
        net, rules = inst.network, inst.rules
        snet = split_nodes(net)
        rng = np.random.default_rng([seed, 4])
        ys = list(enumerate_Y(net, 4.0))
        y = ys[int(rng.integers(len(ys)))]
        plans = enumerate_Z(net, rules, random_y(net, rng, 0.5))
        plan = plans[int(rng.integers(len(plans)))]
        pool = PlanPool.seeded()
        pool.add(plan, 1, y)
        model = build_master(net, rules, pool, budget=1e9, snet=snet)
        for i, j in enumerate(model.y):
            model.mip.lb[j] = model.mip.ub[j] = float(i in y.nodes)
        sol = solve_mip(model.mip, backend="highs")
        want = max(max_flow(snet, y).value,
                   max_flow(snet, y, project(plan, permissions(net, y))).value)
        assert sol.ok and abs(sol.objective - want) <= 1e-6

    def test_pool_deduplicates(self):
        pool = PlanPool.seeded()
        k, added = pool.add(RestructurePlan(), 1, InterdictionPlan())
        assert (k, added) == (0, False) and len(pool) == 1
