import itertools

import numpy as np
import pytest

from mfnipr.network import LayeredNetwork, NodeRecord, ValidationError
from mfnipr.restructure import (
    EnumerationLimitError,
    InterdictionPlan,
    Leadership,
    RestructurePlan,
    RestructureRules,
    enumerate_Y,
    enumerate_Z,
    feasible,
    interdiction_feasible,
    interdiction_floor,
    permissions,
    project,
)

from instances import random_layered, tiny_instance


def star():
    """One supplier, two dealers, two users; candidate arcs cross the pairs."""
    nodes = (
        NodeRecord(0, 3, 10.0, supply=10.0, k=1, l=1, s=1),
        NodeRecord(1, 2, 4.0, cost=2.0, tau=1),
        NodeRecord(2, 2, 4.0, cost=2.0, tau=1),
        NodeRecord(3, 1, 3.0, demand=3.0),
        NodeRecord(4, 1, 3.0, demand=3.0),
    )
    arcs = ((0, 1), (0, 2), (1, 3), (2, 4))
    rarcs = ((1, 4, 1.0), (2, 3, 1.0))
    net = LayeredNetwork(nodes, arcs, rarcs, 3)
    return net, RestructureRules.from_network(net, 2.0)


def y_of(*ids):
    return InterdictionPlan(frozenset(ids))


class TestPlans:
    def test_triples_round_trip(self):
        net, _ = star()
        plan = RestructurePlan(frozenset({0}), frozenset({1}))
        assert RestructurePlan.from_triples(net, plan.triples(net)) == plan

    def test_from_triples_rejects_unknown_arc(self):
        net, _ = star()
        with pytest.raises(ValidationError, match="not a restructurable arc"):
            RestructurePlan.from_triples(net, [(0, 3, "in")])

    def test_from_vector(self):
        assert InterdictionPlan.from_vector([0, 1, 0.9, 0.2]).nodes == {1, 2}


class TestY:
    def test_budget_and_climbing(self):
        net, _ = star()
        assert interdiction_feasible(net, y_of(3), 1.0)
        assert not interdiction_feasible(net, y_of(3, 4), 1.0)
        assert not interdiction_feasible(net, y_of(1), 10.0)   # tau=1, no child cut
        assert interdiction_feasible(net, y_of(1, 3), 3.0)

    def test_leadership(self):
        net, _ = star()
        lead = Leadership(frozenset({1, 2}), 1)
        assert not interdiction_feasible(net, y_of(3), 5.0, lead)
        assert interdiction_feasible(net, y_of(2, 4), 5.0, lead)

    @pytest.mark.parametrize("seed", range(10))
    def test_enumerate_matches_product_filter(self, seed):
        net, _ = random_layered(seed, layers=3, width=3)
        budget = 3.0
        got = {y.nodes for y in enumerate_Y(net, budget)}
        want = set()
        for bits in itertools.product((0, 1), repeat=net.n):
            y = InterdictionPlan.from_vector(bits)
            if interdiction_feasible(net, y, budget):
                want.add(y.nodes)
        assert got == want

    def test_enumeration_cap(self):
        net, _ = random_layered(1, layers=3, width=3)
        with pytest.raises(EnumerationLimitError):
            list(enumerate_Y(net, 100.0, cap=2))

    def test_floor_is_a_lower_bound(self):
        net = tiny_instance(4).network
        floor = interdiction_floor(net)
        best = [float("inf")] * net.n
        for y in enumerate_Y(net, 40.0, cap=10**6):
            spend = sum(net.nodes[i].cost for i in y.nodes)
            for i in y.nodes:
                best[i] = min(best[i], spend)
        for i in range(net.n):
            assert floor[i] <= best[i] + 1e-9


class TestZ:
    def test_permissions(self):
        net, _ = star()
        w = permissions(net, y_of(1))
        # arc 0 = (1, 4): its tail lost child 3? no, 1 itself is interdicted
        assert w.w_in == (0, 1) and w.w_out == (0, 0)
        w = permissions(net, y_of(3))
        assert w.w_out == (1, 0)

    def test_null_plan_always_feasible(self):
        net, rules = star()
        for y in (y_of(), y_of(1), y_of(3, 4)):
            assert feasible(net, rules, y, RestructurePlan())

    def test_local_reaction_needs_an_interdicted_neighbor(self):
        net, rules = star()
        report = feasible(net, rules, y_of(), RestructurePlan(frozenset({1})))
        assert not report and report.violations[0].startswith("in_local")

    def test_no_double_activation(self):
        net, rules = star()
        plan = RestructurePlan(frozenset({0}), frozenset({0}))
        report = feasible(net, rules, y_of(1, 3), plan)
        assert any(v.startswith("no_double") for v in report.violations)

    def test_budget_row(self):
        net, _ = star()
        rules = RestructureRules.from_network(net, 0.5)
        assert not feasible(net, rules, y_of(1), RestructurePlan(frozenset({1})))

    def test_unknown_arc(self):
        net, rules = star()
        with pytest.raises(ValidationError):
            feasible(net, rules, y_of(), RestructurePlan(frozenset({7})))

    def test_projection_keeps_permitted_sides(self):
        w = permissions(star()[0], y_of(1))
        plan = RestructurePlan(frozenset({0, 1}), frozenset({0}))
        assert project(plan, w) == RestructurePlan(frozenset({1}), frozenset())

    @pytest.mark.parametrize("seed", range(12))
    def test_enumerate_matches_product_filter(self, seed):
        inst = tiny_instance(seed, max_rarcs=5)
        net, rules = inst.network, inst.rules
        rng = np.random.default_rng(seed)
        y = InterdictionPlan(frozenset(i for i in range(net.n) if rng.random() < 0.3))
        got = {(p.z_in, p.z_out) for p in enumerate_Z(net, rules, y)}
        m = len(net.restructurable_arcs)
        want = set()
        for states in itertools.product((0, 1, 2), repeat=m):
            plan = RestructurePlan(frozenset(e for e, s in enumerate(states) if s == 1),
                                   frozenset(e for e, s in enumerate(states) if s == 2))
            if feasible(net, rules, y, plan):
                want.add((plan.z_in, plan.z_out))
        assert got == want
        assert enumerate_Z(net, rules, y)[0].is_null()

    def test_enumerate_restrict(self):
        net, rules = star()
        plans = enumerate_Z(net, rules, y_of(1, 3), restrict=[1])
        assert all(p.active() <= {1} for p in plans)

    def test_projection_exact_flag(self):
        net, _ = star()
        assert RestructureRules.from_network(net).projection_exact()
        nodes = list(net.nodes)
        nodes[1] = NodeRecord(1, 2, 4.0, cost=2.0, tau=1, k=1, l=2)
        loose = LayeredNetwork(tuple(nodes), net.arcs, net.restructurable_arcs, 3)
        assert not RestructureRules.from_network(loose).projection_exact()
