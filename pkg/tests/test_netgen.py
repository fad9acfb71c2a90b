import json

import numpy as np
import pytest

from mfnipr.instance import Instance, to_json
from mfnipr.netgen import (
    GenParams,
    add_org_restructuring,
    add_recruitment,
    climb_cost,
    generate,
    layer_sizes,
)
from mfnipr.network import LayeredNetwork, NodeRecord, ValidationError, max_flow, split_nodes
from mfnipr.restructure import InterdictionPlan, RestructureRules, enumerate_Z
from mfnipr.formulate import build_subproblem
from mfnipr.milp import solve_mip


class TestBase:
    def test_two_hundred_users(self):
        net = generate(GenParams(seed=0)).network
        assert len(net.users()) == 200
        assert layer_sizes(GenParams()) == {1: 200, 2: 40, 3: 12, 4: 6, 5: 4, 6: 2}

    @pytest.mark.parametrize("variant", ["base", "recruitment", "organizational"])
    def test_deterministic(self, variant):
        a = generate(GenParams(seed=7, num_users=30, variant=variant))
        b = generate(GenParams(seed=7, num_users=30, variant=variant))
        assert json.dumps(to_json(a)) == json.dumps(to_json(b))

    def test_seeds_differ(self):
        a = generate(GenParams(seed=1, num_users=30))
        b = generate(GenParams(seed=2, num_users=30))
        assert to_json(a) != to_json(b)

    def test_fifty_seed_sweep(self):
        for seed in range(50):
            net = generate(GenParams(seed=seed, num_users=20)).network
            net.validate()
            assert max_flow(split_nodes(net)).value > 0

    def test_structure(self):
        net = generate(GenParams(seed=3, num_users=50)).network
        for i, j in net.arcs:
            a, b = net.nodes[i], net.nodes[j]
            assert a.layer == b.layer + 1
            if b.layer >= 3:
                assert a.organization == b.organization
        for v in net.nodes:
            assert (v.organization is not None) == (v.layer >= 3)
        pairs = {(net.nodes[i].layer, net.nodes[j].layer) for i, j, _ in net.restructurable_arcs}
        assert {(L + 1, L) for L in range(1, 6)} <= pairs

    def test_leadership_is_top_two_layers(self):
        inst = generate(GenParams(seed=0, num_users=50))
        assert inst.leadership.nodes
        assert all(inst.network.nodes[i].layer >= 5 for i in inst.leadership.nodes)

    def test_default_costs(self):
        net = generate(GenParams(seed=0, num_users=50)).network
        costs = {v.layer: v.cost for v in net.nodes}
        assert costs == {1: 1, 2: 3, 3: 8, 4: 16, 5: 28, 6: 45}

    def test_bad_params(self):
        with pytest.raises(ValueError, match="variant"):
            GenParams(variant="mystery")
        with pytest.raises(ValueError, match="num_users"):
            GenParams(num_users=0)

    @pytest.mark.xfail(strict=True, reason="layer-5 chain under default costs exceeds 50; "
                                           "see the decisions ledger")
    def test_budget_span_at_fifty(self):
        net = generate(GenParams(seed=0)).network
        cheapest = min(climb_cost(net, v.id) for v in net.nodes if v.layer == 5)
        assert cheapest <= 50


class TestRecruitment:
    def test_counts(self):
        base = generate(GenParams(seed=4))
        rec = add_recruitment(base, 0.2)
        extra = [v for v in rec.network.nodes if v.recruitable]
        by_layer = {L: sum(1 for v in extra if v.layer == L) for L in (1, 2, 3)}
        assert by_layer == {1: 40, 2: 8, 3: 3}

    def test_zero_fraction_is_identity(self):
        base = generate(GenParams(seed=4, num_users=30))
        assert add_recruitment(base, 0.0) is base

    def test_no_incoming_base_arcs(self):
        rec = generate(GenParams(seed=5, num_users=40, variant="recruitment"))
        net = rec.network
        for v in net.nodes:
            if v.recruitable:
                assert not net.parents(v.id)
                assert any(j == v.id for _, j, _ in net.restructurable_arcs)

    @pytest.mark.parametrize("seed", range(5))
    def test_flow_unchanged_before_restructuring(self, seed):
        base = generate(GenParams(seed=seed, num_users=40))
        rec = generate(GenParams(seed=seed, num_users=40, variant="recruitment"))
        a = max_flow(split_nodes(base.network)).value
        b = max_flow(split_nodes(rec.network)).value
        assert a == pytest.approx(b, abs=1e-9)


class TestOrganizational:
    def test_single_organization_rejected(self):
        nodes = (NodeRecord(0, 2, 1.0, supply=1.0, organization=0),
                 NodeRecord(1, 1, 1.0, demand=1.0))
        net = LayeredNetwork(nodes, ((0, 1),), (), 2)
        inst = Instance(net, RestructureRules.from_network(net))
        with pytest.raises(ValidationError, match="two organizations"):
            add_org_restructuring(inst)

    def test_promotion_arcs_span_two_layers(self):
        inst = generate(GenParams(seed=2, num_users=50, variant="organizational"))
        net = inst.network
        promoted = 0
        for e, (i, j, _) in enumerate(net.restructurable_arcs):
            gap = net.nodes[i].layer - net.nodes[j].layer
            assert gap in (1, 2)
            if gap == 2:
                promoted += 1
                assert net.nodes[j].promotable and e in inst.rules.in_only
        assert promoted > 0

    def test_arcs_into_p_and_c_are_in_only(self):
        inst = generate(GenParams(seed=2, num_users=50, variant="organizational"))
        net = inst.network
        flagged = {v.id for v in net.nodes if v.promotable or v.cross_org_recruitable}
        assert any(net.nodes[j].cross_org_recruitable for j in flagged)
        into = {e for e, (_, j, _) in enumerate(net.restructurable_arcs) if j in flagged}
        assert into == set(inst.rules.in_only)

    @pytest.mark.parametrize("seed", range(4))
    def test_org_arcs_idle_without_nearby_interdiction(self, seed):
        inst = generate(GenParams(seed=seed, num_users=30, variant="organizational"))
        net, rules = inst.network, inst.rules
        org_arcs = [e for e, (i, j, _) in enumerate(net.restructurable_arcs)
                    if net.nodes[j].promotable or net.nodes[j].cross_org_recruitable]
        heads = {net.restructurable_arcs[e][1] for e in org_arcs}
        avoid = {p for j in heads for p in net.parents(j)}
        rng = np.random.default_rng(seed)
        users = [u for u in net.users() if u not in avoid]
        y = InterdictionPlan(frozenset(rng.choice(users, size=3, replace=False).tolist()))
        model = build_subproblem(net, rules, y)
        sol = solve_mip(model.mip, backend="highs")
        plan = model.plan(sol.x)
        assert not (plan.active() & set(org_arcs))
