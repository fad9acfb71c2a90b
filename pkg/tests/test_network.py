import math

import numpy as np
import pytest

from mfnipr.network import (
    LayeredNetwork,
    NodeRecord,
    ValidationError,
    auxiliary,
    build_split_network,
    in_node,
    max_flow,
    min_cut,
    out_node,
    split_nodes,
)
from mfnipr.restructure import InterdictionPlan, RestructurePlan

from instances import random_layered
from oracles import cut_partition_min


def chain(caps=(5.0, 3.0, 4.0)):
    """Supplier -> middle -> user with the given node capacities."""
    nodes = (
        NodeRecord(0, 3, caps[0], supply=10.0),
        NodeRecord(1, 2, caps[1]),
        NodeRecord(2, 1, caps[2], demand=10.0),
    )
    return LayeredNetwork(nodes, ((0, 1), (1, 2)), (), 3)


class TestValidation:
    def test_chain_is_valid(self):
        assert chain().validate() == []

    def test_arc_must_descend_one_layer(self):
        net = chain()
        bad = LayeredNetwork(net.nodes, ((0, 2),), (), 3)
        with pytest.raises(ValidationError, match="layer L to layer L-1"):
            bad.validate()

    def test_duplicate_arc(self):
        net = chain()
        with pytest.raises(ValidationError, match="duplicate"):
            LayeredNetwork(net.nodes, net.arcs + ((0, 1),), (), 3).validate()

    def test_negative_capacity(self):
        nodes = list(chain().nodes)
        nodes[1] = NodeRecord(1, 2, -1.0)
        with pytest.raises(ValidationError, match="negative capacity"):
            LayeredNetwork(tuple(nodes), chain().arcs, (), 3).validate()

    def test_promotion_arc_may_skip_one_layer(self):
        net = chain()
        LayeredNetwork(net.nodes, ((0, 1),), ((0, 2, 1.0),), 3).validate()

    def test_restructurable_arc_cannot_duplicate_base_arc(self):
        net = chain()
        with pytest.raises(ValidationError, match="both"):
            LayeredNetwork(net.nodes, net.arcs, ((0, 1, 1.0),), 3).validate()

    def test_tau_above_degree_is_a_warning(self):
        nodes = list(chain().nodes)
        nodes[1] = NodeRecord(1, 2, 3.0, tau=2)
        warns = LayeredNetwork(tuple(nodes), chain().arcs, (), 3).validate()
        assert len(warns) == 1 and "never interdictable" in warns[0]


class TestSplit:
    def test_arc_count_identity(self):
        net, _ = random_layered(3, layers=4, width=3)
        snet = split_nodes(net)
        expected = len(net.arcs) + net.n + len(net.suppliers()) + len(net.users())
        assert len(snet.arcs) == expected
        assert len(snet.restructurable) == len(net.restructurable_arcs)

    def test_node_arcs_carry_node_capacity(self):
        snet = split_nodes(chain())
        for nid, k in snet.node_arc.items():
            a = snet.arcs[k]
            assert (a.tail, a.head) == (in_node(nid), out_node(nid))

    def test_sentinel_exceeds_total_node_capacity(self):
        snet = split_nodes(chain())
        sentinel = [a.capacity for a in snet.arcs if a.kind == "arc"]
        assert all(c == 1 + 12.0 for c in sentinel)


class TestMaxFlow:
    def test_chain_bottleneck(self):
        assert max_flow(split_nodes(chain())).value == 3.0

    def test_interdiction_zeroes_node(self):
        snet = split_nodes(chain())
        assert max_flow(snet, InterdictionPlan(frozenset({1}))).value == 0.0

    def test_flow_conservation_and_bounds(self):
        net, _ = random_layered(11, layers=4, width=3)
        snet = split_nodes(net)
        flow = max_flow(snet)
        balance = [0.0] * snet.num_nodes
        for a, x in zip(snet.all_arcs, flow.flows):
            assert -1e-12 <= x <= a.capacity + 1e-9
            balance[a.tail] -= x
            balance[a.head] += x
        for v, b in enumerate(balance):
            if v not in (snet.source, snet.sink):
                assert abs(b) < 1e-9

    def test_inactive_candidate_carries_no_flow(self):
        net, _ = random_layered(5, rarcs=3)
        snet = split_nodes(net)
        flow = max_flow(snet)
        assert all(x == 0 for x in flow.flows[len(snet.arcs):])

    @pytest.mark.parametrize("seed", range(40))
    def test_matches_cut_partition_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(3, 9))
        arcs = [(u, v, float(rng.integers(0, 7))) for u in range(n) for v in range(n)
                if u != v and rng.random() < 0.35]
        snet = build_split_network(n, 0, n - 1, arcs)
        assert abs(max_flow(snet).value - cut_partition_min(snet)) <= 1e-9

    @pytest.mark.parametrize("seed", range(15))
    def test_interdicted_and_restructured_against_oracle(self, seed):
        net, _ = random_layered(seed, layers=3, width=2, rarcs=3)
        snet = split_nodes(net)
        if snet.num_nodes > 14:
            pytest.skip("too large for the partition oracle")
        rng = np.random.default_rng(seed)
        y = InterdictionPlan(frozenset(i for i in range(net.n) if rng.random() < 0.3))
        z = RestructurePlan(frozenset(e for e in range(len(net.restructurable_arcs))
                                      if rng.random() < 0.5))
        assert abs(max_flow(snet, y, z).value - cut_partition_min(snet, y, z)) <= 1e-9


class TestCut:
    def test_min_cut_equals_flow(self):
        net, _ = random_layered(2, layers=4, width=3)
        snet = split_nodes(net)
        flow = max_flow(snet)
        cut = min_cut(snet, None, None, flow)
        assert math.isclose(cut.value, flow.value, abs_tol=1e-9)
        assert snet.source in cut.source_side and snet.sink in cut.sink_side

    def test_source_side_is_residual_reachability(self):
        snet = split_nodes(chain())
        flow = max_flow(snet)
        aux = auxiliary(snet, None, None, flow)
        cut = min_cut(snet, None, None, flow)
        assert cut.source_side == frozenset(aux.reachable_from(snet.source))
        # the middle node's split arc is saturated, so its out-node is not reachable
        assert in_node(1) in cut.source_side and out_node(1) not in cut.source_side

    def test_auxiliary_has_reverse_arcs_on_flow(self):
        snet = split_nodes(chain())
        aux = auxiliary(snet, None, None, max_flow(snet))
        assert (out_node(1), in_node(1)) in aux.arcs
        assert not aux.has_path(snet.source, snet.sink)
