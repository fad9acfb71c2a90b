"""Which restructurings can raise the max flow after an interdiction.

Given a maximum flow, its auxiliary network ``D_f`` and the canonical cut
``[U, U-bar]`` (``U`` = nodes reachable from the source in ``D_f``), each
candidate arc ``(i, j)`` falls into one of four classes:

* ``SinkSideTail``: ``i`` is on the sink side.  Adding the arc alone is harmless.
* ``SourceSideInternal``: both ends are in ``U``.  Harmless.
* ``CrossCutNoSinkPath``: ``i`` in ``U``, ``j`` on the sink side, and ``D_f`` has
  no path from ``j`` to the sink.  Harmless on its own.
* ``PotentiallyIncreasing``: everything else.

Single arcs of the first three kinds never change the flow value.  Sets of
them can: a cross-cut arc makes ``j`` (and everything ``j`` reaches) newly
reachable, after which a sink-side-tail arc leaving that region may complete
an augmenting path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .network import (
    FLOW_TOL,
    AuxiliaryNetwork,
    CutSolution,
    LayeredNetwork,
    SplitNetwork,
    auxiliary,
    max_flow,
    min_cut,
    split_nodes,
)
from .restructure import (
    EnumerationLimitError,
    InterdictionPlan,
    RestructureRules,
    enumerate_Z,
    permissions,
)

__all__ = [
    "ArcClass",
    "Certificate",
    "PlanAnalysis",
    "classify_arc",
    "certify",
    "certify_no_increase",
    "verify_no_increase_bruteforce",
    "analyze_plan",
]


class ArcClass(str, Enum):
    SINK_SIDE_TAIL = "SinkSideTail"
    SOURCE_SIDE_INTERNAL = "SourceSideInternal"
    CROSS_CUT_NO_SINK_PATH = "CrossCutNoSinkPath"
    POTENTIALLY_INCREASING = "PotentiallyIncreasing"


def _reaching(aux: AuxiliaryNetwork, target: int) -> set[int]:
    """Nodes with a path to ``target`` in ``aux`` (reverse BFS)."""
    pred: list[list[int]] = [[] for _ in range(aux.num_nodes)]
    for u, v in aux.arcs:
        pred[v].append(u)
    seen = {target}
    queue = deque([target])
    while queue:
        v = queue.popleft()
        for u in pred[v]:
            if u not in seen:
                seen.add(u)
                queue.append(u)
    return seen


def classify_arc(aux: AuxiliaryNetwork, cut: CutSolution, arc: tuple[int, int], sink: int,
                 reaching_sink: set[int] | None = None) -> ArcClass:
    """Class of the split-level arc ``(i, j)`` against ``cut``.

    ``reaching_sink`` may carry a precomputed set of nodes with a path to the
    sink, which saves a search per arc when classifying many arcs.
    """
    i, j = arc
    if i in cut.sink_side:
        return ArcClass.SINK_SIDE_TAIL
    if j in cut.source_side:
        return ArcClass.SOURCE_SIDE_INTERNAL
    if reaching_sink is None:
        reaching_sink = _reaching(aux, sink)
    if j not in reaching_sink:
        return ArcClass.CROSS_CUT_NO_SINK_PATH
    return ArcClass.POTENTIALLY_INCREASING


@dataclass(frozen=True)
class Certificate:
    holds: bool
    rule: str  # "empty" | "safe_classes" | "disjoint_regions" | "inconclusive"
    classes: tuple[ArcClass, ...]
    blocking: tuple[tuple[int, int], ...] = ()  # (cross-cut arc, companion) pairs that defeat the second rule

    def __bool__(self) -> bool:
        return self.holds


def certify(aux: AuxiliaryNetwork, cut: CutSolution, candidates: Iterable[tuple[int, int]],
            sink: int) -> Certificate:
    """Sufficient condition for "no subset of ``candidates`` raises the flow".

    The first rule accepts sets made only of sink-side-tail and
    source-side-internal arcs.  The second also admits cross-cut arcs
    without a sink path, provided no sink-side-tail candidate starts in the
    region that the cross-cut arc's head reaches in ``D_f``.  That region
    always contains the head's own node; checking the whole region rather
    than only arcs leaving the head is what keeps the rule sound when ``D_f``
    holds reverse arcs (see the test suite for a counterexample to the
    head-only reading).
    """
    cands = list(candidates)
    if not cands:
        return Certificate(True, "empty", ())
    reaching_sink = _reaching(aux, sink)
    classes = tuple(classify_arc(aux, cut, a, sink, reaching_sink) for a in cands)
    if all(c in (ArcClass.SINK_SIDE_TAIL, ArcClass.SOURCE_SIDE_INTERNAL) for c in classes):
        return Certificate(True, "safe_classes", classes)
    if any(c == ArcClass.POTENTIALLY_INCREASING for c in classes):
        return Certificate(False, "inconclusive", classes)

    tails_sink_side = [a for a, c in zip(cands, classes) if c == ArcClass.SINK_SIDE_TAIL]
    blocking = []
    for (i, j), c in zip(cands, classes):
        if c != ArcClass.CROSS_CUT_NO_SINK_PATH:
            continue
        region = aux.reachable_from(j)
        region.add(_partner(j))
        for a in tails_sink_side:
            if a[0] in region:
                blocking.append(((i, j), a))
    if blocking:
        return Certificate(False, "inconclusive", classes, tuple(blocking))
    return Certificate(True, "disjoint_regions", classes)


def _partner(v: int) -> int:
    # out-node of the original node owning split-level in-node v
    return v + 1 if v % 2 == 0 else v


def certify_no_increase(aux: AuxiliaryNetwork, cut: CutSolution,
                        candidates: Iterable[tuple[int, int]], sink: int) -> bool:
    """True is a proof that no restructuring over ``candidates`` increases the flow."""
    return certify(aux, cut, candidates, sink).holds


def verify_no_increase_bruteforce(net: LayeredNetwork, rules: RestructureRules,
                                  y: InterdictionPlan, candidates: Iterable[int],
                                  cap: int = 200_000, snet: SplitNetwork | None = None) -> bool:
    """Exhaustive check over every feasible plan that uses only ``candidates``.

    ``candidates`` are indices into ``net.restructurable_arcs``.
    """
    cands = sorted(set(candidates))
    if len(cands) > 20:
        raise EnumerationLimitError(f"{len(cands)} candidates exceed 20")
    snet = snet or split_nodes(net)
    base = max_flow(snet, y).value
    for plan in enumerate_Z(net, rules, y, cap=cap, max_permitted=20, restrict=cands):
        if not plan.is_null() and max_flow(snet, y, plan).value > base + FLOW_TOL:
            return False
    return True


@dataclass(frozen=True)
class PlanAnalysis:
    flow: float
    cut: CutSolution
    permitted: tuple[int, ...]  # restructurable-arc indices
    classes: dict[int, ArcClass]
    certificate: Certificate


def analyze_plan(net: LayeredNetwork, rules: RestructureRules, y: InterdictionPlan,
                 snet: SplitNetwork | None = None) -> PlanAnalysis:
    """Cut location, classes of the permitted arcs and the certificate verdict for ``y``."""
    snet = snet or split_nodes(net)
    flow = max_flow(snet, y)
    aux = auxiliary(snet, y, None, flow)
    cut = min_cut(snet, y, None, flow)
    w = permissions(net, y)
    permitted = tuple(
        e for e in w.permitted()
        if w.w_in[e] or (w.w_out[e] and e not in rules.in_only)
    )
    arcs = [(snet.restructurable[e].tail, snet.restructurable[e].head) for e in permitted]
    cert = certify(aux, cut, arcs, snet.sink)
    return PlanAnalysis(flow.value, cut, permitted, dict(zip(permitted, cert.classes)), cert)
