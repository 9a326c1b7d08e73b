"""In-memory BPMN collaboration model and structural lint rules.

The model is the compiler's target and the serializer's and simulator's
source: pools (one per actor) holding flow nodes and sequence flows, plus
cross-pool message flows.  Node ids follow a fixed grammar,

    <tk>_<i|e>_<slug>_<kindtag>[_<ordinal>]

e.g. ``tk01_i_request_sendtask`` or ``tk01_e_revokedeclare_throw_2``, where
the slug is either one of the fourteen act slugs or a plumbing word
(entry, response, repromise, ...).  parse_node_id recovers the transaction,
role and act from an id, which is what lets the simulator and the coverage
auditor treat generated and re-parsed models identically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .engine import Act, Role


class NodeKind(Enum):
    """Kinds of flow node; the value doubles as the id kind-tag."""

    START_EVENT = "start"
    MESSAGE_START_EVENT = "mstart"
    END_EVENT = "end"
    TERMINATE_END_EVENT = "tend"
    TASK = "task"
    SEND_TASK = "sendtask"
    MESSAGE_CATCH = "catch"
    EXCLUSIVE_GATEWAY = "xor"
    PARALLEL_GATEWAY = "par"
    EVENT_BASED_GATEWAY = "ebg"
    COMPENSATION_BOUNDARY = "boundary"
    COMPENSATION_HANDLER = "handler"
    COMPENSATION_THROW = "throw"


GATEWAY_KINDS = frozenset(
    {NodeKind.EXCLUSIVE_GATEWAY, NodeKind.PARALLEL_GATEWAY, NodeKind.EVENT_BASED_GATEWAY}
)

# Nodes that live outside the sequence-flow graph.
_NO_FLOW_KINDS = frozenset({NodeKind.COMPENSATION_BOUNDARY, NodeKind.COMPENSATION_HANDLER})

ACT_SLUGS: dict[str, Act] = {act.value.lower(): act for act in Act}
SLUG_FOR_ACT: dict[Act, str] = {act: slug for slug, act in ACT_SLUGS.items()}

_KIND_TAGS: dict[str, NodeKind] = {kind.value: kind for kind in NodeKind}

_ROLE_TAGS = {"i": Role.INITIATOR, "e": Role.EXECUTOR}
ROLE_TAG = {Role.INITIATOR: "i", Role.EXECUTOR: "e"}


def slugify_tk(tk_id: str) -> str:
    """Transaction id as used in node ids: lowercased, underscores removed."""
    return tk_id.lower().replace("_", "")


@dataclass(frozen=True)
class NodeMeta:
    tk: str  # slugified transaction id
    role: Role
    slug: str
    kind: Optional[NodeKind]
    ordinal: int = 1

    @property
    def act(self) -> Optional[Act]:
        return ACT_SLUGS.get(self.slug)


def parse_node_id(node_id: str) -> Optional[NodeMeta]:
    """Recover (transaction, role, slug, kind) from a generated node id.

    Returns None for ids that do not follow the grammar (foreign models).
    """
    parts = node_id.split("_")
    if len(parts) < 4:
        return None
    ordinal = 1
    if parts[-1].isdigit():
        ordinal = int(parts[-1])
        parts = parts[:-1]
    if len(parts) < 4:
        return None
    tk, role_tag, kind_tag = parts[0], parts[1], parts[-1]
    slug = "_".join(parts[2:-1])
    if role_tag not in _ROLE_TAGS or kind_tag not in _KIND_TAGS:
        return None
    return NodeMeta(
        tk=tk, role=_ROLE_TAGS[role_tag], slug=slug, kind=_KIND_TAGS[kind_tag], ordinal=ordinal
    )


@dataclass
class FlowNode:
    id: str
    kind: NodeKind
    name: str = ""
    attached_to: Optional[str] = None  # boundary events: the guarded task
    compensates: Optional[str] = None  # compensation throws: the task to undo


@dataclass
class SequenceFlow:
    id: str
    source: str
    target: str
    label: str = ""  # decision guards: rerequest / redeclare / performed:<act> / ...


@dataclass
class MessageFlow:
    id: str
    source: str
    target: str


@dataclass
class Association:
    id: str
    source: str  # boundary event
    target: str  # compensation handler


@dataclass
class Pool:
    id: str
    process_id: str
    name: str
    actor_id: str
    nodes: list[FlowNode] = field(default_factory=list)
    flows: list[SequenceFlow] = field(default_factory=list)
    associations: list[Association] = field(default_factory=list)

    def node_ids(self) -> set[str]:
        return {n.id for n in self.nodes}


@dataclass
class BpmnModel:
    id: str
    pools: list[Pool] = field(default_factory=list)
    message_flows: list[MessageFlow] = field(default_factory=list)

    def all_nodes(self) -> list[FlowNode]:
        return [n for pool in self.pools for n in pool.nodes]

    def node_index(self) -> dict[str, FlowNode]:
        return {n.id: n for n in self.all_nodes()}

    def pool_of(self) -> dict[str, str]:
        """node id -> pool id"""
        return {n.id: pool.id for pool in self.pools for n in pool.nodes}

    def find_pool(self, pool_id: str) -> Pool:
        for pool in self.pools:
            if pool.id == pool_id:
                return pool
        raise KeyError(pool_id)


@dataclass(frozen=True)
class LintFinding:
    rule: str
    subjects: tuple[str, ...]
    message: str

    def __str__(self) -> str:
        return f"{self.rule} [{', '.join(self.subjects)}]: {self.message}"


def _degree_rules(kind: NodeKind) -> tuple[Optional[int], Optional[int]]:
    """(required min incoming, required min outgoing); None = must be zero."""
    if kind in (NodeKind.START_EVENT, NodeKind.MESSAGE_START_EVENT):
        return None, 1
    if kind in (NodeKind.END_EVENT, NodeKind.TERMINATE_END_EVENT):
        return 1, None
    if kind in _NO_FLOW_KINDS:
        return None, None
    return 1, 1


def lint_model(model: BpmnModel) -> list[LintFinding]:
    """Structural checks; an empty result is the generator's contract.

    The rules are chosen so that removing any single sequence flow from a
    generated model breaks at least one of them.
    """
    findings: list[LintFinding] = []

    def add(rule: str, subjects: Iterable[str], message: str) -> None:
        findings.append(LintFinding(rule, tuple(subjects), message))

    index = model.node_index()
    pool_of = model.pool_of()

    incoming: dict[str, list[SequenceFlow]] = {}
    outgoing: dict[str, list[SequenceFlow]] = {}
    for pool in model.pools:
        for flow in pool.flows:
            for end in (flow.source, flow.target):
                if end not in index:
                    add("DanglingFlow", (flow.id, end), "sequence flow endpoint does not exist")
            outgoing.setdefault(flow.source, []).append(flow)
            incoming.setdefault(flow.target, []).append(flow)
            if (
                flow.source in pool_of
                and flow.target in pool_of
                and pool_of[flow.source] != pool_of[flow.target]
            ):
                add(
                    "CrossPoolSequenceFlow",
                    (flow.id, flow.source, flow.target),
                    "sequence flows may not cross pool boundaries",
                )
            if flow.source in pool_of and pool_of[flow.source] != pool.id:
                add(
                    "CrossPoolSequenceFlow",
                    (flow.id, pool.id),
                    "sequence flow declared outside its endpoints' pool",
                )

    for flow in model.message_flows:
        for end in (flow.source, flow.target):
            if end not in index:
                add("DanglingFlow", (flow.id, end), "message flow endpoint does not exist")
        if (
            flow.source in pool_of
            and flow.target in pool_of
            and pool_of[flow.source] == pool_of[flow.target]
        ):
            add(
                "MessageFlowInsidePool",
                (flow.id, flow.source, flow.target),
                "message flows must connect different pools",
            )

    for node in model.all_nodes():
        n_in = len(incoming.get(node.id, ()))
        n_out = len(outgoing.get(node.id, ()))
        need_in, need_out = _degree_rules(node.kind)
        if need_in is None and n_in:
            add("DanglingFlow", (node.id,), f"{node.kind.value} must not have incoming flows")
        if need_in is not None and n_in < need_in:
            add("DanglingFlow", (node.id,), f"{node.kind.value} requires an incoming flow")
        if need_out is None and n_out:
            add("DanglingFlow", (node.id,), f"{node.kind.value} must not have outgoing flows")
        if need_out is not None and n_out < need_out:
            add("DanglingFlow", (node.id,), f"{node.kind.value} requires an outgoing flow")
        if node.kind is NodeKind.EVENT_BASED_GATEWAY and n_out < 2:
            add(
                "EventBasedGatewayFanout",
                (node.id,),
                f"event-based gateway must offer at least two events, has {n_out}",
            )
        if node.kind in GATEWAY_KINDS and n_in < 2 and n_out < 2:
            add(
                "DegenerateGateway",
                (node.id,),
                "gateway neither splits nor merges",
            )
        if node.kind is NodeKind.EXCLUSIVE_GATEWAY:
            labeled = [f for f in outgoing.get(node.id, ()) if f.label]
            if labeled and n_out < 2:
                add(
                    "DegenerateDecision",
                    (node.id,),
                    "a guarded decision needs at least two outgoing branches",
                )
        if node.kind is NodeKind.COMPENSATION_BOUNDARY:
            if node.attached_to is None or node.attached_to not in index:
                add("DanglingFlow", (node.id,), "boundary event is not attached to a task")
        if node.kind is NodeKind.COMPENSATION_THROW:
            if node.compensates is not None and node.compensates not in index:
                add("DanglingFlow", (node.id,), "compensation throw references a missing task")

    for pool in model.pools:
        for assoc in pool.associations:
            for end in (assoc.source, assoc.target):
                if end not in index:
                    add("DanglingFlow", (assoc.id, end), "association endpoint does not exist")

    # Reachability from start events along sequence flows, per pool.
    reachable: set[str] = set()
    frontier = [
        n.id
        for n in model.all_nodes()
        if n.kind in (NodeKind.START_EVENT, NodeKind.MESSAGE_START_EVENT)
    ]
    while frontier:
        current = frontier.pop()
        if current in reachable:
            continue
        reachable.add(current)
        frontier.extend(f.target for f in outgoing.get(current, ()))
    for node in model.all_nodes():
        if node.kind in _NO_FLOW_KINDS:
            continue
        if node.id not in reachable:
            add("UnreachableNode", (node.id,), "no path from any start event")

    return findings
