"""Node-id grammar, model containers and the structural lint rules."""

from __future__ import annotations

import pytest

from demoflow.engine import Act, Role
from demoflow.model import (
    ACT_SLUGS,
    Association,
    BpmnModel,
    FlowNode,
    MessageFlow,
    NodeKind,
    Pool,
    SLUG_FOR_ACT,
    SequenceFlow,
    lint_model,
    parse_node_id,
    slugify_tk,
)


# ---------------------------------------------------------------------------
# Node-id grammar
# ---------------------------------------------------------------------------


def test_parse_act_node():
    meta = parse_node_id("tk01_i_request_sendtask")
    assert meta is not None
    assert meta.tk == "tk01"
    assert meta.role is Role.INITIATOR
    assert meta.slug == "request"
    assert meta.kind is NodeKind.SEND_TASK
    assert meta.ordinal == 1
    assert meta.act is Act.REQUEST


def test_parse_ordinal_suffix():
    meta = parse_node_id("tk01_e_revokedeclare_throw_2")
    assert meta is not None
    assert meta.role is Role.EXECUTOR
    assert meta.slug == "revokedeclare"
    assert meta.kind is NodeKind.COMPENSATION_THROW
    assert meta.ordinal == 2
    assert meta.act is Act.REVOKE_DECLARE


def test_parse_plumbing_slug_has_no_act():
    meta = parse_node_id("tk01_e_response_xor")
    assert meta is not None
    assert meta.slug == "response"
    assert meta.kind is NodeKind.EXCLUSIVE_GATEWAY
    assert meta.act is None


def test_parse_underscored_slug():
    meta = parse_node_id("tk01_i_ack_go_catch")
    assert meta is not None
    assert meta.slug == "ack_go"
    assert meta.kind is NodeKind.MESSAGE_CATCH


@pytest.mark.parametrize(
    "node_id",
    [
        "Task_1",  # foreign model
        "start",
        "tk01_i_request",  # too few segments
        "tk01_x_request_sendtask",  # unknown role tag
        "tk01_i_request_widget",  # unknown kind tag
        "tk01_i_request_7",  # ordinal strips the kind tag away
        "",
    ],
)
def test_parse_rejects_non_grammar_ids(node_id):
    assert parse_node_id(node_id) is None


def test_every_act_slug_round_trips():
    for act in Act:
        slug = SLUG_FOR_ACT[act]
        meta = parse_node_id(f"tk09_e_{slug}_task")
        assert meta is not None and meta.act is act
    assert len(ACT_SLUGS) == len(Act)


def test_slugify_tk_strips_underscores_and_case():
    assert slugify_tk("TK01") == "tk01"
    assert slugify_tk("TK_01") == "tk01"
    assert slugify_tk("order") == "order"


# ---------------------------------------------------------------------------
# Hand-built models for the lint rules
# ---------------------------------------------------------------------------


def _model(nodes, flows, *, second_pool=None, message_flows=(), associations=()):
    pool = Pool(
        id="pool_a",
        process_id="proc_a",
        name="A",
        actor_id="A",
        nodes=list(nodes),
        flows=list(flows),
        associations=list(associations),
    )
    pools = [pool]
    if second_pool is not None:
        pools.append(second_pool)
    return BpmnModel(id="m", pools=pools, message_flows=list(message_flows))


def _chain(*kinds):
    """start/k1/k2/... nodes wired in a line; returns (nodes, flows)."""
    nodes = [FlowNode(f"n{i}", kind) for i, kind in enumerate(kinds)]
    flows = [
        SequenceFlow(f"f{i}", nodes[i].id, nodes[i + 1].id)
        for i in range(len(nodes) - 1)
    ]
    return nodes, flows


def _rules(model):
    return {finding.rule for finding in lint_model(model)}


def test_minimal_clean_model():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    assert lint_model(_model(nodes, flows)) == []


def test_node_index_and_pool_of():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    model = _model(nodes, flows)
    assert set(model.node_index()) == {"n0", "n1", "n2"}
    assert model.pool_of()["n1"] == "pool_a"
    assert model.find_pool("pool_a").actor_id == "A"
    with pytest.raises(KeyError):
        model.find_pool("pool_zz")


def test_dangling_sequence_flow_endpoint():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    flows.append(SequenceFlow("f9", "n1", "ghost"))
    assert "DanglingFlow" in _rules(_model(nodes, flows))


def test_start_and_end_event_degree_rules():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    flows.append(SequenceFlow("back", "n2", "n0"))  # into the start, out of the end
    assert _rules(_model(nodes, flows)) == {"DanglingFlow"}


def test_task_requires_both_degrees():
    nodes = [FlowNode("n0", NodeKind.START_EVENT), FlowNode("n1", NodeKind.TASK)]
    flows = [SequenceFlow("f0", "n0", "n1")]  # task has no outgoing flow
    assert "DanglingFlow" in _rules(_model(nodes, flows))


def test_cross_pool_sequence_flow():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    other = Pool(
        id="pool_b",
        process_id="proc_b",
        name="B",
        actor_id="B",
        nodes=[FlowNode("m0", NodeKind.START_EVENT), FlowNode("m1", NodeKind.END_EVENT)],
        flows=[SequenceFlow("g0", "m0", "m1")],
    )
    flows.append(SequenceFlow("f9", "n1", "m1"))
    assert "CrossPoolSequenceFlow" in _rules(_model(nodes, flows, second_pool=other))


def test_message_flow_must_cross_pools():
    nodes, flows = _chain(
        NodeKind.START_EVENT, NodeKind.SEND_TASK, NodeKind.TASK, NodeKind.END_EVENT
    )
    bad = MessageFlow("mf0", "n1", "n2")  # both ends in pool_a
    assert "MessageFlowInsidePool" in _rules(_model(nodes, flows, message_flows=[bad]))


def test_message_flow_dangling_endpoint():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.SEND_TASK, NodeKind.END_EVENT)
    bad = MessageFlow("mf0", "n1", "ghost")
    assert "DanglingFlow" in _rules(_model(nodes, flows, message_flows=[bad]))


def test_event_based_gateway_fanout():
    nodes, flows = _chain(
        NodeKind.START_EVENT,
        NodeKind.EVENT_BASED_GATEWAY,
        NodeKind.MESSAGE_CATCH,
        NodeKind.END_EVENT,
    )
    assert "EventBasedGatewayFanout" in _rules(_model(nodes, flows))


def test_degenerate_gateway():
    nodes, flows = _chain(
        NodeKind.START_EVENT, NodeKind.EXCLUSIVE_GATEWAY, NodeKind.END_EVENT
    )
    assert "DegenerateGateway" in _rules(_model(nodes, flows))


def test_degenerate_decision_guarded_single_branch():
    nodes, flows = _chain(
        NodeKind.START_EVENT, NodeKind.EXCLUSIVE_GATEWAY, NodeKind.END_EVENT
    )
    flows[1].label = "redeclare"
    assert "DegenerateDecision" in _rules(_model(nodes, flows))


def test_labeled_two_way_decision_is_fine():
    nodes, flows = _chain(
        NodeKind.START_EVENT, NodeKind.EXCLUSIVE_GATEWAY, NodeKind.END_EVENT
    )
    nodes.append(FlowNode("n3", NodeKind.END_EVENT))
    flows[1].label = "retry"
    flows.append(SequenceFlow("f9", "n1", "n3", label="give up"))
    assert lint_model(_model(nodes, flows)) == []


def test_unreachable_cycle():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    nodes += [FlowNode("c1", NodeKind.TASK), FlowNode("c2", NodeKind.TASK)]
    flows += [SequenceFlow("g1", "c1", "c2"), SequenceFlow("g2", "c2", "c1")]
    assert "UnreachableNode" in _rules(_model(nodes, flows))


def test_boundary_event_needs_attachment():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    nodes.append(FlowNode("b0", NodeKind.COMPENSATION_BOUNDARY))
    assert "DanglingFlow" in _rules(_model(nodes, flows))


def test_compensation_wiring_clean():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    nodes += [
        FlowNode("b0", NodeKind.COMPENSATION_BOUNDARY, attached_to="n1"),
        FlowNode("h0", NodeKind.COMPENSATION_HANDLER),
    ]
    associations = [Association("a0", "b0", "h0")]
    assert lint_model(_model(nodes, flows, associations=associations)) == []


def test_compensation_throw_missing_target():
    nodes, flows = _chain(
        NodeKind.START_EVENT, NodeKind.COMPENSATION_THROW, NodeKind.END_EVENT
    )
    nodes[1].compensates = "ghost"
    assert "DanglingFlow" in _rules(_model(nodes, flows))


def test_association_dangling_endpoint():
    nodes, flows = _chain(NodeKind.START_EVENT, NodeKind.TASK, NodeKind.END_EVENT)
    associations = [Association("a0", "ghost", "n1")]
    assert "DanglingFlow" in _rules(_model(nodes, flows, associations=associations))
