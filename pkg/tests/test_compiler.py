"""Pattern compiler: model sizes, act census, naming, determinism, lint."""

from __future__ import annotations

import copy
import random
from pathlib import Path

import pytest

from demoflow.compiler import (
    CompileError,
    DetailLevel,
    INITIAL_GATEWAY_NAME,
    LEVEL_ALPHABETS,
    act_census,
    compile_network,
)
from demoflow.engine import (
    Act,
    COMPLETE_ALPHABET,
    CORE_ACTS,
    DISSENT_ALPHABET,
    HAPPY_ALPHABET,
)
from demoflow.model import NodeKind, lint_model
from demoflow.network import load_network

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

LEVELS = list(DetailLevel)

# (nodes, sequence flows, message flows) of the one-transaction collaboration.
SOLO_SIZES = {
    DetailLevel.HAPPY_FLOW: (12, 10, 4),
    DetailLevel.WITH_DISSENT: (34, 36, 10),
    DetailLevel.COMPLETE: (115, 127, 27),
}

# Node totals for the bundled example networks.
POC1_SIZES = {
    DetailLevel.HAPPY_FLOW: 42,
    DetailLevel.WITH_DISSENT: 130,
    DetailLevel.COMPLETE: 454,
}
POC2_SIZES = {
    DetailLevel.HAPPY_FLOW: 64,
    DetailLevel.WITH_DISSENT: 196,
    DetailLevel.COMPLETE: 682,
}


def _sizes(model):
    return (
        len(model.all_nodes()),
        sum(len(p.flows) for p in model.pools),
        len(model.message_flows),
    )


@pytest.mark.parametrize("level", LEVELS)
def test_solo_model_sizes(solo_net, level):
    assert _sizes(compile_network(solo_net, level)) == SOLO_SIZES[level]


@pytest.mark.parametrize("level", LEVELS)
def test_solo_model_lints_clean(solo_net, level):
    assert lint_model(compile_network(solo_net, level)) == []


@pytest.mark.parametrize("level", LEVELS)
def test_poc1_sizes_and_lint(poc1_net, level):
    model = compile_network(poc1_net, level)
    assert len(model.pools) == 5
    assert len(model.all_nodes()) == POC1_SIZES[level]
    assert lint_model(model) == []


@pytest.mark.parametrize("level", LEVELS)
def test_poc2_sizes_and_lint(poc2_net, level):
    model = compile_network(poc2_net, level)
    assert len(model.pools) == 7
    assert len(model.all_nodes()) == POC2_SIZES[level]
    assert lint_model(model) == []


def test_pools_follow_actor_order_and_names(poc1_net):
    model = compile_network(poc1_net, DetailLevel.HAPPY_FLOW)
    assert [p.id for p in model.pools] == [
        "pool_a01",
        "pool_a02",
        "pool_a03",
        "pool_a04",
        "pool_a05",
    ]
    by_actor = {a.id: a.name for a in poc1_net.actors}
    for pool in model.pools:
        assert pool.name == by_actor[pool.actor_id]
        assert pool.process_id == pool.id.replace("pool_", "proc_", 1)


def test_only_roots_keep_plain_start_events(poc1_net):
    model = compile_network(poc1_net, DetailLevel.WITH_DISSENT)
    kinds = [n.kind for n in model.all_nodes()]
    assert kinds.count(NodeKind.START_EVENT) == 1
    assert kinds.count(NodeKind.MESSAGE_START_EVENT) == len(poc1_net.transactions)


def test_happy_act_census(solo_net):
    census = act_census(compile_network(solo_net, DetailLevel.HAPPY_FLOW))
    assert {act for _, act in census} == set(CORE_ACTS)
    sizes = {act: len(nodes) for (_, act), nodes in census.items()}
    assert sizes == {
        Act.REQUEST: 2,
        Act.PROMISE: 2,
        Act.EXECUTE: 1,
        Act.DECLARE: 2,
        Act.ACCEPT: 2,
    }


@pytest.mark.parametrize(
    "level,expected_acts",
    [
        (DetailLevel.HAPPY_FLOW, 5),
        (DetailLevel.WITH_DISSENT, 8),
        (DetailLevel.COMPLETE, 14),
    ],
)
def test_census_covers_level_alphabet(solo_net, level, expected_acts):
    census = act_census(compile_network(solo_net, level))
    acts = {act for _, act in census}
    assert len(acts) == expected_acts
    assert acts == LEVEL_ALPHABETS[level]


def test_level_alphabets_map():
    assert LEVEL_ALPHABETS[DetailLevel.HAPPY_FLOW] == HAPPY_ALPHABET
    assert LEVEL_ALPHABETS[DetailLevel.WITH_DISSENT] == DISSENT_ALPHABET
    assert LEVEL_ALPHABETS[DetailLevel.COMPLETE] == COMPLETE_ALPHABET


def test_compile_is_deterministic(poc1_net):
    first = compile_network(poc1_net, DetailLevel.COMPLETE)
    second = compile_network(poc1_net, DetailLevel.COMPLETE)
    assert first == second


def test_compile_rejects_invalid_network():
    cyclic = load_network(FIXTURES / "cyclic.json")
    with pytest.raises(CompileError, match="CycleDetected"):
        compile_network(cyclic, DetailLevel.HAPPY_FLOW)


def test_arming_gateways_and_handlers_named(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    armed = [n for n in model.all_nodes() if n.name == INITIAL_GATEWAY_NAME]
    assert len(armed) == 2  # one per role
    assert all(n.kind is NodeKind.PARALLEL_GATEWAY for n in armed)
    handlers = {n.name for n in model.all_nodes() if n.kind is NodeKind.COMPENSATION_HANDLER}
    assert handlers == {"Request⁻¹", "Promise⁻¹", "Execute⁻¹", "Declare⁻¹", "Accept⁻¹"}


def test_complete_solo_kind_census(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    counts: dict[NodeKind, int] = {}
    for node in model.all_nodes():
        counts[node.kind] = counts.get(node.kind, 0) + 1
    assert counts == {
        NodeKind.START_EVENT: 1,
        NodeKind.MESSAGE_START_EVENT: 1,
        NodeKind.END_EVENT: 6,
        NodeKind.TERMINATE_END_EVENT: 2,
        NodeKind.TASK: 1,
        NodeKind.SEND_TASK: 25,
        NodeKind.MESSAGE_CATCH: 30,
        NodeKind.EXCLUSIVE_GATEWAY: 8,
        NodeKind.PARALLEL_GATEWAY: 8,
        NodeKind.EVENT_BASED_GATEWAY: 10,
        NodeKind.COMPENSATION_BOUNDARY: 5,
        NodeKind.COMPENSATION_HANDLER: 5,
        NodeKind.COMPENSATION_THROW: 13,
    }


def _delete_flow(model, pool_index, flow_index):
    mutant = copy.deepcopy(model)
    del mutant.pools[pool_index].flows[flow_index]
    return mutant


@pytest.mark.parametrize("level", LEVELS)
def test_every_flow_deletion_is_caught_solo(solo_net, level):
    model = compile_network(solo_net, level)
    for pool_index, pool in enumerate(model.pools):
        for flow_index in range(len(pool.flows)):
            mutant = _delete_flow(model, pool_index, flow_index)
            assert lint_model(mutant), (
                f"deleting {pool.flows[flow_index].id} went unnoticed"
            )


def test_sampled_flow_deletions_caught_poc1(poc1_net):
    model = compile_network(poc1_net, DetailLevel.COMPLETE)
    rng = random.Random(7)
    spots = [
        (pi, fi)
        for pi, pool in enumerate(model.pools)
        for fi in range(len(pool.flows))
    ]
    for pool_index, flow_index in rng.sample(spots, 25):
        mutant = _delete_flow(model, pool_index, flow_index)
        assert lint_model(mutant)
