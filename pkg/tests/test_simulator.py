"""Token-play simulation, conformance against the engine, composition rules."""

from __future__ import annotations

import copy
import json

import pytest

from demoflow.compiler import DetailLevel, LEVEL_ALPHABETS, compile_network
from demoflow.engine import Act, Bounds, Phase, enumerate_language
from demoflow.network import (
    Actor,
    Dependency,
    DependencyKind,
    Result,
    Transaction,
    TransactionNetwork,
    validate_network,
)
from demoflow.simulator import (
    SimTrace,
    StateSpaceLimitExceeded,
    Verdict,
    check_composition,
    check_conformance,
    check_network_conformance,
    simulate_exhaustive,
    simulate_random,
)

HAPPY_ACTS = (Act.REQUEST, Act.PROMISE, Act.EXECUTE, Act.DECLARE, Act.ACCEPT)

# (traces, states) of the one-transaction collaboration per detail level.
SOLO_EXPECTED = {
    DetailLevel.HAPPY_FLOW: (1, 17),
    DetailLevel.WITH_DISSENT: (10, 117),
    DetailLevel.COMPLETE: (372, 5319),
}


# ---------------------------------------------------------------------------
# Single-transaction exploration and conformance
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("level", list(DetailLevel))
def test_solo_trace_and_state_counts(solo_net, level):
    model = compile_network(solo_net, level)
    result = simulate_exhaustive(model)
    assert (len(result.traces), result.states) == SOLO_EXPECTED[level]


@pytest.mark.parametrize("level", list(DetailLevel))
def test_solo_conformant_at_every_level(solo_net, level):
    model = compile_network(solo_net, level)
    report = check_conformance(model, LEVEL_ALPHABETS[level])
    assert report.verdict is Verdict.CONFORMANT
    assert report.missing == {}
    assert report.unexpected == {}
    assert report.compensation_violations == []
    assert (report.traces, report.states) == SOLO_EXPECTED[level]


def test_network_conformance_wrapper(solo_net):
    report = check_network_conformance(solo_net, DetailLevel.COMPLETE)
    assert report.verdict is Verdict.CONFORMANT
    assert report.traces == 372


def test_poc1_happy_network_is_conformant(poc1_net):
    report = check_network_conformance(poc1_net, DetailLevel.HAPPY_FLOW)
    assert report.verdict is Verdict.CONFORMANT
    assert (report.traces, report.states) == (1, 615)


def test_projections_match_engine_language_exactly(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    result = simulate_exhaustive(model)
    produced = {
        (trace.acts_for("tk01"), trace.outcome_of("tk01")) for trace in result.traces
    }
    assert produced == enumerate_language(LEVEL_ALPHABETS[DetailLevel.COMPLETE], Bounds())


@pytest.mark.parametrize(
    "bounds,expected_traces",
    [
        (Bounds(rerequest=2, redeclare=1), 15),
        (Bounds(rerequest=1, redeclare=2), 14),
    ],
)
def test_dissent_bounds_scale_the_language(solo_net, bounds, expected_traces):
    model = compile_network(solo_net, DetailLevel.WITH_DISSENT)
    report = check_conformance(model, LEVEL_ALPHABETS[DetailLevel.WITH_DISSENT], bounds)
    assert report.verdict is Verdict.CONFORMANT
    assert report.traces == expected_traces


def test_state_cap_is_enforced(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    with pytest.raises(StateSpaceLimitExceeded):
        simulate_exhaustive(model, max_states=100)


# ---------------------------------------------------------------------------
# Compensation ordering
# ---------------------------------------------------------------------------


def test_allowed_revocation_rolls_back_in_inverse_order(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    result = simulate_exhaustive(model)
    wanted = HAPPY_ACTS + (Act.REVOKE_DECLARE, Act.ALLOW, Act.EXECUTE, Act.DECLARE, Act.ACCEPT)
    matching = [t for t in result.traces if t.acts_for("tk01") == wanted]
    assert matching, "expected the allowed revoke-declare rerun to be explored"
    for trace in matching:
        inverses = [e.act for e in trace.events if e.inverse]
        assert inverses == [Act.ACCEPT, Act.DECLARE, Act.EXECUTE]
        allow_at = next(i for i, e in enumerate(trace.events) if e.act is Act.ALLOW)
        rerun_at = next(
            i
            for i, e in enumerate(trace.events)
            if i > allow_at and e.act is Act.EXECUTE and not e.inverse
        )
        # the decider undoes its own act while allowing; the rest of the chain
        # runs on the other side after Allow arrives, before the rerun starts
        after_allow = [
            e.act for e in trace.events[allow_at + 1 : rerun_at] if e.inverse
        ]
        assert after_allow == [Act.DECLARE, Act.EXECUTE]


def test_refused_revocation_compensates_nothing(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    result = simulate_exhaustive(model)
    wanted = HAPPY_ACTS + (Act.REVOKE_ACCEPT, Act.REFUSE)
    matching = [t for t in result.traces if t.acts_for("tk01") == wanted]
    assert matching
    for trace in matching:
        assert not any(e.inverse for e in trace.events)
        assert trace.outcome_of("tk01") is Phase.ACCEPTED


# ---------------------------------------------------------------------------
# Random mode
# ---------------------------------------------------------------------------


def test_same_seed_same_walks(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    first = simulate_random(model, seed=11, runs=30)
    second = simulate_random(model, seed=11, runs=30)
    assert first == second
    assert first != simulate_random(model, seed=12, runs=30)


def test_random_walks_are_a_subset_of_exhaustive(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    exhaustive = simulate_exhaustive(model).traces
    for trace in simulate_random(model, seed=42, runs=50):
        assert not trace.exhausted
        assert trace in exhaustive


# ---------------------------------------------------------------------------
# Trace outcomes and the JSON-lines dump
# ---------------------------------------------------------------------------


def test_outcome_tags_over_complete_level(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    result = simulate_exhaustive(model)
    assert {t.outcome() for t in result.traces} == {"Accepted", "Stopped", "Terminated"}


def test_outcome_aggregation_rules():
    def tagged(*phases, exhausted=False):
        outcomes = tuple((f"tk{i:02d}", ph) for i, ph in enumerate(phases, 1))
        return SimTrace((), outcomes, exhausted).outcome()

    assert tagged(Phase.ACCEPTED, Phase.ACCEPTED) == "Accepted"
    assert tagged(Phase.ACCEPTED, Phase.INITIAL) == "Accepted"
    assert tagged(Phase.ACCEPTED, Phase.STOPPED) == "Stopped"
    assert tagged(Phase.STOPPED, Phase.TERMINATED) == "Terminated"
    assert tagged(Phase.ACCEPTED, Phase.PROMISED) == "Deadlock"
    assert tagged(Phase.ACCEPTED, exhausted=True) == "BoundExhausted"


def test_happy_trace_json_shape(solo_net):
    model = compile_network(solo_net, DetailLevel.HAPPY_FLOW)
    (trace,) = simulate_exhaustive(model).traces
    doc = json.loads(trace.to_json())
    assert set(doc) == {"events", "outcome"}
    assert doc["outcome"] == "Accepted"
    assert doc["events"] == [
        {"tk": "tk01", "act": "Request"},
        {"tk": "tk01", "act": "Promise"},
        {"tk": "tk01", "act": "Execute"},
        {"tk": "tk01", "act": "Declare"},
        {"tk": "tk01", "act": "Accept"},
    ]


def test_inverse_events_are_marked_in_json(solo_net):
    model = compile_network(solo_net, DetailLevel.COMPLETE)
    result = simulate_exhaustive(model)
    trace = next(
        t
        for t in result.traces
        if t.acts_for("tk01")
        == HAPPY_ACTS + (Act.REVOKE_REQUEST, Act.ALLOW)
    )
    doc = json.loads(trace.to_json())
    assert doc["outcome"] == "Terminated"
    acts = [e["act"] for e in doc["events"]]
    assert acts[-5:] == [
        "Accept⁻¹",
        "Declare⁻¹",
        "Execute⁻¹",
        "Promise⁻¹",
        "Request⁻¹",
    ]


# ---------------------------------------------------------------------------
# Mutation: a model missing its Accept must be caught
# ---------------------------------------------------------------------------


def _without_initiator_accept(model):
    mutant = copy.deepcopy(model)
    for pool in mutant.pools:
        for node in list(pool.nodes):
            if node.id.endswith("_i_accept_sendtask"):
                (incoming,) = [f for f in pool.flows if f.target == node.id]
                (outgoing,) = [f for f in pool.flows if f.source == node.id]
                incoming.target = outgoing.target
                pool.flows.remove(outgoing)
                pool.nodes.remove(node)
    mutant.message_flows = [
        mf for mf in mutant.message_flows if "_i_accept_" not in mf.source
    ]
    return mutant


def test_deleted_accept_task_is_nonconformant(solo_net):
    model = _without_initiator_accept(compile_network(solo_net, DetailLevel.HAPPY_FLOW))
    report = check_conformance(model, LEVEL_ALPHABETS[DetailLevel.HAPPY_FLOW])
    assert report.verdict is Verdict.NONCONFORMANT
    assert (HAPPY_ACTS, Phase.ACCEPTED) in report.missing["tk01"]


# ---------------------------------------------------------------------------
# Composition topologies
# ---------------------------------------------------------------------------


def _actor(i: int) -> Actor:
    return Actor(id=f"A{i:02d}", name=f"Actor {i:02d}")


def _tk(n: int, initiator: str, executor: str) -> Transaction:
    return Transaction(
        id=f"TK{n:02d}",
        name=f"step {n:02d}",
        initiator=initiator,
        executor=executor,
        result=Result(id=f"PK{n:02d}", phrase=f"[product {n:02d}] has been made"),
    )


def _chain_net(kind: DependencyKind, length: int) -> TransactionNetwork:
    actors = [_actor(i) for i in range(1, length + 2)]
    tks = [_tk(i, f"A{i:02d}", f"A{i + 1:02d}") for i in range(1, length + 1)]
    deps = [
        Dependency(parent=f"TK{i:02d}", child=f"TK{i + 1:02d}", kind=kind)
        for i in range(1, length)
    ]
    return TransactionNetwork(tuple(actors), tuple(tks), tuple(deps))


def _fan_net(kind: DependencyKind, children: int) -> TransactionNetwork:
    actors = [_actor(i) for i in range(1, children + 3)]
    tks = [_tk(1, "A01", "A02")]
    deps = []
    for j in range(children):
        tks.append(_tk(2 + j, "A02", f"A{3 + j:02d}"))
        deps.append(Dependency(parent="TK01", child=f"TK{2 + j:02d}", kind=kind))
    return TransactionNetwork(tuple(actors), tuple(tks), tuple(deps))


COMPOSITIONS = {
    "chain2-rap": (_chain_net(DependencyKind.RAP, 2), 1, 63),
    "chain3-rap": (_chain_net(DependencyKind.RAP, 3), 1, 209),
    "fan2-rap": (_fan_net(DependencyKind.RAP, 2), 252, 461),
    "chain2-rae": (_chain_net(DependencyKind.RAE, 2), 1, 59),
    "chain2-rad": (_chain_net(DependencyKind.RAD, 2), 6, 157),
}


@pytest.mark.parametrize("name", sorted(COMPOSITIONS))
def test_composition_ordering_holds(name):
    net, expected_traces, expected_states = COMPOSITIONS[name]
    assert not validate_network(net)
    model = compile_network(net, DetailLevel.HAPPY_FLOW)
    result = simulate_exhaustive(model)
    assert (len(result.traces), result.states) == (expected_traces, expected_states)
    for trace in result.traces:
        assert check_composition(net, trace) == []
        for tk, phase in trace.outcomes:
            assert phase is Phase.ACCEPTED, f"{name}: {tk} ended {phase}"


def test_composition_checker_spots_violations():
    net = _chain_net(DependencyKind.RAP, 2)
    bogus = SimTrace(
        events=tuple(),
        outcomes=(("tk01", Phase.INITIAL), ("tk02", Phase.INITIAL)),
    )
    assert check_composition(net, bogus) == []  # nothing happened, nothing violated

    model = compile_network(net, DetailLevel.HAPPY_FLOW)
    (good,) = simulate_exhaustive(model).traces
    # move the child's Request in front of everything
    events = list(good.events)
    child_request = next(
        e for e in events if e.tk == "tk02" and e.act is Act.REQUEST
    )
    events.remove(child_request)
    reordered = SimTrace((child_request, *events), good.outcomes)
    problems = check_composition(net, reordered)
    assert any("TK02" in p and "Promise" in p for p in problems)
