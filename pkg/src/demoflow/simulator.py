"""Token-play simulation of compiled collaborations, checked against the
transaction engine.

The simulator replays a generated model step by step: firing nodes, delivering
messages, letting the environment trigger revocations.  Every act-carrying
node that fires is simultaneously applied to a shadow transaction state from
:mod:`demoflow.engine`; a model that lets an act happen out of order fails
loudly.  Exhaustive exploration produces the full set of bounded traces, which
conformance checking compares — per transaction, projected onto the fourteen
acts — with the engine's enumerated language.

The simulator reads everything it needs out of the node-id grammar, so it
works identically on freshly compiled models and on models parsed back from
XML.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Optional

from .engine import (
    Act,
    Bounds,
    DEAD_PHASES,
    INITIAL_STATE,
    Phase,
    REVOCATIONS,
    Role,
    TERMINAL_PHASES,
    TransactionState,
    apply_act,
    enumerate_language,
    revocation_auto_refused,
    rollback_chain,
)
from .model import (
    ACT_SLUGS,
    BpmnModel,
    FlowNode,
    MessageFlow,
    NodeKind,
    NodeMeta,
    SLUG_FOR_ACT,
    SequenceFlow,
    parse_node_id,
)
from .network import DependencyKind, TransactionNetwork
from .model import slugify_tk


class SimulationError(RuntimeError):
    """The model broke a simulation invariant (or is not simulatable)."""


class StateSpaceLimitExceeded(SimulationError):
    pass


# Node-id slugs that make up the revocation machinery; everything else is the
# normal transaction flow.  A pending revocation freezes the normal zone of
# its transaction while the revocation protocol plays out.
_REVOCATION_SLUGS = frozenset(SLUG_FOR_ACT[r] for r in REVOCATIONS)
_REV_ZONE_SLUGS = _REVOCATION_SLUGS | {
    "revoke", "allow", "refuse", "ackgo", "ackdone",
    "rereject", "redecline", "repromise", "terminated",
}

# Splice exits assume the parent just performed the gating act; a token
# arriving when the parent has moved on (or rolled back) is stale and dropped.
_EXIT_GATE = {"execute": Phase.PROMISED, "declare": Phase.EXECUTED,
              "rap": Phase.PROMISED, "rae": Phase.EXECUTED}


@dataclass(frozen=True)
class SimEvent:
    tk: str
    act: Act
    role: Role
    inverse: bool = False  # a compensation (rollback) of the act

    def label(self) -> str:
        return f"{self.act.value}⁻¹" if self.inverse else self.act.value


@dataclass(frozen=True)
class TkStatus:
    """Shadow state of one transaction during simulation."""

    state: TransactionState = INITIAL_STATE
    rerequests: int = 0
    redeclares: int = 0
    revocations: int = 0
    # None | ("pending",) | ("repositioning", splits_left)
    lock: Optional[tuple] = None


@dataclass(frozen=True)
class _State:
    tokens: tuple[tuple[str, int], ...]
    in_flight: frozenset[str]  # sources of undelivered messages
    spawned: frozenset[str]  # transactions whose executor instance started
    completed: frozenset[str]  # task nodes that ran (and could be compensated)
    compensated: frozenset[str]
    shadows: tuple[tuple[str, TkStatus], ...]


@dataclass(frozen=True)
class SimTrace:
    """One recorded run: the emitted events plus each transaction's phase."""

    events: tuple[SimEvent, ...]
    outcomes: tuple[tuple[str, Phase], ...]
    exhausted: bool = False

    def acts_for(self, tk: str) -> tuple[Act, ...]:
        return tuple(e.act for e in self.events if e.tk == tk and not e.inverse)

    def outcome_of(self, tk: str) -> Phase:
        return dict(self.outcomes)[tk]

    def outcome(self) -> str:
        """Aggregate tag for the run as a whole.

        A transaction stranded in a non-terminal phase makes the run a
        Deadlock; never-started transactions are simply absent from the run.
        Otherwise the worst terminal phase wins: Terminated over Stopped over
        Accepted.
        """
        if self.exhausted:
            return "BoundExhausted"
        settled = TERMINAL_PHASES | {Phase.INITIAL}
        phases = {phase for _, phase in self.outcomes}
        if any(phase not in settled for phase in phases):
            return "Deadlock"
        for worst in (Phase.TERMINATED, Phase.STOPPED):
            if worst in phases:
                return worst.value
        return Phase.ACCEPTED.value

    def to_json(self) -> str:
        return json.dumps(
            {
                "events": [{"tk": e.tk, "act": e.label()} for e in self.events],
                "outcome": self.outcome(),
            },
            ensure_ascii=False,
            sort_keys=True,
        )


@dataclass
class ExhaustiveResult:
    traces: frozenset[SimTrace]
    states: int


class _Working:
    """Mutable copy of a _State while one step is applied."""

    def __init__(self, state: _State):
        self.tokens = dict(state.tokens)
        self.in_flight = set(state.in_flight)
        self.spawned = set(state.spawned)
        self.completed = set(state.completed)
        self.compensated = set(state.compensated)
        self.shadows = dict(state.shadows)

    def add_token(self, node: str, count: int = 1) -> None:
        self.tokens[node] = self.tokens.get(node, 0) + count

    def take_token(self, node: str, count: int = 1) -> None:
        left = self.tokens.get(node, 0) - count
        if left < 0:
            raise SimulationError(f"token underflow at {node}")
        if left:
            self.tokens[node] = left
        else:
            self.tokens.pop(node, None)

    def freeze(self) -> _State:
        return _State(
            tokens=tuple(sorted((n, c) for n, c in self.tokens.items() if c > 0)),
            in_flight=frozenset(self.in_flight),
            spawned=frozenset(self.spawned),
            completed=frozenset(self.completed),
            compensated=frozenset(self.compensated),
            shadows=tuple(sorted(self.shadows.items())),
        )


class _Simulation:
    """Structure derived from the model plus the step semantics."""

    def __init__(self, model: BpmnModel, bounds: Bounds):
        self.bounds = bounds
        self.nodes: dict[str, FlowNode] = {}
        self.meta: dict[str, NodeMeta] = {}
        self.pool_of: dict[str, str] = {}
        self.succ: dict[str, list[SequenceFlow]] = {}
        self.indeg: dict[str, int] = {}
        self.msg_out: dict[str, list[MessageFlow]] = {}
        msg_in: dict[str, list[MessageFlow]] = {}

        for pool in model.pools:
            for node in pool.nodes:
                if node.id in self.nodes:
                    raise SimulationError(f"duplicate node id {node.id}")
                meta = parse_node_id(node.id)
                if meta is None:
                    raise SimulationError(
                        f"node {node.id} does not follow the generated-id grammar; "
                        "only generated models can be simulated"
                    )
                self.nodes[node.id] = node
                self.meta[node.id] = meta
                self.pool_of[node.id] = pool.id
                self.succ.setdefault(node.id, [])
                self.indeg.setdefault(node.id, 0)
            for flow in pool.flows:
                self.succ.setdefault(flow.source, []).append(flow)
                self.indeg[flow.target] = self.indeg.get(flow.target, 0) + 1
        for mf in model.message_flows:
            self.msg_out.setdefault(mf.source, []).append(mf)
            msg_in.setdefault(mf.target, []).append(mf)

        self.tks = sorted({m.tk for m in self.meta.values()})
        self.tk_nodes: dict[str, set[str]] = {tk: set() for tk in self.tks}
        for node_id, meta in self.meta.items():
            self.tk_nodes[meta.tk].add(node_id)

        self.starts = sorted(
            n for n, node in self.nodes.items() if node.kind is NodeKind.START_EVENT
        )
        self.rev_zone = {
            n for n, m in self.meta.items() if m.slug in _REV_ZONE_SLUGS
        }
        # the arming gateway stays live even while a revocation is pending,
        # so a late-spawning executor instance can still join the protocol
        self.arming_gateways = {
            n for n, m in self.meta.items()
            if m.slug == "entry" and self.nodes[n].kind is NodeKind.PARALLEL_GATEWAY
        }
        self.ebg_pred: dict[str, str] = {}
        for node_id, flows in self.succ.items():
            if self.nodes[node_id].kind is NodeKind.EVENT_BASED_GATEWAY:
                for flow in flows:
                    self.ebg_pred[flow.target] = node_id
        self.trigger_catches = {
            n: m.act
            for n, m in self.meta.items()
            if self.nodes[n].kind is NodeKind.MESSAGE_CATCH
            and m.slug in _REVOCATION_SLUGS
            and n not in msg_in
        }
        self.reposition_splits = {
            n for n, m in self.meta.items()
            if self.nodes[n].kind is NodeKind.PARALLEL_GATEWAY
            and m.slug in _REVOCATION_SLUGS
        }

        self._wire_splices()

    def _wire_splices(self) -> None:
        # Cross-transaction sequence flows are the compiler's splices: an
        # entry starts a child, an exit resumes the parent after the child's
        # accept.  Re-entering an already-started child teleports the token
        # past it instead (or drops it for the asynchronous case).
        self.exit_guard: dict[str, tuple[str, Phase]] = {}
        self.entry_info: dict[str, tuple[str, Optional[tuple[str, Optional[Phase]]]]] = {}
        self.direct_children: dict[str, set[str]] = {}

        cross = []
        for flows in self.succ.values():
            for flow in flows:
                if self.meta[flow.source].tk != self.meta[flow.target].tk:
                    cross.append(flow)

        exit_of_child: dict[str, SequenceFlow] = {}
        for flow in cross:
            source_meta = self.meta[flow.source]
            target_meta = self.meta[flow.target]
            if source_meta.slug == "accept":
                exit_of_child[source_meta.tk] = flow
                target_slug = target_meta.slug
                if target_slug in ("execute", "declare"):
                    self.exit_guard[flow.id] = (target_meta.tk, _EXIT_GATE[target_slug])
                # exits into a rap/rae join are unguarded; the join's own
                # outgoing flow carries the guard
            elif target_meta.slug not in ("request", "entry"):
                raise SimulationError(f"unrecognized cross-transaction flow {flow.id}")

        for node_id, meta in self.meta.items():
            if meta.slug in ("rap", "rae") and meta.ordinal == 2:
                for flow in self.succ[node_id]:
                    self.exit_guard[flow.id] = (meta.tk, _EXIT_GATE[meta.slug])

        for flow in cross:
            source_meta = self.meta[flow.source]
            target_meta = self.meta[flow.target]
            if source_meta.slug == "accept":
                continue
            child = target_meta.tk
            self.direct_children.setdefault(source_meta.tk, set()).add(child)
            teleport: Optional[tuple[str, Optional[Phase]]]
            if source_meta.slug == "rad":
                teleport = None  # asynchronous child: a stale re-entry just vanishes
            elif source_meta.slug in ("rap", "rae"):
                join = f"{flow.source}_2"
                if join not in self.nodes:
                    raise SimulationError(f"splice join {join} missing")
                teleport = (join, None)
            else:
                exit_flow = exit_of_child.get(child)
                if exit_flow is None:
                    raise SimulationError(f"child {child} has no splice exit")
                teleport = (exit_flow.target, self.exit_guard[exit_flow.id][1])
            self.entry_info[flow.id] = (child, teleport)

    # -- state ------------------------------------------------------------

    def initial(self) -> _State:
        working = _Working(
            _State((), frozenset(), frozenset(), frozenset(),
                   frozenset(), ())
        )
        for start in self.starts:
            working.add_token(start)
        working.shadows = {tk: TkStatus() for tk in self.tks}
        return working.freeze()

    def outcomes(self, state: _State) -> tuple[tuple[str, Phase], ...]:
        return tuple((tk, status.state.phase) for tk, status in state.shadows)

    # -- step enumeration --------------------------------------------------

    def _frozen(self, node_id: str, shadows: dict[str, TkStatus]) -> bool:
        if node_id in self.rev_zone or node_id in self.arming_gateways:
            return False
        return shadows[self.meta[node_id].tk].lock is not None

    def steps(self, state: _State) -> list[tuple[str, str, str]]:
        tokens = dict(state.tokens)
        shadows = dict(state.shadows)
        out: list[tuple[str, str, str]] = []

        for node_id, count in tokens.items():
            if count <= 0:
                continue
            node = self.nodes[node_id]
            kind = node.kind
            if kind in (
                NodeKind.MESSAGE_CATCH, NodeKind.MESSAGE_START_EVENT,
                NodeKind.EVENT_BASED_GATEWAY, NodeKind.COMPENSATION_BOUNDARY,
                NodeKind.COMPENSATION_HANDLER,
            ):
                continue  # fired by delivery or environment, or never
            if kind is NodeKind.PARALLEL_GATEWAY and count < max(1, self.indeg[node_id]):
                continue
            if self._frozen(node_id, shadows):
                continue
            if kind is NodeKind.EXCLUSIVE_GATEWAY:
                for flow in self.succ[node_id]:
                    if self._branch_allowed(flow, shadows[self.meta[node_id].tk]):
                        out.append(("fire", node_id, flow.id))
            else:
                out.append(("fire", node_id, ""))

        for source in state.in_flight:
            for mf in self.msg_out.get(source, ()):
                target = mf.target
                node = self.nodes.get(target)
                if node is None:
                    continue
                tk = self.meta[target].tk
                if node.kind is NodeKind.MESSAGE_START_EVENT:
                    if tk not in state.spawned:
                        out.append(("deliver", source, target))
                    continue
                armed = tokens.get(target, 0) > 0 or (
                    target in self.ebg_pred
                    and tokens.get(self.ebg_pred[target], 0) > 0
                )
                if not armed:
                    continue
                if self._frozen(target, shadows):
                    continue
                out.append(("deliver", source, target))

        for trigger, act in sorted(self.trigger_catches.items()):
            status = shadows[self.meta[trigger].tk]
            if status.lock is not None or status.revocations >= self.bounds.revocations:
                continue
            phase = status.state.phase
            if phase is Phase.INITIAL or phase in DEAD_PHASES:
                continue
            gate = self.ebg_pred.get(trigger)
            if gate and tokens.get(gate, 0) > 0:
                out.append(("trigger", trigger, ""))

        out.sort()
        return out

    def _branch_allowed(self, flow: SequenceFlow, status: TkStatus) -> bool:
        label = flow.label
        if label == "rerequest":
            return status.rerequests < self.bounds.rerequest
        if label == "redeclare":
            return status.redeclares < self.bounds.redeclare
        if label.startswith("performed:"):
            act = ACT_SLUGS.get(label.split(":", 1)[1])
            return act is not None and act in status.state.history
        return True

    # -- step application --------------------------------------------------

    def apply(self, state: _State, step: tuple[str, str, str]) -> tuple[_State, tuple[SimEvent, ...]]:
        working = _Working(state)
        events: list[SimEvent] = []
        op, a, b = step
        if op == "fire":
            self._fire(working, a, b, events)
        elif op == "deliver":
            self._deliver(working, a, b, events)
        elif op == "trigger":
            self._trigger(working, a)
        else:
            raise SimulationError(f"unknown step {step}")
        return working.freeze(), tuple(events)

    def _emit(self, working: _Working, node_id: str, events: list[SimEvent]) -> None:
        meta = self.meta[node_id]
        act = meta.act
        if act is None:
            return
        tk = meta.tk
        status = working.shadows[tk]
        prior = status.state
        try:
            new_state = apply_act(prior, act, meta.role)
        except Exception as exc:
            raise SimulationError(
                f"model lets {act.value} happen out of order at {node_id}: {exc}"
            ) from exc
        rerequests = status.rerequests
        redeclares = status.redeclares
        if act is Act.REQUEST and prior.phase is Phase.DECLINED:
            rerequests += 1
        if act is Act.DECLARE and prior.phase is Phase.REJECTED:
            redeclares += 1
        lock = status.lock
        if act in (Act.ALLOW, Act.REFUSE):
            if prior.pending is None:
                raise SimulationError(f"{node_id} resolved a revocation that was not pending")
            revocation = prior.pending[0]
            if act is Act.ALLOW:
                if revocation_auto_refused(prior):
                    raise SimulationError(f"{node_id} allowed an unperformed-target revocation")
                lock = ("pending",) if revocation is Act.REVOKE_REQUEST else ("repositioning", 2)
            else:
                lock = None
        working.shadows[tk] = TkStatus(new_state, rerequests, redeclares, status.revocations, lock)
        events.append(SimEvent(tk, act, meta.role))

    def _fire(self, working: _Working, node_id: str, flow_id: str, events: list[SimEvent]) -> None:
        node = self.nodes[node_id]
        kind = node.kind
        need = max(1, self.indeg[node_id]) if kind is NodeKind.PARALLEL_GATEWAY else 1
        working.take_token(node_id, need)

        if kind in (NodeKind.TASK, NodeKind.SEND_TASK):
            self._emit(working, node_id, events)
            working.completed.add(node_id)
            working.compensated.discard(node_id)
            if kind is NodeKind.SEND_TASK and self.msg_out.get(node_id):
                if node_id in working.in_flight:
                    raise SimulationError(f"message from {node_id} still in flight")
                working.in_flight.add(node_id)
            self._place_all(working, node_id)
        elif kind is NodeKind.COMPENSATION_THROW:
            target = node.compensates
            if target in working.completed and target not in working.compensated:
                meta = self.meta[target]
                working.compensated.add(target)
                events.append(SimEvent(meta.tk, meta.act, meta.role, inverse=True))
            self._place_all(working, node_id)
        elif kind is NodeKind.EXCLUSIVE_GATEWAY:
            chosen = next(f for f in self.succ[node_id] if f.id == flow_id)
            self._place(working, chosen)
        elif kind is NodeKind.PARALLEL_GATEWAY:
            if node_id in self.reposition_splits:
                self._reposition(working, node_id)
            self._place_all(working, node_id)
        elif kind is NodeKind.TERMINATE_END_EVENT:
            self._terminate(working, node_id)
        elif kind is NodeKind.END_EVENT:
            pass
        elif kind is NodeKind.START_EVENT:
            self._place_all(working, node_id)
        else:
            raise SimulationError(f"cannot fire {kind} node {node_id}")

    def _deliver(self, working: _Working, source: str, target: str, events: list[SimEvent]) -> None:
        if source not in working.in_flight:
            raise SimulationError(f"no message in flight from {source}")
        working.in_flight.discard(source)
        node = self.nodes[target]
        if node.kind is NodeKind.MESSAGE_START_EVENT:
            working.spawned.add(self.meta[target].tk)
        elif working.tokens.get(target, 0) > 0:
            working.take_token(target)
        else:
            gate = self.ebg_pred.get(target)
            if gate is None or working.tokens.get(gate, 0) <= 0:
                raise SimulationError(f"delivery to unarmed catch {target}")
            working.take_token(gate)
        self._place_all(working, target)

    def _trigger(self, working: _Working, trigger: str) -> None:
        gate = self.ebg_pred[trigger]
        working.take_token(gate)
        tk = self.meta[trigger].tk
        status = working.shadows[tk]
        working.shadows[tk] = replace(
            status, revocations=status.revocations + 1, lock=("pending",)
        )
        self._place_all(working, trigger)

    # -- placement with splice guards --------------------------------------

    def _place_all(self, working: _Working, node_id: str) -> None:
        for flow in self.succ.get(node_id, ()):
            self._place(working, flow)

    def _place(self, working: _Working, flow: SequenceFlow) -> None:
        guard = self.exit_guard.get(flow.id)
        if guard is not None:
            parent_tk, phase = guard
            if working.shadows[parent_tk].state.phase is not phase:
                return  # stale resumption after a rollback or reposition
        entry = self.entry_info.get(flow.id)
        if entry is not None:
            child, teleport = entry
            if self._child_fresh(working, child):
                working.add_token(flow.target)
            elif teleport is not None:
                node, gate_phase = teleport
                parent_tk = self.meta[node].tk
                if gate_phase is None or working.shadows[parent_tk].state.phase is gate_phase:
                    working.add_token(node)
            return
        working.add_token(flow.target)

    def _child_fresh(self, working: _Working, child: str) -> bool:
        if child in working.spawned:
            return False
        if working.shadows[child].state.phase is not Phase.INITIAL:
            return False
        return not any(working.tokens.get(n, 0) for n in self.tk_nodes[child])

    # -- revocation bookkeeping --------------------------------------------

    def _reposition(self, working: _Working, split: str) -> None:
        meta = self.meta[split]
        tk, pool = meta.tk, self.pool_of[split]
        status = working.shadows[tk]
        if not (status.lock and status.lock[0] == "repositioning"):
            raise SimulationError(f"reposition split {split} fired without an allowed revocation")
        # the rolled-back flow restarts from the landing node: clear this
        # pool's normal tokens for the transaction, plus any not-yet-started
        # child entry left over from the cancelled attempt
        for node_id in self.tk_nodes[tk]:
            if self.pool_of[node_id] == pool and node_id not in self.rev_zone:
                working.tokens.pop(node_id, None)
        for child in self.direct_children.get(tk, ()):
            if child not in working.spawned and working.shadows[child].state.phase is Phase.INITIAL:
                for node_id in self.tk_nodes[child]:
                    if self.pool_of[node_id] == pool:
                        working.tokens.pop(node_id, None)
        for source in list(working.in_flight):
            if self.meta[source].tk != tk:
                continue
            targets = self.msg_out.get(source, ())
            if targets and all(
                self.pool_of.get(mf.target) == pool and mf.target not in self.rev_zone
                for mf in targets
            ):
                working.in_flight.discard(source)
        left = status.lock[1] - 1
        working.shadows[tk] = replace(
            status, lock=None if left == 0 else ("repositioning", left)
        )

    def _terminate(self, working: _Working, node_id: str) -> None:
        tk, pool = self.meta[node_id].tk, self.pool_of[node_id]
        for other in self.tk_nodes[tk]:
            if self.pool_of[other] == pool:
                working.tokens.pop(other, None)
        for source in list(working.in_flight):
            if self.meta[source].tk != tk:
                continue
            targets = self.msg_out.get(source, ())
            if targets and all(self.pool_of.get(mf.target) == pool for mf in targets):
                working.in_flight.discard(source)


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------


def simulate_exhaustive(
    model: BpmnModel, bounds: Bounds = Bounds(), max_states: int = 1_000_000
) -> ExhaustiveResult:
    """Explore every interleaving; return the deduplicated recorded traces.

    A trace is recorded at every quiescent state — one where nothing can
    happen except an environment-triggered revocation — so an accepted run
    and its post-acceptance revocation extensions are all members.
    """
    sim = _Simulation(model, bounds)
    root = sim.initial()

    memo: dict[_State, frozenset] = {}
    onstack: set[_State] = set()
    stack: list[list] = []

    def open_frame(state: _State) -> None:
        if len(memo) + len(onstack) >= max_states:
            raise StateSpaceLimitExceeded(
                f"more than {max_states} states explored"
            )
        steps = sim.steps(state)
        quiescent = all(step[0] == "trigger" for step in steps)
        successors = [sim.apply(state, step) for step in steps]
        onstack.add(state)
        stack.append([state, successors, quiescent, 0, set()])

    open_frame(root)
    while stack:
        frame = stack[-1]
        state, successors, quiescent, index, collected = frame
        if index < len(successors):
            child, emitted = successors[index]
            if child in memo:
                collected.update(
                    (emitted + suffix, outcome) for suffix, outcome in memo[child]
                )
                frame[3] += 1
            elif child in onstack:
                raise SimulationError("simulation state graph has a cycle")
            else:
                open_frame(child)
            continue
        if quiescent:
            collected.add(((), sim.outcomes(state)))
        memo[state] = frozenset(collected)
        onstack.discard(state)
        stack.pop()

    traces = frozenset(
        SimTrace(tuple(events), outcomes) for events, outcomes in memo[root]
    )
    return ExhaustiveResult(traces=traces, states=len(memo))


def simulate_random(
    model: BpmnModel,
    bounds: Bounds = Bounds(),
    seed: int = 0,
    runs: int = 100,
    max_steps: int = 100_000,
) -> list[SimTrace]:
    """Seeded random walks; each run records one trace at quiescence."""
    sim = _Simulation(model, bounds)
    rng = random.Random(seed)
    traces = []
    for _ in range(runs):
        state = sim.initial()
        events: list[SimEvent] = []
        exhausted = False
        for _step in range(max_steps):
            steps = sim.steps(state)
            if not steps:
                break
            if all(s[0] == "trigger" for s in steps) and rng.random() < 0.5:
                break  # settle here rather than revoke
            state, emitted = sim.apply(state, steps[rng.randrange(len(steps))])
            events.extend(emitted)
        else:
            exhausted = True
        traces.append(SimTrace(tuple(events), sim.outcomes(state), exhausted))
    return traces


# ---------------------------------------------------------------------------
# Conformance and invariant checks
# ---------------------------------------------------------------------------


class Verdict(Enum):
    CONFORMANT = "Conformant"
    NONCONFORMANT = "NonConformant"


@dataclass
class ConformanceReport:
    verdict: Verdict
    missing: dict[str, frozenset]  # language members the model never produced
    unexpected: dict[str, frozenset]  # produced behaviour outside the language
    compensation_violations: list[str]
    states: int
    traces: int

    def summary(self) -> str:
        lines = [f"{self.verdict.value}: {self.traces} traces over {self.states} states"]
        for tk in sorted(self.missing):
            for sequence, phase in sorted(self.missing[tk]):
                acts = ",".join(a.value for a in sequence)
                lines.append(f"  missing {tk}: [{acts}] -> {phase.value}")
        for tk in sorted(self.unexpected):
            for sequence, phase in sorted(self.unexpected[tk]):
                acts = ",".join(a.value for a in sequence)
                lines.append(f"  unexpected {tk}: [{acts}] -> {phase.value}")
        for violation in self.compensation_violations:
            lines.append(f"  compensation: {violation}")
        return "\n".join(lines)


def check_conformance(
    model: BpmnModel,
    alphabet: frozenset,
    bounds: Bounds = Bounds(),
    max_states: int = 1_000_000,
) -> ConformanceReport:
    """Compare the model's exhaustive trace set with the engine's language.

    Each transaction's traces are projected onto the fourteen acts and
    set-compared with ``enumerate_language``; compensation events are checked
    separately for correct inverse order.  Transactions a run never reached
    (empty projection, Initial phase) are not counted against it.
    """
    result = simulate_exhaustive(model, bounds, max_states)
    expected = enumerate_language(alphabet, bounds)

    produced: dict[str, set] = {}
    compensation_violations: list[str] = []
    for trace in result.traces:
        for tk, phase in trace.outcomes:
            projection = trace.acts_for(tk)
            if not projection and phase is Phase.INITIAL:
                continue
            produced.setdefault(tk, set()).add((projection, phase))
        for violation in check_compensation_order(trace):
            if violation not in compensation_violations:
                compensation_violations.append(violation)

    missing: dict[str, frozenset] = {}
    unexpected: dict[str, frozenset] = {}
    for tk, got in sorted(produced.items()):
        if got - expected:
            unexpected[tk] = frozenset(got - expected)
        if expected - got:
            missing[tk] = frozenset(expected - got)

    conformant = not missing and not unexpected and not compensation_violations
    return ConformanceReport(
        verdict=Verdict.CONFORMANT if conformant else Verdict.NONCONFORMANT,
        missing=missing,
        unexpected=unexpected,
        compensation_violations=compensation_violations,
        states=result.states,
        traces=len(result.traces),
    )


def check_network_conformance(
    net: TransactionNetwork,
    level,
    bounds: Bounds = Bounds(),
    max_states: int = 1_000_000,
) -> ConformanceReport:
    """Compile ``net`` at ``level`` and check it against the matching language."""
    from .compiler import compile_network, LEVEL_ALPHABETS

    model = compile_network(net, level)
    return check_conformance(model, LEVEL_ALPHABETS[level], bounds, max_states)


_GATE_ACT = {
    DependencyKind.RAP: Act.PROMISE,
    DependencyKind.RAE: Act.EXECUTE,
    DependencyKind.RAD: Act.DECLARE,
}


def check_composition(net: TransactionNetwork, trace: SimTrace) -> list[str]:
    """Cross-transaction ordering rules implied by the dependency kinds.

    A child may be requested only after its parent promised (RaP), executed
    (RaE) or declared (RaD); and for the synchronous kinds the parent may
    declare only after the child accepted.
    """
    first: dict[tuple[str, Act], int] = {}
    for index, event in enumerate(trace.events):
        if not event.inverse:
            first.setdefault((event.tk, event.act), index)

    violations = []
    for dep in net.dependencies:
        parent, child = slugify_tk(dep.parent), slugify_tk(dep.child)
        gate = _GATE_ACT[dep.kind]
        child_request = first.get((child, Act.REQUEST))
        if child_request is not None:
            parent_gate = first.get((parent, gate))
            if parent_gate is None or child_request < parent_gate:
                violations.append(
                    f"{dep.child} was requested before {dep.parent} performed {gate.value}"
                )
        if dep.kind in (DependencyKind.RAP, DependencyKind.RAE):
            parent_declare = first.get((parent, Act.DECLARE))
            child_accept = first.get((child, Act.ACCEPT))
            if parent_declare is not None and (
                child_accept is None or parent_declare < child_accept
            ):
                violations.append(
                    f"{dep.parent} declared before {dep.child} was accepted"
                )
    return violations


def check_compensation_order(trace: SimTrace) -> list[str]:
    """Inverse events of each allowed revocation must replay the rollback
    chain exactly: most recent act first, nothing skipped, nothing extra."""
    violations = []
    for tk in sorted({e.tk for e in trace.events}):
        tk_events = [e for e in trace.events if e.tk == tk]
        state = INITIAL_STATE
        chain: Optional[deque] = None
        for event in tk_events:
            if event.inverse:
                if chain is None:
                    if state.pending is None:
                        violations.append(f"{tk}: inverse {event.act.value} outside a revocation")
                        continue
                    try:
                        chain = deque(rollback_chain(state, state.pending[0]))
                    except Exception:
                        violations.append(f"{tk}: inverse {event.act.value} for an unperformed act")
                        continue
                if not chain:
                    violations.append(f"{tk}: extra inverse {event.act.value}")
                elif event.act is not chain[0]:
                    violations.append(
                        f"{tk}: expected {chain[0].value} undone next, got {event.act.value}"
                    )
                else:
                    chain.popleft()
                continue
            if event.act is Act.ALLOW:
                if state.pending is None:
                    violations.append(f"{tk}: Allow without a pending revocation")
                    continue
                if chain is None:
                    try:
                        chain = deque(rollback_chain(state, state.pending[0]))
                    except Exception:
                        chain = deque()
                state = apply_act(state, Act.ALLOW, event.role)
                continue
            if chain:
                violations.append(
                    f"{tk}: {event.act.value} happened before the rollback finished"
                )
            chain = None
            try:
                state = apply_act(state, event.act, event.role)
            except Exception as exc:
                violations.append(f"{tk}: {event.act.value} not enabled ({exc})")
        if chain:
            violations.append(f"{tk}: rollback chain left unfinished")
    return violations
