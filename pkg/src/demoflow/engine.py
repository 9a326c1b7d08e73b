"""Executable state machine for the complete business-transaction pattern.

One transaction instance moves between two actor roles (initiator, executor)
through coordination acts plus the single production act (execute):

    happy flow     request -> promise -> execute -> declare -> accept
    dissent        decline (with re-request or stop), reject (with
                   re-declare or stop)
    revocation     revoke request / promise / declare / accept, each decided
                   by the counterparty with allow or refuse; an allowed
                   revocation rolls performed acts back in inverse
                   chronological order and repositions the transaction

This module is the ground truth the generated BPMN collaborations are
verified against: the simulator's projected trace language must equal the
bounded language enumerated here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence, Union


class Act(Enum):
    REQUEST = "Request"
    PROMISE = "Promise"
    EXECUTE = "Execute"
    DECLARE = "Declare"
    ACCEPT = "Accept"
    DECLINE = "Decline"
    REJECT = "Reject"
    REVOKE_REQUEST = "RevokeRequest"
    REVOKE_PROMISE = "RevokePromise"
    REVOKE_DECLARE = "RevokeDeclare"
    REVOKE_ACCEPT = "RevokeAccept"
    ALLOW = "Allow"
    REFUSE = "Refuse"
    STOP = "Stop"


class Role(Enum):
    INITIATOR = "initiator"
    EXECUTOR = "executor"

    @property
    def other(self) -> "Role":
        return Role.EXECUTOR if self is Role.INITIATOR else Role.INITIATOR


class Phase(Enum):
    INITIAL = "Initial"
    REQUESTED = "Requested"
    PROMISED = "Promised"
    EXECUTED = "Executed"
    DECLARED = "Declared"
    ACCEPTED = "Accepted"
    REJECTED = "Rejected"
    DECLINED = "Declined"
    STOPPED = "Stopped"
    TERMINATED = "Terminated"


class Decision(Enum):
    ALLOW = "Allow"
    REFUSE = "Refuse"


CORE_ACTS: tuple[Act, ...] = (
    Act.REQUEST,
    Act.PROMISE,
    Act.EXECUTE,
    Act.DECLARE,
    Act.ACCEPT,
)

REVOCATIONS: tuple[Act, ...] = (
    Act.REVOKE_REQUEST,
    Act.REVOKE_PROMISE,
    Act.REVOKE_DECLARE,
    Act.REVOKE_ACCEPT,
)

# Who performs each revocation; the other role decides on it.
REVOKER: dict[Act, Role] = {
    Act.REVOKE_REQUEST: Role.INITIATOR,
    Act.REVOKE_ACCEPT: Role.INITIATOR,
    Act.REVOKE_PROMISE: Role.EXECUTOR,
    Act.REVOKE_DECLARE: Role.EXECUTOR,
}

# The act whose prior performance a revocation presupposes.  Revoking an act
# that was never performed is a deception attempt and is refused automatically.
REVOCATION_TARGET: dict[Act, Act] = {
    Act.REVOKE_REQUEST: Act.REQUEST,
    Act.REVOKE_PROMISE: Act.PROMISE,
    Act.REVOKE_DECLARE: Act.DECLARE,
    Act.REVOKE_ACCEPT: Act.ACCEPT,
}

# How much of the performed-act prefix survives an allowed revocation, and
# where the transaction lands afterwards.  RevokeDeclare keeps the promise
# (it is re-emitted, not undone) and resumes from Promised; RevokePromise
# keeps only the request and lands in Declined; RevokeRequest undoes
# everything and terminates; RevokeAccept undoes just the accept and lands
# in Rejected.
_KEPT_PREFIX: dict[Act, int] = {
    Act.REVOKE_ACCEPT: 4,
    Act.REVOKE_DECLARE: 2,
    Act.REVOKE_PROMISE: 1,
    Act.REVOKE_REQUEST: 0,
}

LANDING_PHASE: dict[Act, Phase] = {
    Act.REVOKE_ACCEPT: Phase.REJECTED,
    Act.REVOKE_DECLARE: Phase.PROMISED,
    Act.REVOKE_PROMISE: Phase.DECLINED,
    Act.REVOKE_REQUEST: Phase.TERMINATED,
}

# (phase, act, role) -> next phase, for core and dissent acts.
_TRANSITIONS: dict[tuple[Phase, Act, Role], Phase] = {
    (Phase.INITIAL, Act.REQUEST, Role.INITIATOR): Phase.REQUESTED,
    (Phase.REQUESTED, Act.PROMISE, Role.EXECUTOR): Phase.PROMISED,
    (Phase.REQUESTED, Act.DECLINE, Role.EXECUTOR): Phase.DECLINED,
    (Phase.DECLINED, Act.REQUEST, Role.INITIATOR): Phase.REQUESTED,
    (Phase.DECLINED, Act.STOP, Role.INITIATOR): Phase.STOPPED,
    (Phase.PROMISED, Act.EXECUTE, Role.EXECUTOR): Phase.EXECUTED,
    (Phase.EXECUTED, Act.DECLARE, Role.EXECUTOR): Phase.DECLARED,
    (Phase.DECLARED, Act.ACCEPT, Role.INITIATOR): Phase.ACCEPTED,
    (Phase.DECLARED, Act.REJECT, Role.INITIATOR): Phase.REJECTED,
    (Phase.REJECTED, Act.DECLARE, Role.EXECUTOR): Phase.DECLARED,
    (Phase.REJECTED, Act.STOP, Role.EXECUTOR): Phase.STOPPED,
}

# Phases where the transaction is over for good: no acts of any kind.
DEAD_PHASES = frozenset({Phase.STOPPED, Phase.TERMINATED})

# Accepted is terminal for core acts but still open to revocation (revoking
# an accepted product is the whole point of revoke-accept).
TERMINAL_PHASES = frozenset({Phase.ACCEPTED, Phase.STOPPED, Phase.TERMINATED})


class ActNotEnabled(ValueError):
    pass


class RevocationError(ValueError):
    pass


class TargetNotPerformed(RevocationError):
    pass


@dataclass(frozen=True)
class TransactionState:
    phase: Phase = Phase.INITIAL
    history: tuple[Act, ...] = ()
    pending: Optional[tuple[Act, Role]] = None  # (revocation act, triggering role)

    def __post_init__(self) -> None:
        if tuple(self.history) != CORE_ACTS[: len(self.history)]:
            raise ValueError(f"history must be a prefix of the core acts, got {self.history}")

    def performed(self, act: Act) -> bool:
        return act in self.history


INITIAL_STATE = TransactionState()


def allowed_acts(state: TransactionState, role: Role) -> frozenset[Act]:
    """Acts apply_act would accept for this role in this state.

    Revocations are included from Requested onward even when their target act
    is unperformed; those are enabled but resolve to an automatic refusal.
    """
    if state.pending is not None:
        revocation, by = state.pending
        if role is REVOKER[revocation].other:
            return frozenset({Act.ALLOW, Act.REFUSE})
        return frozenset()
    if state.phase in DEAD_PHASES:
        return frozenset()
    acts = {act for (phase, act, r) in _TRANSITIONS if phase is state.phase and r is role}
    if state.phase is not Phase.INITIAL:
        acts.update(r for r in REVOCATIONS if REVOKER[r] is role)
    return frozenset(acts)


def apply_act(state: TransactionState, act: Act, role: Role) -> TransactionState:
    """Apply one act; raises ActNotEnabled if the state machine refuses it.

    Allow/Refuse steps resolve the pending revocation; revocation acts mark
    it pending.  Core acts never duplicate entries in the performed-act
    history (a re-request or re-declare re-emits, it does not re-perform).
    """
    if act in (Act.ALLOW, Act.REFUSE):
        if state.pending is None:
            raise ActNotEnabled(f"{act.value} without a pending revocation")
        return resolve_revocation(
            state,
            state.pending[0],
            role,
            Decision.ALLOW if act is Act.ALLOW else Decision.REFUSE,
        )
    if state.pending is not None:
        raise ActNotEnabled(f"{act.value} while a revocation is pending")
    if act in REVOCATIONS:
        if state.phase is Phase.INITIAL:
            raise ActNotEnabled("revocations are suppressed before the request")
        if state.phase in DEAD_PHASES:
            raise ActNotEnabled(f"{act.value} in dead phase {state.phase.value}")
        if REVOKER[act] is not role:
            raise ActNotEnabled(f"{act.value} is not {role.value}'s revocation")
        return TransactionState(state.phase, state.history, pending=(act, role))
    try:
        next_phase = _TRANSITIONS[(state.phase, act, role)]
    except KeyError:
        raise ActNotEnabled(
            f"{act.value} by {role.value} is not enabled in phase {state.phase.value}"
        ) from None
    history = state.history
    if act in CORE_ACTS and act not in history:
        history = history + (act,)
    return TransactionState(next_phase, history, pending=None)


def rollback_chain(state: TransactionState, revocation: Act) -> tuple[Act, ...]:
    """Acts an allowed revocation undoes, most recent first.

    E.g. with all five acts performed, RevokeDeclare undoes
    (Accept, Declare, Execute) — the promise stays and is re-emitted.
    Raises TargetNotPerformed when the revoked act is not in the history.
    """
    if revocation not in REVOCATIONS:
        raise RevocationError(f"{revocation.value} is not a revocation act")
    if REVOCATION_TARGET[revocation] not in state.history:
        raise TargetNotPerformed(
            f"{REVOCATION_TARGET[revocation].value} was never performed"
        )
    return tuple(reversed(state.history[_KEPT_PREFIX[revocation]:]))


def revocation_auto_refused(state: TransactionState) -> bool:
    """True when the pending revocation targets an unperformed act."""
    if state.pending is None:
        raise RevocationError("no pending revocation")
    return REVOCATION_TARGET[state.pending[0]] not in state.history


def resolve_revocation(
    state: TransactionState, revocation: Act, by: Role, decision: Decision
) -> TransactionState:
    """Counterparty decision on a pending revocation.

    Allow rolls the undone acts out of the history and repositions the
    transaction; Refuse changes nothing.  A revocation of an unperformed act
    is refused automatically regardless of the decision input.
    """
    if state.pending is None:
        raise RevocationError("no pending revocation")
    if state.pending[0] is not revocation:
        raise RevocationError(
            f"pending revocation is {state.pending[0].value}, not {revocation.value}"
        )
    if by is not REVOKER[revocation].other:
        raise RevocationError(f"{by.value} does not decide on {revocation.value}")
    if REVOCATION_TARGET[revocation] not in state.history:
        return TransactionState(state.phase, state.history, pending=None)
    if decision is Decision.REFUSE:
        return TransactionState(state.phase, state.history, pending=None)
    kept = state.history[: _KEPT_PREFIX[revocation]]
    return TransactionState(LANDING_PHASE[revocation], kept, pending=None)


@dataclass(frozen=True)
class TraceStep:
    act: Act
    role: Role
    decision: Optional[Decision] = None  # resolves a revocation step in place


class TraceError(ValueError):
    def __init__(self, index: int, message: str):
        super().__init__(f"step {index}: {message}")
        self.index = index


StepLike = Union[TraceStep, tuple]


def run_trace(steps: Iterable[StepLike], initial: TransactionState = INITIAL_STATE) -> TransactionState:
    """Run a sequence of (act, role[, decision]) steps from the initial state."""
    state = initial
    for index, raw in enumerate(steps):
        step = raw if isinstance(raw, TraceStep) else TraceStep(*raw)
        try:
            state = apply_act(state, step.act, step.role)
            if step.act in REVOCATIONS and step.decision is not None:
                state = resolve_revocation(state, step.act, step.role.other, step.decision)
        except (ActNotEnabled, RevocationError) as exc:
            raise TraceError(index, str(exc)) from exc
    return state


# ---------------------------------------------------------------------------
# Bounded language enumeration (the conformance oracle's side of the fence).
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Bounds:
    """Loop bounds that keep the bounded language finite.

    rerequest counts Declined->Requested transitions, redeclare counts
    Rejected->Declared transitions, revocations counts triggered revocation
    episodes (allowed, refused or auto-refused alike).
    """
    rerequest: int = 1
    redeclare: int = 1
    revocations: int = 1


HAPPY_ALPHABET = frozenset(CORE_ACTS)
DISSENT_ALPHABET = HAPPY_ALPHABET | {Act.DECLINE, Act.REJECT, Act.STOP}
COMPLETE_ALPHABET = frozenset(Act)


def enumerate_language(
    alphabet: frozenset[Act], bounds: Bounds = Bounds()
) -> frozenset[tuple[tuple[Act, ...], Phase]]:
    """All bounded runs from Initial to a terminal outcome, as act sequences.

    A run is recorded whenever the transaction sits in Accepted, Stopped or
    Terminated with no revocation pending; from Accepted the walk also
    continues into still-affordable revocations, so both the plain accepted
    run and its post-acceptance revocation extensions are members.
    Auto-refused resolutions are canonically labeled Refuse.
    """
    results: set[tuple[tuple[Act, ...], Phase]] = set()

    def options(
        state: TransactionState, used: tuple[int, int, int]
    ) -> list[tuple[Act, Role, Optional[Decision]]]:
        rerequest, redeclare, revocations = used
        if state.pending is not None:
            decider = REVOKER[state.pending[0]].other
            if Act.REFUSE not in alphabet:
                return []
            if revocation_auto_refused(state):
                return [(Act.REFUSE, decider, None)]
            return [(Act.ALLOW, decider, None), (Act.REFUSE, decider, None)]
        out: list[tuple[Act, Role, Optional[Decision]]] = []
        for (phase, act, role), _next in sorted(
            _TRANSITIONS.items(), key=lambda kv: (kv[0][1].value, kv[0][2].value)
        ):
            if phase is not state.phase or act not in alphabet:
                continue
            if phase is Phase.DECLINED and act is Act.REQUEST and rerequest >= bounds.rerequest:
                continue
            if phase is Phase.REJECTED and act is Act.DECLARE and redeclare >= bounds.redeclare:
                continue
            out.append((act, role, None))
        if (
            state.phase not in DEAD_PHASES
            and state.phase is not Phase.INITIAL
            and revocations < bounds.revocations
        ):
            for revocation in REVOCATIONS:
                if revocation in alphabet:
                    out.append((revocation, REVOKER[revocation], None))
        return out

    def walk(
        state: TransactionState, used: tuple[int, int, int], events: tuple[Act, ...]
    ) -> None:
        if state.pending is None and state.phase in TERMINAL_PHASES:
            results.add((events, state.phase))
            if state.phase in DEAD_PHASES:
                return
        for act, role, _decision in options(state, used):
            rerequest, redeclare, revocations = used
            if state.phase is Phase.DECLINED and act is Act.REQUEST:
                rerequest += 1
            if state.phase is Phase.REJECTED and act is Act.DECLARE:
                redeclare += 1
            if act in REVOCATIONS:
                revocations += 1
            walk(
                apply_act(state, act, role),
                (rerequest, redeclare, revocations),
                events + (act,),
            )

    walk(INITIAL_STATE, (0, 0, 0), ())
    return frozenset(results)
