"""The virtual referee: run lifecycle state machine and scoring engine.

``handle_message`` is a pure transition function from (phase, message) to
(phase, outbound actions); ``run_benchmark`` drives it over a message
channel, applies robot commands to the world, enforces the simulated time
limit and produces the final ``ScoreReport``. One referee instance serves
one robot connection; concurrent runs share nothing.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass
from enum import Enum

from .channel import ChannelClosed
from .eventlog import EventLog
from .protocol import (
    AgentCommand,
    Complete,
    CommandResult as CommandResultFrame,
    DecodeError,
    DeviceEvent,
    Error,
    Hello,
    Message,
    Ready,
    Score,
    Start,
    decode,
    encode_text,
    message_to_dict,
)
from .reports import AchievementResult, ScoreReport
from .scenario import Achievement, DoorbellActivated, ScenarioSpec, instantiate_world
from .world import Accepted, Command, UnknownReferenceError, WorldState, apply_command, eval_predicate, set_device_state

DEFAULT_IDLE_TIMEOUT_S = 30.0

DOORBELL_EVENT = "activated"


class RefereePhase(Enum):
    IDLE = "idle"
    CONNECTED = "connected"
    AWAITING_READY = "awaiting_ready"
    RUNNING = "running"
    DONE = "done"


# Direct edges of the lifecycle. Handshake acceptance passes through
# CONNECTED; any pre-run violation or disconnect drops straight to DONE.
LEGAL_TRANSITIONS = frozenset(
    {
        (RefereePhase.IDLE, RefereePhase.CONNECTED),
        (RefereePhase.CONNECTED, RefereePhase.AWAITING_READY),
        (RefereePhase.AWAITING_READY, RefereePhase.RUNNING),
        (RefereePhase.RUNNING, RefereePhase.DONE),
        (RefereePhase.IDLE, RefereePhase.DONE),
        (RefereePhase.CONNECTED, RefereePhase.DONE),
        (RefereePhase.AWAITING_READY, RefereePhase.DONE),
    }
)


def is_legal_transition(src: RefereePhase, dst: RefereePhase) -> bool:
    """True if dst is reachable from src along LEGAL_TRANSITIONS edges."""
    if src == dst:
        return True
    frontier = {src}
    seen = set(frontier)
    while frontier:
        frontier = {
            b for (a, b) in LEGAL_TRANSITIONS if a in frontier and b not in seen
        }
        if dst in frontier:
            return True
        seen |= frontier
    return False


# -- outbound actions ------------------------------------------------------

@dataclass(frozen=True)
class SendFrame:
    message: Message


@dataclass(frozen=True)
class RunCommand:
    seq: int
    command: Command


@dataclass(frozen=True)
class TriggerDeviceEvent:
    device_id: str
    event: str


@dataclass(frozen=True)
class FinishRun:
    termination: str


@dataclass(frozen=True)
class AbortRun:
    error: Error


Action = SendFrame | RunCommand | TriggerDeviceEvent | FinishRun | AbortRun


class ProtocolAbort(RuntimeError):
    """The run ended without a scoreable world (pre-start violation or
    an unresolvable scoring reference)."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


def _frame_name(msg: Message) -> str:
    return message_to_dict(msg)["type"]


def handle_message(
    phase: RefereePhase, msg: Message, spec: ScenarioSpec
) -> tuple[RefereePhase, list[Action]]:
    """Pure lifecycle transition. Illegal messages before the run starts
    abort it; illegal messages while running draw an error frame but keep
    the run alive."""
    if phase is RefereePhase.DONE:
        return phase, []

    if phase in (RefereePhase.IDLE, RefereePhase.CONNECTED):
        if isinstance(msg, Hello):
            return RefereePhase.AWAITING_READY, []
        return RefereePhase.DONE, [
            AbortRun(Error("protocol_violation", f"expected hello, got {_frame_name(msg)}"))
        ]

    if phase is RefereePhase.AWAITING_READY:
        if isinstance(msg, Ready):
            actions: list[Action] = [SendFrame(Start(spec.id, spec.context))]
            if isinstance(spec.context, DoorbellActivated):
                doorbell = spec.doorbell_device_id()
                if doorbell is not None:
                    actions.append(TriggerDeviceEvent(doorbell, DOORBELL_EVENT))
            return RefereePhase.RUNNING, actions
        return RefereePhase.DONE, [
            AbortRun(Error("protocol_violation", f"expected ready, got {_frame_name(msg)}"))
        ]

    # RUNNING
    if isinstance(msg, AgentCommand):
        return phase, [RunCommand(msg.seq, msg.command)]
    if isinstance(msg, Complete):
        return RefereePhase.DONE, [FinishRun("completed")]
    return phase, [
        SendFrame(Error("protocol_violation", f"unexpected {_frame_name(msg)} while running"))
    ]


def score(
    final_state: WorldState,
    rubric: tuple[Achievement, ...] | list[Achievement],
    *,
    scenario_id: str = "",
    elapsed_s: float | None = None,
    termination: str = "completed",
) -> ScoreReport:
    """Evaluate each achievement's conjunction against the final world.

    Pure and deterministic; result ordering matches rubric ordering.
    Raises UnknownReferenceError if a predicate references a missing
    id/zone (a configuration bug, not a zero score).
    """
    if elapsed_s is None:
        elapsed_s = final_state.sim_time
    results = []
    total = 0
    for ach in rubric:
        satisfied = all(eval_predicate(final_state, pred) for pred in ach.condition)
        awarded = ach.points if satisfied else 0
        total += awarded
        results.append(AchievementResult(ach.id, satisfied, awarded))
    return ScoreReport(
        scenario_id=scenario_id,
        achievements=tuple(results),
        total=total,
        elapsed_s=elapsed_s,
        termination=termination,
    )


def _world_delta(before: WorldState, after: WorldState) -> dict:
    delta: dict = {"sim_time": after.sim_time}
    changed = {
        eid: entity.to_dict()
        for eid, entity in after.entities.items()
        if before.entities.get(eid) != entity
    }
    if changed:
        delta["entities"] = changed
    if len(after.speech_log) > len(before.speech_log):
        delta["speech"] = [
            [entry.sim_time, entry.speaker_id, entry.text]
            for entry in after.speech_log[len(before.speech_log):]
        ]
    device_changes = {
        did: state
        for did, state in after.device_states.items()
        if before.device_states.get(did) != state
    }
    if device_changes:
        delta["device_states"] = device_changes
    return delta


def run_benchmark(
    spec: ScenarioSpec,
    channel,
    *,
    event_log: EventLog | None = None,
    idle_timeout_s: float = DEFAULT_IDLE_TIMEOUT_S,
) -> ScoreReport:
    """Referee one full run over an open channel and return the report.

    The time limit is enforced against simulated time. The wall-clock
    ``idle_timeout_s`` only guards against hung connections: expiry while
    running terminates the run as a timeout, expiry before the start
    aborts it. Raises ProtocolAbort when the run never reached a
    scoreable state.
    """
    log = event_log if event_log is not None else EventLog()
    world = instantiate_world(spec)
    robot_id = spec.robot_id
    phase = RefereePhase.IDLE
    last_seq = 0

    def send(msg: Message) -> None:
        text = encode_text(msg)
        try:
            channel.send_line((text + "\n").encode("utf-8"))
        except ChannelClosed:
            return
        log.frame_out(world.sim_time, text)

    def transition(new_phase: RefereePhase, *, via: tuple[RefereePhase, ...] = ()) -> None:
        nonlocal phase
        for step in (*via, new_phase):
            if step is not phase:
                log.internal(
                    world.sim_time,
                    {"event": "phase", "from": phase.value, "to": step.value},
                )
                phase = step

    def abort(code: str, message: str) -> ProtocolAbort:
        log.internal(world.sim_time, {"event": "abort", "code": code, "message": message})
        via = (RefereePhase.CONNECTED,) if phase is RefereePhase.IDLE and code == "version_mismatch" else ()
        transition(RefereePhase.DONE, via=via)
        return ProtocolAbort(code, message)

    def finish(termination: str) -> ScoreReport:
        elapsed = spec.time_limit_s if termination == "timeout" else world.sim_time
        try:
            report = score(
                world,
                spec.rubric,
                scenario_id=spec.id,
                elapsed_s=elapsed,
                termination=termination,
            )
        except UnknownReferenceError as exc:
            log.internal(
                world.sim_time,
                {
                    "event": "scoring_error",
                    "code": "unknown_reference",
                    "ref": exc.ref,
                    "termination": termination,
                },
            )
            transition(RefereePhase.DONE)
            raise ProtocolAbort(
                "unknown_reference",
                f"rubric references unknown id/zone {exc.ref!r} (termination was {termination})",
            ) from None
        log.internal(world.sim_time, {"event": "finish", "termination": termination})
        send(Score(report))
        transition(RefereePhase.DONE)
        return report

    def run_command(seq: int, command: Command) -> ScoreReport | None:
        nonlocal world, last_seq
        if seq <= last_seq:
            send(Error("protocol_violation", f"seq must exceed {last_seq}, got {seq}"))
            return None
        last_seq = seq
        before = world
        world, result = apply_command(world, robot_id, command, spec.waypoints)
        effect: dict = {"event": "command_effect", "seq": seq}
        if isinstance(result, Accepted):
            effect["status"] = "accepted"
            effect["duration_s"] = result.duration_s
            frame = CommandResultFrame(seq=seq, status="accepted", duration_s=result.duration_s)
        else:
            effect["status"] = "rejected"
            effect["reason"] = result.reason
            frame = CommandResultFrame(seq=seq, status="rejected", reason=result.reason)
        effect["world"] = _world_delta(before, world)
        log.internal(world.sim_time, effect)
        send(frame)
        if world.sim_time >= spec.time_limit_s:
            return finish("timeout")
        return None

    while phase is not RefereePhase.DONE:
        try:
            line = channel.recv_line(idle_timeout_s)
        except ChannelClosed:
            if phase is RefereePhase.RUNNING:
                return finish("disconnect")
            raise abort("disconnected", "agent disconnected before the run started") from None
        if line is None:
            if phase is RefereePhase.RUNNING:
                return finish("timeout")
            raise abort("idle_timeout", f"no frame for {idle_timeout_s} s before the run started")

        try:
            msg = decode(line)
        except DecodeError as exc:
            log.internal(
                world.sim_time,
                {
                    "event": "decode_error",
                    "code": exc.code,
                    "detail": exc.detail,
                    "raw_b64": base64.b64encode(line).decode("ascii"),
                },
            )
            if exc.code == "version_mismatch" and phase is RefereePhase.IDLE:
                send(Error("version_mismatch", exc.detail))
                raise abort("version_mismatch", exc.detail)
            send(Error(exc.code, exc.detail))
            continue

        log.frame_in(world.sim_time, encode_text(msg))
        via = (
            (RefereePhase.CONNECTED,)
            if phase is RefereePhase.IDLE and isinstance(msg, Hello)
            else ()
        )
        new_phase, actions = handle_message(phase, msg, spec)
        transition(new_phase, via=via)

        for action in actions:
            if isinstance(action, SendFrame):
                send(action.message)
            elif isinstance(action, TriggerDeviceEvent):
                world = set_device_state(world, action.device_id, action.event)
                log.internal(
                    world.sim_time,
                    {
                        "event": "device_state",
                        "device_id": action.device_id,
                        "state": action.event,
                    },
                )
                send(DeviceEvent(action.device_id, action.event))
            elif isinstance(action, RunCommand):
                report = run_command(action.seq, action.command)
                if report is not None:
                    return report
            elif isinstance(action, FinishRun):
                return finish(action.termination)
            elif isinstance(action, AbortRun):
                send(action.error)
                raise abort(action.error.code, action.error.message)

    raise AssertionError("referee loop exited without a verdict")
