"""Scripted protocol client: the stand-in for a team's competition solution.

A script is declarative data, not code: an ordered list of steps, each a
trigger (``on_start``, ``on_result`` or ``immediate``) plus either a robot
command or the literal action ``"complete"``. The bundled cracker-box
script ships embedded; alternative scripts load from JSON via ``--script``
so tests can enumerate behaviours without new builds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .channel import ChannelClosed
from .jsonutil import FieldError, as_int, as_list, as_obj, as_str, no_extra_keys, require
from .protocol import (
    AgentCommand,
    Complete,
    CommandResult,
    DecodeError,
    DeviceEvent,
    Error,
    Hello,
    Ready,
    Score,
    Start,
    decode,
    encode,
)
from .reports import ScoreReport
from .scenario import context_to_dict
from .world import Command, FloorAt, MoveTo, Pick, Place, command_from_dict, command_to_dict

DEFAULT_TEAM = "demo_team"
DEFAULT_ROBOT = "demo_robot"
DEFAULT_RECV_TIMEOUT_S = 60.0

TRIGGERS = ("on_start", "on_result", "immediate")


class AgentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScriptStep:
    trigger: str  # one of TRIGGERS
    action: Command | None  # None = send complete
    context_kind: str | None = None  # optional matcher for on_start
    of_seq: int | None = None  # optional explicit result to wait on


@dataclass(frozen=True)
class AgentScript:
    steps: tuple[ScriptStep, ...]


def script_from_json(data: Any) -> AgentScript:
    """Build and check a script: non-empty, complete exactly once, at the
    end, and every of_seq referencing an earlier command."""
    items = as_list(data, "script")
    steps: list[ScriptStep] = []
    commands_so_far = 0
    for i, item in enumerate(items):
        path = f"script[{i}]"
        obj = as_obj(item, path)
        no_extra_keys(obj, {"trigger", "action", "context_kind", "of_seq"}, path)
        trigger = as_str(require(obj, "trigger", path), f"{path}.trigger")
        if trigger not in TRIGGERS:
            raise FieldError(f"{path}.trigger", f"unknown trigger {trigger!r}")
        context_kind = None
        if "context_kind" in obj:
            if trigger != "on_start":
                raise FieldError(f"{path}.context_kind", "context_kind only applies to on_start")
            context_kind = as_str(obj["context_kind"], f"{path}.context_kind")
        of_seq = None
        if "of_seq" in obj:
            if trigger != "on_result":
                raise FieldError(f"{path}.of_seq", "of_seq only applies to on_result")
            of_seq = as_int(obj["of_seq"], f"{path}.of_seq")
            if not 1 <= of_seq <= commands_so_far:
                raise FieldError(f"{path}.of_seq", f"of_seq must reference an earlier command (1..{commands_so_far})")
        raw_action = require(obj, "action", path)
        if raw_action == "complete":
            action = None
        else:
            action = command_from_dict(raw_action, f"{path}.action")
            commands_so_far += 1
        steps.append(ScriptStep(trigger, action, context_kind, of_seq))
    if not steps:
        raise FieldError("script", "script must not be empty")
    if steps[-1].action is not None:
        raise FieldError("script", "script must end with a complete action")
    for i, step in enumerate(steps[:-1]):
        if step.action is None:
            raise FieldError(f"script[{i}]", "complete must be the final action")
    return AgentScript(tuple(steps))


def script_to_json(script: AgentScript) -> list[dict]:
    out = []
    for step in script.steps:
        obj: dict[str, Any] = {"trigger": step.trigger}
        if step.context_kind is not None:
            obj["context_kind"] = step.context_kind
        if step.of_seq is not None:
            obj["of_seq"] = step.of_seq
        obj["action"] = "complete" if step.action is None else command_to_dict(step.action)
        out.append(obj)
    return out


# Solves the bundled cracker-box scenario: fetch the box from the kitchen
# island and set it down on the floor right in front of Granny Annie.
CRACKER_SCRIPT = AgentScript(
    (
        ScriptStep("on_start", MoveTo("kitchen_island")),
        ScriptStep("on_result", Pick("cracker_box")),
        ScriptStep("on_result", MoveTo("beside_annie")),
        ScriptStep("on_result", Place(FloorAt(0.3, 0.0))),
        ScriptStep("on_result", None),
    )
)

# Completes immediately without touching anything; scores zero.
NULL_SCRIPT = AgentScript((ScriptStep("on_start", None),))

# Picks the box but abandons it in the bedroom; earns the removal point only.
WRONG_ROOM_SCRIPT = AgentScript(
    (
        ScriptStep("on_start", MoveTo("kitchen_island")),
        ScriptStep("on_result", Pick("cracker_box")),
        ScriptStep("on_result", MoveTo("bedroom_corner")),
        ScriptStep("on_result", Place(FloorAt(0.3, 0.0))),
        ScriptStep("on_result", None),
    )
)


def run_agent(
    script: AgentScript,
    channel,
    *,
    team: str = DEFAULT_TEAM,
    robot: str = DEFAULT_ROBOT,
    recv_timeout_s: float = DEFAULT_RECV_TIMEOUT_S,
) -> ScoreReport:
    """Drive one run: handshake, react to frames per the script, return the
    received score report. Aborts on referee protocol_violation errors and
    surfaces undecodable frames."""
    channel.send_line(encode(Hello(team=team, robot=robot)))
    channel.send_line(encode(Ready()))

    steps = list(script.steps)
    idx = 0
    next_seq = 1
    last_sent_seq = 0
    completed = False

    def dispatch_ready_steps(event: str, result_seq: int | None = None) -> None:
        nonlocal idx, next_seq, last_sent_seq, completed
        while idx < len(steps):
            step = steps[idx]
            if step.trigger == "immediate":
                pass
            elif step.trigger == event:
                if step.trigger == "on_result":
                    expected = step.of_seq if step.of_seq is not None else last_sent_seq
                    if result_seq != expected:
                        return
            else:
                return
            idx += 1
            if step.action is None:
                channel.send_line(encode(Complete()))
                completed = True
            else:
                channel.send_line(encode(AgentCommand(next_seq, step.action)))
                last_sent_seq = next_seq
                next_seq += 1
            # an immediate step fires right after the one before it
            event = "immediate"
            result_seq = None

    while True:
        try:
            line = channel.recv_line(recv_timeout_s)
        except ChannelClosed:
            raise AgentError("referee closed the connection before sending a score") from None
        if line is None:
            raise AgentError(f"no frame from referee within {recv_timeout_s} s")
        try:
            msg = decode(line)
        except DecodeError as exc:
            raise AgentError(f"undecodable frame from referee: {exc}") from None

        if isinstance(msg, Score):
            return msg.report
        if isinstance(msg, Error):
            if msg.code == "protocol_violation":
                raise AgentError(f"protocol violation: {msg.message}")
            continue
        if isinstance(msg, DeviceEvent):
            continue
        if isinstance(msg, Start):
            step = steps[idx] if idx < len(steps) else None
            if step is not None and step.trigger == "on_start" and step.context_kind is not None:
                got = context_to_dict(msg.context)["kind"]
                if got != step.context_kind:
                    raise AgentError(
                        f"scenario context is {got!r}, script expects {step.context_kind!r}"
                    )
            dispatch_ready_steps("on_start")
            continue
        if isinstance(msg, CommandResult):
            if not completed:
                dispatch_ready_steps("on_result", msg.seq)
            continue
        raise AgentError(f"unexpected frame from referee: {line!r}")
