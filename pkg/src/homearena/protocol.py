"""Wire protocol between referee and robot agent.

Frames are newline-delimited JSON objects carrying a ``type`` discriminator.
The encoding is canonical (UTF-8, lexicographically sorted keys, no
insignificant whitespace, one trailing ``\\n``, never an interior newline),
which makes event logs byte-comparable across runs and transports. The
full frame inventory with golden byte vectors lives in PROTOCOL.md.
"""

from __future__ import annotations

from dataclasses import dataclass

from .jsonutil import FieldError, as_float, as_int, as_obj, as_str, canonical_json, loads_strict, no_extra_keys, require
from .reports import ScoreReport, report_from_dict
from .scenario import ContextEvent, context_from_dict, context_to_dict
from .world import Command, command_from_dict, command_to_dict

PROTO_VERSION = 1

REJECTION_REASONS = (
    "out_of_reach",
    "not_holding",
    "already_holding",
    "no_such_entity",
    "invalid_target",
    "unknown_waypoint",
)


class DecodeError(ValueError):
    """A frame that could not be decoded; ``code`` is stable and machine-readable."""

    def __init__(self, code: str, message: str, path: str = ""):
        super().__init__(f"{code}: {message}" if not path else f"{code} at {path}: {message}")
        self.code = code
        self.path = path
        self.detail = message


@dataclass(frozen=True)
class Hello:
    team: str
    robot: str
    proto_version: int = PROTO_VERSION


@dataclass(frozen=True)
class Ready:
    pass


@dataclass(frozen=True)
class Start:
    scenario_id: str
    context: ContextEvent


@dataclass(frozen=True)
class AgentCommand:
    seq: int
    command: Command


@dataclass(frozen=True)
class CommandResult:
    seq: int
    status: str  # accepted | rejected
    duration_s: float | None = None  # present iff accepted
    reason: str | None = None  # present iff rejected


@dataclass(frozen=True)
class DeviceEvent:
    device_id: str
    event: str


@dataclass(frozen=True)
class Complete:
    pass


@dataclass(frozen=True)
class Score:
    report: ScoreReport


@dataclass(frozen=True)
class Error:
    code: str
    message: str


Message = Hello | Ready | Start | AgentCommand | CommandResult | DeviceEvent | Complete | Score | Error


def message_to_dict(msg: Message) -> dict:
    if isinstance(msg, Hello):
        return {
            "type": "hello",
            "team": msg.team,
            "robot": msg.robot,
            "proto_version": msg.proto_version,
        }
    if isinstance(msg, Ready):
        return {"type": "ready"}
    if isinstance(msg, Start):
        return {
            "type": "start",
            "scenario_id": msg.scenario_id,
            "context": context_to_dict(msg.context),
        }
    if isinstance(msg, AgentCommand):
        return {"type": "command", "seq": msg.seq, "command": command_to_dict(msg.command)}
    if isinstance(msg, CommandResult):
        out = {"type": "command_result", "seq": msg.seq, "status": msg.status}
        if msg.duration_s is not None:
            out["duration_s"] = msg.duration_s
        if msg.reason is not None:
            out["reason"] = msg.reason
        return out
    if isinstance(msg, DeviceEvent):
        return {"type": "device_event", "device_id": msg.device_id, "event": msg.event}
    if isinstance(msg, Complete):
        return {"type": "complete"}
    if isinstance(msg, Score):
        return {"type": "score", "report": msg.report.to_dict()}
    if isinstance(msg, Error):
        return {"type": "error", "code": msg.code, "message": msg.message}
    raise TypeError(f"unsupported message {msg!r}")


def encode_text(msg: Message) -> str:
    """Canonical frame text without the newline terminator."""
    return canonical_json(message_to_dict(msg))


def encode(msg: Message) -> bytes:
    """One canonical UTF-8 JSON line, newline-terminated."""
    return (encode_text(msg) + "\n").encode("utf-8")


def decode(line: bytes | str) -> Message:
    """Decode one frame; total over arbitrary input.

    Raises DecodeError with one of the codes not_json, missing_type,
    unknown_type, bad_field, version_mismatch. Never raises anything else.
    """
    try:
        if isinstance(line, bytes):
            line = line.decode("utf-8")
        raw = loads_strict(line)
    except (UnicodeDecodeError, ValueError) as exc:
        raise DecodeError("not_json", str(exc)) from None
    if not isinstance(raw, dict):
        raise DecodeError("missing_type", "frame must be a JSON object with a 'type' field")
    if "type" not in raw:
        raise DecodeError("missing_type", "frame has no 'type' field")
    try:
        frame_type = as_str(raw["type"], "type")
        return _decode_fields(frame_type, raw)
    except FieldError as exc:
        raise DecodeError("bad_field", exc.message, exc.path) from None


def _decode_fields(frame_type: str, raw: dict) -> Message:
    if frame_type == "hello":
        no_extra_keys(raw, {"type", "team", "robot", "proto_version"}, "")
        version = as_int(require(raw, "proto_version", ""), "proto_version")
        if version != PROTO_VERSION:
            raise DecodeError(
                "version_mismatch",
                f"protocol version {version} not supported (expected {PROTO_VERSION})",
            )
        return Hello(
            team=as_str(require(raw, "team", ""), "team"),
            robot=as_str(require(raw, "robot", ""), "robot"),
            proto_version=version,
        )
    if frame_type == "ready":
        no_extra_keys(raw, {"type"}, "")
        return Ready()
    if frame_type == "start":
        no_extra_keys(raw, {"type", "scenario_id", "context"}, "")
        return Start(
            scenario_id=as_str(require(raw, "scenario_id", ""), "scenario_id"),
            context=context_from_dict(require(raw, "context", ""), "context"),
        )
    if frame_type == "command":
        no_extra_keys(raw, {"type", "seq", "command"}, "")
        return AgentCommand(
            seq=as_int(require(raw, "seq", ""), "seq"),
            command=command_from_dict(require(raw, "command", ""), "command"),
        )
    if frame_type == "command_result":
        no_extra_keys(raw, {"type", "seq", "status", "duration_s", "reason"}, "")
        status = as_str(require(raw, "status", ""), "status")
        seq = as_int(require(raw, "seq", ""), "seq")
        if status == "accepted":
            no_extra_keys(raw, {"type", "seq", "status", "duration_s"}, "")
            return CommandResult(
                seq=seq,
                status=status,
                duration_s=as_float(require(raw, "duration_s", ""), "duration_s"),
            )
        if status == "rejected":
            no_extra_keys(raw, {"type", "seq", "status", "reason"}, "")
            reason = as_str(require(raw, "reason", ""), "reason")
            if reason not in REJECTION_REASONS:
                raise FieldError("reason", f"unknown rejection reason {reason!r}")
            return CommandResult(seq=seq, status=status, reason=reason)
        raise FieldError("status", f"status must be accepted or rejected, got {status!r}")
    if frame_type == "device_event":
        no_extra_keys(raw, {"type", "device_id", "event"}, "")
        return DeviceEvent(
            device_id=as_str(require(raw, "device_id", ""), "device_id"),
            event=as_str(require(raw, "event", ""), "event"),
        )
    if frame_type == "complete":
        no_extra_keys(raw, {"type"}, "")
        return Complete()
    if frame_type == "score":
        no_extra_keys(raw, {"type", "report"}, "")
        return Score(report=report_from_dict(require(raw, "report", ""), "report"))
    if frame_type == "error":
        no_extra_keys(raw, {"type", "code", "message"}, "")
        return Error(
            code=as_str(require(raw, "code", ""), "code"),
            message=as_str(require(raw, "message", ""), "message"),
        )
    raise DecodeError("unknown_type", f"unknown frame type {frame_type!r}")
