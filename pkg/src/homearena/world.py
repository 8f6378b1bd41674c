"""Deterministic 2D apartment world.

Entities live on a flat floor plan; "on the kitchen island" is an explicit
support relation maintained by pick/place rather than a physics contact.
All state transitions go through ``apply_command``, which returns a fresh
``WorldState`` (copy-on-write; existing snapshots are never mutated), and
all rubric conditions are evaluated by ``eval_predicate`` over a snapshot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from .geometry import Point, distance, nearest_point_in_polygon, point_in_polygon
from .jsonutil import (
    FieldError,
    as_float,
    as_list,
    as_obj,
    as_str,
    canonical_json,
    no_extra_keys,
    require,
)

ROBOT_SPEED_MPS = 0.5
REACH_RADIUS_M = 0.8
PICK_PLACE_DURATION_S = 2.0
SAY_DURATION_S = 1.0
DEVICE_DURATION_S = 0.5
REJECTION_COST_S = 0.5

DEVICE_KINDS = ("doorbell", "tablet", "speaker")
DEFAULT_DEVICE_STATE = "idle"


class UnknownReferenceError(KeyError):
    """A predicate or command referenced an id/zone that does not exist."""

    def __init__(self, ref: str):
        super().__init__(ref)
        self.ref = ref


def _normalize_theta(theta: float) -> float:
    return (theta + math.pi) % (2.0 * math.pi) - math.pi


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "theta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"pose.{name} must be finite")
        object.__setattr__(self, "theta", _normalize_theta(self.theta))

    @property
    def point(self) -> Point:
        return (self.x, self.y)

    def to_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "theta": self.theta}


def pose_from_dict(value: Any, path: str) -> Pose:
    obj = as_obj(value, path)
    no_extra_keys(obj, {"x", "y", "theta"}, path)
    x = as_float(require(obj, "x", path), f"{path}.x")
    y = as_float(require(obj, "y", path), f"{path}.y")
    theta = as_float(obj.get("theta", 0.0), f"{path}.theta")
    return Pose(x, y, theta)


# -- entity kinds ----------------------------------------------------------

@dataclass(frozen=True)
class Furniture:
    surface: tuple[Point, ...] | None = None


@dataclass(frozen=True)
class MovableObject:
    pass


@dataclass(frozen=True)
class Human:
    pass


@dataclass(frozen=True)
class Robot:
    pass


@dataclass(frozen=True)
class Device:
    device_kind: str  # one of DEVICE_KINDS


EntityKind = Furniture | MovableObject | Human | Robot | Device


# -- support relations -----------------------------------------------------

@dataclass(frozen=True)
class Floor:
    pass


@dataclass(frozen=True)
class OnSurface:
    surface_id: str


@dataclass(frozen=True)
class HeldBy:
    robot_id: str


Support = Floor | OnSurface | HeldBy


def support_to_dict(support: Support) -> dict:
    if isinstance(support, Floor):
        return {"kind": "floor"}
    if isinstance(support, OnSurface):
        return {"kind": "on_surface", "surface": support.surface_id}
    return {"kind": "held_by", "robot": support.robot_id}


def support_from_dict(value: Any, path: str) -> Support:
    obj = as_obj(value, path)
    kind = as_str(require(obj, "kind", path), f"{path}.kind")
    if kind == "floor":
        no_extra_keys(obj, {"kind"}, path)
        return Floor()
    if kind == "on_surface":
        no_extra_keys(obj, {"kind", "surface"}, path)
        return OnSurface(as_str(require(obj, "surface", path), f"{path}.surface"))
    if kind == "held_by":
        no_extra_keys(obj, {"kind", "robot"}, path)
        return HeldBy(as_str(require(obj, "robot", path), f"{path}.robot"))
    raise FieldError(f"{path}.kind", f"unknown support kind {kind!r}")


@dataclass(frozen=True)
class Entity:
    id: str
    kind: EntityKind
    pose: Pose
    support: Support = field(default_factory=Floor)

    def kind_name(self) -> str:
        return {
            Furniture: "furniture",
            MovableObject: "object",
            Human: "human",
            Robot: "robot",
            Device: "device",
        }[type(self.kind)]

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "kind": self.kind_name(),
            "pose": self.pose.to_dict(),
            "support": support_to_dict(self.support),
        }
        if isinstance(self.kind, Furniture) and self.kind.surface is not None:
            out["surface"] = [[x, y] for x, y in self.kind.surface]
        if isinstance(self.kind, Device):
            out["device_kind"] = self.kind.device_kind
        return out


@dataclass(frozen=True)
class Zone:
    name: str
    polygon: tuple[Point, ...]


@dataclass(frozen=True)
class SpeechEntry:
    sim_time: float
    speaker_id: str
    text: str


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot; treat the contained dicts as read-only."""

    entities: dict[str, Entity]
    zones: dict[str, Zone]
    sim_time: float = 0.0
    speech_log: tuple[SpeechEntry, ...] = ()
    device_states: dict[str, str] = field(default_factory=dict)

    def entity(self, entity_id: str) -> Entity:
        try:
            return self.entities[entity_id]
        except KeyError:
            raise UnknownReferenceError(entity_id) from None

    def zone(self, name: str) -> Zone:
        try:
            return self.zones[name]
        except KeyError:
            raise UnknownReferenceError(name) from None

    def held_object(self, robot_id: str) -> Entity | None:
        for entity in self.entities.values():
            if entity.support == HeldBy(robot_id):
                return entity
        return None


def world_to_dict(state: WorldState) -> dict:
    return {
        "sim_time": state.sim_time,
        "entities": {eid: e.to_dict() for eid, e in state.entities.items()},
        "zones": {z.name: [[x, y] for x, y in z.polygon] for z in state.zones.values()},
        "speech_log": [[s.sim_time, s.speaker_id, s.text] for s in state.speech_log],
        "device_states": dict(state.device_states),
    }


def canonical_world(state: WorldState) -> str:
    return canonical_json(world_to_dict(state))


# -- commands --------------------------------------------------------------

@dataclass(frozen=True)
class MoveTo:
    target: Pose | str  # a pose or a named waypoint


@dataclass(frozen=True)
class Pick:
    object_id: str


@dataclass(frozen=True)
class FloorAt:
    """Placement offset in the robot's local frame (dx ahead, dy left)."""

    dx: float
    dy: float


@dataclass(frozen=True)
class Place:
    target: str | FloorAt  # a surface entity id, or a floor point


@dataclass(frozen=True)
class Say:
    text: str


@dataclass(frozen=True)
class ActuateDevice:
    device_id: str
    action: str


Command = MoveTo | Pick | Place | Say | ActuateDevice


def command_to_dict(cmd: Command) -> dict:
    if isinstance(cmd, MoveTo):
        if isinstance(cmd.target, str):
            return {"type": "move_to", "waypoint": cmd.target}
        return {"type": "move_to", "pose": cmd.target.to_dict()}
    if isinstance(cmd, Pick):
        return {"type": "pick", "object": cmd.object_id}
    if isinstance(cmd, Place):
        if isinstance(cmd.target, str):
            return {"type": "place", "surface": cmd.target}
        return {"type": "place", "floor": {"dx": cmd.target.dx, "dy": cmd.target.dy}}
    if isinstance(cmd, Say):
        return {"type": "say", "text": cmd.text}
    return {"type": "actuate_device", "device": cmd.device_id, "action": cmd.action}


def command_from_dict(value: Any, path: str) -> Command:
    obj = as_obj(value, path)
    cmd_type = as_str(require(obj, "type", path), f"{path}.type")
    if cmd_type == "move_to":
        no_extra_keys(obj, {"type", "waypoint", "pose"}, path)
        has_waypoint = "waypoint" in obj
        has_pose = "pose" in obj
        if has_waypoint == has_pose:
            raise FieldError(path, "move_to needs exactly one of 'waypoint' or 'pose'")
        if has_waypoint:
            return MoveTo(as_str(obj["waypoint"], f"{path}.waypoint"))
        return MoveTo(pose_from_dict(obj["pose"], f"{path}.pose"))
    if cmd_type == "pick":
        no_extra_keys(obj, {"type", "object"}, path)
        return Pick(as_str(require(obj, "object", path), f"{path}.object"))
    if cmd_type == "place":
        no_extra_keys(obj, {"type", "surface", "floor"}, path)
        has_surface = "surface" in obj
        has_floor = "floor" in obj
        if has_surface == has_floor:
            raise FieldError(path, "place needs exactly one of 'surface' or 'floor'")
        if has_surface:
            return Place(as_str(obj["surface"], f"{path}.surface"))
        floor = as_obj(obj["floor"], f"{path}.floor")
        no_extra_keys(floor, {"dx", "dy"}, f"{path}.floor")
        return Place(
            FloorAt(
                as_float(require(floor, "dx", f"{path}.floor"), f"{path}.floor.dx"),
                as_float(require(floor, "dy", f"{path}.floor"), f"{path}.floor.dy"),
            )
        )
    if cmd_type == "say":
        no_extra_keys(obj, {"type", "text"}, path)
        return Say(as_str(require(obj, "text", path), f"{path}.text"))
    if cmd_type == "actuate_device":
        no_extra_keys(obj, {"type", "device", "action"}, path)
        return ActuateDevice(
            as_str(require(obj, "device", path), f"{path}.device"),
            as_str(require(obj, "action", path), f"{path}.action"),
        )
    raise FieldError(f"{path}.type", f"unknown command type {cmd_type!r}")


# -- command results -------------------------------------------------------

@dataclass(frozen=True)
class Accepted:
    duration_s: float


@dataclass(frozen=True)
class Rejected:
    reason: str  # out_of_reach | not_holding | already_holding | no_such_entity | invalid_target | unknown_waypoint


CommandResult = Accepted | Rejected


def _advance(state: WorldState, seconds: float, **changes: Any) -> WorldState:
    return replace(state, sim_time=state.sim_time + seconds, **changes)


def _reject(state: WorldState, reason: str) -> tuple[WorldState, Rejected]:
    return _advance(state, REJECTION_COST_S), Rejected(reason)


def _with_entities(state: WorldState, updated: dict[str, Entity], seconds: float) -> WorldState:
    entities = dict(state.entities)
    entities.update(updated)
    return _advance(state, seconds, entities=entities)


def apply_command(
    state: WorldState,
    robot_id: str,
    cmd: Command,
    waypoints: Mapping[str, Pose] | None = None,
) -> tuple[WorldState, CommandResult]:
    """Apply one robot command, returning the successor state and a result.

    Accepted commands advance sim_time by their duration; rejected commands
    leave everything except sim_time untouched and charge a fixed 0.5 s so
    an agent cannot retry forever against the time limit for free.
    """
    robot = state.entity(robot_id)
    if not isinstance(robot.kind, Robot):
        raise UnknownReferenceError(robot_id)

    if isinstance(cmd, MoveTo):
        if isinstance(cmd.target, str):
            if waypoints is None or cmd.target not in waypoints:
                return _reject(state, "unknown_waypoint")
            target = waypoints[cmd.target]
        else:
            target = cmd.target
        duration = distance(robot.pose.point, target.point) / ROBOT_SPEED_MPS
        updated = {robot_id: replace(robot, pose=target)}
        held = state.held_object(robot_id)
        if held is not None:
            updated[held.id] = replace(held, pose=target)
        return _with_entities(state, updated, duration), Accepted(duration)

    if isinstance(cmd, Pick):
        if cmd.object_id not in state.entities:
            return _reject(state, "no_such_entity")
        target = state.entities[cmd.object_id]
        if not isinstance(target.kind, MovableObject):
            return _reject(state, "invalid_target")
        if state.held_object(robot_id) is not None:
            return _reject(state, "already_holding")
        if isinstance(target.support, HeldBy):
            return _reject(state, "invalid_target")
        if distance(robot.pose.point, target.pose.point) > REACH_RADIUS_M:
            return _reject(state, "out_of_reach")
        picked = replace(target, pose=robot.pose, support=HeldBy(robot_id))
        return (
            _with_entities(state, {cmd.object_id: picked}, PICK_PLACE_DURATION_S),
            Accepted(PICK_PLACE_DURATION_S),
        )

    if isinstance(cmd, Place):
        held = state.held_object(robot_id)
        if held is None:
            return _reject(state, "not_holding")
        if isinstance(cmd.target, str):
            if cmd.target not in state.entities:
                return _reject(state, "no_such_entity")
            surface_owner = state.entities[cmd.target]
            if not isinstance(surface_owner.kind, Furniture) or surface_owner.kind.surface is None:
                return _reject(state, "invalid_target")
            spot = nearest_point_in_polygon(robot.pose.point, surface_owner.kind.surface)
            if distance(robot.pose.point, spot) > REACH_RADIUS_M:
                return _reject(state, "out_of_reach")
            support: Support = OnSurface(cmd.target)
        else:
            offset = cmd.target
            if math.hypot(offset.dx, offset.dy) > REACH_RADIUS_M:
                return _reject(state, "out_of_reach")
            cos_t, sin_t = math.cos(robot.pose.theta), math.sin(robot.pose.theta)
            spot = (
                robot.pose.x + offset.dx * cos_t - offset.dy * sin_t,
                robot.pose.y + offset.dx * sin_t + offset.dy * cos_t,
            )
            support = Floor()
        placed = replace(
            held,
            pose=Pose(spot[0], spot[1], held.pose.theta),
            support=support,
        )
        return (
            _with_entities(state, {held.id: placed}, PICK_PLACE_DURATION_S),
            Accepted(PICK_PLACE_DURATION_S),
        )

    if isinstance(cmd, Say):
        entry = SpeechEntry(state.sim_time + SAY_DURATION_S, robot_id, cmd.text)
        new_state = _advance(
            state, SAY_DURATION_S, speech_log=state.speech_log + (entry,)
        )
        return new_state, Accepted(SAY_DURATION_S)

    if isinstance(cmd, ActuateDevice):
        if cmd.device_id not in state.entities:
            return _reject(state, "no_such_entity")
        if not isinstance(state.entities[cmd.device_id].kind, Device):
            return _reject(state, "invalid_target")
        device_states = dict(state.device_states)
        device_states[cmd.device_id] = cmd.action
        return (
            _advance(state, DEVICE_DURATION_S, device_states=device_states),
            Accepted(DEVICE_DURATION_S),
        )

    raise TypeError(f"unsupported command {cmd!r}")


def set_device_state(state: WorldState, device_id: str, value: str) -> WorldState:
    """Referee-side device change (e.g. doorbell activation); costs no sim time."""
    if device_id not in state.entities:
        raise UnknownReferenceError(device_id)
    device_states = dict(state.device_states)
    device_states[device_id] = value
    return replace(state, device_states=device_states)


# -- predicates ------------------------------------------------------------

@dataclass(frozen=True)
class OnSurfacePred:
    object_id: str
    surface_id: str


@dataclass(frozen=True)
class NearPred:
    a: str
    b: str
    radius_m: float


@dataclass(frozen=True)
class InZonePred:
    entity_id: str
    zone: str


@dataclass(frozen=True)
class HoldingPred:
    robot_id: str
    object_id: str


@dataclass(frozen=True)
class SaidPred:
    speaker_id: str
    text: str


@dataclass(frozen=True)
class NotPred:
    pred: "Predicate"


Predicate = OnSurfacePred | NearPred | InZonePred | HoldingPred | SaidPred | NotPred


def eval_predicate(state: WorldState, pred: Predicate) -> bool:
    """Evaluate a rubric predicate against a snapshot; raises
    UnknownReferenceError for ids/zones missing from the state (a missing
    reference is a configuration bug, not a false condition)."""
    if isinstance(pred, NotPred):
        return not eval_predicate(state, pred.pred)
    if isinstance(pred, OnSurfacePred):
        entity = state.entity(pred.object_id)
        state.entity(pred.surface_id)
        return entity.support == OnSurface(pred.surface_id)
    if isinstance(pred, NearPred):
        a = state.entity(pred.a)
        b = state.entity(pred.b)
        return distance(a.pose.point, b.pose.point) <= pred.radius_m
    if isinstance(pred, InZonePred):
        entity = state.entity(pred.entity_id)
        zone = state.zone(pred.zone)
        return point_in_polygon(entity.pose.point, zone.polygon)
    if isinstance(pred, HoldingPred):
        state.entity(pred.robot_id)
        return state.entity(pred.object_id).support == HeldBy(pred.robot_id)
    if isinstance(pred, SaidPred):
        state.entity(pred.speaker_id)
        needle = pred.text.lower()
        return any(
            entry.speaker_id == pred.speaker_id and needle in entry.text.lower()
            for entry in state.speech_log
        )
    raise TypeError(f"unsupported predicate {pred!r}")


def predicate_to_dict(pred: Predicate) -> dict:
    if isinstance(pred, NotPred):
        return {"type": "not", "pred": predicate_to_dict(pred.pred)}
    if isinstance(pred, OnSurfacePred):
        return {"type": "on_surface", "object": pred.object_id, "surface": pred.surface_id}
    if isinstance(pred, NearPred):
        return {"type": "near", "a": pred.a, "b": pred.b, "radius_m": pred.radius_m}
    if isinstance(pred, InZonePred):
        return {"type": "in_zone", "entity": pred.entity_id, "zone": pred.zone}
    if isinstance(pred, HoldingPred):
        return {"type": "holding", "robot": pred.robot_id, "object": pred.object_id}
    return {"type": "said", "speaker": pred.speaker_id, "text": pred.text}


def predicate_from_dict(value: Any, path: str) -> Predicate:
    obj = as_obj(value, path)
    pred_type = as_str(require(obj, "type", path), f"{path}.type")
    if pred_type == "not":
        no_extra_keys(obj, {"type", "pred"}, path)
        return NotPred(predicate_from_dict(require(obj, "pred", path), f"{path}.pred"))
    if pred_type == "on_surface":
        no_extra_keys(obj, {"type", "object", "surface"}, path)
        return OnSurfacePred(
            as_str(require(obj, "object", path), f"{path}.object"),
            as_str(require(obj, "surface", path), f"{path}.surface"),
        )
    if pred_type == "near":
        no_extra_keys(obj, {"type", "a", "b", "radius_m"}, path)
        radius = as_float(require(obj, "radius_m", path), f"{path}.radius_m")
        if radius <= 0:
            raise FieldError(f"{path}.radius_m", "radius must be > 0")
        return NearPred(
            as_str(require(obj, "a", path), f"{path}.a"),
            as_str(require(obj, "b", path), f"{path}.b"),
            radius,
        )
    if pred_type == "in_zone":
        no_extra_keys(obj, {"type", "entity", "zone"}, path)
        return InZonePred(
            as_str(require(obj, "entity", path), f"{path}.entity"),
            as_str(require(obj, "zone", path), f"{path}.zone"),
        )
    if pred_type == "holding":
        no_extra_keys(obj, {"type", "robot", "object"}, path)
        return HoldingPred(
            as_str(require(obj, "robot", path), f"{path}.robot"),
            as_str(require(obj, "object", path), f"{path}.object"),
        )
    if pred_type == "said":
        no_extra_keys(obj, {"type", "speaker", "text"}, path)
        return SaidPred(
            as_str(require(obj, "speaker", path), f"{path}.speaker"),
            as_str(require(obj, "text", path), f"{path}.text"),
        )
    raise FieldError(f"{path}.type", f"unknown predicate type {pred_type!r}")


def predicate_references(pred: Predicate) -> tuple[set[str], set[str]]:
    """(entity ids, zone names) referenced by a predicate tree."""
    if isinstance(pred, NotPred):
        return predicate_references(pred.pred)
    if isinstance(pred, OnSurfacePred):
        return {pred.object_id, pred.surface_id}, set()
    if isinstance(pred, NearPred):
        return {pred.a, pred.b}, set()
    if isinstance(pred, InZonePred):
        return {pred.entity_id}, {pred.zone}
    if isinstance(pred, HoldingPred):
        return {pred.robot_id, pred.object_id}, set()
    if isinstance(pred, SaidPred):
        return {pred.speaker_id}, set()
    raise TypeError(f"unsupported predicate {pred!r}")
