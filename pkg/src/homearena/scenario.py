"""Declarative scenario files: parsing, validation and world instantiation.

A scenario is a single UTF-8 JSON document with the top-level keys
``id``, ``description``, ``zones``, ``entities``, ``waypoints``,
``robot_start``, ``context``, ``rubric`` and ``time_limit_s`` (see
SCENARIOS.md). Unknown top-level keys are rejected so files stay
forward-auditable. Parsing never crashes on malformed input: every
failure becomes a coded diagnostic with a field path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .geometry import Point, is_simple_polygon, signed_area
from .jsonutil import (
    FieldError,
    as_float,
    as_int,
    as_list,
    as_obj,
    as_str,
    canonical_json,
    loads_strict,
    no_extra_keys,
    require,
)
from .world import (
    DEFAULT_DEVICE_STATE,
    DEVICE_KINDS,
    Device,
    Entity,
    EntityKind,
    Floor,
    Furniture,
    HeldBy,
    Human,
    MovableObject,
    OnSurface,
    Pose,
    Predicate,
    Robot,
    Support,
    WorldState,
    Zone,
    pose_from_dict,
    predicate_from_dict,
    predicate_references,
    predicate_to_dict,
    support_from_dict,
    support_to_dict,
)

DEFAULT_TIME_LIMIT_S = 600.0

TOP_LEVEL_KEYS = {
    "id",
    "description",
    "zones",
    "entities",
    "waypoints",
    "robot_start",
    "context",
    "rubric",
    "time_limit_s",
}


@dataclass(frozen=True)
class Diagnostic:
    code: str
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.path or '(root)'}: {self.message}"


class ScenarioError(ValueError):
    """Raised by parse_scenario when a file cannot become a valid spec."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


# -- context events --------------------------------------------------------

@dataclass(frozen=True)
class DoorbellActivated:
    pass


@dataclass(frozen=True)
class TabletSummon:
    target: str


@dataclass(frozen=True)
class SpeechRequest:
    speaker: str
    utterance: str


ContextEvent = DoorbellActivated | TabletSummon | SpeechRequest


def context_to_dict(context: ContextEvent) -> dict:
    if isinstance(context, DoorbellActivated):
        return {"kind": "doorbell"}
    if isinstance(context, TabletSummon):
        return {"kind": "tablet_summon", "target": context.target}
    return {
        "kind": "speech_request",
        "speaker": context.speaker,
        "utterance": context.utterance,
    }


def context_from_dict(value: Any, path: str) -> ContextEvent:
    obj = as_obj(value, path)
    kind = as_str(require(obj, "kind", path), f"{path}.kind")
    if kind == "doorbell":
        no_extra_keys(obj, {"kind"}, path)
        return DoorbellActivated()
    if kind == "tablet_summon":
        no_extra_keys(obj, {"kind", "target"}, path)
        return TabletSummon(as_str(require(obj, "target", path), f"{path}.target"))
    if kind == "speech_request":
        no_extra_keys(obj, {"kind", "speaker", "utterance"}, path)
        return SpeechRequest(
            as_str(require(obj, "speaker", path), f"{path}.speaker"),
            as_str(require(obj, "utterance", path), f"{path}.utterance"),
        )
    raise FieldError(f"{path}.kind", f"unknown context kind {kind!r}")


@dataclass(frozen=True)
class Achievement:
    id: str
    description: str
    points: int
    condition: tuple[Predicate, ...]  # conjunction, non-empty


@dataclass(frozen=True)
class ScenarioSpec:
    id: str
    description: str
    zones: dict[str, Zone]
    entities: tuple[Entity, ...]
    robot_start: Pose
    waypoints: dict[str, Pose]
    context: ContextEvent
    rubric: tuple[Achievement, ...]
    time_limit_s: float

    @property
    def robot_id(self) -> str:
        for entity in self.entities:
            if isinstance(entity.kind, Robot):
                return entity.id
        raise LookupError("scenario has no robot entity")

    @property
    def max_points(self) -> int:
        return sum(a.points for a in self.rubric)

    def doorbell_device_id(self) -> str | None:
        for entity in self.entities:
            if isinstance(entity.kind, Device) and entity.kind.device_kind == "doorbell":
                return entity.id
        return None


# -- polygon parsing -------------------------------------------------------

def _polygon_from_json(value: Any, path: str) -> tuple[Point, ...]:
    items = as_list(value, path)
    points: list[Point] = []
    for i, item in enumerate(items):
        pair = as_list(item, f"{path}[{i}]")
        if len(pair) != 2:
            raise FieldError(f"{path}[{i}]", "vertex must be an [x, y] pair")
        points.append(
            (as_float(pair[0], f"{path}[{i}][0]"), as_float(pair[1], f"{path}[{i}][1]"))
        )
    return tuple(points)


def _check_polygon(polygon: tuple[Point, ...], path: str, diags: list[Diagnostic]) -> None:
    if len(polygon) < 3:
        diags.append(Diagnostic("invalid_geometry", path, "polygon needs at least 3 vertices"))
        return
    if not is_simple_polygon(polygon):
        diags.append(Diagnostic("invalid_geometry", path, "polygon must be simple"))
        return
    if signed_area(polygon) <= 0:
        diags.append(
            Diagnostic("invalid_geometry", path, "polygon must wind counter-clockwise")
        )


# -- parsing ---------------------------------------------------------------

def _parse_entity(
    obj: dict, path: str, robot_start: Pose | None, diags: list[Diagnostic]
) -> Entity | None:
    no_extra_keys(obj, {"id", "kind", "pose", "support", "surface", "device_kind"}, path)
    entity_id = as_str(require(obj, "id", path), f"{path}.id")
    kind_name = as_str(require(obj, "kind", path), f"{path}.kind")

    kind: EntityKind
    if kind_name == "furniture":
        surface = None
        if "surface" in obj:
            surface = _polygon_from_json(obj["surface"], f"{path}.surface")
            _check_polygon(surface, f"{path}.surface", diags)
        kind = Furniture(surface)
    elif kind_name == "object":
        kind = MovableObject()
    elif kind_name == "human":
        kind = Human()
    elif kind_name == "robot":
        kind = Robot()
    elif kind_name == "device":
        device_kind = as_str(require(obj, "device_kind", path), f"{path}.device_kind")
        if device_kind not in DEVICE_KINDS:
            raise FieldError(
                f"{path}.device_kind",
                f"device_kind must be one of {', '.join(DEVICE_KINDS)}",
            )
        kind = Device(device_kind)
    else:
        raise FieldError(f"{path}.kind", f"unknown entity kind {kind_name!r}")

    if kind_name != "device" and "device_kind" in obj:
        raise FieldError(f"{path}.device_kind", "only devices take device_kind")
    if kind_name != "furniture" and "surface" in obj:
        raise FieldError(f"{path}.surface", "only furniture takes a surface polygon")

    if kind_name == "robot":
        if "pose" in obj:
            raise FieldError(f"{path}.pose", "robot pose comes from robot_start")
        if robot_start is None:
            return None  # robot_start itself failed to parse; diagnostic already recorded
        pose = robot_start
    else:
        pose = pose_from_dict(require(obj, "pose", path), f"{path}.pose")

    support: Support = Floor()
    if "support" in obj:
        support = support_from_dict(obj["support"], f"{path}.support")
        if kind_name != "object" and not isinstance(support, Floor):
            raise FieldError(f"{path}.support", f"{kind_name} entities must rest on the floor")

    return Entity(entity_id, kind, pose, support)


def _parse_achievement(obj: dict, path: str) -> Achievement:
    no_extra_keys(obj, {"id", "description", "points", "condition"}, path)
    ach_id = as_str(require(obj, "id", path), f"{path}.id")
    description = as_str(obj.get("description", ""), f"{path}.description")
    points = as_int(require(obj, "points", path), f"{path}.points")
    if points < 1:
        raise FieldError(f"{path}.points", "points must be >= 1")
    cond_items = as_list(require(obj, "condition", path), f"{path}.condition")
    if not cond_items:
        raise FieldError(f"{path}.condition", "condition must not be empty")
    condition = tuple(
        predicate_from_dict(item, f"{path}.condition[{i}]")
        for i, item in enumerate(cond_items)
    )
    return Achievement(ach_id, description, points, condition)


def parse_scenario(text: bytes | str) -> ScenarioSpec:
    """Parse and fully validate a scenario document.

    Raises ScenarioError carrying the collected diagnostics if the document
    is syntactically malformed, structurally invalid, or fails any
    cross-reference check in ``validate``.
    """
    diags: list[Diagnostic] = []
    try:
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        raw = loads_strict(text)
    except (UnicodeDecodeError, ValueError) as exc:
        raise ScenarioError([Diagnostic("syntax_error", "", str(exc))]) from None
    if not isinstance(raw, dict):
        raise ScenarioError(
            [Diagnostic("syntax_error", "", "scenario document must be a JSON object")]
        )

    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            diags.append(Diagnostic("unknown_field", key, "unknown top-level field"))

    def section(key: str, parse_fn, default=None, required=True):
        if key not in raw:
            if required:
                diags.append(Diagnostic("missing_field", key, "missing required field"))
            return default
        try:
            return parse_fn(raw[key])
        except FieldError as exc:
            diags.append(Diagnostic(_structural_code(exc), exc.path, exc.message))
            return default

    scenario_id = section("id", lambda v: as_str(v, "id"))
    description = section("description", lambda v: as_str(v, "description"), default="", required=False)
    robot_start = section("robot_start", lambda v: pose_from_dict(v, "robot_start"))

    def parse_zones(value: Any) -> dict[str, Zone]:
        zones: dict[str, Zone] = {}
        for i, item in enumerate(as_list(value, "zones")):
            path = f"zones[{i}]"
            obj = as_obj(item, path)
            no_extra_keys(obj, {"name", "polygon"}, path)
            name = as_str(require(obj, "name", path), f"{path}.name")
            polygon = _polygon_from_json(require(obj, "polygon", path), f"{path}.polygon")
            _check_polygon(polygon, f"{path}.polygon", diags)
            if name in zones:
                diags.append(Diagnostic("duplicate_id", f"{path}.name", f"duplicate zone {name!r}"))
                continue
            zones[name] = Zone(name, polygon)
        return zones

    zones = section("zones", parse_zones, default={})

    def parse_entities(value: Any) -> tuple[Entity, ...]:
        out: list[Entity] = []
        seen: set[str] = set()
        for i, item in enumerate(as_list(value, "entities")):
            path = f"entities[{i}]"
            try:
                entity = _parse_entity(as_obj(item, path), path, robot_start, diags)
            except FieldError as exc:
                diags.append(Diagnostic(_structural_code(exc), exc.path, exc.message))
                continue
            if entity is None:
                continue
            if entity.id in seen:
                diags.append(
                    Diagnostic("duplicate_id", f"{path}.id", f"duplicate entity {entity.id!r}")
                )
                continue
            seen.add(entity.id)
            out.append(entity)
        return tuple(out)

    entities = section("entities", parse_entities, default=())

    def parse_waypoints(value: Any) -> dict[str, Pose]:
        obj = as_obj(value, "waypoints")
        return {
            name: pose_from_dict(p, f"waypoints.{name}") for name, p in obj.items()
        }

    waypoints = section("waypoints", parse_waypoints, default={}, required=False)
    context = section("context", lambda v: context_from_dict(v, "context"))

    def parse_rubric(value: Any) -> tuple[Achievement, ...]:
        out: list[Achievement] = []
        seen: set[str] = set()
        for i, item in enumerate(as_list(value, "rubric")):
            path = f"rubric[{i}]"
            try:
                ach = _parse_achievement(as_obj(item, path), path)
            except FieldError as exc:
                diags.append(Diagnostic(_structural_code(exc), exc.path, exc.message))
                continue
            if ach.id in seen:
                diags.append(Diagnostic("duplicate_id", f"{path}.id", f"duplicate achievement {ach.id!r}"))
                continue
            seen.add(ach.id)
            out.append(ach)
        return tuple(out)

    rubric = section("rubric", parse_rubric, default=())

    def parse_time_limit(value: Any) -> float:
        limit = as_float(value, "time_limit_s")
        if limit <= 0:
            raise FieldError("time_limit_s", "time limit must be > 0")
        return limit

    time_limit_s = section("time_limit_s", parse_time_limit, default=DEFAULT_TIME_LIMIT_S, required=False)

    if diags:
        raise ScenarioError(diags)

    spec = ScenarioSpec(
        id=scenario_id,
        description=description,
        zones=zones,
        entities=entities,
        robot_start=robot_start,
        waypoints=waypoints,
        context=context,
        rubric=rubric,
        time_limit_s=time_limit_s,
    )
    semantic = validate(spec)
    if semantic:
        raise ScenarioError(semantic)
    return spec


def _structural_code(exc: FieldError) -> str:
    if exc.message == "missing required field":
        return "missing_field"
    if exc.message == "unknown field":
        return "unknown_field"
    return "invalid_value"


# -- semantic validation ---------------------------------------------------

def validate(spec: ScenarioSpec) -> list[Diagnostic]:
    """Cross-reference and world-invariant checks over a parsed spec.

    Returns an empty list iff the spec can be instantiated into a
    well-formed world. Never raises and never mutates.
    """
    diags: list[Diagnostic] = []
    by_id = {e.id: e for e in spec.entities}

    robots = [e for e in spec.entities if isinstance(e.kind, Robot)]
    if not robots:
        diags.append(Diagnostic("no_robot", "entities", "scenario must place exactly one robot"))
    elif len(robots) > 1:
        diags.append(
            Diagnostic(
                "multiple_robots",
                "entities",
                f"scenario places {len(robots)} robots; exactly one is allowed",
            )
        )

    held_counts: dict[str, int] = {}
    for i, entity in enumerate(spec.entities):
        path = f"entities[{i}]"
        if isinstance(entity.support, OnSurface):
            target = by_id.get(entity.support.surface_id)
            if target is None:
                diags.append(
                    Diagnostic(
                        "dangling_reference",
                        f"{path}.support.surface",
                        f"no entity {entity.support.surface_id!r}",
                    )
                )
            elif not isinstance(target.kind, Furniture) or target.kind.surface is None:
                diags.append(
                    Diagnostic(
                        "invalid_value",
                        f"{path}.support.surface",
                        f"{entity.support.surface_id!r} is not furniture with a surface polygon",
                    )
                )
        elif isinstance(entity.support, HeldBy):
            target = by_id.get(entity.support.robot_id)
            if target is None:
                diags.append(
                    Diagnostic(
                        "dangling_reference",
                        f"{path}.support.robot",
                        f"no entity {entity.support.robot_id!r}",
                    )
                )
            elif not isinstance(target.kind, Robot):
                diags.append(
                    Diagnostic(
                        "invalid_value",
                        f"{path}.support.robot",
                        f"{entity.support.robot_id!r} is not a robot",
                    )
                )
            else:
                held_counts[target.id] = held_counts.get(target.id, 0) + 1

    for robot_id, count in held_counts.items():
        if count > 1:
            diags.append(
                Diagnostic(
                    "invalid_value",
                    "entities",
                    f"robot {robot_id!r} starts holding {count} objects; gripper capacity is 1",
                )
            )

    context = spec.context
    if isinstance(context, DoorbellActivated):
        doorbells = [
            e
            for e in spec.entities
            if isinstance(e.kind, Device) and e.kind.device_kind == "doorbell"
        ]
        if len(doorbells) != 1:
            diags.append(
                Diagnostic(
                    "context_target_invalid",
                    "context",
                    f"doorbell context needs exactly one doorbell device, found {len(doorbells)}",
                )
            )
    else:
        ref = context.target if isinstance(context, TabletSummon) else context.speaker
        target = by_id.get(ref)
        if target is None or not isinstance(target.kind, Human):
            diags.append(
                Diagnostic(
                    "context_target_invalid",
                    "context",
                    f"context target {ref!r} must be a placed human entity",
                )
            )

    for i, ach in enumerate(spec.rubric):
        for j, pred in enumerate(ach.condition):
            path = f"rubric[{i}].condition[{j}]"
            entity_refs, zone_refs = predicate_references(pred)
            for ref in sorted(entity_refs):
                if ref not in by_id:
                    diags.append(
                        Diagnostic("dangling_reference", path, f"no entity {ref!r}")
                    )
            for ref in sorted(zone_refs):
                if ref not in spec.zones:
                    diags.append(
                        Diagnostic("dangling_reference", path, f"no zone {ref!r}")
                    )

    return diags


# -- instantiation and canonical form --------------------------------------

def instantiate_world(spec: ScenarioSpec) -> WorldState:
    """Build the initial world: sim clock at zero, empty speech log,
    devices in their default state, robot at robot_start, supports as
    declared. Requires validate(spec) to be empty."""
    entities: dict[str, Entity] = {}
    robot_poses = {
        e.id: e.pose for e in spec.entities if isinstance(e.kind, Robot)
    }
    for entity in spec.entities:
        if isinstance(entity.support, HeldBy):
            entity = Entity(
                entity.id, entity.kind, robot_poses[entity.support.robot_id], entity.support
            )
        entities[entity.id] = entity
    device_states = {
        e.id: DEFAULT_DEVICE_STATE for e in spec.entities if isinstance(e.kind, Device)
    }
    return WorldState(
        entities=entities,
        zones=dict(spec.zones),
        sim_time=0.0,
        speech_log=(),
        device_states=device_states,
    )


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    entities = []
    for entity in spec.entities:
        item: dict[str, Any] = {"id": entity.id, "kind": entity.kind_name()}
        if not isinstance(entity.kind, Robot):
            item["pose"] = entity.pose.to_dict()
        if isinstance(entity.kind, Furniture) and entity.kind.surface is not None:
            item["surface"] = [[x, y] for x, y in entity.kind.surface]
        if isinstance(entity.kind, Device):
            item["device_kind"] = entity.kind.device_kind
        if not isinstance(entity.support, Floor):
            item["support"] = support_to_dict(entity.support)
        entities.append(item)
    return {
        "id": spec.id,
        "description": spec.description,
        "zones": [
            {"name": z.name, "polygon": [[x, y] for x, y in z.polygon]}
            for z in spec.zones.values()
        ],
        "entities": entities,
        "waypoints": {name: p.to_dict() for name, p in spec.waypoints.items()},
        "robot_start": spec.robot_start.to_dict(),
        "context": context_to_dict(spec.context),
        "rubric": [
            {
                "id": a.id,
                "description": a.description,
                "points": a.points,
                "condition": [predicate_to_dict(p) for p in a.condition],
            }
            for a in spec.rubric
        ],
        "time_limit_s": spec.time_limit_s,
    }


def serialize_scenario(spec: ScenarioSpec) -> str:
    """Canonical single-line JSON form; parse(serialize(spec)) == spec."""
    return canonical_json(scenario_to_dict(spec))
