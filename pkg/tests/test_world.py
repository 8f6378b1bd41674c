from __future__ import annotations

import math

import pytest
from hypothesis import given, settings, strategies as st

from homearena.world import (
    Accepted,
    ActuateDevice,
    Entity,
    Floor,
    FloorAt,
    Furniture,
    HeldBy,
    HoldingPred,
    Human,
    InZonePred,
    MovableObject,
    MoveTo,
    NearPred,
    NotPred,
    OnSurface,
    OnSurfacePred,
    Pick,
    Place,
    Pose,
    Rejected,
    Robot,
    SaidPred,
    Say,
    UnknownReferenceError,
    WorldState,
    Zone,
    apply_command,
    canonical_world,
    eval_predicate,
    world_to_dict,
)
from helpers import world_invariant_violations

ISLAND_SURFACE = ((1.0, 0.5), (2.0, 0.5), (2.0, 1.5), (1.0, 1.5))


def small_world(robot_pose=Pose(1.0, 1.0, 0.0)) -> WorldState:
    entities = {
        "island": Entity("island", Furniture(surface=ISLAND_SURFACE), Pose(1.5, 1.0)),
        "box": Entity("box", MovableObject(), Pose(1.5, 1.0), OnSurface("island")),
        "far_box": Entity("far_box", MovableObject(), Pose(5.0, 5.0)),
        "annie": Entity("annie", Human(), Pose(4.0, 2.0)),
        "bell": Entity("bell", Furniture(), Pose(0.0, 0.0)),
        "lamp": Entity("lamp", MovableObject(), Pose(1.2, 1.2), OnSurface("island")),
        "bot": Entity("bot", Robot(), robot_pose),
    }
    zones = {"test_zone": Zone("test_zone", ((0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)))}
    return WorldState(entities=entities, zones=zones)


def test_pose_normalizes_theta():
    assert Pose(0, 0, math.pi).theta == -math.pi
    assert Pose(0, 0, 3 * math.pi).theta == pytest.approx(-math.pi)
    assert Pose(0, 0, -math.pi).theta == -math.pi
    assert -math.pi <= Pose(0, 0, 123.456).theta < math.pi


def test_pose_rejects_non_finite():
    with pytest.raises(ValueError):
        Pose(math.nan, 0, 0)
    with pytest.raises(ValueError):
        Pose(0, math.inf, 0)


def test_pick_within_reach():
    world = small_world()  # robot at (1,1), box at (1.5,1): 0.5 m away
    after, result = apply_command(world, "bot", Pick("box"))
    assert result == Accepted(2.0)
    assert after.entities["box"].support == HeldBy("bot")
    assert after.entities["box"].pose == after.entities["bot"].pose
    assert after.sim_time == 2.0


def test_pick_out_of_reach_leaves_world_unchanged():
    world = small_world(robot_pose=Pose(0.0, 0.0, 0.0))  # far_box is at (5,5)
    after, result = apply_command(world, "bot", Pick("far_box"))
    assert result == Rejected("out_of_reach")
    before_doc = world_to_dict(world)
    after_doc = world_to_dict(after)
    assert after_doc.pop("sim_time") == 0.5  # fixed rejection cost
    before_doc.pop("sim_time")
    assert after_doc == before_doc


def test_move_duration_is_distance_over_speed():
    world = small_world(robot_pose=Pose(0.0, 0.0, 0.0))
    after, result = apply_command(world, "bot", MoveTo(Pose(0.0, 2.0, 0.0)))
    assert result == Accepted(4.0)  # 2.0 m at 0.5 m/s
    assert after.sim_time == 4.0
    assert after.entities["bot"].pose == Pose(0.0, 2.0, 0.0)


def test_move_to_waypoint_and_unknown_waypoint():
    world = small_world()
    waypoints = {"island_side": Pose(1.5, 1.7, -1.0)}
    after, result = apply_command(world, "bot", MoveTo("island_side"), waypoints)
    assert isinstance(result, Accepted)
    assert after.entities["bot"].pose == Pose(1.5, 1.7, -1.0)
    _, result = apply_command(world, "bot", MoveTo("nowhere"), waypoints)
    assert result == Rejected("unknown_waypoint")
    _, result = apply_command(world, "bot", MoveTo("island_side"))  # no waypoint table
    assert result == Rejected("unknown_waypoint")


def test_held_object_follows_robot():
    world, _ = apply_command(small_world(), "bot", Pick("box"))
    moved, _ = apply_command(world, "bot", MoveTo(Pose(3.0, 3.0, 1.0)))
    assert moved.entities["box"].pose == Pose(3.0, 3.0, 1.0)


def test_pick_rejections():
    world = small_world()
    _, r = apply_command(world, "bot", Pick("ghost"))
    assert r == Rejected("no_such_entity")
    _, r = apply_command(world, "bot", Pick("island"))
    assert r == Rejected("invalid_target")
    holding, _ = apply_command(world, "bot", Pick("box"))
    _, r = apply_command(holding, "bot", Pick("lamp"))
    assert r == Rejected("already_holding")


def test_place_on_surface_uses_nearest_point():
    world, _ = apply_command(small_world(), "bot", Pick("box"))
    world, _ = apply_command(world, "bot", MoveTo(Pose(1.5, 1.7, 0.0)))  # 0.2 m north of surface
    after, result = apply_command(world, "bot", Place("island"))
    assert result == Accepted(2.0)
    box = after.entities["box"]
    assert box.support == OnSurface("island")
    assert box.pose.point == (1.5, 1.5)  # clamped onto the top edge


def test_place_on_floor_rotates_offset_into_world_frame():
    world, _ = apply_command(small_world(), "bot", Pick("box"))
    world, _ = apply_command(world, "bot", MoveTo(Pose(1.0, 1.0, math.pi / 2)))
    after, result = apply_command(world, "bot", Place(FloorAt(0.5, 0.0)))
    assert result == Accepted(2.0)
    box = after.entities["box"]
    assert box.support == Floor()
    assert box.pose.point == (1.0, 1.5)  # half a metre "ahead" now points north


def test_place_rejections():
    world = small_world()
    _, r = apply_command(world, "bot", Place(FloorAt(0.1, 0.0)))
    assert r == Rejected("not_holding")
    holding, _ = apply_command(world, "bot", Pick("box"))
    _, r = apply_command(holding, "bot", Place(FloorAt(2.0, 0.0)))
    assert r == Rejected("out_of_reach")
    _, r = apply_command(holding, "bot", Place("ghost"))
    assert r == Rejected("no_such_entity")
    _, r = apply_command(holding, "bot", Place("annie"))
    assert r == Rejected("invalid_target")
    _, r = apply_command(holding, "bot", Place("bell"))  # furniture without surface
    assert r == Rejected("invalid_target")
    far, _ = apply_command(holding, "bot", MoveTo(Pose(5.0, 5.0, 0.0)))
    _, r = apply_command(far, "bot", Place("island"))
    assert r == Rejected("out_of_reach")


def test_say_appends_to_speech_log_at_completion_time():
    world = small_world()
    after, result = apply_command(world, "bot", Say("Hello Annie"))
    assert result == Accepted(1.0)
    assert len(after.speech_log) == 1
    entry = after.speech_log[0]
    assert (entry.sim_time, entry.speaker_id, entry.text) == (1.0, "bot", "Hello Annie")


def test_actuate_device_requires_device():
    entities = dict(small_world().entities)
    from homearena.world import Device

    entities["tv"] = Entity("tv", Device("speaker"), Pose(0.5, 0.5))
    world = WorldState(entities=entities, zones={}, device_states={"tv": "idle"})
    after, result = apply_command(world, "bot", ActuateDevice("tv", "on"))
    assert result == Accepted(0.5)
    assert after.device_states["tv"] == "on"
    _, r = apply_command(world, "bot", ActuateDevice("annie", "on"))
    assert r == Rejected("invalid_target")
    _, r = apply_command(world, "bot", ActuateDevice("ghost", "on"))
    assert r == Rejected("no_such_entity")


# -- predicates ------------------------------------------------------------

def test_on_surface_predicate_tracks_support_relation(cracker_world):
    assert eval_predicate(cracker_world, OnSurfacePred("cracker_box", "kitchen_island"))
    held, _ = apply_command(
        cracker_world, "robot", MoveTo(Pose(2.0, 2.2, 0.0))
    )
    held, result = apply_command(held, "robot", Pick("cracker_box"))
    assert isinstance(result, Accepted)
    assert eval_predicate(held, NotPred(OnSurfacePred("cracker_box", "kitchen_island")))


def test_near_is_reflexive():
    world = small_world()
    assert eval_predicate(world, NearPred("annie", "annie", 0.001))


def test_near_uses_entity_distance():
    world = small_world()  # bot at (1,1), annie at (4,2)
    assert not eval_predicate(world, NearPred("bot", "annie", 3.0))
    assert eval_predicate(world, NearPred("bot", "annie", 3.2))  # sqrt(10) ~ 3.162


def test_in_zone_predicate():
    world = small_world()
    assert eval_predicate(world, InZonePred("bot", "test_zone"))
    assert not eval_predicate(world, InZonePred("far_box", "test_zone"))


def test_holding_predicate():
    world = small_world()
    assert not eval_predicate(world, HoldingPred("bot", "box"))
    held, _ = apply_command(world, "bot", Pick("box"))
    assert eval_predicate(held, HoldingPred("bot", "box"))


def test_said_is_case_insensitive_substring():
    world, _ = apply_command(small_world(), "bot", Say("WELCOME home, Annie!"))
    assert eval_predicate(world, SaidPred("bot", "welcome"))
    assert eval_predicate(world, SaidPred("bot", "home, annie"))
    assert not eval_predicate(world, SaidPred("bot", "goodbye"))
    assert not eval_predicate(world, SaidPred("annie", "welcome"))


def test_unknown_reference_is_distinct_from_false():
    world = small_world()
    with pytest.raises(UnknownReferenceError):
        eval_predicate(world, NearPred("bot", "ghost", 1.0))
    with pytest.raises(UnknownReferenceError):
        eval_predicate(world, InZonePred("bot", "no_such_zone"))
    with pytest.raises(UnknownReferenceError):
        eval_predicate(world, SaidPred("ghost", "hi"))


def test_eval_predicate_does_not_mutate(cracker_world):
    doc = canonical_world(cracker_world)
    eval_predicate(cracker_world, OnSurfacePred("cracker_box", "kitchen_island"))
    eval_predicate(cracker_world, NearPred("robot", "granny_annie", 5.0))
    assert canonical_world(cracker_world) == doc


# -- property tests over random command streams ----------------------------

_ids = st.sampled_from(["box", "far_box", "lamp", "island", "annie", "bot", "ghost"])
_small = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
_poses = st.builds(Pose, _small, _small, _small)
_commands = st.one_of(
    st.builds(MoveTo, st.one_of(_poses, st.sampled_from(["wp1", "wp2", "nowhere"]))),
    st.builds(Pick, _ids),
    st.builds(Place, st.one_of(_ids, st.builds(FloorAt, _small, _small))),
    st.builds(Say, st.text(max_size=12)),
    st.builds(ActuateDevice, _ids, st.sampled_from(["on", "off"])),
)
_waypoints = {"wp1": Pose(1.5, 1.7, 0.0), "wp2": Pose(0.2, 0.2, 2.0)}


@settings(max_examples=200, deadline=None)
@given(st.lists(_commands, max_size=25))
def test_command_streams_preserve_world_invariants(commands):
    world = small_world()
    initial_ids = set(world.entities)
    sim_time = 0.0
    for cmd in commands:
        world, result = apply_command(world, "bot", cmd, _waypoints)
        assert world.sim_time >= sim_time  # the clock never runs backwards
        sim_time = world.sim_time
        assert set(world.entities) == initial_ids
        assert world_invariant_violations(world) == []
        assert isinstance(result, (Accepted, Rejected))


@settings(max_examples=200, deadline=None)
@given(st.lists(_commands, max_size=25))
def test_rejected_commands_only_advance_the_clock(commands):
    world = small_world()
    for cmd in commands:
        before = world_to_dict(world)
        world, result = apply_command(world, "bot", cmd, _waypoints)
        if isinstance(result, Rejected):
            after = world_to_dict(world)
            before.pop("sim_time")
            assert after.pop("sim_time") == pytest.approx(0.5 + world.sim_time - 0.5)
            assert after == before


@settings(max_examples=100, deadline=None)
@given(st.lists(_commands, max_size=20))
def test_replaying_commands_is_deterministic(commands):
    def run():
        world = small_world()
        for cmd in commands:
            world, _ = apply_command(world, "bot", cmd, _waypoints)
        return canonical_world(world)

    assert run() == run()
