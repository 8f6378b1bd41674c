"""Independent oracles and checkers shared across the test suite.

The geometry oracle here is intentionally a different algorithm (winding
number) from the library's ray-casting implementation, so the two can
cross-check each other.
"""

from __future__ import annotations

from homearena.world import Entity, Floor, HeldBy, MovableObject, OnSurface, Robot, WorldState


def winding_number_inside(p, polygon) -> bool:
    """Brute-force winding-number membership test (boundary inclusive)."""
    x, y = p
    n = len(polygon)

    def is_left(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])

    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        if is_left((ax, ay), (bx, by), (x, y)) == 0.0:
            if min(ax, bx) <= x <= max(ax, bx) and min(ay, by) <= y <= max(ay, by):
                return True

    wn = 0
    for i in range(n):
        a = polygon[i]
        b = polygon[(i + 1) % n]
        if a[1] <= y:
            if b[1] > y and is_left(a, b, (x, y)) > 0:
                wn += 1
        elif b[1] <= y and is_left(a, b, (x, y)) < 0:
            wn -= 1
    return wn != 0


def world_invariant_violations(state: WorldState) -> list[str]:
    """Check every world invariant; returns human-readable violations."""
    problems = []
    holders: dict[str, list[str]] = {}
    for eid, entity in state.entities.items():
        if eid != entity.id:
            problems.append(f"entity {eid!r} keyed under wrong id")
        support = entity.support
        if not isinstance(entity.kind, MovableObject) and not isinstance(support, Floor):
            problems.append(f"non-object {eid!r} has support {support!r}")
        if isinstance(support, OnSurface):
            target = state.entities.get(support.surface_id)
            if target is None:
                problems.append(f"{eid!r} rests on missing entity {support.surface_id!r}")
            elif getattr(target.kind, "surface", None) is None:
                problems.append(f"{eid!r} rests on {support.surface_id!r} which has no surface")
        if isinstance(support, HeldBy):
            target = state.entities.get(support.robot_id)
            if target is None or not isinstance(target.kind, Robot):
                problems.append(f"{eid!r} held by non-robot {support.robot_id!r}")
            else:
                holders.setdefault(support.robot_id, []).append(eid)
                if entity.pose != target.pose:
                    problems.append(f"held object {eid!r} drifted from its robot's pose")
    for robot_id, held in holders.items():
        if len(held) > 1:
            problems.append(f"robot {robot_id!r} holds {len(held)} objects: {held}")
    if state.sim_time < 0:
        problems.append(f"sim_time is negative: {state.sim_time}")
    return problems
