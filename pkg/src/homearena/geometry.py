"""Planar geometry used by zone membership, reach checks and placement.

Polygons are sequences of (x, y) vertices in counter-clockwise order.
Points on a polygon's boundary count as inside; the world would otherwise
drop objects placed exactly on a zone or surface edge.
"""

from __future__ import annotations

import math
from typing import Sequence

Point = tuple[float, float]


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def signed_area(polygon: Sequence[Point]) -> float:
    """Shoelace area; positive for counter-clockwise winding."""
    total = 0.0
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total / 2.0


def _orient(a: Point, b: Point, c: Point) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(p: Point, a: Point, b: Point) -> bool:
    if _orient(a, b, p) != 0.0:
        return False
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def _segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool:
    """True if segment ab intersects cd, endpoints included."""
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, d)
    o3 = _orient(c, d, a)
    o4 = _orient(c, d, b)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True
    return (
        _on_segment(c, a, b)
        or _on_segment(d, a, b)
        or _on_segment(a, c, d)
        or _on_segment(b, c, d)
    )


def is_simple_polygon(polygon: Sequence[Point]) -> bool:
    """No repeated consecutive vertices, no contact between non-adjacent edges."""
    n = len(polygon)
    if n < 3:
        return False
    for i in range(n):
        if polygon[i] == polygon[(i + 1) % n]:
            return False
    for i in range(n):
        a, b = polygon[i], polygon[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = polygon[j], polygon[(j + 1) % n]
            if _segments_intersect(a, b, c, d):
                return False
    return True


def point_in_polygon(p: Point, polygon: Sequence[Point]) -> bool:
    """Ray-casting membership test; boundary points count as inside."""
    n = len(polygon)
    for i in range(n):
        if _on_segment(p, polygon[i], polygon[(i + 1) % n]):
            return True
    inside = False
    x, y = p
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_cross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < x_cross:
                inside = not inside
    return inside


def _closest_point_on_segment(p: Point, a: Point, b: Point) -> Point:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        return a
    t = ((p[0] - ax) * dx + (p[1] - ay) * dy) / length_sq
    t = max(0.0, min(1.0, t))
    return (ax + t * dx, ay + t * dy)


def nearest_point_in_polygon(p: Point, polygon: Sequence[Point]) -> Point:
    """Closest point of the closed polygonal region to p (p itself if inside)."""
    if point_in_polygon(p, polygon):
        return p
    best: Point | None = None
    best_dist = math.inf
    n = len(polygon)
    for i in range(n):
        candidate = _closest_point_on_segment(p, polygon[i], polygon[(i + 1) % n])
        d = distance(p, candidate)
        if d < best_dist:
            best_dist = d
            best = candidate
    assert best is not None
    return best
