"""
Exact planar geometry on Fractions and ints.

Convex hulls, half-plane clipping, angular ordering and closed convex regions of the form
conv(V) + cone(R). Nested families of such regions represent the super-level sets of depth
functions: the value at a point is the highest level whose region contains it, and slice
maxima along vertical lines reduce to interval arithmetic on the regions.
"""
import math
from fractions import Fraction
from functools import cmp_to_key
from itertools import takewhile
from typing import Iterable, Optional, Sequence

Vector = tuple  # (x, y) of ints or Fractions


def cross(u: Vector, v: Vector) -> Fraction | int:
    return u[0] * v[1] - u[1] * v[0]


def dot(u: Vector, v: Vector) -> Fraction | int:
    return u[0] * v[0] + u[1] * v[1]


def sub(u: Vector, v: Vector) -> Vector:
    return u[0] - v[0], u[1] - v[1]


def orient(o: Vector, a: Vector, b: Vector) -> Fraction | int:
    """Twice the signed area of (o, a, b); positive for a counter-clockwise turn."""
    return cross(sub(a, o), sub(b, o))


def _half(u: Vector) -> int:
    return 0 if u[1] > 0 or (u[1] == 0 and u[0] > 0) else 1


def compare_angle(u: Vector, v: Vector) -> int:
    """Order non-zero vectors by polar angle in [0, 2pi)."""
    hu, hv = _half(u), _half(v)
    if hu != hv:
        return -1 if hu < hv else 1
    c = cross(u, v)
    return -1 if c > 0 else (1 if c < 0 else 0)


angle_key = cmp_to_key(compare_angle)


def same_direction(u: Vector, v: Vector) -> bool:
    return cross(u, v) == 0 and dot(u, v) > 0


def convex_hull(points: Iterable[Vector]) -> list[Vector]:
    """
    Vertices of the convex hull in counter-clockwise order, collinear points dropped.

    Degenerate inputs give one vertex (a point) or two (a segment).
    """
    unique = sorted(set((Fraction(p[0]), Fraction(p[1])) for p in points))
    if len(unique) <= 2:
        return unique
    lower: list[Vector] = []
    for p in unique:
        while len(lower) >= 2 and orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Vector] = []
    for p in reversed(unique):
        while len(upper) >= 2 and orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 2:
        return [unique[0], unique[-1]]
    return hull


def clip(polygon: Sequence[Vector], normal: Vector, offset: Fraction | int) -> list[Vector]:
    """Intersect a convex polygon (possibly a point or segment) with {z : <normal, z> >= offset}."""
    if not polygon:
        return []
    if len(polygon) == 1:
        return list(polygon) if dot(normal, polygon[0]) >= offset else []
    kept: list[Vector] = []
    count = len(polygon)
    for index in range(count):
        current, following = polygon[index], polygon[(index + 1) % count]
        current_value = dot(normal, current) - offset
        following_value = dot(normal, following) - offset
        if current_value >= 0:
            kept.append(current)
        if (current_value >= 0) != (following_value >= 0):
            ratio = Fraction(current_value) / (current_value - following_value)
            kept.append((current[0] + ratio * (following[0] - current[0]),
                         current[1] + ratio * (following[1] - current[1])))
    return convex_hull(kept)


def primitive(u: Vector) -> Vector:
    """Positive rescaling of a non-zero rational vector to coprime integers."""
    a, b = Fraction(u[0]), Fraction(u[1])
    scale = a.denominator * b.denominator
    x, y = int(a * scale), int(b * scale)
    g = math.gcd(x, y)
    return x // g, y // g


class ConvexRegion:
    """
    Closed convex set conv(vertices) + cone(rays).

    An empty vertex list means the empty set.
    """

    def __init__(self, points: Iterable[Vector], rays: Iterable[Vector] = ()):
        self.vertices = convex_hull(points)
        self.rays = sorted({primitive(r) for r in rays if r[0] != 0 or r[1] != 0})

    def __repr__(self) -> str:
        return f"ConvexRegion(vertices={self.vertices}, rays={self.rays})"

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def is_bounded(self) -> bool:
        return not self.rays

    def cone_contains(self, u: Vector) -> bool:
        """Whether u is a non-negative combination of the rays."""
        if u[0] == 0 and u[1] == 0:
            return True
        for index, r in enumerate(self.rays):
            if same_direction(r, u):
                return True
            for other in self.rays[index + 1:]:
                determinant = cross(r, other)
                if determinant == 0:
                    continue
                if Fraction(cross(u, other)) / determinant >= 0 and Fraction(cross(r, u)) / determinant >= 0:
                    return True
        return False

    def x_extent(self) -> Optional[tuple[Optional[Fraction], Optional[Fraction]]]:
        """Projection onto the first axis as (low, high); None marks an unbounded end."""
        if self.is_empty:
            return None
        low = None if any(r[0] < 0 for r in self.rays) else min(v[0] for v in self.vertices)
        high = None if any(r[0] > 0 for r in self.rays) else max(v[0] for v in self.vertices)
        return low, high

    def slice_interval(self, x1: Fraction) -> Optional[tuple[Optional[Fraction], Optional[Fraction]]]:
        """
        Intersection with the vertical line through x1 as (low, high), None for unbounded ends,
        or None when the line misses the region.
        """
        x1 = Fraction(x1)
        heights: list[Fraction] = []
        vertices = self.vertices
        for index, v in enumerate(vertices):
            if v[0] == x1:
                heights.append(v[1])
            for other in vertices[index + 1:]:
                if (v[0] - x1) * (other[0] - x1) < 0:
                    ratio = (x1 - v[0]) / (other[0] - v[0])
                    heights.append(v[1] + ratio * (other[1] - v[1]))
            for r in self.rays:
                if r[0] != 0:
                    scale = (x1 - v[0]) / r[0]
                    if scale >= 0:
                        heights.append(v[1] + scale * r[1])
        if not heights:
            return None
        low = None if self.cone_contains((0, -1)) else min(heights)
        high = None if self.cone_contains((0, 1)) else max(heights)
        return low, high

    def contains(self, point: Vector) -> bool:
        interval = self.slice_interval(point[0])
        if interval is None:
            return False
        low, high = interval
        y = Fraction(point[1])
        return (low is None or low <= y) and (high is None or y <= high)


def _within(value: Fraction, interval: Optional[tuple]) -> bool:
    if interval is None:
        return False
    low, high = interval
    return (low is None or low <= value) and (high is None or value <= high)


def _finite_ends(interval: Optional[tuple]) -> list[Fraction]:
    if interval is None:
        return []
    return [end for end in interval if end is not None]


class NestedRegions:
    """
    Super-level sets P_1 ⊇ P_2 ⊇ ... of an integer-valued function f on the plane.

    f(z) is the largest k with z in P_k, and 0 outside P_1.
    """

    def __init__(self, regions: Sequence[ConvexRegion]):
        self.regions = list(takewhile(lambda region: not region.is_empty, regions))

    @property
    def top(self) -> int:
        return len(self.regions)

    def value_at(self, point: Vector) -> int:
        for level in range(self.top, 0, -1):
            if self.regions[level - 1].contains(point):
                return level
        return 0

    def line_max(self, x1: Fraction) -> int:
        """max over y of f(x1, y)."""
        x1 = Fraction(x1)
        for level in range(self.top, 0, -1):
            if _within(x1, self.regions[level - 1].x_extent()):
                return level
        return 0

    def line_max_breakpoints(self) -> list[Fraction]:
        """Values of x1 between which line_max is constant."""
        return sorted({end for region in self.regions for end in _finite_ends(region.x_extent())})

    def line_breakpoints(self, x1: Fraction) -> list[Fraction]:
        """Values of y between which f(x1, y) is constant."""
        return sorted({end for region in self.regions for end in _finite_ends(region.slice_interval(x1))})
