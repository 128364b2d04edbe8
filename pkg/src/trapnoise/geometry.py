"""Planar electrode layouts and analytic fields above a grounded plane.

Each electrode is a polygon in the z = 0 plane held at a fixed potential,
with the rest of the plane grounded (gapless-plane approximation: the
electrode is solved against an infinite ground plane, inter-electrode gaps
are ignored, and electrodes superpose independently).

The upper-half-space Dirichlet solution for a polygon at potential V is

    phi(r) = (V / 2 pi) * Omega(r),

where Omega is the solid angle the polygon subtends at the observation
point.  Omega is evaluated analytically per triangle of a fan
triangulation; the field E = -grad phi comes from the closed-form line
integral of the solid-angle gradient around the polygon edges.
"""

from __future__ import annotations

import importlib.resources
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InvalidInputError

# Geometry distances are O(100 um); tolerances below are relative to the
# polygon's own scale wherever possible.
_REL_EPS = 1e-12


def _as_point3(point) -> np.ndarray:
    p = np.asarray(point, dtype=float)
    if p.shape != (3,):
        raise InvalidInputError(f"expected a 3-component point, got shape {p.shape}")
    return p


@dataclass(frozen=True)
class Polygon:
    """A simple polygon in the z = 0 plane, counter-clockwise, in meters."""

    vertices: tuple

    def __init__(self, vertices):
        verts = tuple((float(x), float(y)) for x, y in vertices)
        if len(verts) < 3:
            raise GeometryError(f"polygon needs >= 3 vertices, got {len(verts)}")
        object.__setattr__(self, "vertices", verts)
        if self.signed_area() <= 0.0:
            raise GeometryError("polygon must be counter-clockwise with positive area")
        if not self._is_simple():
            raise GeometryError("polygon is self-intersecting")

    @classmethod
    def rectangle(cls, x0: float, x1: float, y0: float, y1: float) -> "Polygon":
        if not (x1 > x0 and y1 > y0):
            raise GeometryError("rectangle requires x1 > x0 and y1 > y0")
        return cls([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])

    def signed_area(self) -> float:
        a = 0.0
        n = len(self.vertices)
        for i in range(n):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % n]
            a += x0 * y1 - x1 * y0
        return 0.5 * a

    @property
    def area(self) -> float:
        return abs(self.signed_area())

    def bounding_box(self):
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), max(xs), min(ys), max(ys)

    def centroid(self):
        cx = cy = 0.0
        a = 0.0
        n = len(self.vertices)
        for i in range(n):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % n]
            w = x0 * y1 - x1 * y0
            a += w
            cx += (x0 + x1) * w
            cy += (y0 + y1) * w
        a *= 0.5
        return cx / (6.0 * a), cy / (6.0 * a)

    def scale(self) -> float:
        x0, x1, y0, y1 = self.bounding_box()
        return max(x1 - x0, y1 - y0)

    def contains(self, x: float, y: float, eps: float = 0.0) -> bool:
        """Point-in-polygon by winding; eps expands the boundary outward."""
        if eps > 0.0 and self._distance_to_boundary(x, y) <= eps:
            return True
        return self._winding(x, y) != 0

    def _winding(self, x: float, y: float) -> int:
        wn = 0
        n = len(self.vertices)
        for i in range(n):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % n]
            if y0 <= y:
                if y1 > y and (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0) > 0:
                    wn += 1
            else:
                if y1 <= y and (x1 - x0) * (y - y0) - (x - x0) * (y1 - y0) < 0:
                    wn -= 1
        return wn

    def _distance_to_boundary(self, x: float, y: float) -> float:
        best = math.inf
        n = len(self.vertices)
        for i in range(n):
            x0, y0 = self.vertices[i]
            x1, y1 = self.vertices[(i + 1) % n]
            dx, dy = x1 - x0, y1 - y0
            l2 = dx * dx + dy * dy
            if l2 == 0.0:
                d = math.hypot(x - x0, y - y0)
            else:
                t = max(0.0, min(1.0, ((x - x0) * dx + (y - y0) * dy) / l2))
                d = math.hypot(x - (x0 + t * dx), y - (y0 + t * dy))
            best = min(best, d)
        return best

    def _is_simple(self) -> bool:
        n = len(self.vertices)
        for i in range(n):
            a0 = self.vertices[i]
            a1 = self.vertices[(i + 1) % n]
            for j in range(i + 1, n):
                if j == i or (j + 1) % n == i or (i + 1) % n == j:
                    continue  # adjacent edges share a vertex
                b0 = self.vertices[j]
                b1 = self.vertices[(j + 1) % n]
                if _segments_intersect(a0, a1, b0, b1):
                    return False
        return True

    def is_star_shaped_from_first_vertex(self) -> bool:
        """True if the fan from vertex 0 triangulates the polygon.

        Every fan triangle (v0, v_i, v_i+1) must be positively oriented;
        convex polygons always pass.  The analytic solid-angle evaluation
        relies on this.
        """
        n = len(self.vertices)
        x0, y0 = self.vertices[0]
        for i in range(1, n - 1):
            x1, y1 = self.vertices[i]
            x2, y2 = self.vertices[i + 1]
            cross = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
            if cross <= 0.0:
                return False
        return True


def _cross2(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _segments_intersect(p0, p1, q0, q1) -> bool:
    d1 = _cross2(q0, q1, p0)
    d2 = _cross2(q0, q1, p1)
    d3 = _cross2(p0, p1, q0)
    d4 = _cross2(p0, p1, q1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    return False


@dataclass(frozen=True)
class FieldVector:
    """Electric field components in V/m."""

    Ex: float
    Ey: float
    Ez: float

    def __post_init__(self):
        if not (math.isfinite(self.Ex) and math.isfinite(self.Ey) and math.isfinite(self.Ez)):
            raise InvalidInputError("field components must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.Ex, self.Ey, self.Ez])

    def squared(self) -> np.ndarray:
        return self.as_array() ** 2


@dataclass(frozen=True)
class Electrode:
    name: str
    shape: Polygon


@dataclass(frozen=True)
class TrapGeometry:
    """Named electrodes in the z = 0 plane; gap_width is layout metadata."""

    electrodes: tuple
    gap_width: float

    def __init__(self, electrodes, gap_width: float):
        electrodes = tuple(electrodes)
        names = [e.name for e in electrodes]
        if len(set(names)) != len(names):
            raise GeometryError("electrode names must be unique")
        _check_disjoint(electrodes)
        object.__setattr__(self, "electrodes", electrodes)
        object.__setattr__(self, "gap_width", float(gap_width))

    @property
    def names(self):
        return [e.name for e in self.electrodes]

    def electrode(self, name: str) -> Electrode:
        for e in self.electrodes:
            if e.name == name:
                return e
        raise InvalidInputError(f"unknown electrode {name!r}")

    def total_area(self) -> float:
        return sum(e.shape.area for e in self.electrodes)

    def bounding_box(self):
        boxes = [e.shape.bounding_box() for e in self.electrodes]
        return (
            min(b[0] for b in boxes),
            max(b[1] for b in boxes),
            min(b[2] for b in boxes),
            max(b[3] for b in boxes),
        )


def _check_disjoint(electrodes) -> None:
    for i in range(len(electrodes)):
        for j in range(i + 1, len(electrodes)):
            a, b = electrodes[i].shape, electrodes[j].shape
            ax0, ax1, ay0, ay1 = a.bounding_box()
            bx0, bx1, by0, by1 = b.bounding_box()
            if ax1 <= bx0 or bx1 <= ax0 or ay1 <= by0 or by1 <= ay0:
                continue
            if _polygons_overlap(a, b):
                raise GeometryError(
                    f"electrodes {electrodes[i].name!r} and {electrodes[j].name!r} overlap"
                )


def _polygons_overlap(a: Polygon, b: Polygon) -> bool:
    na, nb = len(a.vertices), len(b.vertices)
    for i in range(na):
        for j in range(nb):
            if _segments_intersect(
                a.vertices[i], a.vertices[(i + 1) % na], b.vertices[j], b.vertices[(j + 1) % nb]
            ):
                return True
    # no proper edge crossings: flag any vertex strictly inside the other
    # polygon (touching boundaries are allowed)
    for p, q in ((a, b), (b, a)):
        eps = _REL_EPS * p.scale()
        for x, y in q.vertices:
            if p.contains(x, y) and p._distance_to_boundary(x, y) > eps:
                return True
    return False


# ---------------------------------------------------------------------------
# Solid angle and fields


def _triangle_solid_angle(r: np.ndarray, a, b, c) -> float:
    """Signed solid angle of the triangle (a, b, c) seen from r.

    Arctangent form: numerically stable for all non-degenerate
    configurations.  Sign follows the triangle orientation as seen from r.
    """
    r1 = np.array([a[0], a[1], 0.0]) - r
    r2 = np.array([b[0], b[1], 0.0]) - r
    r3 = np.array([c[0], c[1], 0.0]) - r
    l1 = math.sqrt(r1 @ r1)
    l2 = math.sqrt(r2 @ r2)
    l3 = math.sqrt(r3 @ r3)
    numer = r1 @ np.cross(r2, r3)
    denom = l1 * l2 * l3 + (r1 @ r2) * l3 + (r1 @ r3) * l2 + (r2 @ r3) * l1
    return 2.0 * math.atan2(numer, denom)


def solid_angle(p: Polygon, point) -> float:
    """Solid angle (steradians, positive) subtended by p at a point with z > 0."""
    r = _as_point3(point)
    if not r[2] > 0.0:
        raise GeometryError(f"observation point must have z > 0, got z = {r[2]}")
    if not p.is_star_shaped_from_first_vertex():
        raise GeometryError(
            "polygon is not star-shaped from its first vertex; "
            "re-order vertices or split it"
        )
    total = 0.0
    v = p.vertices
    for i in range(1, len(v) - 1):
        total += _triangle_solid_angle(r, v[0], v[i], v[i + 1])
    # CCW seen from +z gives a negative signed sum for z > 0
    return -total


def potential_above_polygon(p: Polygon, point, V: float) -> float:
    """Potential phi(x, y, z) above a polygon at potential V in a grounded plane."""
    return (V / (2.0 * math.pi)) * solid_angle(p, point)


def potential_above_rectangle(x0: float, x1: float, y0: float, y1: float, point, V: float) -> float:
    """Closed form for an axis-aligned rectangle [x0,x1] x [y0,y1] at potential V.

    Four-corner arctangent form of the subtended solid angle.  Must agree
    with the triangulated evaluation; kept as an independent cross-check.
    """
    r = _as_point3(point)
    z = r[2]
    if not z > 0.0:
        raise GeometryError(f"observation point must have z > 0, got z = {z}")
    if not (x1 > x0 and y1 > y0):
        raise GeometryError("rectangle requires x1 > x0 and y1 > y0")
    omega = 0.0
    for i, u in enumerate((x0 - r[0], x1 - r[0])):
        for j, v in enumerate((y0 - r[1], y1 - r[1])):
            sign = 1.0 if (i + j) % 2 == 0 else -1.0
            omega += sign * math.atan2(u * v, z * math.sqrt(u * u + v * v + z * z))
    return (V / (2.0 * math.pi)) * omega


def _solid_angle_gradient(p: Polygon, r: np.ndarray) -> np.ndarray:
    """grad_r Omega(r) via the closed-form line integral around the edges.

    For each directed edge A -> B (CCW), with r1 = r - A, r2 = r - B and
    r0 = B - A:

        integral dl' x (r - r') / |r - r'|^3
            = (r1 x r2) (r0 . (r1/|r1| - r2/|r2|)) / |r1 x r2|^2

    and grad Omega is minus the sum over edges.
    """
    grad = np.zeros(3)
    v = p.vertices
    n = len(v)
    for i in range(n):
        a = np.array([v[i][0], v[i][1], 0.0])
        b = np.array([v[(i + 1) % n][0], v[(i + 1) % n][1], 0.0])
        r1 = r - a
        r2 = r - b
        r0 = b - a
        l1 = math.sqrt(r1 @ r1)
        l2 = math.sqrt(r2 @ r2)
        cr = np.cross(r1, r2)
        cr2 = cr @ cr
        if cr2 == 0.0:
            raise GeometryError("observation point is collinear with an electrode edge")
        grad -= cr * (r0 @ (r1 / l1 - r2 / l2)) / cr2
    return grad


def field_above_polygon(p: Polygon, point, V: float) -> FieldVector:
    """E = -grad phi above a polygon at potential V in a grounded plane."""
    r = _as_point3(point)
    if not r[2] > 0.0:
        raise GeometryError(f"observation point must have z > 0, got z = {r[2]}")
    if not p.is_star_shaped_from_first_vertex():
        raise GeometryError(
            "polygon is not star-shaped from its first vertex; "
            "re-order vertices or split it"
        )
    # The signed solid angle of a CCW polygon seen from z > 0 is -Omega,
    # so E = -grad phi = +(V/2pi) * (line-integral sum) with the sum as
    # written in _solid_angle_gradient's edge kernel.
    grad_omega = _solid_angle_gradient(p, r)
    e = -(V / (2.0 * math.pi)) * grad_omega
    return FieldVector(e[0], e[1], e[2])


def electrode_basis_fields(g: TrapGeometry, point) -> dict:
    """Field at `point` for each electrode at 1 V with all others grounded."""
    return {e.name: field_above_polygon(e.shape, point, 1.0) for e in g.electrodes}


# ---------------------------------------------------------------------------
# Geometry files

GEOMETRY_SCHEMA_VERSION = 1
_UM = 1e-6


def geometry_from_dict(doc: dict) -> TrapGeometry:
    """Build a TrapGeometry from its JSON form (vertices in um)."""
    try:
        electrodes = [
            Electrode(str(e["name"]), Polygon([(x * _UM, y * _UM) for x, y in e["vertices_um"]]))
            for e in doc["electrodes"]
        ]
        gap = float(doc["gap_width_um"]) * _UM
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed geometry document: {exc}") from exc
    return TrapGeometry(electrodes, gap)


def geometry_to_dict(g: TrapGeometry) -> dict:
    return {
        "schema_version": GEOMETRY_SCHEMA_VERSION,
        "gap_width_um": g.gap_width / _UM,
        "electrodes": [
            {
                "name": e.name,
                "vertices_um": [[x / _UM, y / _UM] for x, y in e.shape.vertices],
            }
            for e in g.electrodes
        ],
    }


def load_geometry(path) -> TrapGeometry:
    with open(path, "r", encoding="utf-8") as fh:
        return geometry_from_dict(json.load(fh))


def default_trap_geometry() -> TrapGeometry:
    """The built-in four-RF-electrode layout.

    An approximation of the measured trap: central electrode DC9 flanked by
    four diagonal RF pads and eight outer DC electrodes, ~100 um
    characteristic dimensions in the trapping region, 20 um gaps.  DC9
    extends further in +y than -y, so it produces a planar-y field
    component on the ion axis; the electrodes along the x axis are
    y-symmetric and do not.  The outermost pads (DC5-DC8) are 300-um
    plates standing in for the large metal areas that surround the
    trapping region on the real chip; exact dimensions are not published,
    so the layout (documented in data/default_trap.json) is a stated
    approximation and every fit accepts user geometry files.
    """
    ref = importlib.resources.files("trapnoise.data").joinpath("default_trap.json")
    return geometry_from_dict(json.loads(ref.read_text(encoding="utf-8")))
