"""Cross-section shapes and their rasterization onto masked uniform grids.

A cross section omega is represented by the set of grid nodes (i*h, j*h)
strictly inside the shape.  Membership is tested with the exact analytic
inequality at the node coordinate (no super-sampling); the resulting
staircase boundary error is controlled by convergence studies downstream.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import EmptyMask, InvalidSpec


@dataclass(frozen=True)
class Disc:
    """Unit disc t2^2 + t3^2 < 1."""


@dataclass(frozen=True)
class Ellipse:
    """Elliptic disc (1+eps)^2 t2^2 + t3^2 < 1.

    eps = 0 degenerates to the unit disc and is accepted.
    """

    eps: float


@dataclass(frozen=True)
class Ribbon:
    """Zigzag annular band between two piecewise-linear closed curves.

    The outer curve has 2^(k+1) vertices on radius 2 alternating with
    2^(k+1) vertices on radius 1, placed on rays at angles j*pi/2^(k+1),
    j = 0..2^(k+2)-1, with the radius-2 vertex on ray j = 0.  The inner
    curve uses the same rays with radii 2 - eps_r and 1 - eps_r.
    """

    k: int
    eps_r: float = 0.1


@dataclass(frozen=True)
class PolygonWithHoles:
    outer: tuple
    holes: tuple = ()


ShapeSpec = Union[Disc, Ellipse, Ribbon, PolygonWithHoles]


def _segments_intersect(p, q, r, s):
    # proper or touching intersection of segments pq and rs
    def orient(a, b, c):
        v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        return 0 if v == 0 else (1 if v > 0 else -1)

    def on_seg(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    o1, o2 = orient(p, q, r), orient(p, q, s)
    o3, o4 = orient(r, s, p), orient(r, s, q)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and on_seg(p, q, r):
        return True
    if o2 == 0 and on_seg(p, q, s):
        return True
    if o3 == 0 and on_seg(r, s, p):
        return True
    if o4 == 0 and on_seg(r, s, q):
        return True
    return False


def _ring_is_simple(verts):
    n = len(verts)
    for a in range(n):
        pa, qa = verts[a], verts[(a + 1) % n]
        for b in range(a + 1, n):
            # skip edges sharing a vertex
            if b == a or (b + 1) % n == a or (a + 1) % n == b:
                continue
            pb, qb = verts[b], verts[(b + 1) % n]
            if _segments_intersect(pa, qa, pb, qb):
                return False
    return True


def validate_spec(spec: ShapeSpec) -> None:
    """Raise InvalidSpec if the shape violates its invariants."""
    if isinstance(spec, Disc):
        return
    if isinstance(spec, Ellipse):
        if not spec.eps >= 0:
            raise InvalidSpec(f"ellipse eps must be >= 0, got {spec.eps}")
        return
    if isinstance(spec, Ribbon):
        if not (isinstance(spec.k, int) and spec.k >= 1):
            raise InvalidSpec(f"ribbon k must be a positive integer, got {spec.k}")
        if not 0 < spec.eps_r < 1:
            raise InvalidSpec(f"ribbon eps_r must lie in (0, 1), got {spec.eps_r}")
        return
    if isinstance(spec, PolygonWithHoles):
        rings = [tuple(spec.outer)] + [tuple(hh) for hh in spec.holes]
        for ring in rings:
            if len(ring) < 3:
                raise InvalidSpec("polygon rings need at least 3 vertices")
            if not _ring_is_simple(ring):
                raise InvalidSpec("polygon ring is self-intersecting")
        return
    raise InvalidSpec(f"unknown shape spec {spec!r}")


def zigzag_vertices(k: int, r_even: float, r_odd: float):
    """Vertices of a zigzag ring: rays at j*pi/2^(k+1), alternating radii."""
    nray = 2 ** (k + 2)
    verts = []
    for j in range(nray):
        phi = j * math.pi / (2 ** (k + 1))
        r = r_even if j % 2 == 0 else r_odd
        verts.append((r * math.cos(phi), r * math.sin(phi)))
    return verts


def point_in_poly(x, y, verts):
    """Even-odd rule point-in-polygon test (ray cast along +x)."""
    inside = False
    n = len(verts)
    for a in range(n):
        x1, y1 = verts[a]
        x2, y2 = verts[(a + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xc:
                inside = not inside
    return inside


def _membership(spec: ShapeSpec):
    """Return (predicate, bounding box (xmin, ymin, xmax, ymax))."""
    if isinstance(spec, Disc):
        return (lambda x, y: x * x + y * y < 1.0), (-1.0, -1.0, 1.0, 1.0)
    if isinstance(spec, Ellipse):
        w = 1.0 / (1.0 + spec.eps)
        return (lambda x, y: (1.0 + spec.eps) ** 2 * x * x + y * y < 1.0), (-w, -1.0, w, 1.0)
    if isinstance(spec, Ribbon):
        outer = zigzag_vertices(spec.k, 2.0, 1.0)
        inner = zigzag_vertices(spec.k, 2.0 - spec.eps_r, 1.0 - spec.eps_r)

        def pred(x, y):
            return point_in_poly(x, y, outer) and not point_in_poly(x, y, inner)

        return pred, (-2.0, -2.0, 2.0, 2.0)
    if isinstance(spec, PolygonWithHoles):
        outer = tuple(spec.outer)
        holes = [tuple(hh) for hh in spec.holes]

        def pred(x, y):
            if not point_in_poly(x, y, outer):
                return False
            return not any(point_in_poly(x, y, hh) for hh in holes)

        xs = [v[0] for v in outer]
        ys = [v[1] for v in outer]
        return pred, (min(xs), min(ys), max(xs), max(ys))
    raise InvalidSpec(f"unknown shape spec {spec!r}")


@dataclass(frozen=True)
class CrossSection:
    """Masked uniform grid for a cross section.

    nodes is row-major in (i, j): i ascending, then j ascending.  The
    ordering is deterministic so that all downstream assembly is
    bit-reproducible.
    """

    spec: ShapeSpec
    h: float
    bbox: tuple
    nodes: tuple            # ((i, j), ...)
    index: dict = field(repr=False)   # (i, j) -> dense index
    t2: np.ndarray = field(repr=False)
    t3: np.ndarray = field(repr=False)
    d: float = 0.0

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def area_estimate(self) -> float:
        return self.n * self.h ** 2

    def dump_csv(self, path) -> None:
        """Write (i, j, t2, t3) rows for plotting."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "t2", "t3"])
            for (i, j), x, y in zip(self.nodes, self.t2, self.t3):
                w.writerow([i, j, repr(float(x)), repr(float(y))])


def build_cross_section(spec: ShapeSpec, h: float) -> CrossSection:
    """Rasterize spec onto the grid (i*h, j*h).

    The grid is centered at the origin, preserving the discrete 4-fold
    symmetry of the disc.  Raises EmptyMask when no node is interior
    (thin ribbon bands degenerate this way as eps_r approaches h).
    """
    if not h > 0:
        raise InvalidSpec(f"grid spacing must be positive, got {h}")
    validate_spec(spec)
    pred, (xmin, ymin, xmax, ymax) = _membership(spec)
    imin, imax = math.floor(xmin / h) - 1, math.ceil(xmax / h) + 1
    jmin, jmax = math.floor(ymin / h) - 1, math.ceil(ymax / h) + 1
    nodes = []
    for i in range(imin, imax + 1):
        x = i * h
        for j in range(jmin, jmax + 1):
            if pred(x, j * h):
                nodes.append((i, j))
    if not nodes:
        raise EmptyMask(f"no interior nodes for {spec!r} at h={h}")
    index = {ij: r for r, ij in enumerate(nodes)}
    t2 = np.array([i * h for (i, j) in nodes])
    t3 = np.array([j * h for (i, j) in nodes])
    d = float(np.max(np.hypot(t2, t3)))
    return CrossSection(spec=spec, h=h, bbox=((xmin, ymin), (xmax, ymax)),
                        nodes=tuple(nodes), index=index, t2=t2, t3=t3, d=d)


def radius(cs: CrossSection) -> float:
    """Max node distance from the origin (enters the gamma constant)."""
    if cs.n == 0:
        raise EmptyMask("empty cross section")
    return cs.d
