"""Convex lattice polygons whose boundary looks locally like a discrete half-space.

The construction walks along steps of every rational slope ``m/n`` in
``[0, 1]`` with ``n <= q``, mirrors the walk into all eight octants and takes
the convex hull.  All geometry is exact integer or rational arithmetic.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .toeplitz import IndexSet


def farey_slopes(q: int) -> list:
    """Reduced fractions ``m/n`` in ``[0, 1]`` with ``n <= q``, increasing."""
    if q < 1:
        raise InvalidInputError("q must be >= 1")
    return sorted({Fraction(m, n) for n in range(1, q + 1) for m in range(n + 1)})


@dataclass(frozen=True)
class LatticeWalk:
    vertices: tuple
    steps: tuple
    q: int

    @property
    def slopes(self):
        return tuple(Fraction(t[1], t[0]) for t in self.steps)


def build_walk(q: int) -> LatticeWalk:
    """Walk from the origin with steps ``s_k (1, lambda_k)``; ``s_k`` is the least
    integer ``>= q`` making ``s_k lambda_k`` integral."""
    steps = []
    for lam in farey_slopes(q):
        n = lam.denominator
        s = n * -(-q // n)
        steps.append((s, int(s * lam)))
    verts = [(0, 0)]
    for sx, sy in steps:
        x, y = verts[-1]
        verts.append((x + sx, y + sy))
    return LatticeWalk(tuple(verts), tuple(steps), q)


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> list:
    """Counterclockwise hull vertices (collinear points dropped), exact."""
    pts = sorted(set((int(x), int(y)) for x, y in points))
    if len(pts) < 3:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class LatticePolygon:
    vertices: tuple
    q: int | None = None

    def __post_init__(self):
        verts = tuple((int(x), int(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise InvalidInputError("a polygon needs at least three vertices")
        object.__setattr__(self, "vertices", verts)
        if not self.is_convex():
            raise InvalidInputError("vertices must form a strictly convex counterclockwise polygon")

    @property
    def edges(self):
        v = self.vertices
        return [(v[i], v[(i + 1) % len(v)]) for i in range(len(v))]

    def is_convex(self) -> bool:
        v, n = self.vertices, len(self.vertices)
        return all(_cross(v[i], v[(i + 1) % n], v[(i + 2) % n]) > 0 for i in range(n))

    def contains(self, p, strict=False) -> bool:
        for a, b in self.edges:
            c = _cross(a, b, p)
            if c < 0 or (strict and c == 0):
                return False
        return True

    def is_symmetric(self) -> bool:
        s = set(self.vertices)
        return ({(-x, y) for x, y in s} == s) and ({(x, -y) for x, y in s} == s)

    def edge_distance_sq(self, a, b, p=(0, 0)) -> Fraction:
        c = _cross(a, b, p)
        return Fraction(c * c, (b[0] - a[0]) ** 2 + (b[1] - a[1]) ** 2)

    def inradius(self) -> float:
        """Radius of the largest origin-centred disc inside the polygon."""
        if not self.contains((0, 0), strict=True):
            return 0.0
        return math.sqrt(min(self.edge_distance_sq(a, b) for a, b in self.edges))

    def edge_slopes(self):
        out = []
        for a, b in self.edges:
            dx, dy = b[0] - a[0], b[1] - a[1]
            out.append(None if dx == 0 else Fraction(dy, dx))
        return out

    def to_dict(self):
        return {"q": self.q, "vertices": [list(v) for v in self.vertices]}

    @classmethod
    def from_dict(cls, doc):
        return cls(tuple(tuple(v) for v in doc["vertices"]), doc.get("q"))

    @classmethod
    def from_file(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_file(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def completed_walk_points(w: LatticeWalk) -> list:
    """Translated walk, its anti-diagonal mirror, and all axis reflections."""
    xk, yk = w.vertices[-1]
    shift = -(xk + yk)
    hat = [(x, y + shift) for x, y in w.vertices]
    K = len(hat) - 1
    full = hat + [(-hat[2 * K - k][1], -hat[2 * K - k][0]) for k in range(K + 1, 2 * K + 1)]
    pts = set()
    for sx in (1, -1):
        for sy in (1, -1):
            pts.update((sx * x, sy * y) for x, y in full)
    return sorted(pts)


def complete_polygon(w: LatticeWalk) -> LatticePolygon:
    return LatticePolygon(tuple(convex_hull(completed_walk_points(w))), w.q)


def ks_polygon(q: int) -> LatticePolygon:
    return complete_polygon(build_walk(q))


# --- verification ------------------------------------------------------------

def _to_fraction(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(str(x))


def _ball_points(center, radius: Fraction):
    """Lattice points in the open ball of the given radius."""
    r2 = radius * radius
    reach = math.ceil(radius)
    cx, cy = center
    for dx in range(-reach, reach + 1):
        for dy in range(-reach, reach + 1):
            if dx == 0 and dy == 0:
                continue
            if dx * dx + dy * dy < r2:
                yield (cx + dx, cy + dy)


def _in_open_cone(d, u, v) -> bool:
    """``d = alpha u + beta v`` with ``alpha, beta > 0`` (``u``, ``v`` independent)."""
    det = u[0] * v[1] - u[1] * v[0]
    alpha = d[0] * v[1] - d[1] * v[0]
    beta = u[0] * d[1] - u[1] * d[0]
    if det < 0:
        alpha, beta = -alpha, -beta
    return alpha > 0 and beta > 0


@dataclass
class KSReport:
    cond_i: bool
    cond_ii: bool
    witnesses: list = field(default_factory=list)
    r: str = ""
    R: str = ""
    derivation: str = ("cond_i checked on the side cones at every vertex; edge and "
                       "interior points follow from the vertex and edge half-spaces")

    def to_dict(self):
        return {"cond_i": self.cond_i, "cond_ii": self.cond_ii, "r": self.r, "R": self.R,
                "witnesses": [{"vertex": list(v), "cone": c, "point": list(p)}
                              for v, c, p in self.witnesses],
                "derivation": self.derivation}


def verify_ks_conditions(poly: LatticePolygon, r, R) -> KSReport:
    """Check the local half-space condition (i) and the ball condition (ii).

    At each vertex ``x`` with neighbour directions ``u`` (previous) and ``v``
    (next), the two side cones are ``cone(u, -v)`` and ``cone(-u, v)``.  Each
    touches exactly one incident edge.  Condition (i) fails with a witness when
    one of them meets a lattice point closer than ``2r`` to ``x``.
    """
    r, R = _to_fraction(r), _to_fraction(R)
    if r <= 0 or R <= 0:
        raise InvalidInputError("r and R must be positive")
    v, n = poly.vertices, len(poly.vertices)
    witnesses = []
    for i, x in enumerate(v):
        prev, nxt = v[i - 1], v[(i + 1) % n]
        u = (prev[0] - x[0], prev[1] - x[1])
        w = (nxt[0] - x[0], nxt[1] - x[1])
        cones = {"+": (u, (-w[0], -w[1])), "-": ((-u[0], -u[1]), w)}
        for z in _ball_points(x, 2 * r):
            d = (z[0] - x[0], z[1] - x[1])
            for name, (c1, c2) in cones.items():
                if _in_open_cone(d, c1, c2):
                    witnesses.append((x, name, z))
    cond_ii = poly.contains((0, 0), strict=True) and all(
        poly.edge_distance_sq(a, b) >= R * R for a, b in poly.edges
    )
    return KSReport(not witnesses, cond_ii, witnesses, str(r), str(R))


def polygon_lattice_points(poly: LatticePolygon, scale: int = 1) -> IndexSet:
    """Lattice points in ``scale * poly`` (boundary included), lexicographic."""
    if scale < 1:
        raise InvalidInputError("scale must be >= 1")
    verts = [(scale * x, scale * y) for x, y in poly.vertices]
    xs, ys = [p[0] for p in verts], [p[1] for p in verts]
    gx, gy = np.meshgrid(np.arange(min(xs), max(xs) + 1), np.arange(min(ys), max(ys) + 1),
                         indexing="ij")
    inside = np.ones(gx.shape, dtype=bool)
    for i in range(len(verts)):
        a, b = verts[i], verts[(i + 1) % len(verts)]
        inside &= (b[0] - a[0]) * (gy - a[1]) - (b[1] - a[1]) * (gx - a[0]) >= 0
    pts = np.stack((gx[inside], gy[inside]), axis=1)
    return IndexSet(pts, 2, "polygon", label=scale)
