"""Simple-polygon substrate: predicates, triangulation, chords, boundary order.

Vertices are stored in clockwise order (negative shoelace area, y-up).
All coordinate comparisons use a single scale-relative tolerance
``eps = 1e-9 * bbox_diagonal``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

from .errors import (ChordOutsidePolygon, CoincidentPoints, DegenerateInput,
                     PointOutsidePolygon)

LEFT = 1
RIGHT = -1
COLLINEAR = 0

EPS_REL = 1e-9


def sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def cross(a, b):
    return a[0] * b[1] - a[1] * b[0]


def dot(a, b):
    return a[0] * b[0] + a[1] * b[1]


def dist(a, b):
    return math.hypot(a[0] - b[0], a[1] - b[1])


def norm(a):
    return math.hypot(a[0], a[1])


def lerp(a, b, t):
    return (a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)


def cross3(p, q, r):
    """Signed double area of triangle pqr ( >0 left turn, <0 right turn)."""
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def orientation(p, q, r, eps_area=0.0):
    """Classify r against the directed line p->q; |area| <= eps_area is COLLINEAR."""
    a = cross3(p, q, r)
    if a > eps_area:
        return LEFT
    if a < -eps_area:
        return RIGHT
    return COLLINEAR


def seg_point_dist(a, b, p):
    """Distance from p to segment ab and the clamped parameter t in [0,1]."""
    d = sub(b, a)
    L2 = dot(d, d)
    if L2 <= 0.0:
        return dist(a, p), 0.0
    t = dot(sub(p, a), d) / L2
    t = 0.0 if t < 0.0 else (1.0 if t > 1.0 else t)
    return dist(lerp(a, b, t), p), t


def segments_cross(p1, p2, q1, q2, eps_area):
    """True iff the open segments properly cross (no touching)."""
    d1 = orientation(q1, q2, p1, eps_area)
    d2 = orientation(q1, q2, p2, eps_area)
    d3 = orientation(p1, p2, q1, eps_area)
    d4 = orientation(p1, p2, q2, eps_area)
    return d1 * d2 < 0 and d3 * d4 < 0


def seg_seg_intersection(p1, p2, q1, q2):
    """Intersection parameter on p1p2 of the supporting lines, or None if parallel."""
    r = sub(p2, p1)
    s = sub(q2, q1)
    den = cross(r, s)
    if den == 0.0:
        return None
    t = cross(sub(q1, p1), s) / den
    u = cross(sub(q1, p1), r) / den
    return t, u


@dataclass(frozen=True)
class BoundaryPoint:
    """Point on the polygon boundary addressed as (edge_index, t), t in [0,1)."""
    edge_index: int
    t: float
    xy: tuple

    def key(self):
        return self.edge_index + self.t


@dataclass(frozen=True)
class Chord:
    a: object  # BoundaryPoint or raw point
    b: object
    interior: bool = True

    def endpoints_xy(self):
        pa = self.a.xy if isinstance(self.a, BoundaryPoint) else self.a
        pb = self.b.xy if isinstance(self.b, BoundaryPoint) else self.b
        return pa, pb


class SimplePolygon:
    """Clockwise vertex ring with boundary-point addressing.

    Input in either orientation is normalized on load; collinear triples
    and duplicate points are merged.
    """

    def __init__(self, vertices, validate=True, normalize=True):
        pts = [(float(x), float(y)) for x, y in vertices]
        if normalize:
            pts = _normalize_ring(pts)
        if len(pts) < 3:
            raise DegenerateInput("polygon needs at least 3 vertices")
        self.vertices = pts
        self.n = len(pts)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        self.bbox = (min(xs), min(ys), max(xs), max(ys))
        self.scale = math.hypot(self.bbox[2] - self.bbox[0],
                                self.bbox[3] - self.bbox[1])
        if self.scale <= 0:
            raise DegenerateInput("degenerate (zero-extent) polygon")
        self.eps = EPS_REL * self.scale
        self.eps_area = self.eps * self.scale
        self.area = -_shoelace(pts)  # positive for our clockwise storage
        if self.area <= self.eps_area:
            raise DegenerateInput("polygon area vanishes after normalization")
        if validate:
            self._check_simple()
        # convex[i] is True when interior angle at vertex i is < pi
        self.convex = []
        for i in range(self.n):
            p = pts[i - 1]
            q = pts[i]
            r = pts[(i + 1) % self.n]
            self.convex.append(cross3(p, q, r) < 0.0)
        self.reflex_count = self.n - sum(self.convex)
        self.convex_count = self.n - self.reflex_count
        self.edge_lengths = [dist(pts[i], pts[(i + 1) % self.n])
                             for i in range(self.n)]
        self.perimeter = sum(self.edge_lengths)

    # -- basic addressing -------------------------------------------------
    def vertex(self, i):
        return self.vertices[i % self.n]

    def edge(self, i):
        return self.vertices[i % self.n], self.vertices[(i + 1) % self.n]

    def boundary_point(self, edge_index, t):
        """Canonical BoundaryPoint; t=1 normalizes to the next edge start."""
        edge_index %= self.n
        if t >= 1.0 - 1e-15:
            edge_index = (edge_index + 1) % self.n
            t = 0.0
        if t < 0.0:
            t = 0.0
        a, b = self.edge(edge_index)
        return BoundaryPoint(edge_index, t, lerp(a, b, t))

    def vertex_bp(self, i):
        i %= self.n
        return BoundaryPoint(i, 0.0, self.vertices[i])

    def bp_of_point(self, p, eps=None):
        """Snap p to the boundary; None if farther than eps from every edge."""
        eps = self.eps if eps is None else eps
        best = None
        for i in range(self.n):
            a, b = self.edge(i)
            d, t = seg_point_dist(a, b, p)
            if d <= eps and (best is None or d < best[0]):
                best = (d, i, t)
        if best is None:
            return None
        return self.boundary_point(best[1], best[2])

    # -- predicates --------------------------------------------------------
    def point_locate(self, p):
        """Return ('interior', None) / ('boundary', BoundaryPoint) / ('exterior', None)."""
        bp = self.bp_of_point(p)
        if bp is not None:
            return "boundary", bp
        if self._crossing_number_inside(p):
            return "interior", None
        return "exterior", None

    def contains(self, p):
        kind, _ = self.point_locate(p)
        return kind != "exterior"

    def _crossing_number_inside(self, p):
        x, y = p
        inside = False
        vs = self.vertices
        for i in range(self.n):
            x1, y1 = vs[i]
            x2, y2 = vs[(i + 1) % self.n]
            if (y1 > y) != (y2 > y):
                xi = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if xi > x:
                    inside = not inside
        return inside

    def segment_inside(self, p, q, eps=None):
        """True iff segment pq lies in the closed polygon.

        Conservative at vertices: a segment passing within eps of a vertex
        strictly between its endpoints is rejected.
        """
        eps = self.eps if eps is None else eps
        ea = self.eps_area
        L = dist(p, q)
        if L <= eps:
            return self.contains(p)
        for i in range(self.n):
            a, b = self.edge(i)
            if segments_cross(p, q, a, b, ea):
                return False
        for v in self.vertices:
            if dist(v, p) <= eps or dist(v, q) <= eps:
                continue
            d, t = seg_point_dist(p, q, v)
            if d <= eps and eps / L < t < 1.0 - eps / L:
                return False
        mid = lerp(p, q, 0.5)
        kind, _ = self.point_locate(mid)
        return kind != "exterior"

    # -- boundary order ----------------------------------------------------
    def boundary_order(self, x, y, z):
        """True iff y lies on the clockwise subchain from x to z."""
        for u, v in ((x, y), (y, z), (x, z)):
            if dist(u.xy, v.xy) <= self.eps:
                raise CoincidentPoints("boundary points coincide")
        kx, ky, kz = x.key(), y.key(), z.key()
        span = (kz - kx) % self.n
        pos = (ky - kx) % self.n
        return 0.0 < pos < span

    def chain_vertex_indices(self, a: BoundaryPoint, b: BoundaryPoint):
        """Vertex indices on the clockwise chain from a to b (exclusive of a, b)."""
        out = []
        i = a.edge_index + 1 if a.t > 0.0 else a.edge_index + 1
        ka, kb = a.key(), b.key()
        span = (kb - ka) % self.n
        if span == 0.0:
            return out
        k = 0
        while k < self.n:
            idx = (a.edge_index + 1 + k) % self.n
            pos = (idx - ka) % self.n
            if pos >= span or pos == 0.0:
                break
            out.append(idx)
            k += 1
        return out

    # -- triangulation -----------------------------------------------------
    @cached_property
    def triangulation(self):
        return Triangulation(self)

    # -- surgery -------------------------------------------------------------
    def split_by_chord(self, chord: Chord):
        """Split along a boundary-to-boundary chord into two clockwise polygons."""
        a = chord.a if isinstance(chord.a, BoundaryPoint) else self.bp_of_point(chord.a)
        b = chord.b if isinstance(chord.b, BoundaryPoint) else self.bp_of_point(chord.b)
        if a is None or b is None:
            raise ChordOutsidePolygon("chord endpoints must lie on the boundary")
        pa, pb = a.xy, b.xy
        if dist(pa, pb) <= self.eps:
            raise ChordOutsidePolygon("chord endpoints coincide")
        if not self.segment_inside(pa, pb):
            raise ChordOutsidePolygon("open chord leaves the polygon")
        side1 = [pa] + [self.vertices[i] for i in self.chain_vertex_indices(a, b)] + [pb]
        side2 = [pb] + [self.vertices[i] for i in self.chain_vertex_indices(b, a)] + [pa]
        p1 = SimplePolygon(side1, validate=False, normalize=True)
        p2 = SimplePolygon(side2, validate=False, normalize=True)
        return p1, p2

    # -- internals -----------------------------------------------------------
    def _check_simple(self):
        try:
            from shapely.geometry import Polygon as ShPolygon
            if not ShPolygon(self.vertices).is_valid:
                raise DegenerateInput("polygon boundary is not simple")
        except ImportError:  # pragma: no cover
            for i in range(self.n):
                a, b = self.edge(i)
                for j in range(i + 1, self.n):
                    if j == i or (j + 1) % self.n == i or (i + 1) % self.n == j:
                        continue
                    c, d = self.edge(j)
                    if segments_cross(a, b, c, d, self.eps_area):
                        raise DegenerateInput("polygon boundary self-intersects")


def _shoelace(pts):
    s = 0.0
    for i in range(len(pts)):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % len(pts)]
        s += x1 * y2 - x2 * y1
    return 0.5 * s


def _normalize_ring(pts):
    # drop exact/near duplicate neighbours first
    if not pts:
        return pts
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    scale = math.hypot(max(xs) - min(xs), max(ys) - min(ys))
    eps = EPS_REL * scale if scale > 0 else 0.0
    out = []
    for p in pts:
        if not out or dist(out[-1], p) > eps:
            out.append(p)
    if len(out) > 1 and dist(out[0], out[-1]) <= eps:
        out.pop()
    if len(out) < 3:
        return out
    if _shoelace(out) > 0.0:  # ccw input -> store clockwise
        out.reverse()
    # merge collinear triples
    eps_area = eps * scale
    changed = True
    while changed and len(out) > 3:
        changed = False
        for i in range(len(out)):
            p = out[i - 1]
            q = out[i]
            r = out[(i + 1) % len(out)]
            if abs(cross3(p, q, r)) <= eps_area:
                del out[i]
                changed = True
                break
    return out


class Triangulation:
    """Ear-clipping triangulation with a uniform grid over reflex vertices.

    Triangles are stored as ccw index triples; the dual adjacency over
    shared diagonals forms a tree.
    """

    def __init__(self, poly: SimplePolygon):
        self.poly = poly
        self.triangles = _ear_clip(poly)
        if len(self.triangles) != poly.n - 2:
            raise DegenerateInput("triangulation produced wrong triangle count")
        area = sum(abs(cross3(poly.vertices[i], poly.vertices[j],
                              poly.vertices[k])) * 0.5
                   for i, j, k in self.triangles)
        if abs(area - poly.area) > 1e-7 * max(poly.area, poly.scale ** 2):
            raise DegenerateInput("triangulation area mismatch")
        self._build_dual()
        self._tri_index = None

    def _build_dual(self):
        edge_map = {}
        self.adj = [[] for _ in self.triangles]
        for ti, (i, j, k) in enumerate(self.triangles):
            for (u, v) in ((i, j), (j, k), (k, i)):
                key = (u, v) if u < v else (v, u)
                other = edge_map.pop(key, None)
                if other is None:
                    edge_map[key] = ti
                else:
                    self.adj[ti].append((other, key))
                    self.adj[other].append((ti, key))
        # BFS orientation of the dual tree from triangle 0
        self.dual_parent = [-1] * len(self.triangles)
        self.dual_parent_edge = [None] * len(self.triangles)
        self.dual_depth = [0] * len(self.triangles)
        order = [0]
        seen = [False] * len(self.triangles)
        seen[0] = True
        qi = 0
        while qi < len(order):
            t = order[qi]
            qi += 1
            for (o, key) in self.adj[t]:
                if not seen[o]:
                    seen[o] = True
                    self.dual_parent[o] = t
                    self.dual_parent_edge[o] = key
                    self.dual_depth[o] = self.dual_depth[t] + 1
                    order.append(o)
        if not all(seen):
            raise DegenerateInput("triangulation dual is disconnected")
        self.dual_order = order

    def dual_edge_count(self):
        return sum(len(a) for a in self.adj) // 2

    def locate(self, p, eps=None):
        """Index of a triangle whose closure contains p, or None."""
        poly = self.poly
        eps = poly.eps if eps is None else eps
        if self._tri_index is None:
            from shapely.geometry import Polygon as ShPolygon
            from shapely import STRtree
            geoms = [ShPolygon([poly.vertices[i], poly.vertices[j],
                                poly.vertices[k]])
                     for i, j, k in self.triangles]
            self._tri_index = (STRtree(geoms), geoms)
        from shapely.geometry import Point as ShPoint
        tree, geoms = self._tri_index
        cands = tree.query(ShPoint(p).buffer(max(eps, 1e-300)))
        best = None
        for ti in cands:
            if _point_in_tri(p, *[poly.vertices[v] for v in self.triangles[ti]],
                             eps_area=poly.eps_area):
                return int(ti)
            d = geoms[ti].exterior.distance(ShPoint(p))
            if d <= eps and (best is None or d < best[0]):
                best = (d, int(ti))
        return best[1] if best else None

    def sleeve(self, t_from, t_to):
        """Diagonals crossed on the dual path t_from -> t_to."""
        return self.sleeve_with_path(t_from, t_to)[0]

    def sleeve_with_path(self, t_from, t_to):
        """(crossed diagonals, triangle id path) along the dual tree."""
        if t_from == t_to:
            return [], [t_from]
        pa, pe, dep = self.dual_parent, self.dual_parent_edge, self.dual_depth
        left, right = [], []
        lpath, rpath = [t_from], [t_to]
        a, b = t_from, t_to
        while dep[a] > dep[b]:
            left.append(pe[a])
            a = pa[a]
            lpath.append(a)
        while dep[b] > dep[a]:
            right.append(pe[b])
            b = pa[b]
            rpath.append(b)
        while a != b:
            left.append(pe[a])
            right.append(pe[b])
            a = pa[a]
            b = pa[b]
            lpath.append(a)
            rpath.append(b)
        rpath.pop()
        return left + right[::-1], lpath + rpath[::-1]

    def oriented_diagonal(self, u, v, far_tri):
        """Order (left, right) of a diagonal as seen from the near side.

        Uses the ccw winding of the far triangle: if (a, b) is a ccw edge of
        the far triangle, an observer on the other side of it sees a on the
        left.
        """
        t = self.triangles[far_tri]
        for i in range(3):
            p, q = t[i], t[(i + 1) % 3]
            if (p, q) == (u, v):
                return u, v
            if (p, q) == (v, u):
                return v, u
        raise DegenerateInput("diagonal is not an edge of the far triangle")


def _point_in_tri(p, a, b, c, eps_area=0.0):
    d1 = cross3(a, b, p)
    d2 = cross3(b, c, p)
    d3 = cross3(c, a, p)
    has_neg = (d1 < -eps_area) or (d2 < -eps_area) or (d3 < -eps_area)
    has_pos = (d1 > eps_area) or (d2 > eps_area) or (d3 > eps_area)
    return not (has_neg and has_pos)


def _ear_clip(poly: SimplePolygon):
    """Ear clipping on the ccw ring, grid-indexed reflex tests."""
    n = poly.n
    if n == 3:
        return [(2, 1, 0)]
    pts = poly.vertices
    ring = list(range(n - 1, -1, -1))  # ccw order of original indices
    pos = {v: i for i, v in enumerate(ring)}
    nxt = {ring[i]: ring[(i + 1) % n] for i in range(n)}
    prv = {ring[i]: ring[(i - 1) % n] for i in range(n)}
    eps_area = poly.eps_area

    def is_convex(v):
        return cross3(pts[prv[v]], pts[v], pts[nxt[v]]) > eps_area

    reflex = {v for v in ring if cross3(pts[prv[v]], pts[v], pts[nxt[v]]) <= eps_area}

    # uniform grid over reflex vertices
    gx0, gy0, gx1, gy1 = poly.bbox
    gn = max(1, int(math.sqrt(max(1, len(reflex)))))
    cw = max((gx1 - gx0) / gn, poly.eps)
    ch = max((gy1 - gy0) / gn, poly.eps)

    def cell_of(p):
        cx = min(gn - 1, max(0, int((p[0] - gx0) / cw)))
        cy = min(gn - 1, max(0, int((p[1] - gy0) / ch)))
        return cx, cy

    grid = {}
    for v in reflex:
        grid.setdefault(cell_of(pts[v]), set()).add(v)

    def grid_remove(v):
        c = cell_of(pts[v])
        s = grid.get(c)
        if s is not None:
            s.discard(v)

    def ear_ok(v):
        a, b, c = pts[prv[v]], pts[v], pts[nxt[v]]
        if cross3(a, b, c) <= eps_area:
            return False
        x0 = min(a[0], b[0], c[0])
        x1 = max(a[0], b[0], c[0])
        y0 = min(a[1], b[1], c[1])
        y1 = max(a[1], b[1], c[1])
        cx0, cy0 = cell_of((x0, y0))
        cx1, cy1 = cell_of((x1, y1))
        for cxx in range(cx0, cx1 + 1):
            for cyy in range(cy0, cy1 + 1):
                for r in grid.get((cxx, cyy), ()):
                    if r in (prv[v], v, nxt[v]):
                        continue
                    if _point_in_tri(pts[r], a, b, c, eps_area=-0.0):
                        return False
        return True

    tris = []
    remaining = n
    v = ring[0]
    guard = 0
    while remaining > 3:
        guard += 1
        if guard > 4 * n * n:
            raise DegenerateInput("ear clipping failed to converge")
        if ear_ok(v):
            tris.append((nxt[v], v, prv[v]))  # ccw triple
            u, w = prv[v], nxt[v]
            grid_remove(v)
            nxt[u], prv[w] = w, u
            remaining -= 1
            for z in (u, w):
                if z in reflex and is_convex(z):
                    reflex.discard(z)
                    grid_remove(z)
            v = w
        else:
            v = nxt[v]
    a = v
    tris.append((nxt[a], a, prv[a]))
    # re-orient: we emitted (next, v, prev) around the ccw ring -> that is cw; flip
    return [(c, b, a) for (a, b, c) in tris]
