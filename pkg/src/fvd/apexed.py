"""Farthest neighbors, transition edges, and apexed-triangle covering sets.

A covering set holds, per site, the shortest-path-map triangles over the
boundary chain that the site can serve; inside a triangle the geodesic
distance to its definer is ``weight + |x - apex|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DisconnectedRun, FvdError, GeneralPositionViolated
from .geodesic import ROOT, anchors_along_edge, shortest_path_tree
from .kernel import SimplePolygon, cross3, dist, lerp

NEG_INF = -math.inf


@dataclass
class ApexedTriangle:
    id: int
    apex: tuple            # coordinates; always a polygon vertex (or a site vertex)
    apex_vid: int          # vertex index of the apex
    definer: int           # site ordinal
    weight: float          # geodesic distance apex -> definer
    edge_index: int        # polygon edge carrying the bottom side
    t0: float              # bottom sub-interval parameters on that edge
    t1: float
    b: tuple               # bottom corner at t0
    c: tuple               # bottom corner at t1

    def eval_g(self, x, eps):
        """Distance cone; -inf outside interior+open bottom (corners excluded)."""
        if not self.contains_official(x, eps):
            return NEG_INF
        return self.weight + dist(x, self.apex)

    def eval_g_closed(self, x, eps_area):
        if not self.contains_closed(x, eps_area):
            return NEG_INF
        return self.weight + dist(x, self.apex)

    def cone(self, x):
        return self.weight + dist(x, self.apex)

    def corners(self):
        return self.apex, self.b, self.c

    def contains_closed(self, x, eps_area=0.0):
        d1 = cross3(self.apex, self.b, x)
        d2 = cross3(self.b, self.c, x)
        d3 = cross3(self.c, self.apex, x)
        neg = (d1 < -eps_area) or (d2 < -eps_area) or (d3 < -eps_area)
        pos = (d1 > eps_area) or (d2 > eps_area) or (d3 > eps_area)
        return not (neg and pos)

    def contains_official(self, x, eps):
        """Interior plus bottom side, excluding the bottom corners."""
        if dist(x, self.b) <= eps or dist(x, self.c) <= eps:
            return False
        ea = eps * max(dist(self.apex, self.b), dist(self.apex, self.c), eps)
        if not self.contains_closed(x, ea):
            return False
        # exclude the two apex sides
        from .kernel import seg_point_dist
        for p, q in ((self.apex, self.b), (self.apex, self.c)):
            d, t = seg_point_dist(p, q, x)
            if d <= eps and t < 1.0:
                db, _ = seg_point_dist(self.b, self.c, x)
                if db > eps:
                    return False
        return True

    def bottom_interval(self):
        return self.edge_index, self.t0, self.t1


@dataclass
class FarthestNeighbors:
    sites: list            # site points
    site_vids: list        # vertex index per site
    neighbors: list        # per vertex: site ordinal of its farthest site
    dist_max: list         # per vertex: distance to that site
    gap: list              # per vertex: max - runner-up
    spts: dict             # site ordinal -> ShortestPathTree


@dataclass
class CoveringSet:
    poly: SimplePolygon
    sites: list
    triangles: list = field(default_factory=list)
    by_definer: dict = field(default_factory=dict)
    edge_pieces: dict = field(default_factory=dict)  # edge -> [(t0,t1,tri_id)]

    def add(self, tri: ApexedTriangle):
        tri.id = len(self.triangles)
        self.triangles.append(tri)
        self.by_definer.setdefault(tri.definer, []).append(tri)
        self.edge_pieces.setdefault(tri.edge_index, []).append(
            (tri.t0, tri.t1, tri.id))
        return tri

    def finish(self):
        for lst in self.edge_pieces.values():
            lst.sort()
        return self

    def pieces_on_edge(self, edge_index, definer=None):
        out = self.edge_pieces.get(edge_index, [])
        if definer is None:
            return out
        return [p for p in out if self.triangles[p[2]].definer == definer]

    def max_g_at(self, x, eps_area=0.0):
        """Best (value, triangle) over triangles whose closure contains x."""
        best, best_tri = NEG_INF, None
        for tr in self.triangles:
            v = tr.eval_g_closed(x, eps_area)
            if v > best:
                best, best_tri = v, tr
        return best, best_tri


def dstar_weight_bound(poly: SimplePolygon):
    """Safe upper bound on the geodesic diameter used by the weighted form."""
    return 2.0 * poly.perimeter


def site_vertex_ids(poly: SimplePolygon, sites):
    ids = []
    for s in sites:
        found = -1
        for i, v in enumerate(poly.vertices):
            if dist(v, s) <= poly.eps:
                found = i
                break
        if found < 0:
            raise FvdError(f"site {s} is not a polygon vertex; promote it first")
        ids.append(found)
    return ids


def farthest_neighbors(poly: SimplePolygon, sites, eps_tie=None,
                       check_ties=True) -> FarthestNeighbors:
    """S-farthest neighbor of every vertex via one shortest-path tree per site.

    The weighted formulation d*(p,q) = d(p,q) + w(p) + w(q) with w = D_P on
    sites reduces to this argmax; D_P is available as dstar_weight_bound().
    """
    eps_tie = 1e-7 * poly.scale if eps_tie is None else eps_tie
    vids = site_vertex_ids(poly, sites)
    spts = {}
    for k, s in enumerate(sites):
        spts[k] = shortest_path_tree(poly, (float(s[0]), float(s[1])))
    n = poly.n
    neighbors, dmax, gaps = [], [], []
    for v in range(n):
        best, second, arg = -1.0, -1.0, -1
        for k in range(len(sites)):
            d = spts[k].distance[v]
            if d > best:
                second = best
                best, arg = d, k
            elif d > second:
                second = d
        if check_ties and v not in vids and len(sites) > 1 and \
                best - second < eps_tie:
            ties = [k for k in range(len(sites))
                    if best - spts[k].distance[v] < eps_tie]
            raise GeneralPositionViolated(
                f"vertex {v} has {len(ties)} farthest sites within tolerance",
                vertex=v, sites=ties)
        neighbors.append(arg)
        dmax.append(best)
        gaps.append(best - second)
    return FarthestNeighbors(list(sites), vids, neighbors, dmax, gaps, spts)


@dataclass
class TransitionEdge:
    edge_index: int
    site_interval: list    # site ordinals from N(v_i) to N(v_{i+1}) clockwise
    sweep_order: list      # counterclockwise: s_1 = N(u) ... s_l = N(v)


def transition_edges(poly: SimplePolygon, fn: FarthestNeighbors):
    """Edges whose endpoint labels differ, with their candidate site interval."""
    out = []
    site_keys = [poly.vertex_bp(vid).key() for vid in fn.site_vids]
    n = poly.n
    for i in range(n):
        a = fn.neighbors[i]
        b = fn.neighbors[(i + 1) % n]
        if a == b:
            continue
        ka, kb = site_keys[a], site_keys[b]
        span = (kb - ka) % n
        inside = []
        for k in range(len(fn.sites)):
            if k in (a, b):
                continue
            pos = (site_keys[k] - ka) % n
            if 0.0 < pos < span:
                inside.append((pos, k))
        inside.sort()
        interval = [a] + [k for _, k in inside] + [b]
        out.append(TransitionEdge(i, interval, interval[::-1]))
    return out


def _chain_edges(poly, k0, k1, full_loop=False):
    """Edges (edge_index, t_lo, t_hi) on the clockwise chain key k0 -> k1."""
    n = poly.n
    if full_loop:
        return [(e, 0.0, 1.0) for e in range(n)]
    span = (k1 - k0) % n
    if span <= 0.0:
        span += n if full_loop else 0.0
    out = []
    e = int(math.floor(k0)) % n
    lo = k0 - math.floor(k0)
    covered = 0.0
    while covered < span - 1e-12:
        hi = min(1.0, lo + (span - covered))
        out.append((e, lo, hi))
        covered += hi - lo
        e = (e + 1) % n
        lo = 0.0
    return out


def _emit_chain_triangles(cov: CoveringSet, spt, site_ordinal, k0, k1,
                          full_loop=False, anchor_cache=None):
    poly = cov.poly
    for (e, lo, hi) in _chain_edges(poly, k0, k1, full_loop):
        key = (site_ordinal, e)
        if anchor_cache is not None and key in anchor_cache:
            pieces = anchor_cache[key]
        else:
            pieces = anchors_along_edge(spt, e)
            if anchor_cache is not None:
                anchor_cache[key] = pieces
        a, b = poly.edge(e)
        for (t0, t1, z) in pieces:
            u0, u1 = max(t0, lo), min(t1, hi)
            if u1 - u0 <= 1e-13:
                continue
            if z == ROOT:
                apex = spt.root
                vid = spt.root_vertex
                w = 0.0
            else:
                apex = poly.vertices[z]
                vid = z
                w = spt.distance[z]
            cov.add(ApexedTriangle(-1, apex, vid, site_ordinal, w,
                                   e, u0, u1, lerp(a, b, u0), lerp(a, b, u1)))


def build_apexed_triangles(poly: SimplePolygon, sites, fn=None,
                           eps_tie=None) -> CoveringSet:
    """Covering set over the service chains implied by the farthest neighbors."""
    if fn is None:
        fn = farthest_neighbors(poly, sites, eps_tie=eps_tie)
    cov = CoveringSet(poly, list(sites))
    n = poly.n
    m = len(sites)
    if m == 1:
        spt = fn.spts[0]
        _emit_chain_triangles(cov, spt, 0, 0.0, 0.0, full_loop=True)
        return cov.finish()

    # contiguous run of vertices per labeled site
    runs = {}
    for v in range(n):
        runs.setdefault(fn.neighbors[v], []).append(v)
    for k, vs in runs.items():
        vset = set(vs)
        starts = [v for v in vs if (v - 1) % n not in vset]
        if len(starts) != 1:
            raise FvdError(
                f"vertices labeled by site {k} are not contiguous on the boundary")
        first = starts[0]
        last = first
        while (last + 1) % n in vset:
            last = (last + 1) % n
        # chain spans the two flanking transition edges as well
        k0 = float((first - 1) % n)
        k1 = float((last + 1) % n)
        _emit_chain_triangles(cov, fn.spts[k], k, k0, k1,
                              full_loop=len(vs) + 1 >= n)

    # sites with no labeled vertex serve at most one transition edge
    labeled = set(runs.keys())
    for te in transition_edges(poly, fn):
        for k in te.site_interval[1:-1]:
            if k in labeled:
                continue
            spt = fn.spts[k]
            _emit_chain_triangles(cov, spt, k, float(te.edge_index),
                                  float((te.edge_index + 1) % n))
    return cov.finish()


def build_covering_from_intervals(poly: SimplePolygon, sites, intervals):
    """Covering set for given boundary ownership intervals (site, k0, k1).

    Used after the boundary diagram is known and its breakpoints have been
    promoted to polygon vertices: every edge then has a single owner, so the
    per-site chains are exactly the given intervals and the emitted bottoms
    tile the boundary.
    """
    cov = CoveringSet(poly, list(sites))
    spts = {}
    for (k, k0, k1) in intervals:
        if k not in spts:
            s = sites[k]
            spts[k] = shortest_path_tree(poly, (float(s[0]), float(s[1])))
        _emit_chain_triangles(cov, spts[k], k, k0, k1,
                              full_loop=(len(intervals) == 1))
    cov.finish()
    cov.spts = spts
    return cov


def sort_by_definer(triangles):
    """Chain triangles of one definer along the boundary by shared corners.

    Linear-time linking via a hash on the shared bottom corners; raises
    DisconnectedRun when the chain does not close up.
    """
    if not triangles:
        return []
    definers = {t.definer for t in triangles}
    if len(definers) != 1:
        raise FvdError("sort_by_definer expects a single definer")
    if len(triangles) == 1:
        return list(triangles)
    scale = max(max(abs(t.b[0]), abs(t.b[1]), abs(t.c[0]), abs(t.c[1]))
                for t in triangles) or 1.0
    q = 1e-9 * scale

    def key(p):
        return (round(p[0] / q), round(p[1] / q))

    by_left = {}
    by_right = {}
    for t in triangles:
        by_left[key(t.b)] = t
        by_right[key(t.c)] = t
    start = None
    for t in triangles:
        if key(t.b) not in by_right:
            start = t
            break
    if start is None:
        start = triangles[0]  # chain closes into a loop (full boundary)
    out = [start]
    seen = {id(start)}
    cur = start
    while len(out) < len(triangles):
        nxt = by_left.get(key(cur.c))
        if nxt is None or id(nxt) in seen:
            raise DisconnectedRun(
                f"triangle run for definer {cur.definer} does not chain")
        out.append(nxt)
        seen.add(id(nxt))
        cur = nxt
    return out
