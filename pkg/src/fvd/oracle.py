"""Brute-force geodesic ground truth via visibility graphs.

Independent of the funnel/envelope pipeline: distances come from Dijkstra
over the mutual-visibility graph of polygon vertices and sites, extended to
query points by `min over visible graph nodes of (node_distance + |node-x|)`.
Visibility is conservative at vertices (a sight line grazing a third vertex
is rejected); exactness is preserved because every vertex is itself a graph
node.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit, prange
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as _dijkstra

from .errors import PointOutsidePolygon, ResolutionMiss
from .kernel import SimplePolygon, dist


@njit(cache=True)
def _inside_or_on(px, py, ex0, ey0, ex1, ey1, eps):
    inside = False
    for i in range(ex0.shape[0]):
        x1, y1, x2, y2 = ex0[i], ey0[i], ex1[i], ey1[i]
        if (min(x1, x2) - eps) <= px <= (max(x1, x2) + eps) and \
                (min(y1, y2) - eps) <= py <= (max(y1, y2) + eps):
            dx, dy = x2 - x1, y2 - y1
            L2 = dx * dx + dy * dy
            if L2 > 0.0:
                t = ((px - x1) * dx + (py - y1) * dy) / L2
                if t < 0.0:
                    t = 0.0
                elif t > 1.0:
                    t = 1.0
                qx, qy = x1 + t * dx, y1 + t * dy
                if (px - qx) ** 2 + (py - qy) ** 2 <= eps * eps:
                    return True
        if (y1 > py) != (y2 > py):
            xi = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            if xi > px:
                inside = not inside
    return inside


@njit(cache=True)
def _segment_clear(ax, ay, bx, by, ex0, ey0, ex1, ey1, vx, vy, eps):
    """Open segment ab crosses no edge properly and grazes no third vertex.

    Orientation signs are taken relative to eps-scaled thresholds so that
    endpoints lying exactly on an edge do not flip sides by rounding noise;
    touching configurations fall through to the vertex and midpoint tests.
    """
    lox, hix = min(ax, bx) - eps, max(ax, bx) + eps
    loy, hiy = min(ay, by) - eps, max(ay, by) + eps
    rx, ry = bx - ax, by - ay
    L2 = rx * rx + ry * ry
    if L2 <= eps * eps:
        return True
    rlen = math.sqrt(L2)
    for i in range(ex0.shape[0]):
        x1, y1, x2, y2 = ex0[i], ey0[i], ex1[i], ey1[i]
        if max(x1, x2) < lox or min(x1, x2) > hix or \
                max(y1, y2) < loy or min(y1, y2) > hiy:
            continue
        elen = math.hypot(x2 - x1, y2 - y1)
        ea_e = eps * elen
        ea_r = eps * rlen
        d1 = (x2 - x1) * (ay - y1) - (y2 - y1) * (ax - x1)
        d2 = (x2 - x1) * (by - y1) - (y2 - y1) * (bx - x1)
        if not ((d1 > ea_e and d2 < -ea_e) or (d1 < -ea_e and d2 > ea_e)):
            continue
        d3 = rx * (y1 - ay) - ry * (x1 - ax)
        d4 = rx * (y2 - ay) - ry * (x2 - ax)
        if (d3 > ea_r and d4 < -ea_r) or (d3 < -ea_r and d4 > ea_r):
            return False
    # third vertex on the open segment
    for i in range(vx.shape[0]):
        px, py = vx[i], vy[i]
        if px < lox or px > hix or py < loy or py > hiy:
            continue
        if (px - ax) ** 2 + (py - ay) ** 2 <= eps * eps:
            continue
        if (px - bx) ** 2 + (py - by) ** 2 <= eps * eps:
            continue
        t = ((px - ax) * rx + (py - ay) * ry) / L2
        if t <= 0.0 or t >= 1.0:
            continue
        qx, qy = ax + t * rx, ay + t * ry
        if (px - qx) ** 2 + (py - qy) ** 2 <= eps * eps:
            return False
    mx, my = 0.5 * (ax + bx), 0.5 * (ay + by)
    return _inside_or_on(mx, my, ex0, ey0, ex1, ey1, eps)


@njit(cache=True, parallel=True)
def _vis_points_nodes(pts, nodes, ex0, ey0, ex1, ey1, vx, vy, eps):
    P = pts.shape[0]
    A = nodes.shape[0]
    out = np.zeros((P, A), dtype=np.bool_)
    for p in prange(P):
        for a in range(A):
            out[p, a] = _segment_clear(pts[p, 0], pts[p, 1],
                                       nodes[a, 0], nodes[a, 1],
                                       ex0, ey0, ex1, ey1, vx, vy, eps)
    return out


@njit(cache=True, parallel=True)
def _vis_node_pairs(nodes, ex0, ey0, ex1, ey1, vx, vy, eps):
    A = nodes.shape[0]
    out = np.zeros((A, A), dtype=np.bool_)
    for a in prange(A):
        for b in range(a + 1, A):
            ok = _segment_clear(nodes[a, 0], nodes[a, 1],
                                nodes[b, 0], nodes[b, 1],
                                ex0, ey0, ex1, ey1, vx, vy, eps)
            out[a, b] = ok
            out[b, a] = ok
    return out


@njit(cache=True, parallel=True)
def _site_distances(D, vis, dpa):
    """dists[p, s] = min over visible anchors a of D[s, a] + dpa[p, a]."""
    P, A = dpa.shape
    m = D.shape[0]
    out = np.full((P, m), np.inf)
    for p in prange(P):
        for a in range(A):
            if not vis[p, a]:
                continue
            dv = dpa[p, a]
            for s in range(m):
                c = D[s, a] + dv
                if c < out[p, s]:
                    out[p, s] = c
    return out


class Oracle:
    """Shared index for many farthest-site queries on one (polygon, sites)."""

    def __init__(self, poly: SimplePolygon, sites):
        self.poly = poly
        self.sites = [(float(s[0]), float(s[1])) for s in sites]
        pts = poly.vertices
        self.eps = poly.eps
        nodes = list(pts)
        site_node = []
        for s in self.sites:
            hit = -1
            for i, v in enumerate(pts):
                if dist(v, s) <= poly.eps:
                    hit = i
                    break
            if hit < 0:
                nodes.append(s)
                hit = len(nodes) - 1
            site_node.append(hit)
        self.nodes = np.asarray(nodes, dtype=np.float64)
        self.site_node = site_node
        ex = np.asarray([poly.edge(i) for i in range(poly.n)], dtype=np.float64)
        self.ex0 = np.ascontiguousarray(ex[:, 0, 0])
        self.ey0 = np.ascontiguousarray(ex[:, 0, 1])
        self.ex1 = np.ascontiguousarray(ex[:, 1, 0])
        self.ey1 = np.ascontiguousarray(ex[:, 1, 1])
        self.vx = np.asarray([p[0] for p in pts])
        self.vy = np.asarray([p[1] for p in pts])
        vis = _vis_node_pairs(self.nodes, self.ex0, self.ey0, self.ex1,
                              self.ey1, self.vx, self.vy, self.eps)
        a_idx, b_idx = np.nonzero(vis)
        w = np.hypot(self.nodes[a_idx, 0] - self.nodes[b_idx, 0],
                     self.nodes[a_idx, 1] - self.nodes[b_idx, 1])
        A = self.nodes.shape[0]
        graph = csr_matrix((w, (a_idx, b_idx)), shape=(A, A))
        self.graph = graph
        self.D = _dijkstra(graph, directed=False, indices=site_node)
        self._D_all = None

    # -- core queries -------------------------------------------------------
    def site_distances(self, points):
        """dists[p, s]: geodesic distance from each point to each site."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        vis = _vis_points_nodes(pts, self.nodes, self.ex0, self.ey0,
                                self.ex1, self.ey1, self.vx, self.vy,
                                self.eps)
        dpa = np.hypot(pts[:, 0:1] - self.nodes[None, :, 0],
                       pts[:, 1:2] - self.nodes[None, :, 1])
        return _site_distances(self.D, vis, dpa)

    def label_points(self, points):
        """(labels, max_distance, runner_up_gap) for each query point."""
        d = self.site_distances(points)
        order = np.argsort(-d, axis=1)
        labels = order[:, 0]
        dmax = d[np.arange(d.shape[0]), labels]
        if d.shape[1] > 1:
            second = d[np.arange(d.shape[0]), order[:, 1]]
        else:
            second = np.full(d.shape[0], -np.inf)
        return labels, dmax, dmax - second

    def farthest_site_at(self, x):
        labels, dmax, gap = self.label_points([x])
        return int(labels[0]), float(dmax[0]), float(gap[0])

    def point_distance(self, x, y):
        """Geodesic distance between two arbitrary points of the polygon."""
        for p in (x, y):
            kind, _ = self.poly.point_locate((float(p[0]), float(p[1])))
            if kind == "exterior":
                raise PointOutsidePolygon(f"{p} is outside the polygon")
        pts = np.asarray([x, y], dtype=np.float64)
        vis = _vis_points_nodes(pts, self.nodes, self.ex0, self.ey0,
                                self.ex1, self.ey1, self.vx, self.vy,
                                self.eps)
        if _segment_clear(pts[0, 0], pts[0, 1], pts[1, 0], pts[1, 1],
                          self.ex0, self.ey0, self.ex1, self.ey1,
                          self.vx, self.vy, self.eps):
            return float(np.hypot(*(pts[0] - pts[1])))
        if self._D_all is None:
            self._D_all = _dijkstra(self.graph, directed=False)
        da = np.hypot(pts[0, 0] - self.nodes[:, 0],
                      pts[0, 1] - self.nodes[:, 1])
        db = np.hypot(pts[1, 0] - self.nodes[:, 0],
                      pts[1, 1] - self.nodes[:, 1])
        da = np.where(vis[0], da, np.inf)
        db = np.where(vis[1], db, np.inf)
        return float(np.min(da[:, None] + self._D_all + db[None, :]))

    # -- boundary scans -------------------------------------------------------
    def edge_breakpoints(self, edge_index, resolution=2048, max_retries=4):
        """Label-change positions on one polygon edge.

        Scans at parameter resolution 1/`resolution` (adaptively skipping
        sub-intervals where one site certifiably dominates via the Lipschitz
        bound), bisects each change to 1e-12 of the parameter, and returns
        [(t, site_before, site_after)] ordered along the edge.
        """
        m = len(self.sites)
        if m == 1:
            return []
        a, b = self.poly.edge(edge_index)
        elen = dist(a, b)
        for attempt in range(max_retries + 1):
            res = resolution * (2 ** attempt)
            try:
                return self._scan_edge(edge_index, a, b, elen, res)
            except ResolutionMiss:
                if attempt == max_retries:
                    raise
        return []

    def _eval_at(self, ts, a, b):
        pts = [(a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t)
               for t in ts]
        return self.site_distances(pts)

    def _scan_edge(self, edge_index, a, b, elen, res):
        h = 1.0 / res
        u = edge_index
        w = (edge_index + 1) % self.poly.n
        m = len(self.sites)
        du = self.D[:, u].copy()
        dw = self.D[:, w].copy()
        # certified single-owner edge: the endpoint winner dominates everywhere
        cache = {0.0: du, 1.0: dw}

        def vals(t):
            if t not in cache:
                cache[t] = self._eval_at([t], a, b)[0]
            return cache[t]

        samples = [0.0, 1.0]
        stack = [(0.0, 1.0)]
        while stack:
            t0, t1 = stack.pop()
            v0, v1 = vals(t0), vals(t1)
            lead0 = int(np.argmax(v0))
            lead1 = int(np.argmax(v1))
            span = (t1 - t0) * elen
            if lead0 == lead1:
                # can any other site beat lead anywhere inside the bracket?
                s = lead0
                # worst case for the leader at interior point x:
                #   d_s(x) >= max(v0[s] - d(x,t0), v1[s] - d(x,t1))
                # best case for a rival r:
                #   d_r(x) <= min(v0[r] + d(x,t0), v1[r] + d(x,t1))
                # with d(x,t0) + d(x,t1) == span it suffices to check the
                # crossing of the two linear bounds.
                clear = True
                for r in range(m):
                    if r == s:
                        continue
                    # exists x in [0, span] with
                    #   min(v0[r]+x, v1[r]+span-x) >= max(v0[s]-x, v1[s]-(span-x))
                    if _bounds_may_cross(v0[s], v1[s], v0[r], v1[r], span):
                        clear = False
                        break
                if clear:
                    continue
            if t1 - t0 <= h:
                if lead0 != lead1:
                    samples.append(t0)
                    samples.append(t1)
                else:
                    tm = 0.5 * (t0 + t1)
                    vals(tm)
                    if int(np.argmax(vals(tm))) != lead0:
                        samples.extend([t0, tm, t1])
                    # below h and same labels: accept
                continue
            tm = 0.5 * (t0 + t1)
            vals(tm)
            stack.append((t0, tm))
            stack.append((tm, t1))
            samples.append(tm)

        ts = sorted(set(samples))
        labels = [int(np.argmax(vals(t))) for t in ts]
        out = []
        for i in range(len(ts) - 1):
            if labels[i] == labels[i + 1]:
                continue
            t_star, s_before, s_after = self._bisect(ts[i], ts[i + 1],
                                                     labels[i], labels[i + 1],
                                                     a, b)
            out.append((t_star, s_before, s_after))
        # two breakpoints hiding in one interval: refined label must match flanks
        for (t_star, s_before, s_after) in out:
            probe = min(1.0, t_star + 64 * 1e-12)
            lab = int(np.argmax(self._eval_at([probe], a, b)[0]))
            if lab not in (s_before, s_after):
                raise ResolutionMiss(
                    f"hidden cell near t={t_star} on edge {edge_index}")
        return out

    def _bisect(self, t0, t1, s0, s1, a, b):
        f0 = None
        for _ in range(80):
            if t1 - t0 <= 1e-12:
                break
            tm = 0.5 * (t0 + t1)
            v = self._eval_at([tm], a, b)[0]
            if v[s0] >= v[s1]:
                t0 = tm
            else:
                t1 = tm
        return 0.5 * (t0 + t1), s0, s1


def _bounds_may_cross(vs0, vs1, vr0, vr1, span):
    """Can rival r meet leader s inside a bracket, by 1-Lipschitz bounds?"""
    # leader lower bound: max(vs0 - x, vs1 - (span - x))
    # rival upper bound:  min(vr0 + x, vr1 + (span - x))
    # check max over x in [0, span] of (rival_up - leader_low) >= 0 at the
    # candidate extremes: interval ends and the two kink points.
    xs = [0.0, span]
    # kinks
    xs.append(0.5 * (span + vs0 - vs1))
    xs.append(0.5 * (span + vr1 - vr0))
    for x in xs:
        if x < 0.0 or x > span:
            continue
        leader = max(vs0 - x, vs1 - (span - x))
        rival = min(vr0 + x, vr1 + (span - x))
        if rival >= leader - 1e-12 * max(1.0, span):
            return True
    return False


# ---------------------------------------------------------------------------
# functional wrappers
# ---------------------------------------------------------------------------

_cache = {}


def _oracle_for(poly, sites):
    key = (id(poly), tuple(map(tuple, sites)))
    if key not in _cache:
        if len(_cache) > 8:
            _cache.clear()
        _cache[key] = Oracle(poly, sites)
    return _cache[key]


def visgraph_distance(poly, x, y):
    """Geodesic distance via visibility-graph Dijkstra."""
    return _oracle_for(poly, []).point_distance(x, y)


def farthest_site_at(poly, sites, x):
    """(site ordinal, distance, runner-up gap) at point x."""
    return _oracle_for(poly, sites).farthest_site_at(x)


def edge_breakpoints(poly, sites, edge_index):
    return _oracle_for(poly, sites).edge_breakpoints(edge_index)
