"""Geodesic shortest paths, shortest-path trees, hulls, and the center.

Paths are computed with the funnel (string-pulling) algorithm over the
polygon triangulation; shortest-path trees by recursive funnel splitting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import (CrossingPairs, DegenerateTie, FvdError,
                     PointOutsidePolygon)
from .kernel import (SimplePolygon, cross3, dist, lerp, seg_point_dist,
                     seg_seg_intersection, sub)

ROOT = -1


@dataclass
class GeodesicPath:
    """Taut path from x to y; interior waypoints are reflex polygon vertices."""
    waypoints: list
    length: float
    vertex_ids: list = field(default_factory=list)  # polygon ids of interior bends

    def reversed(self):
        return GeodesicPath(self.waypoints[::-1], self.length,
                            self.vertex_ids[::-1])


@dataclass
class ShortestPathTree:
    """Parent links over polygon vertices rooted at an arbitrary point."""
    poly: SimplePolygon
    root: tuple
    root_vertex: int  # vertex index if the root is a vertex, else -1
    parent: list      # parent[i] = vertex index, or ROOT
    distance: list

    def path_points(self, i):
        return [self.root] + [self.poly.vertices[v] for v in spt_path_ids(self, i)]


def spt_path_ids(spt: ShortestPathTree, i):
    """Vertex ids from the root to i, including i, excluding the root point."""
    out = []
    v = i
    while v != ROOT:
        out.append(v)
        v = spt.parent[v]
    out.reverse()
    return out


@dataclass
class GeodesicHull:
    """Closed hull boundary (clockwise) plus the cyclic site order on it."""
    boundary: list          # closed point list, last != first
    site_order: list        # site indices in clockwise order along the hull
    corner_sites: list      # subset of site_order that are hull corners
    degenerate: bool        # hull has empty interior (point or path)


def _locate_or_raise(poly, p):
    t = poly.triangulation.locate(p)
    if t is None:
        raise PointOutsidePolygon(f"point {p} is outside the polygon")
    return t


def _portals_for_sleeve(poly, diagonals, tripath):
    """Orient each crossed diagonal as (left_id, right_id) seen along travel."""
    tri = poly.triangulation
    return [tri.oriented_diagonal(u, v, tripath[i + 1])
            for i, (u, v) in enumerate(diagonals)]


def _string_pull(poly, x, y, portals):
    """Funnel algorithm; returns [(point, vertex_id)] from x to y."""
    pts = poly.vertices
    ea = poly.eps_area
    seq = [((pts[l], l), (pts[r], r)) for (l, r) in portals]
    seq.append(((y, ROOT), (y, ROOT)))
    path = [(x, ROOT)]
    apex, apex_id = x, ROOT
    left, left_id, left_i = x, ROOT, 0
    right, right_id, right_i = x, ROOT, 0
    i = 0
    guard = 0
    limit = 8 * (len(seq) + 2) ** 2 + 64
    while i < len(seq):
        guard += 1
        if guard > limit:
            raise FvdError("funnel failed to converge")
        (lp, lid), (rp, rid) = seq[i]
        # tighten the right boundary
        if right == apex or cross3(apex, right, rp) >= -ea:
            if left == apex or cross3(apex, left, rp) <= ea:
                right, right_id, right_i = rp, rid, i
            else:
                path.append((left, left_id))
                apex, apex_id = left, left_id
                i = left_i + 1
                left = right = apex
                left_id = right_id = apex_id
                left_i = right_i = i - 1
                continue
        # tighten the left boundary
        if left == apex or cross3(apex, left, lp) <= ea:
            if right == apex or cross3(apex, right, lp) >= -ea:
                left, left_id, left_i = lp, lid, i
            else:
                path.append((right, right_id))
                apex, apex_id = right, right_id
                i = right_i + 1
                left = right = apex
                left_id = right_id = apex_id
                left_i = right_i = i - 1
                continue
        i += 1
    path.append((y, ROOT))
    out = [path[0]]
    for p, pid in path[1:]:
        if dist(p, out[-1][0]) > poly.eps:
            out.append((p, pid))
        elif pid != ROOT and out[-1][1] == ROOT:
            out[-1] = (out[-1][0], pid)
    if len(out) == 1:
        out.append((y, ROOT))
    return out


def shortest_path(poly: SimplePolygon, x, y) -> GeodesicPath:
    """Geodesic path between two points of the closed polygon."""
    x = (float(x[0]), float(x[1]))
    y = (float(y[0]), float(y[1]))
    tx = _locate_or_raise(poly, x)
    ty = _locate_or_raise(poly, y)
    if tx == ty:
        return GeodesicPath([x, y], dist(x, y), [])
    diagonals, tripath = poly.triangulation.sleeve_with_path(tx, ty)
    # a diagonal with x or y as an endpoint imposes no constraint
    pts = poly.vertices
    while diagonals and (dist(pts[diagonals[0][0]], x) <= poly.eps or
                         dist(pts[diagonals[0][1]], x) <= poly.eps):
        diagonals.pop(0)
        tripath.pop(0)
    while diagonals and (dist(pts[diagonals[-1][0]], y) <= poly.eps or
                         dist(pts[diagonals[-1][1]], y) <= poly.eps):
        diagonals.pop()
    if not diagonals:
        return GeodesicPath([x, y], dist(x, y), [])
    portals = _portals_for_sleeve(poly, diagonals, tripath)
    wp = _string_pull(poly, x, y, portals)
    pts = [p for p, _ in wp]
    ids = [pid for _, pid in wp[1:-1]]
    length = sum(dist(pts[i], pts[i + 1]) for i in range(len(pts) - 1))
    return GeodesicPath(pts, length, ids)


def distance(poly, x, y):
    return shortest_path(poly, x, y).length


# ---------------------------------------------------------------------------
# shortest path tree by funnel splitting
# ---------------------------------------------------------------------------

def shortest_path_tree(poly: SimplePolygon, root) -> ShortestPathTree:
    root = (float(root[0]), float(root[1]))
    tri = poly.triangulation
    t0 = tri.locate(root)
    if t0 is None:
        raise PointOutsidePolygon(f"root {root} is outside the polygon")
    pts = poly.vertices
    n = poly.n
    parent = [None] * n
    distv = [math.inf] * n
    ea = poly.eps_area
    root_vertex = -1
    for i in tri.triangles[t0]:
        if dist(pts[i], root) <= poly.eps:
            root_vertex = i

    def set_vertex(i, par, d):
        if parent[i] is None:
            parent[i] = par
            distv[i] = d

    for i in tri.triangles[t0]:
        set_vertex(i, ROOT, dist(root, pts[i]))

    def pt(z):
        return root if z == ROOT else pts[z]

    # funnel per crossed diagonal: (apex id or ROOT, left chain, right chain);
    # chains run from (excluding) the apex to the diagonal endpoints and may
    # be empty when the apex coincides with an endpoint.
    stack = []
    for (other, key) in tri.adj[t0]:
        u, v = tri.oriented_diagonal(key[0], key[1], other)
        lc = () if dist(pts[u], root) <= poly.eps else (u,)
        rc = () if dist(pts[v], root) <= poly.eps else (v,)
        stack.append((other, t0, ROOT, lc, rc, u, v))

    while stack:
        t, frm, apex, lchain, rchain, iu, iv = stack.pop()
        w = next(z for z in tri.triangles[t] if z != iu and z != iv)
        apex_pt = pt(apex)
        apex_d = 0.0 if apex == ROOT else distv[apex]
        pw = pts[w]

        # an empty chain means the apex sits on the diagonal itself, so the
        # new vertex (a corner of the same triangle) is directly visible
        side, j = 0, -1
        if lchain and rchain:
            if cross3(apex_pt, pts[rchain[0]], pw) < -ea:
                side, j = 1, 0
                while j + 1 < len(rchain) and \
                        cross3(pts[rchain[j]], pts[rchain[j + 1]], pw) < -ea:
                    j += 1
            elif cross3(apex_pt, pts[lchain[0]], pw) > ea:
                side, j = -1, 0
                while j + 1 < len(lchain) and \
                        cross3(pts[lchain[j]], pts[lchain[j + 1]], pw) > ea:
                    j += 1

        if side == 0:
            anchor = apex
            anchor_d = apex_d
        elif side == 1:
            anchor = rchain[j]
            anchor_d = distv[anchor]
        else:
            anchor = lchain[j]
            anchor_d = distv[anchor]
        set_vertex(w, anchor, anchor_d + dist(pt(anchor), pw))

        if side == 0:
            fun_uw = (apex, lchain, (w,))
            fun_wv = (apex, (w,), rchain)
        elif side == 1:
            fun_uw = (apex, lchain, rchain[:j + 1] + (w,))
            fun_wv = (rchain[j], (w,), rchain[j + 1:])
        else:
            fun_uw = (lchain[j], lchain[j + 1:], (w,))
            fun_wv = (apex, lchain[:j + 1] + (w,), rchain)

        for (other, key) in tri.adj[t]:
            if other == frm:
                continue
            ks = set(key)
            if ks == {iu, w} and iu != w:
                ap, lc, rc = fun_uw
                stack.append((other, t, ap, lc, rc, iu, w))
            elif ks == {w, iv} and iv != w:
                ap, lc, rc = fun_wv
                stack.append((other, t, ap, lc, rc, w, iv))

    for i in range(n):
        if parent[i] is None:  # pragma: no cover - safety net
            gp = shortest_path(poly, root, pts[i])
            parent[i] = gp.vertex_ids[-1] if gp.vertex_ids else ROOT
            distv[i] = gp.length
    return ShortestPathTree(poly, root, root_vertex, parent, distv)


def anchors_along_edge(spt: ShortestPathTree, edge_index):
    """SPM anchors and their hit parameters along polygon edge (u, w).

    Returns [(t0, t1, anchor_id_or_ROOT)] partitioning [0, 1]; the anchor is
    the last bend of the geodesic from the SPT root to points of the piece.
    """
    poly = spt.poly
    u = edge_index
    w = (edge_index + 1) % poly.n
    pu = spt_path_ids(spt, u)[:-1]  # bends on the way to u (parent(u) last)
    pw = spt_path_ids(spt, w)[:-1]
    if spt.root_vertex >= 0:
        # paths from a vertex root may start by running along the boundary
        pass
    k = 0
    while k < len(pu) and k < len(pw) and pu[k] == pw[k]:
        k += 1
    seq = list(reversed(pu[k:]))
    seq.append(pu[k - 1] if k > 0 else ROOT)
    seq.extend(pw[k:])
    a, b = poly.edge(edge_index)

    def pt(z):
        return spt.root if z == ROOT else poly.vertices[z]

    def par(z):
        return None if z == ROOT else spt.parent[z]

    hits = [0.0]
    for i in range(len(seq) - 1):
        z1, z2 = seq[i], seq[i + 1]
        if par(z1) == z2 or z2 == ROOT:
            base, tip = pt(z2), pt(z1)   # ray parent -> child, beyond child
        else:
            base, tip = pt(z1), pt(z2)
        hit = seg_seg_intersection(a, b, base, tip)
        t = hits[-1] if hit is None else hit[0]
        t = min(1.0, max(hits[-1], t))
        hits.append(t)
    hits.append(1.0)
    out = []
    for i, z in enumerate(seq):
        t0, t1 = hits[i], hits[i + 1]
        if t1 - t0 > 1e-15:
            out.append((t0, t1, z))
    if not out:
        out = [(0.0, 1.0, seq[0])]
    if out[0][0] != 0.0:
        out[0] = (0.0, out[0][1], out[0][2])
    if out[-1][1] != 1.0:
        out[-1] = (out[-1][0], 1.0, out[-1][2])
    return out


# ---------------------------------------------------------------------------
# batched non-crossing paths
# ---------------------------------------------------------------------------

def noncrossing_paths(poly: SimplePolygon, pairs):
    """Geodesics for boundary source/destination pairs with laminar intervals."""
    n = poly.n
    keys = [(a.key(), b.key()) for (a, b) in pairs]

    def strictly_inside(x, lo, hi):
        return 1e-12 < (x - lo) % n < (hi - lo) % n - 1e-12

    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            a1, b1 = keys[i]
            a2, b2 = keys[j]
            if (b1 - a1) % n == 0 or (b2 - a2) % n == 0:
                continue
            if strictly_inside(a2, a1, b1) != strictly_inside(b2, a1, b1):
                shared = any(abs((u - v) % n) < 1e-12 or
                             abs((v - u) % n) < 1e-12
                             for u in (a1, b1) for v in (a2, b2))
                if not shared:
                    raise CrossingPairs(f"pairs {i} and {j} cross")
    return [shortest_path(poly, a.xy, b.xy) for (a, b) in pairs]


# ---------------------------------------------------------------------------
# geodesic convex hull
# ---------------------------------------------------------------------------

def _euclid_hull_cw(points):
    """Monotone chain; indices of hull corners in clockwise order."""
    idx = sorted(range(len(points)), key=lambda i: points[i])
    uniq = []
    for i in idx:
        if not uniq or points[i] != points[uniq[-1]]:
            uniq.append(i)
    if len(uniq) < 3:
        return uniq

    def half(ids):
        out = []
        for i in ids:
            while len(out) >= 2 and cross3(points[out[-2]], points[out[-1]],
                                           points[i]) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = half(uniq)
    upper = half(uniq[::-1])
    ccw = lower[:-1] + upper[:-1]
    return ccw[::-1] if len(ccw) >= 3 else ccw


def _winding_number(loop, p):
    total = 0.0
    for i in range(len(loop)):
        ax, ay = loop[i][0] - p[0], loop[i][1] - p[1]
        b = loop[(i + 1) % len(loop)]
        bx, by = b[0] - p[0], b[1] - p[1]
        total += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
    return total / (2 * math.pi)


def _point_on_loop(loop, p, eps):
    for i in range(len(loop)):
        d, _ = seg_point_dist(loop[i], loop[(i + 1) % len(loop)], p)
        if d <= eps:
            return True
    return False


def geodesic_hull(poly: SimplePolygon, sites) -> GeodesicHull:
    """Geodesic convex hull of point sites inside the polygon."""
    sites = [(float(p[0]), float(p[1])) for p in sites]
    m = len(sites)
    if m == 0:
        raise FvdError("need at least one site")
    if m == 1:
        return GeodesicHull([sites[0]], [0], [0], True)
    order = _euclid_hull_cw(sites)

    paths = {}

    def path(a, b):
        if (a, b) not in paths:
            paths[(a, b)] = shortest_path(poly, sites[a], sites[b])
        return paths[(a, b)]

    if len(order) < 3:
        lo = min(range(m), key=lambda i: sites[i])
        hi = max(range(m), key=lambda i: sites[i])
        p = path(lo, hi)
        interior = sorted((i for i in range(m) if i not in (lo, hi)),
                          key=lambda i: sites[i])
        boundary = p.waypoints + p.waypoints[-2:0:-1]
        return GeodesicHull(boundary, [lo] + interior + [hi], [lo, hi], True)

    cycle = list(order)
    remaining = [i for i in range(m) if i not in cycle]

    def loop_points():
        pts = []
        for i in range(len(cycle)):
            a, b = cycle[i], cycle[(i + 1) % len(cycle)]
            pts.extend(path(a, b).waypoints[:-1])
        return pts

    for _ in range(2 * m * m + 8):
        changed = False
        if len(cycle) > 2:
            for i in range(len(cycle)):
                a = cycle[i - 1]
                s = cycle[i]
                b = cycle[(i + 1) % len(cycle)]
                wa = path(a, s).waypoints
                wb = path(s, b).waypoints
                u = sub(wa[-1], wa[-2])
                w = sub(wb[1], wb[0])
                if u[0] * w[1] - u[1] * w[0] >= -poly.eps_area:
                    cycle.pop(i)
                    remaining.append(s)
                    changed = True
                    break
        if changed:
            continue
        loop = loop_points()
        for s in list(remaining):
            p = sites[s]
            if _point_on_loop(loop, p, poly.eps):
                continue
            if abs(_winding_number(loop, p)) > 0.5:
                continue
            best = None
            for i in range(len(cycle)):
                a, b = cycle[i], cycle[(i + 1) % len(cycle)]
                added = (path(a, s).length + path(s, b).length -
                         path(a, b).length)
                if best is None or added < best[0]:
                    best = (added, i)
            cycle.insert(best[1] + 1, s)
            remaining.remove(s)
            changed = True
            break
        if not changed:
            break
    else:
        raise FvdError("geodesic hull did not converge")

    if len(cycle) == 2:
        a, b = cycle
        p = path(a, b)
        boundary = p.waypoints + p.waypoints[-2:0:-1]
        return GeodesicHull(boundary, [a, b], [a, b], True)

    loop = loop_points()
    site_order = []
    for i in range(len(cycle)):
        a, b = cycle[i], cycle[(i + 1) % len(cycle)]
        site_order.append(a)
        wp = path(a, b).waypoints
        on_edge = []
        for s in remaining:
            p = sites[s]
            for j in range(len(wp) - 1):
                d, t = seg_point_dist(wp[j], wp[j + 1], p)
                if d <= poly.eps:
                    on_edge.append((j + t, s))
                    break
        for _, s in sorted(on_edge):
            site_order.append(s)
    return GeodesicHull(loop, site_order, list(cycle), False)


# ---------------------------------------------------------------------------
# geodesic center
# ---------------------------------------------------------------------------

def apollonius_points(a1, w1, a2, w2, a3, w3):
    """Points x with |x-ai| + wi all equal; at most two real solutions.

    Returns [(point, common_value)].
    """
    out = []
    rows = []
    x1, y1 = a1
    for (xa, ya, wa), (xb, yb, wb) in (((a1[0], a1[1], w1), (a2[0], a2[1], w2)),
                                       ((a1[0], a1[1], w1), (a3[0], a3[1], w3))):
        rows.append((2 * (xb - xa), 2 * (yb - ya), 2 * (wb - wa),
                     xb * xb + yb * yb - xa * xa - ya * ya - wb * wb + wa * wa))
    (a11, a12, b1, c1), (a21, a22, b2, c2) = rows
    det = a11 * a22 - a12 * a21
    if abs(det) < 1e-300:
        return out
    px = (c1 * a22 - c2 * a12) / det
    py = (a11 * c2 - a21 * c1) / det
    qx = (-b1 * a22 + b2 * a12) / det
    qy = (-a11 * b2 + a21 * b1) / det
    dx, dy = px - x1, py - y1
    A = qx * qx + qy * qy - 1.0
    B = 2 * (dx * qx + dy * qy) + 2 * w1
    C = dx * dx + dy * dy - w1 * w1
    if abs(A) < 1e-14:
        if abs(B) < 1e-300:
            return out
        rhos = [-C / B]
    else:
        disc = B * B - 4 * A * C
        if disc < 0:
            return out
        sq = math.sqrt(disc)
        rhos = [(-B - sq) / (2 * A), (-B + sq) / (2 * A)]
    for rho in rhos:
        if rho >= max(w1, w2, w3) - 1e-12:
            out.append(((px + rho * qx, py + rho * qy), rho))
    return out


def geodesic_center(poly: SimplePolygon, sites, eps_tie=None):
    """Point minimizing the maximum geodesic distance to the sites.

    Returns (g, farthest_site_indices, value). Raises DegenerateTie when
    more than three sites attain the maximum within the tie tolerance.
    """
    sites = [(float(p[0]), float(p[1])) for p in sites]
    if len(sites) < 2:
        raise FvdError("need at least two sites")
    eps_tie = 1e-7 * poly.scale if eps_tie is None else eps_tie

    hull = geodesic_hull(poly, sites)
    if hull.degenerate:
        a, b = hull.corner_sites[0], hull.corner_sites[-1]
        path = shortest_path(poly, sites[a], sites[b])
        g = _point_at_length(path, path.length / 2.0)
    else:
        g = _center_on_hull(poly, sites, hull)
    g, _ = _polish_center(poly, sites, g)
    dists = [distance(poly, g, s) for s in sites]
    dmax = max(dists)
    far = [i for i, d in enumerate(dists) if d >= dmax - eps_tie]
    if len(far) > 3:
        raise DegenerateTie("more than three farthest sites at the center",
                            point=g, sites=far)
    return g, far, dmax


def _point_at_length(path: GeodesicPath, target):
    acc = 0.0
    for i in range(len(path.waypoints) - 1):
        a, b = path.waypoints[i], path.waypoints[i + 1]
        d = dist(a, b)
        if acc + d >= target or i == len(path.waypoints) - 2:
            t = 0.0 if d == 0 else (target - acc) / d
            return lerp(a, b, min(1.0, max(0.0, t)))
        acc += d
    return path.waypoints[-1]


def _center_on_hull(poly, sites, hull):
    from .apexed import build_apexed_triangles
    ch_poly = SimplePolygon(hull.boundary, validate=False, normalize=True)
    corner_pts = [sites[i] for i in hull.corner_sites]
    cov = build_apexed_triangles(ch_poly, corner_pts)

    def F(p):
        p = (float(p[0]), float(p[1]))
        best = -math.inf
        for tr in cov.triangles:
            v = tr.eval_g(p, ch_poly.eps)
            if v > best:
                best = v
        return best if best > -math.inf else 1e30

    tri = ch_poly.triangulation
    starts = []
    for (i, j, k) in tri.triangles:
        vs = ch_poly.vertices
        starts.append(((vs[i][0] + vs[j][0] + vs[k][0]) / 3.0,
                       (vs[i][1] + vs[j][1] + vs[k][1]) / 3.0))
    starts.sort(key=F)
    from scipy.optimize import minimize
    best = None
    for s0 in starts[:4]:
        res = minimize(F, s0, method="Nelder-Mead",
                       options={"xatol": 1e-12 * poly.scale,
                                "fatol": 1e-13 * poly.scale,
                                "maxiter": 4000})
        if best is None or res.fun < best[0]:
            best = (res.fun, (float(res.x[0]), float(res.x[1])))
    return best[1]


def _polish_center(poly, sites, g):
    """Active-set refinement: solve the 2- or 3-cone stationary point exactly."""
    eps_loc = 1e-5 * poly.scale
    dists = [shortest_path(poly, g, s) for s in sites]
    val = max(p.length for p in dists)
    cones = []
    for s, gp in zip(sites, dists):
        if gp.length >= val - eps_loc:
            if len(gp.waypoints) > 2:
                anchor = gp.waypoints[1]
                w = gp.length - dist(g, anchor)
            else:
                anchor, w = s, 0.0
            cones.append((anchor, w))
    best_g, best_val = g, val

    def try_point(p):
        nonlocal best_g, best_val
        if not poly.contains(p):
            return
        v = max(distance(poly, p, s) for s in sites)
        if v < best_val:
            best_g, best_val = p, v

    for i in range(len(cones)):
        for j in range(i + 1, len(cones)):
            (a1, w1), (a2, w2) = cones[i], cones[j]
            d12 = dist(a1, a2)
            if d12 > poly.eps:
                d1 = (d12 + w2 - w1) / 2.0
                if 0.0 <= d1 <= d12:
                    try_point(lerp(a1, a2, d1 / d12))
            for k in range(j + 1, len(cones)):
                (a3, w3) = cones[k]
                for (p, _) in apollonius_points(a1, w1, a2, w2, a3, w3):
                    try_point(p)
    return best_g, best_val
