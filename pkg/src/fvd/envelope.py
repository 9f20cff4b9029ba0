"""Upper envelopes of apexed-triangle cones and bisector arcs.

Covers the boundary diagram (per-edge site sweeps), envelopes restricted to
segments inside geodesically convex cells, and the restriction of the
refined diagram to curves of polygon-vertex geodesics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .apexed import ApexedTriangle, CoveringSet, FarthestNeighbors, \
    transition_edges
from .errors import FvdError, ListOrderViolated, NoLocus
from .geodesic import shortest_path
from .kernel import SimplePolygon, cross3, dist, dot, lerp, sub

T_EPS = 1e-12


def _cone(p, q, t, apex, w):
    x = lerp(p, q, t)
    return w + dist(x, apex)


def cone_crossings(p, q, a1, w1, a2, w2, eps=0.0):
    """Parameters t on segment pq where w1 + |x-a1| == w2 + |x-a2|.

    Closed form via one squaring; roots are Newton-polished; may return 0-2
    values (unclipped).
    """
    v = sub(q, p)
    delta = w2 - w1
    out = []
    if abs(delta) <= 1e-14 * (abs(w1) + abs(w2) + 1.0):
        # perpendicular-bisector line: linear equation in t
        d21 = sub(a2, a1)
        c1 = 2.0 * dot(v, d21)
        c0 = 2.0 * dot(p, d21) + dot(a1, a1) - dot(a2, a2)
        if abs(c1) > 1e-300:
            out = [-c0 / c1]
    else:
        # L(t) := |x-a2| must equal a linear function of t
        d21 = sub(a2, a1)
        alpha = 2.0 * dot(p, d21) + dot(a1, a1) - dot(a2, a2)
        beta = 2.0 * dot(v, d21)
        c0 = (alpha - delta * delta) / (2.0 * delta)
        c1 = beta / (2.0 * delta)
        pa = sub(p, a2)
        A = c1 * c1 - dot(v, v)
        B = 2.0 * c0 * c1 - 2.0 * dot(v, pa)
        C = c0 * c0 - dot(pa, pa)
        if abs(A) < 1e-13 * (abs(B) + abs(C) + 1.0):
            if abs(B) > 1e-300:
                cand = [-C / B]
            else:
                cand = []
        else:
            disc = B * B - 4.0 * A * C
            if disc < 0.0:
                cand = []
            else:
                sq = math.sqrt(disc)
                qq = -(B + math.copysign(sq, B)) / 2.0
                cand = [qq / A]
                if abs(qq) > 1e-300:
                    cand.append(C / qq)
        for t in cand:
            if c0 + c1 * t >= -1e-9 * (abs(w1) + abs(w2) + 1.0):
                out.append(t)
    # Newton polish on g1 - g2
    polished = []
    for t in out:
        for _ in range(3):
            x = lerp(p, q, t)
            r1, r2 = dist(x, a1), dist(x, a2)
            f = (w1 + r1) - (w2 + r2)
            if r1 < 1e-300 or r2 < 1e-300:
                break
            df = dot(v, sub(x, a1)) / r1 - dot(v, sub(x, a2)) / r2
            if abs(df) < 1e-300:
                break
            t -= f / df
        x = lerp(p, q, t)
        if abs((w1 + dist(x, a1)) - (w2 + dist(x, a2))) <= \
                1e-7 * (dist(p, q) + abs(w1) + abs(w2) + 1.0):
            polished.append(t)
    polished.sort()
    # dedupe
    res = []
    for t in polished:
        if not res or t - res[-1] > 1e-12:
            res.append(t)
    return res


def tri_segment_interval(tri: ApexedTriangle, p, q, eps_area):
    """Parameter interval of segment pq inside the closed triangle, or None."""
    corners = [tri.apex, tri.b, tri.c]
    if cross3(*corners) < 0:
        corners = [tri.apex, tri.c, tri.b]
    lo, hi = 0.0, 1.0
    v = sub(q, p)
    for i in range(3):
        a, b = corners[i], corners[(i + 1) % 3]
        # inside is the left side of a->b (ccw corners)
        nx, ny = -(b[1] - a[1]), b[0] - a[0]
        f0 = nx * (p[0] - a[0]) + ny * (p[1] - a[1])
        dfdt = nx * v[0] + ny * v[1]
        if abs(dfdt) < 1e-300:
            if f0 < -eps_area:
                return None
            continue
        t_hit = -f0 / dfdt
        if dfdt > 0:
            lo = max(lo, t_hit)
        else:
            hi = min(hi, t_hit)
    if hi - lo <= T_EPS:
        return None
    return lo, hi


# ---------------------------------------------------------------------------
# bisector arcs
# ---------------------------------------------------------------------------

@dataclass
class BisectorArc:
    """Locus of w1 + |x-a1| == w2 + |x-a2| (a conic branch, line, or ray)."""
    a1: tuple
    w1: float
    a2: tuple
    w2: float
    kind: str            # "hyperbola" | "line" | "ray"
    center: tuple        # midpoint frame origin (ray: a2 or a1)
    u: tuple             # unit focal axis a1 -> a2
    half_k: float        # signed alpha = (w2-w1)/2 ... ksign * |k|/2
    bsq: float           # c^2 - alpha^2 for hyperbola
    eta0: float = 0.0    # parameter interval (set by clipping)
    eta1: float = 0.0
    p0: tuple = None
    p1: tuple = None

    def point_at(self, eta):
        ux, uy = self.u
        px, py = -uy, ux
        if self.kind == "line":
            return (self.center[0] + px * eta, self.center[1] + py * eta)
        if self.kind == "ray":
            return (self.center[0] + ux * eta, self.center[1] + uy * eta)
        alpha = self.half_k
        xi = math.copysign(abs(alpha) * math.sqrt(1.0 + eta * eta / self.bsq),
                           alpha)
        return (self.center[0] + ux * xi + px * eta,
                self.center[1] + uy * xi + py * eta)

    def param_of(self, x):
        d = sub(x, self.center)
        if self.kind == "ray":
            return dot(d, self.u)
        ux, uy = self.u
        return -uy * d[0] + ux * d[1]

    def tangent_at(self, eta):
        ux, uy = self.u
        px, py = -uy, ux
        if self.kind == "line":
            return (px, py)
        if self.kind == "ray":
            return (ux, uy)
        alpha = self.half_k
        dxi = math.copysign(abs(alpha) * eta /
                            (self.bsq * math.sqrt(1.0 + eta * eta / self.bsq)),
                            alpha)
        tx = ux * dxi + px
        ty = uy * dxi + py
        n = math.hypot(tx, ty) or 1.0
        return (tx / n, ty / n)

    def segment_params(self, p, q):
        """Arc parameters eta of intersections with segment pq (with seg t)."""
        ts = cone_crossings(p, q, self.a1, self.w1, self.a2, self.w2)
        out = []
        for t in ts:
            if -T_EPS <= t <= 1.0 + T_EPS:
                x = lerp(p, q, max(0.0, min(1.0, t)))
                if self._on_branch(x):
                    out.append((self.param_of(x), t, x))
        return out

    def _on_branch(self, x, tol_rel=1e-6):
        scale = dist(self.a1, self.a2) + abs(self.w1) + abs(self.w2) + 1.0
        return abs((self.w1 + dist(x, self.a1)) -
                   (self.w2 + dist(x, self.a2))) <= tol_rel * scale

    def value_at(self, x):
        return self.w1 + dist(x, self.a1)


def make_bisector(a1, w1, a2, w2, eps):
    """Bisector locus of two additively weighted cones; NoLocus if one wins."""
    k = w2 - w1
    f = dist(a1, a2)
    if f <= eps:
        raise NoLocus("coincident apexes")
    u = ((a2[0] - a1[0]) / f, (a2[1] - a1[1]) / f)
    if abs(k) >= f + eps:
        raise NoLocus("one cone dominates the other everywhere")
    if abs(abs(k) - f) <= eps:
        # degenerate: ray on the focal line beyond the nearer apex
        if k > 0:
            return BisectorArc(a1, w1, a2, w2, "ray", a2, u, k / 2.0, 0.0)
        return BisectorArc(a1, w1, a2, w2, "ray", a1,
                           (-u[0], -u[1]), k / 2.0, 0.0)
    mid = ((a1[0] + a2[0]) / 2.0, (a1[1] + a2[1]) / 2.0)
    if abs(k) <= eps:
        return BisectorArc(a1, w1, a2, w2, "line", mid, u, 0.0, 0.0)
    c = f / 2.0
    alpha = k / 2.0
    return BisectorArc(a1, w1, a2, w2, "hyperbola", mid, u, alpha,
                       c * c - alpha * alpha)


def bisector_arc(tr1: ApexedTriangle, tr2: ApexedTriangle, eps):
    """Bisector of two overlapping triangles clipped to their intersection."""
    if abs(tr2.weight - tr1.weight) >= dist(tr1.apex, tr2.apex) - eps:
        raise NoLocus("weight difference reaches the apex distance")
    arc = make_bisector(tr1.apex, tr1.weight, tr2.apex, tr2.weight, eps)
    region = _tri_clip(list(tr1.corners()), list(tr2.corners()))
    if not region:
        raise NoLocus("triangles do not overlap")
    etas = []
    for i in range(len(region)):
        p, q = region[i], region[(i + 1) % len(region)]
        for (eta, _, x) in arc.segment_params(p, q):
            etas.append(eta)
    if len(etas) >= 2:
        arc.eta0, arc.eta1 = min(etas), max(etas)
    elif len(etas) == 1:
        arc.eta0 = arc.eta1 = etas[0]
    arc.p0 = arc.point_at(arc.eta0)
    arc.p1 = arc.point_at(arc.eta1)
    return arc


def _tri_clip(subject, clip):
    """Sutherland-Hodgman intersection of two convex polygons."""
    def ccw(poly):
        s = sum(cross3(poly[i - 1], poly[i], poly[(i + 1) % len(poly)])
                for i in range(len(poly)))
        return poly if s > 0 else poly[::-1]

    out = ccw(subject)
    clip = ccw(clip)
    for i in range(len(clip)):
        a, b = clip[i], clip[(i + 1) % len(clip)]
        if not out:
            return []
        nxt = []
        prev = out[-1]
        fp = cross3(a, b, prev)
        for cur in out:
            fc = cross3(a, b, cur)
            if fc >= 0:
                if fp < 0:
                    nxt.append(_line_hit(a, b, prev, cur))
                nxt.append(cur)
            elif fp >= 0:
                nxt.append(_line_hit(a, b, prev, cur))
            prev, fp = cur, fc
        out = nxt
    return out


def _line_hit(a, b, p, q):
    from .kernel import seg_seg_intersection
    r = seg_seg_intersection(p, q, a, b)
    if r is None:
        return p
    t = r[0]
    return lerp(p, q, t)


# ---------------------------------------------------------------------------
# envelope pieces on a segment
# ---------------------------------------------------------------------------

@dataclass
class EnvelopePiece:
    t0: float
    t1: float
    tri: ApexedTriangle


@dataclass
class SegmentLists:
    """Sorted candidate lists for a segment ab (bottom order Δa->Δb and back)."""
    a: tuple
    b: tuple
    l_ab: list
    l_ba: list


def _dominates(p, q, trA, trB, lo, hi):
    """Sign of g_A - g_B on [lo,hi]: +1 A wins, -1 B wins, 0 crossing at t."""
    ts = [t for t in cone_crossings(p, q, trA.apex, trA.weight,
                                    trB.apex, trB.weight)
          if lo + T_EPS < t < hi - T_EPS]
    if ts:
        return 0, ts[0]
    tm = 0.5 * (lo + hi)
    fa = _cone(p, q, tm, trA.apex, trA.weight)
    fb = _cone(p, q, tm, trB.apex, trB.weight)
    return (1, None) if fa >= fb else (-1, None)


def partial_envelope(p, q, lst, eps_area, poly_eps):
    """Partial upper envelope of an ordered triangle list on segment pq.

    Pieces may be separated by gaps; triangles whose refined cell misses the
    segment are discarded by the ordered three-case scan.
    """
    pieces = []
    for tri in lst:
        iv = tri_segment_interval(tri, p, q, eps_area)
        if iv is None:
            continue
        lo, hi = iv
        while True:
            if not pieces:
                pieces.append(EnvelopePiece(lo, hi, tri))
                break
            last = pieces[-1]
            o0, o1 = max(lo, last.t0), min(hi, last.t1)
            if o1 - o0 > T_EPS:
                sign, t_cross = _dominates(p, q, tri, last.tri, o0, o1)
                if sign == 0:
                    # new triangle wins to the right of the crossing
                    last.t1 = t_cross
                    if last.t1 - last.t0 <= T_EPS:
                        pieces.pop()
                    if hi - t_cross > T_EPS:
                        pieces.append(EnvelopePiece(t_cross, hi, tri))
                    break
                if sign == 1:
                    # new dominates the overlap: retry against earlier pieces
                    if last.t0 < o0 - T_EPS:
                        last.t1 = o0
                        pieces.append(EnvelopePiece(o0, hi, tri))
                        break
                    pieces.pop()
                    continue
                # old dominates: the new piece may still start past the end
                if hi > last.t1 + T_EPS:
                    pieces.append(EnvelopePiece(max(lo, last.t1), hi, tri))
                break
            if lo >= last.t1 - T_EPS:
                pieces.append(EnvelopePiece(lo, hi, tri))   # gap allowed
                break
            # left-disjoint: decide via the 2D overlap of the two triangles
            region = _tri_clip(list(tri.corners()), list(last.tri.corners()))
            if not region:
                # no shared region: fall back to comparing near the gap
                tm = 0.5 * (hi + last.t0)
                fa = _cone(p, q, tm, tri.apex, tri.weight)
                fb = _cone(p, q, tm, last.tri.apex, last.tri.weight)
                region_winner_new = fa > fb
            else:
                cx = sum(z[0] for z in region) / len(region)
                cy = sum(z[1] for z in region) / len(region)
                ga = tri.weight + dist((cx, cy), tri.apex)
                gb = last.tri.weight + dist((cx, cy), last.tri.apex)
                region_winner_new = ga > gb
            if region_winner_new:
                pieces.pop()
                continue
            break  # new triangle's cell misses the segment
    return pieces


def merge_envelopes(p, q, u1, u2, eps_area):
    """Pointwise maximum of two partial envelopes; tiles [0,1]."""
    cuts = {0.0, 1.0}
    for piece in u1 + u2:
        cuts.add(max(0.0, min(1.0, piece.t0)))
        cuts.add(max(0.0, min(1.0, piece.t1)))
    for piece in u1:
        for other in u2:
            lo = max(piece.t0, other.t0)
            hi = min(piece.t1, other.t1)
            if hi - lo > T_EPS:
                for t in cone_crossings(p, q, piece.tri.apex, piece.tri.weight,
                                        other.tri.apex, other.tri.weight):
                    if lo < t < hi:
                        cuts.add(t)
    cuts = sorted(cuts)

    def owner_at(pieces, t):
        for piece in pieces:
            if piece.t0 - T_EPS <= t <= piece.t1 + T_EPS:
                return piece.tri
        return None

    out = []
    for i in range(len(cuts) - 1):
        t0, t1 = cuts[i], cuts[i + 1]
        if t1 - t0 <= T_EPS:
            continue
        tm = 0.5 * (t0 + t1)
        c1 = owner_at(u1, tm)
        c2 = owner_at(u2, tm)
        if c1 is None and c2 is None:
            raise FvdError("segment envelope has an uncovered gap")
        if c1 is None:
            win = c2
        elif c2 is None:
            win = c1
        else:
            v1 = _cone(p, q, tm, c1.apex, c1.weight)
            v2 = _cone(p, q, tm, c2.apex, c2.weight)
            win = c1 if v1 >= v2 else c2
        if out and out[-1].tri is win:
            out[-1].t1 = t1
        else:
            out.append(EnvelopePiece(t0, t1, win))
    return out


def envelope_on_segment(a, b, lists: SegmentLists, eps_area, poly_eps):
    """Complete upper envelope on segment ab from the two sorted lists.

    l_ab is scanned from a, l_ba from b (its cells appear in that order);
    the two partial envelopes are then merged into the full envelope.
    """
    u1 = partial_envelope(a, b, lists.l_ab, eps_area, poly_eps)
    u2r = partial_envelope(b, a, lists.l_ba, eps_area, poly_eps)
    u2 = [EnvelopePiece(1.0 - piece.t1, 1.0 - piece.t0, piece.tri)
          for piece in reversed(u2r)]
    pieces = merge_envelopes(a, b, u1, u2, eps_area)
    _check_monotone(pieces)
    return pieces


def _check_monotone(pieces):
    last_end = -T_EPS
    for piece in pieces:
        if piece.t0 < last_end - 1e-9:
            raise ListOrderViolated("envelope pieces overlap")
        last_end = piece.t1


# ---------------------------------------------------------------------------
# boundary restriction (step 1)
# ---------------------------------------------------------------------------

@dataclass
class BoundaryRestriction:
    poly: SimplePolygon
    sites: list
    pieces: list  # (edge_index, t0, t1, tri) clockwise, tiling the boundary

    def site_breakpoints(self):
        """Boundary points where the owning site changes, with flanking sites."""
        out = []
        n = len(self.pieces)
        for i in range(n):
            e0, _, t1, tr0 = self.pieces[i]
            e1, s1t, _, tr1 = self.pieces[(i + 1) % n]
            if tr0.definer != tr1.definer:
                bp = self.poly.boundary_point(e0, t1)
                out.append((bp, tr0.definer, tr1.definer, tr0, tr1))
        return out

    def breakpoints_on_edge(self, edge_index):
        return [(bp.t if bp.edge_index == edge_index else
                 (0.0 if bp.t == 0.0 else bp.t), s0, s1)
                for (bp, s0, s1, _, _) in self.site_breakpoints()
                if bp.edge_index == edge_index or
                (bp.edge_index == (edge_index + 1) % self.poly.n and bp.t == 0.0)]

    def nonempty_site_cycle(self):
        """Distinct site labels in clockwise order along the boundary."""
        seen = []
        for (_, _, _, tr) in self.pieces:
            if not seen or seen[-1] != tr.definer:
                seen.append(tr.definer)
        if len(seen) > 1 and seen[0] == seen[-1]:
            seen.pop()
        return seen

    def intervals_by_site(self):
        """Per site the (key0, key1) clockwise boundary interval it owns."""
        runs = []
        for (e, t0, t1, tr) in self.pieces:
            if runs and runs[-1][0] == tr.definer:
                runs[-1][2] = e + t1
            else:
                runs.append([tr.definer, e + t0, e + t1])
        if len(runs) > 1 and runs[0][0] == runs[-1][0]:
            runs[0][1] = runs[-1][1]
            runs.pop()
        return [(s, k0, k1) for (s, k0, k1) in runs]

    def to_json_fragment(self):
        return [{"edge": e, "t0": t0, "t1": t1, "site": tr.definer,
                 "triangle": tr.id} for (e, t0, t1, tr) in self.pieces]


def _site_pieces_on_edge(cov: CoveringSet, edge_index, definer):
    return [(t0, t1, cov.triangles[tid])
            for (t0, t1, tid) in cov.pieces_on_edge(edge_index)
            if cov.triangles[tid].definer == definer]


def _sweep_transition_edge(poly, cov, te, fn):
    """Upper envelope on one transition edge, site by site.

    Works in sigma = 1 - t so that sigma grows from u (the clockwise
    endpoint, owned by the first swept site) towards v.
    """
    e = te.edge_index
    pe, qe = poly.edge(e)
    a, b = qe, pe  # sigma parameterizes the reversed edge

    def sigma_pieces(site):
        out = [[1.0 - t1, 1.0 - t0, tri]
               for (t0, t1, tri) in _site_pieces_on_edge(cov, e, site)]
        out.sort(key=lambda z: z[0])
        return out

    order = te.sweep_order
    U = sigma_pieces(order[0])
    for site in order[1:]:
        tau = sigma_pieces(site)
        if not tau:
            continue
        U = _insert_site(poly, U, tau, fn.sites[site], a, b)
        if not U:
            U = tau
    res = [(1.0 - s1, 1.0 - s0, tri) for (s0, s1, tri) in U]
    res.sort(key=lambda z: z[0])
    return res


def _bottom_sigma(tri):
    return 1.0 - tri.t1, 1.0 - tri.t0


def _insert_site(poly, U, tau, site_pt, a, b):
    """One step of the site sweep: merge a site's cone pieces into U."""
    guard = 0
    while True:
        guard += 1
        if guard > 8 * (len(U) + len(tau)) + 64:
            raise FvdError("transition-edge sweep failed to converge")
        if not U:
            return [list(z) for z in tau]
        da = U[-1]
        da_b0, da_b1 = _bottom_sigma(da[2])
        tau_O = [z for z in tau if min(z[1], da_b1) - max(z[0], da_b0) > T_EPS]
        tau_L = [z for z in tau if z[1] <= da_b0 + T_EPS]
        tau_R = [z for z in tau if z[0] >= da_b1 - T_EPS]

        if tau_O:
            switch = None
            dethroned = False
            for z in sorted(tau_O, key=lambda q: q[0]):
                # compare inside the current envelope piece of the rightmost
                # triangle, not just inside its full bottom side
                o0 = max(z[0], da_b0, da[0])
                o1 = min(z[1], da_b1, da[1])
                if o1 - o0 <= T_EPS:
                    continue
                ts = [t for t in cone_crossings(a, b, z[2].apex, z[2].weight,
                                                da[2].apex, da[2].weight)
                      if o0 - T_EPS <= t <= o1 + T_EPS]
                for t in sorted(ts):
                    after = min(t + max(1e-9, 0.05 * max(o1 - t, 0.0)), 1.0)
                    ga = _cone(a, b, after, z[2].apex, z[2].weight)
                    gb = _cone(a, b, after, da[2].apex, da[2].weight)
                    if ga >= gb - 1e-15:
                        switch = (max(t, 0.0), z)
                        break
                if switch:
                    break
                tm = 0.5 * (o0 + o1)
                ga = _cone(a, b, tm, z[2].apex, z[2].weight)
                gb = _cone(a, b, tm, da[2].apex, da[2].weight)
                if ga > gb:
                    dethroned = True  # new site dominates the whole piece
                    break
            if dethroned:
                U.pop()
                continue
            if switch is None:
                return U  # the site never reaches the envelope on this edge
            s_star, z_first = switch
            while U and U[-1][0] >= s_star - T_EPS:
                U.pop()
            if U:
                U[-1][1] = min(U[-1][1], s_star)
                if U[-1][1] - U[-1][0] <= T_EPS:
                    U.pop()
            cur = s_star
            for z in tau:
                if z[1] <= cur + T_EPS:
                    continue
                U.append([max(z[0], cur), z[1], z[2]])
                cur = z[1]
            return U

        if not tau_L:
            # all of tau lies beyond a gap: discontinuity, site skipped
            return U
        if tau_L and tau_R:
            raise FvdError("site pieces straddle the envelope tail")

        # tau entirely left of the rightmost triangle: eliminate one site
        if len(U) >= 2:
            x_sigma = U[-1][0]
        else:
            x_sigma = U[-1][0]
        x_pt = lerp(a, b, x_sigma)
        d_def = da[2].cone(x_pt)
        d_site = shortest_path(poly, site_pt, x_pt).length
        if d_def > d_site:
            return U  # the new site has no Voronoi cell at all
        drop = da[2].definer
        while U and U[-1][2].definer == drop:
            U.pop()


def boundary_fvd(poly: SimplePolygon, sites, cov: CoveringSet,
                 fn: FarthestNeighbors) -> BoundaryRestriction:
    """Refined diagram restricted to the whole boundary (step 1)."""
    te_map = {t.edge_index: t for t in transition_edges(poly, fn)}
    pieces = []
    for e in range(poly.n):
        if e in te_map:
            epieces = _sweep_transition_edge(poly, cov, te_map[e], fn)
        else:
            owner = fn.neighbors[e]
            epieces = [(t0, t1, tri)
                       for (t0, t1, tri) in _site_pieces_on_edge(cov, e, owner)]
            epieces.sort(key=lambda z: z[0])
        if not epieces:
            raise FvdError(f"edge {e} has no envelope pieces")
        # snap and enforce tiling of [0,1]
        fixed = []
        cur = 0.0
        for (t0, t1, tri) in epieces:
            t0 = max(t0, cur)
            if t1 - t0 <= T_EPS:
                continue
            fixed.append((e, t0, t1, tri))
            cur = t1
        if fixed:
            first = fixed[0]
            fixed[0] = (e, 0.0, first[2], first[3])
            last = fixed[-1]
            fixed[-1] = (e, last[1], 1.0, last[3])
        pieces.extend(fixed)
    return BoundaryRestriction(poly, list(sites), pieces)


# ---------------------------------------------------------------------------
# restriction of the diagram to curves of polygon-vertex geodesics
# ---------------------------------------------------------------------------

def owner_at_point(cands, x, eps_area):
    best, best_tri = -math.inf, None
    for tri in cands:
        v = tri.eval_g_closed(x, eps_area)
        if v > best:
            best, best_tri = v, tri
    return best_tri


def _bottom_key(tri):
    return tri.edge_index + 0.5 * (tri.t0 + tri.t1)


def _classify(lists: SegmentLists, tri, tri_a, tri_b, modulo):
    ka = _bottom_key(tri_a)
    kb = _bottom_key(tri_b)
    pos = (_bottom_key(tri) - ka) % modulo
    span = (kb - ka) % modulo
    if tri is tri_a or tri is tri_b:
        if not any(t is tri for t in lists.l_ab):
            lists.l_ab.append(tri)
        if not any(t is tri for t in lists.l_ba):
            lists.l_ba.append(tri)
        return
    if pos <= span:
        if not any(t is tri for t in lists.l_ab):
            lists.l_ab.append(tri)
    else:
        if not any(t is tri for t in lists.l_ba):
            lists.l_ba.append(tri)


def segment_lists(poly_n, cands_sorted, a, b, eps_area):
    """Candidate lists for one chord from a bottom-sorted candidate list."""
    tri_a = owner_at_point(cands_sorted, a, eps_area)
    tri_b = owner_at_point(cands_sorted, b, eps_area)
    if tri_a is None or tri_b is None:
        raise FvdError("chord endpoint is not covered by any candidate")
    lists = SegmentLists(a, b, [], [])
    for tri in cands_sorted:
        if tri_segment_interval(tri, a, b, eps_area) is None:
            continue
        _classify(lists, tri, tri_a, tri_b, poly_n)
    _sort_lists(lists, tri_a, tri_b, poly_n)
    return lists


def _sort_lists(lists, tri_a, tri_b, modulo):
    ka = _bottom_key(tri_a)
    kb = _bottom_key(tri_b)
    lists.l_ab.sort(key=lambda t: 0.0 if t is tri_a
                    else (_bottom_key(t) - ka) % modulo)
    lists.l_ba.sort(key=lambda t: 0.0 if t is tri_b
                    else (_bottom_key(t) - kb) % modulo)


def pocket_chains(poly, gamma_segments):
    """Clockwise boundary chain (k0, k1) cut off by each curve segment.

    Every segment endpoint must lie on the polygon boundary; the chains of
    a closed clockwise curve tile the boundary.
    """
    from .errors import CurveNotInscribed
    chains = []
    n = poly.n
    for (a, b) in gamma_segments:
        bpa = poly.bp_of_point(a)
        bpb = poly.bp_of_point(b)
        if bpa is None or bpb is None:
            raise CurveNotInscribed("curve vertex is not on the boundary")
        ka, kb = bpa.key(), bpb.key()
        rep = _chain_rep(poly, ka, kb, a, b)
        if rep is None or cross3(a, b, rep) > 0:
            chains.append((ka, kb))
        else:
            chains.append((kb, ka))
    return chains


def _chain_rep(poly, k0, k1, a, b):
    """Most line-distant boundary point on the clockwise chain k0 -> k1."""
    n = poly.n
    span = (k1 - k0) % n
    best, best_v = None, -1.0
    i = int(math.floor(k0)) + 1
    for _ in range(n):
        idx = i % n
        pos = (idx - k0) % n
        if 0.0 < pos < span:
            p = poly.vertices[idx]
            v = abs(cross3(a, b, p))
            if v > best_v:
                best, best_v = p, v
        i += 1
        if pos >= span:
            break
    if best is None:
        mid = poly.boundary_point(int(math.floor(k0)) % n,
                                  (k0 + span / 2.0) % n - math.floor(
                                      (k0 + span / 2.0) % n))
        best = mid.xy
    return best


def curve_segment_lists(poly, cands_sorted, gamma_segments, site_keys,
                        eps_area):
    """Two-scan assignment of candidates to the segments of a closed curve.

    First scan places each triangle by the pocket holding its bottom side,
    the second by the pocket holding its definer; a triangle thus lands in
    the lists of at most two segments.
    """
    chains = pocket_chains(poly, gamma_segments)
    n = poly.n
    starts = sorted(range(len(chains)), key=lambda i: chains[i][0])

    def lookup(key):
        key = key % n
        lo, hi = 0, len(starts)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if chains[starts[mid]][0] <= key:
                lo = mid
            else:
                hi = mid
        idx = starts[lo]
        if (key - chains[idx][0]) % n <= (chains[idx][1] - chains[idx][0]) % n:
            return idx
        idx = starts[-1]  # wrap-around chain
        if (key - chains[idx][0]) % n <= (chains[idx][1] - chains[idx][0]) % n:
            return idx
        for j in range(len(chains)):
            if (key - chains[j][0]) % n <= (chains[j][1] - chains[j][0]) % n:
                return j
        return None

    owners = {}

    def owner(p):
        key = (round(p[0], 12), round(p[1], 12))
        if key not in owners:
            owners[key] = owner_at_point(cands_sorted, p, eps_area)
        return owners[key]

    lists = [SegmentLists(a, b, [], []) for (a, b) in gamma_segments]
    endpoint_tris = [(owner(a), owner(b)) for (a, b) in gamma_segments]
    for tri in cands_sorted:
        for key in (_bottom_key(tri), site_keys[tri.definer]):
            idx = lookup(key)
            if idx is None:
                continue
            a, b = gamma_segments[idx]
            if tri_segment_interval(tri, a, b, eps_area) is None:
                continue
            tri_a, tri_b = endpoint_tris[idx]
            if tri_a is None or tri_b is None:
                raise FvdError("curve endpoint is not covered")
            _classify(lists[idx], tri, tri_a, tri_b, n)
    for idx in range(len(lists)):
        tri_a, tri_b = endpoint_tris[idx]
        _classify(lists[idx], tri_a, tri_a, tri_b, n)
        _classify(lists[idx], tri_b, tri_a, tri_b, n)
        _sort_lists(lists[idx], tri_a, tri_b, n)
    return lists


def restriction_on_segments(poly, cands_sorted, segments, site_keys,
                            eps_area, poly_eps, two_scan=True):
    """Envelope pieces for each segment of a closed curve inside a cell."""
    if two_scan:
        lists = curve_segment_lists(poly, cands_sorted, segments,
                                    site_keys, eps_area)
    else:
        lists = [segment_lists(poly.n, cands_sorted, a, b, eps_area)
                 for (a, b) in segments]
    return [envelope_on_segment(sl.a, sl.b, sl, eps_area, poly_eps)
            for sl in lists]
