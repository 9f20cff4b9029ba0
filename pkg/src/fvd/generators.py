"""Deterministic instance families: convex, comb, spiral, random-simple."""
from __future__ import annotations

import math

import numpy as np

from .errors import FvdError
from .kernel import SimplePolygon, dist, lerp, segments_cross


def gen_convex(n, seed):
    """Strictly convex n-gon: cumulative sum of angle-sorted random steps."""
    rng = np.random.default_rng(seed)
    while True:
        vecs = rng.normal(size=(n, 2))
        vecs -= vecs.mean(axis=0)  # closed ring: edge vectors sum to zero
        ang = np.arctan2(vecs[:, 1], vecs[:, 0])
        order = np.argsort(ang)
        steps = vecs[order]
        pts = np.cumsum(steps, axis=0)
        pts -= pts.mean(axis=0)
        span = pts.max(axis=0) - pts.min(axis=0)
        if span.min() < 1e-6:
            continue
        pts = pts / span.max() * 10.0
        poly = SimplePolygon([tuple(p) for p in pts])
        if poly.n == n and poly.reflex_count == 0:
            return poly


def gen_comb(n, seed):
    """Jittered comb with (n-2)//4 teeth; reflex-heavy geodesics."""
    k = max(1, (n - 2) // 4)
    rng = np.random.default_rng(seed)
    pts = []
    w = 2.0
    for i in range(k):
        x0 = i * w
        j = rng.uniform(-0.04, 0.04, size=8)
        pts.append((x0 + j[0], 0.1 + j[1]))
        pts.append((x0 + 0.38 * w + j[2], 1.9 + j[3]))
        pts.append((x0 + 0.52 * w + j[4], 1.9 + j[5]))
        pts.append((x0 + 0.62 * w + j[6], 0.12 + j[7]))
    pts.append((k * w - 0.3, -0.6 + rng.uniform(-0.02, 0.02)))
    pts.append((-0.3, -0.6 + rng.uniform(-0.02, 0.02)))
    return SimplePolygon(pts)


def gen_spiral(n, seed):
    """Two-armed spiral corridor; about half the vertices are reflex."""
    rng = np.random.default_rng(seed)
    half = max(4, n // 2)
    turns = 1.6
    theta = np.linspace(0.0, turns * 2 * math.pi, half)
    base = 1.0 + 2.2 * theta / (turns * 2 * math.pi)
    jit = 1.0 + rng.uniform(-0.02, 0.02, size=half)
    outer = [(r * math.cos(t), r * math.sin(t))
             for t, r in zip(theta, base * jit)]
    jit2 = 1.0 + rng.uniform(-0.02, 0.02, size=half)
    inner = [(r * math.cos(t), r * math.sin(t))
             for t, r in zip(theta, (base - 0.55) * jit2)]
    pts = outer + inner[::-1]
    return SimplePolygon(pts)


def gen_random_simple(n, seed):
    """Random point cycle untangled by 2-opt edge swaps."""
    if n > 420:
        raise FvdError("random-simple generation is capped at n=420")
    rng = np.random.default_rng(seed)
    for attempt in range(8):
        pts = rng.uniform(-10, 10, size=(n, 2))
        order = list(range(n))
        if _untangle(pts, order):
            ring = [tuple(pts[i]) for i in order]
            try:
                poly = SimplePolygon(ring)
            except FvdError:
                continue
            if poly.n == n:
                return poly
    raise FvdError("failed to generate a simple polygon")


def _untangle(pts, order, max_rounds=2000):
    n = len(order)
    eps_area = 1e-12 * float(np.abs(pts).max() ** 2)
    for _ in range(max_rounds):
        crossed = False
        for i in range(n):
            a1 = tuple(pts[order[i]])
            a2 = tuple(pts[order[(i + 1) % n]])
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                b1 = tuple(pts[order[j]])
                b2 = tuple(pts[order[(j + 1) % n]])
                if segments_cross(a1, a2, b1, b2, eps_area):
                    order[i + 1:j + 1] = order[i + 1:j + 1][::-1]
                    crossed = True
                    break
            if crossed:
                break
        if not crossed:
            return True
    return False


FAMILIES = {
    "convex": gen_convex,
    "comb": gen_comb,
    "spiral": gen_spiral,
    "random-simple": gen_random_simple,
}


def gen_polygon(family, n, seed):
    if family not in FAMILIES:
        raise FvdError(f"unknown family {family!r}")
    return FAMILIES[family](n, seed)


def place_sites(poly: SimplePolygon, m, placement, seed):
    """m sites on vertices, on the boundary, or in the interior."""
    rng = np.random.default_rng(seed + 77)
    min_sep = 1e-3 * poly.scale
    if placement == "vertices":
        if m > poly.n:
            raise FvdError("more vertex sites than vertices")
        idx = rng.permutation(poly.n)[:m]
        return [poly.vertices[i] for i in sorted(idx)]
    if placement == "boundary":
        out = []
        guard = 0
        while len(out) < m:
            guard += 1
            if guard > 200 * m:
                raise FvdError("could not separate boundary sites")
            e = int(rng.integers(poly.n))
            t = float(rng.uniform(0.08, 0.92))
            p = poly.boundary_point(e, t).xy
            if all(dist(p, q) > min_sep for q in out) and \
                    all(dist(p, v) > min_sep for v in poly.vertices):
                out.append(p)
        return out
    if placement == "interior":
        x0, y0, x1, y1 = poly.bbox
        out = []
        guard = 0
        while len(out) < m:
            guard += 1
            if guard > 4000 * m:
                raise FvdError("could not place interior sites")
            p = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
            kind, _ = poly.point_locate(p)
            if kind != "interior":
                continue
            bp = poly.bp_of_point(p, eps=min_sep)
            if bp is not None:
                continue
            if all(dist(p, q) > min_sep for q in out):
                out.append(p)
        return out
    raise FvdError(f"unknown placement {placement!r}")


def make_instance(family, n, m, placement, seed):
    poly = gen_polygon(family, n, seed)
    sites = place_sites(poly, m, placement, seed * 1009 + 11)
    return poly, sites
