"""Offline generator for the committed domain meshes.

Builds the curved (trochoid-bounded) domain mesh and the channel-with-
hole mesh (32-segment circle) via Delaunay triangulation of graded point
sets, verifies every boundary polygon edge is present and conforming,
and writes them to src/smsfem/fixtures/.
"""

import os
import sys

import numpy as np
from scipy.spatial import Delaunay

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from smsfem.meshes import Triangulation, trochoid_point, write_mesh  # noqa: E402

OUT = os.path.join(os.path.dirname(__file__), "..", "src", "smsfem", "fixtures")


def point_in_polygon(poly, pts):
    """Even-odd rule, vectorized over pts."""
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        crosses = ((y1 > y) != (y2 > y))
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (x < np.where(crosses, xint, np.inf))
    return inside


def distance_to_polyline(poly, pts, closed=True):
    d = np.full(len(pts), np.inf)
    n = len(poly)
    segs = range(n) if closed else range(n - 1)
    for i in segs:
        a = poly[i]
        b = poly[(i + 1) % n]
        ab = b - a
        t = np.clip(((pts - a) @ ab) / (ab @ ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        d = np.minimum(d, np.linalg.norm(pts - proj, axis=1))
    return d


def delaunay_mesh(points, keep_fn, required_edges, tag_fn):
    tri = Delaunay(points)
    bary = points[tri.simplices].mean(axis=1)
    keep = keep_fn(bary)
    elements = tri.simplices[keep]
    used = sorted(set(elements.ravel().tolist()))
    remap = {old: new for new, old in enumerate(used)}
    nodes = points[used]
    elements = np.array([[remap[v] for v in t] for t in elements])
    edge_count = {}
    for t in elements:
        for i, j in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            k = (min(i, j), max(i, j))
            edge_count[k] = edge_count.get(k, 0) + 1
    for i, j in required_edges:
        k = (min(remap[i], remap[j]), max(remap[i], remap[j]))
        if edge_count.get(k, 0) != 1:
            raise RuntimeError("required boundary edge %s missing or "
                               "interior (count %d)" % (k, edge_count.get(k, 0)))
    boundary = []
    for (i, j), c in sorted(edge_count.items()):
        if c == 1:
            mid = 0.5 * (nodes[i] + nodes[j])
            boundary.append((i, j, tag_fn(mid)))
    return Triangulation(nodes, elements, boundary)


def build_trochoid(n_boundary=160, h=0.06):
    t = np.arange(n_boundary) * 2.0 * np.pi / n_boundary
    poly = trochoid_point(t)
    lo, hi = poly.min(axis=0) - h, poly.max(axis=0) + h
    gx, gy = np.meshgrid(np.arange(lo[0], hi[0], h), np.arange(lo[1], hi[1], h))
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    inner = grid[point_in_polygon(poly, grid)
                 & (distance_to_polyline(poly, grid) > 0.6 * h)]
    points = np.vstack([poly, inner])
    required = [(i, (i + 1) % n_boundary) for i in range(n_boundary)]
    mesh = delaunay_mesh(points,
                         lambda b: point_in_polygon(poly, b),
                         required, lambda mid: "D")
    return mesh


def build_channel_hole(n_circle=32, h=0.4):
    x0, y0, x1, y1 = -3.0, -3.0, 9.0, 3.0
    # vertices at multiples of 2*pi/n so the wind tangency points
    # (0, +-1) for horizontal wind are mesh nodes (layer origins)
    tc = np.arange(n_circle) * 2.0 * np.pi / n_circle
    circle = np.stack([np.cos(tc), np.sin(tc)], axis=1)

    def wall(a, b, n):
        s = np.linspace(0.0, 1.0, n, endpoint=False)[:, None]
        return np.asarray(a) + s * (np.asarray(b) - np.asarray(a))

    rect = np.vstack([wall((x0, y0), (x1, y0), 30), wall((x1, y0), (x1, y1), 15),
                      wall((x1, y1), (x0, y1), 30), wall((x0, y1), (x0, y0), 15)])
    gx, gy = np.meshgrid(np.arange(x0 + h, x1, h), np.arange(y0 + h, y1, h))
    grid = np.stack([gx.ravel(), gy.ravel()], axis=1)
    r = np.linalg.norm(grid, axis=1)
    inner = grid[r > 1.0 + 0.55 * h]
    ring = 1.22 * np.stack([np.cos(tc + np.pi / n_circle),
                            np.sin(tc + np.pi / n_circle)], axis=1)
    points = np.vstack([circle, rect, inner, ring])
    n_rect = len(rect)
    required = [(i, (i + 1) % n_circle) for i in range(n_circle)]
    required += [(n_circle + i, n_circle + (i + 1) % n_rect)
                 for i in range(n_rect)]

    def keep(bary):
        return np.linalg.norm(bary, axis=1) > 1.0

    def tag(mid):
        if abs(np.hypot(mid[0], mid[1]) - np.cos(np.pi / n_circle)) < 0.05:
            return "D"           # hole boundary
        if abs(mid[0] - x0) < 1e-9:
            return "D"           # inflow wall
        return "N"

    return delaunay_mesh(points, keep, required, tag)


def main():
    os.makedirs(OUT, exist_ok=True)
    troch = build_trochoid()
    write_mesh(troch, os.path.join(OUT, "trochoid.mesh"))
    print("trochoid: %d nodes, %d elements" % (troch.n_nodes, troch.n_elements))
    hole = build_channel_hole()
    write_mesh(hole, os.path.join(OUT, "channel_hole.mesh"))
    print("channel_hole: %d nodes, %d elements" % (hole.n_nodes, hole.n_elements))


if __name__ == "__main__":
    main()
