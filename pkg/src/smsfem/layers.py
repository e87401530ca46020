"""Interior-layer handling.

A boundary-data discontinuity launches a layer along the characteristic
dx/dt = b.  We trace that curve, assign it the reduced-problem value
(inflow value = mean of the one-sided data limits), optionally snap
nearby mesh nodes onto it, and embed the polyline into the
triangulation as a chain of element edges carrying Dirichlet values.
"""

from dataclasses import dataclass

import numpy as np

from .meshes import Triangulation, _edge_key
from .wind import vector_field
from .assembly import scalar_field


class TracingError(RuntimeError):
    pass


class DegenerateCrossingError(RuntimeError):
    """Path tangent to an edge; snap nodes onto the path first."""


def discontinuity_value(left_limit, right_limit):
    """Inflow value at a data discontinuity: mean of one-sided limits."""
    return 0.5 * (left_limit + right_limit)


@dataclass
class LayerCharacteristic:
    points: np.ndarray    # polyline vertices
    values: np.ndarray    # reduced-problem value at each vertex
    origin: np.ndarray

    def value_at(self, p):
        """Value at the closest polyline point to p."""
        p = np.asarray(p, dtype=float)
        best_d, best_v = np.inf, self.values[0]
        for k in range(len(self.points) - 1):
            a, b = self.points[k], self.points[k + 1]
            t = _project_t(p, a, b)
            q = a + t * (b - a)
            d = np.linalg.norm(p - q)
            if d < best_d:
                best_d = d
                va, vb = self.values[k], self.values[k + 1]
                best_v = va + t * (vb - va)
        return float(best_v)

    def closest_point(self, p):
        p = np.asarray(p, dtype=float)
        best_d, best_q = np.inf, self.points[0]
        for k in range(len(self.points) - 1):
            a, b = self.points[k], self.points[k + 1]
            t = _project_t(p, a, b)
            q = a + t * (b - a)
            d = np.linalg.norm(p - q)
            if d < best_d:
                best_d, best_q = d, q
        return best_q, float(best_d)


def _project_t(p, a, b):
    e = b - a
    L2 = float(e @ e)
    if L2 == 0.0:
        return 0.0
    return min(1.0, max(0.0, float((p - a) @ e) / L2))


def trace_characteristic(b, origin, inside, inflow_value, f=0.0,
                         step=1e-2, max_steps=200000):
    """Integrate dx/dt = b from the origin until leaving the domain.

    `inside(p)` tests domain membership.  Straight-line shortcut for
    constant winds.  The value along the path solves du/dt = f(x(t))
    starting from the inflow value (the reduced problem along the
    characteristic).
    """
    bf = vector_field(b)
    ff = scalar_field(f)
    x = np.asarray(origin, dtype=float)
    b0 = bf(x)
    if np.linalg.norm(b0) == 0.0:
        raise TracingError("wind vanishes at the origin")
    probe = x + 1e-9 * b0 / np.linalg.norm(b0)
    if not inside(probe):
        raise TracingError("wind does not point into the domain at the origin")
    constant = not callable(b)
    pts = [x.copy()]
    vals = [float(inflow_value)]
    if constant:
        d = b0 / np.linalg.norm(b0)
        # bisect the exit distance
        lo, hi = 0.0, step
        while inside(x + hi * d):
            lo, hi = hi, 2.0 * hi
            if hi > 1e6:
                raise TracingError("characteristic does not exit the domain")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if inside(x + mid * d):
                lo = mid
            else:
                hi = mid
        exit_pt = x + 0.5 * (lo + hi) * d
        n_sub = max(2, int(np.ceil(np.linalg.norm(exit_pt - x) / step)))
        v = float(inflow_value)
        for k in range(1, n_sub + 1):
            p_prev = pts[-1]
            p = x + (exit_pt - x) * (k / n_sub)
            # du/ds = f/|b| along arc length
            ds = np.linalg.norm(p - p_prev)
            v += ds * ff(0.5 * (p + p_prev)) / np.linalg.norm(b0)
            pts.append(p)
            vals.append(v)
        return LayerCharacteristic(np.asarray(pts), np.asarray(vals), x)
    v = float(inflow_value)
    cur = x.copy()
    for _ in range(max_steps):
        k1 = bf(cur)
        k2 = bf(cur + 0.5 * step * k1)
        k3 = bf(cur + 0.5 * step * k2)
        k4 = bf(cur + step * k3)
        nxt = cur + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        v += step * 0.5 * (ff(cur) + ff(nxt))
        if not inside(nxt):
            pts.append(nxt)
            vals.append(v)
            return LayerCharacteristic(np.asarray(pts), np.asarray(vals), x)
        pts.append(nxt)
        vals.append(v)
        cur = nxt
    raise TracingError("characteristic did not exit within the step budget")


def straight_characteristic(p0, p1, value):
    """Constant-value straight layer characteristic between two points."""
    pts = np.asarray([p0, p1], dtype=float)
    return LayerCharacteristic(pts, np.array([value, value]),
                               pts[0].copy())


# ---------------------------------------------------------------------------
# node snapping


def _elements_crossed(mesh, path):
    """Elements whose interior is crossed by the path polyline."""
    crossed = []
    for k in range(mesh.n_elements):
        tri = mesh.nodes[mesh.elements[k]]
        h = np.sqrt(np.abs(_tri_area(tri))) + 1e-300
        for s in range(len(path.points) - 1):
            chord = _clip_segment_to_triangle(path.points[s],
                                              path.points[s + 1], tri)
            if chord is not None and \
                    np.linalg.norm(chord[1] - chord[0]) > 1e-12 * h:
                crossed.append(k)
                break
    return crossed


def _tri_area(tri):
    return 0.5 * ((tri[1, 0] - tri[0, 0]) * (tri[2, 1] - tri[0, 1])
                  - (tri[2, 0] - tri[0, 0]) * (tri[1, 1] - tri[0, 1]))


def _clip_segment_to_triangle(p, q, tri):
    """Portion of segment pq inside the (ccw) triangle, or None."""
    d = q - p
    lo, hi = 0.0, 1.0
    for a in range(3):
        u, w = tri[a], tri[(a + 1) % 3]
        e = w - u
        n = np.array([-e[1], e[0]])  # inward for ccw
        num = float(n @ (p - u))
        den = float(n @ d)
        if abs(den) < 1e-300:
            if num < -1e-12 * (np.linalg.norm(n) + 1.0):
                return None
            continue
        t = -num / den
        if den > 0:
            lo = max(lo, t)
        else:
            hi = min(hi, t)
        if lo > hi:
            return None
    return np.array([p + lo * d, p + hi * d])


def snap_nodes(mesh, path, threshold_rule="nearest"):
    """Move mesh nodes onto the layer characteristic.

    threshold_rule:
      'nearest'      move the closest vertex of every crossed element
      'hmin2/10'     move vertices closer than (h_min(tau))^2 / 10
      '2hmin2'       move vertices closer than 2 h_min(tau)^2
      a float        fixed distance threshold
    Snaps that would invert an element are skipped and reported.
    Returns (mesh, moved node list, skipped node list).
    """
    nodes = mesh.nodes.copy()
    nmap = mesh.node_to_elements()
    bnodes = mesh.boundary_node_set()
    badj = {}
    for i, j, _t in mesh.boundary_edges:
        badj.setdefault(i, []).append(j)
        badj.setdefault(j, []).append(i)

    def boundary_snap_ok(v, q):
        # a boundary node may move only along its own boundary segments
        for u in badj.get(v, ()):
            a = nodes[v] - nodes[u]
            c = (q[0] - nodes[u][0]) * a[1] - (q[1] - nodes[u][1]) * a[0]
            if abs(c) > 1e-12 * (np.linalg.norm(a) ** 2 + 1.0):
                return False
        return True

    moved, skipped = [], []
    candidates = {}
    for k in _elements_crossed(mesh, path):
        tri = mesh.elements[k]
        pts = nodes[tri]
        hmin = min(np.linalg.norm(pts[a] - pts[(a + 1) % 3]) for a in range(3))
        dists = []
        for v in tri:
            _q, d = path.closest_point(nodes[v])
            dists.append((d, int(v)))
        dists.sort()
        if threshold_rule == "nearest":
            sel = [dists[0][1]]
        else:
            if threshold_rule == "hmin2/10":
                thr = hmin * hmin / 10.0
            elif threshold_rule == "2hmin2":
                thr = 2.0 * hmin * hmin
            else:
                thr = float(threshold_rule)
            sel = [v for d, v in dists if d <= thr]
        for v in sel:
            candidates[v] = True
    for v in sorted(candidates):
        q, d = path.closest_point(nodes[v])
        if d == 0.0:
            continue
        if v in bnodes and not boundary_snap_ok(v, q):
            skipped.append(v)
            continue
        old = nodes[v].copy()
        nodes[v] = q
        sub = mesh.elements[nmap[v]]
        if np.all(_areas_of(nodes, sub) > 0):
            moved.append(v)
        else:
            nodes[v] = old
            skipped.append(v)
    out = Triangulation(nodes, mesh.elements, mesh.boundary_edges,
                        mesh.constraint_edges, mesh.node_values)
    return out, moved, skipped


def _areas_of(nodes, elements):
    p = nodes[elements]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


# ---------------------------------------------------------------------------
# embedding


def embed_characteristic(mesh, path):
    """Split every crossed element so the path becomes a chain of edges.

    Vertex pass-through bisects the element; a two-edge crossing yields
    one triangle plus a quadrilateral split into four around its
    arithmetic-mean center.  On-path edges become interior constraint
    edges carrying the characteristic's value; returns
    (mesh, on_path_node list).
    """
    nodes = mesh.nodes.tolist()
    edge_points = {}   # edge_key -> list of (t along edge, node index)

    def node_on_edge(i, j, p):
        """Existing or new node at point p on edge (i, j); the parameter
        is taken from the lower-index endpoint so both adjacent elements
        resolve the same crossing to the same node."""
        key = _edge_key(i, j)
        pa, pb = np.asarray(nodes[key[0]]), np.asarray(nodes[key[1]])
        L2 = float((pb - pa) @ (pb - pa))
        t = float((p - pa) @ (pb - pa)) / L2
        if t <= 1e-9:
            return key[0]
        if t >= 1.0 - 1e-9:
            return key[1]
        for tt, idx in edge_points.get(key, []):
            if abs(tt - t) < 1e-9:
                return idx
        idx = len(nodes)
        nodes.append(list(pa + t * (pb - pa)))
        edge_points.setdefault(key, []).append((t, idx))
        return idx

    def classify_point(tri, pts, p, h):
        """(kind, data): ('vertex', node) or ('edge', (i, j, point))."""
        for a in range(3):
            if np.linalg.norm(p - pts[a]) <= 1e-9 * h:
                return ("vertex", int(tri[a]))
        for a in range(3):
            i, j = int(tri[a]), int(tri[(a + 1) % 3])
            pa, pb = pts[a], pts[(a + 1) % 3]
            e = pb - pa
            L = np.linalg.norm(e)
            t = float((p - pa) @ e) / (L * L)
            dist = np.linalg.norm(p - (pa + t * e))
            if -1e-9 < t < 1 + 1e-9 and dist <= 1e-9 * h:
                return ("edge", (i, j, p))
        raise DegenerateCrossingError(
            "path endpoint not on the element boundary; snap nodes first")

    new_elements = []
    on_path_edges = []
    for k in range(mesh.n_elements):
        tri = mesh.elements[k]
        pts = mesh.nodes[tri]
        h = max(np.linalg.norm(pts[a] - pts[(a + 1) % 3]) for a in range(3))
        chord = None
        for s in range(len(path.points) - 1):
            c = _clip_segment_to_triangle(path.points[s], path.points[s + 1],
                                          pts)
            if c is None:
                continue
            if np.linalg.norm(c[1] - c[0]) <= 1e-10 * h:
                continue
            if chord is None:
                chord = c
            else:
                # merge collinear consecutive pieces
                chord = np.array([chord[0], c[1]])
        if chord is None:
            new_elements.append(tuple(int(v) for v in tri))
            continue
        p_in, p_out = chord
        mid = 0.5 * (p_in + p_out)
        value = path.value_at(mid)
        # chord lying along an existing edge: record it and keep the element
        along = None
        for a in range(3):
            i, j = int(tri[a]), int(tri[(a + 1) % 3])
            pa, pb = pts[a], pts[(a + 1) % 3]
            e = pb - pa
            L = np.linalg.norm(e)
            d_in = abs((p_in - pa)[0] * e[1] - (p_in - pa)[1] * e[0]) / L
            d_out = abs((p_out - pa)[0] * e[1] - (p_out - pa)[1] * e[0]) / L
            if d_in <= 1e-9 * h and d_out <= 1e-9 * h:
                along = (i, j)
                break
        if along is not None:
            # the clipped chord endpoints are unreliable when the path is
            # collinear with the edge (degenerate half-plane clipping), so
            # recompute the covered part as the 1d overlap of the path
            # with the edge; it may be partial (a path end mid-edge)
            key = _edge_key(along[0], along[1])
            pa, pb = np.asarray(nodes[key[0]]), np.asarray(nodes[key[1]])
            e = pb - pa
            L = np.linalg.norm(e)
            t0, t1 = np.inf, -np.inf
            for s in range(len(path.points) - 1):
                q0, q1 = path.points[s], path.points[s + 1]
                d0 = abs((q0 - pa)[0] * e[1] - (q0 - pa)[1] * e[0]) / L
                d1 = abs((q1 - pa)[0] * e[1] - (q1 - pa)[1] * e[0]) / L
                if d0 > 1e-9 * h or d1 > 1e-9 * h:
                    continue
                s0 = float((q0 - pa) @ e) / (L * L)
                s1 = float((q1 - pa) @ e) / (L * L)
                lo, hi = min(s0, s1), max(s0, s1)
                t0 = min(t0, max(lo, 0.0))
                t1 = max(t1, min(hi, 1.0))
            if t1 > t0:
                n_in = node_on_edge(key[0], key[1], pa + t0 * e)
                n_out = node_on_edge(key[0], key[1], pa + t1 * e)
                if n_in != n_out:
                    on_path_edges.append((n_in, n_out, value))
            new_elements.append(tuple(int(v) for v in tri))
            continue
        try:
            kin = classify_point(tri, pts, p_in, h)
        except DegenerateCrossingError:
            if not np.allclose(p_in, path.points[0]):
                raise
            # path origin interior to the element (e.g. a layer starting
            # on a curved boundary between nodes): attach it to the
            # nearest vertex, perturbing the origin by at most h
            a = int(np.argmin(np.linalg.norm(pts - p_in, axis=1)))
            kin = ("vertex", int(tri[a]))
        kout = classify_point(tri, pts, p_out, h)
        if kin[0] == "vertex" and kout[0] == "vertex":
            a, b = kin[1], kout[1]
            if a != b:
                on_path_edges.append((a, b, value))
            new_elements.append(tuple(int(v) for v in tri))
        elif kin[0] == "vertex" or kout[0] == "vertex":
            vtx = kin[1] if kin[0] == "vertex" else kout[1]
            i, j, p = kin[1] if kin[0] == "edge" else kout[1]
            m = node_on_edge(i, j, p)
            if m == vtx:
                new_elements.append(tuple(int(v) for v in tri))
                continue
            if vtx in (i, j):
                # chord covers part of edge (i, j); m is registered, so
                # the conformity pass below splits both neighbors
                on_path_edges.append((vtx, m, value))
                new_elements.append(tuple(int(v) for v in tri))
                continue
            opp = vtx
            new_elements.append((opp, i, m))
            new_elements.append((opp, m, j))
            on_path_edges.append((opp, m, value))
        else:
            (i1, j1, p1), (i2, j2, p2) = kin[1], kout[1]
            m1 = node_on_edge(i1, j1, p1)
            m2 = node_on_edge(i2, j2, p2)
            k1, k2 = _edge_key(i1, j1), _edge_key(i2, j2)
            if k1 == k2:
                # chord lies inside a single edge between two new nodes
                if m1 != m2:
                    on_path_edges.append((m1, m2, value))
                new_elements.append(tuple(int(v) for v in tri))
                continue
            shared = set(k1) & set(k2)
            if not shared:
                raise DegenerateCrossingError(
                    "crossed edges share no vertex")
            a = shared.pop()
            o1 = (set(k1) - {a}).pop()
            o2 = (set(k2) - {a}).pop()
            new_elements.append((a, m1, m2))
            g = len(nodes)
            quad = [m1, o1, o2, m2]
            nodes.append(list(np.mean([nodes[q] for q in quad], axis=0)))
            new_elements.append((m1, o1, g))
            new_elements.append((o1, o2, g))
            new_elements.append((o2, m2, g))
            new_elements.append((m2, m1, g))
            on_path_edges.append((m1, m2, value))

    # conformity pass: fan out any element whose edge carries chain points
    # (partial-edge chords register nodes on edges of unsplit elements)
    resolved = []
    stack = list(new_elements)
    while stack:
        tri = stack.pop()
        for a in range(3):
            key = _edge_key(int(tri[a]), int(tri[(a + 1) % 3]))
            pieces = edge_points.get(key)
            if not pieces:
                continue
            chain = [key[0]] + [idx for _t, idx in sorted(pieces)] + [key[1]]
            opp = int(tri[(a + 2) % 3])
            for c in range(len(chain) - 1):
                stack.append((opp, chain[c], chain[c + 1]))
            break
        else:
            resolved.append(tuple(int(v) for v in tri))
    new_elements = resolved

    # split boundary and constraint edges that received new nodes
    def split_tagged(edge_list, rebuild):
        out = []
        stack = list(edge_list)
        while stack:
            entry = stack.pop()
            i, j = entry[0], entry[1]
            key = _edge_key(i, j)
            if key in edge_points and edge_points[key]:
                pieces = sorted(edge_points[key])
                chain = [key[0]] + [idx for _t, idx in pieces] + [key[1]]
                for a in range(len(chain) - 1):
                    out.append(rebuild(chain[a], chain[a + 1], entry))
            else:
                out.append(entry)
        out.sort(key=lambda e: (e[0], e[1]))
        return out

    boundary = split_tagged(mesh.boundary_edges, lambda i, j, e: (i, j, e[2]))
    constraints = split_tagged(mesh.constraint_edges,
                               lambda i, j, e: (i, j, e[2]))
    # dedupe on-path edges (interior ones are seen from both sides)
    seen = {}
    for i, j, v in on_path_edges:
        key = _edge_key(i, j)
        pieces = edge_points.get(key)
        if pieces:
            chain = [key[0]] + [idx for _t, idx in sorted(pieces)] + [key[1]]
            for a in range(len(chain) - 1):
                seen[_edge_key(chain[a], chain[a + 1])] = v
        else:
            seen[key] = v
    node_values = dict(mesh.node_values)
    on_path_nodes = set()
    emap_count = {}
    for tri in new_elements:
        for a in range(3):
            key = _edge_key(tri[a], tri[(a + 1) % 3])
            emap_count[key] = emap_count.get(key, 0) + 1
    bkeys = {_edge_key(i, j) for i, j, _t in boundary}
    for key, v in sorted(seen.items()):
        i, j = key
        on_path_nodes.add(i)
        on_path_nodes.add(j)
        node_values.setdefault(i, v)
        node_values.setdefault(j, v)
        if emap_count.get(key, 0) == 2 and key not in bkeys:
            constraints.append((i, j, v))
    out = Triangulation(np.asarray(nodes), new_elements, boundary,
                        constraints, node_values)
    return out, sorted(on_path_nodes)
