"""Geometry of the wind field: boundary classification, the element sets
B_h, Omega_h+ and Omega_hat, the constraint nodes N_delta, and the
uniqueness diagnostics/remediation machinery.
"""

from dataclasses import dataclass, field

import numpy as np

from .meshes import Triangulation, red_refine, _edge_key

CHARACTERISTIC_RTOL = 1e-12
PARALLEL_RTOL = 1e-10


class ValidationError(ValueError):
    pass


class UpwindNotFound(Exception):
    """No element contains x - lambda*b for small lambda > 0."""


class RemediationError(RuntimeError):
    """Defects persisted after the maximum number of refinement rounds."""


def vector_field(b):
    """Normalize a wind specification to a callable point -> (2,) array."""
    if callable(b):
        return lambda p: np.asarray(b(np.asarray(p, dtype=float)), dtype=float)
    vec = np.asarray(b, dtype=float)
    return lambda p: vec


@dataclass
class BoundaryClassification:
    """Per-boundary-edge classification against the wind."""

    inflow: list          # boundary-edge indices with b.n < 0
    characteristic: list  # |b.n| <= tol
    outflow: list         # b.n > 0
    gamma_d_0plus: list   # node pairs (i, j) of (outflow u char) n Dirichlet,
                          # plus interior constraint edges (both-side walls)

    def gamma_d_0plus_nodes(self):
        out = set()
        for i, j in self.gamma_d_0plus:
            out.add(i)
            out.add(j)
        return out


def classify_boundary(mesh, b):
    """Classify boundary edges by the sign of b.n at the edge midpoint.

    Raises ValidationError if some inflow edge is not Dirichlet
    (Gamma- must be contained in Gamma_D).
    """
    bf = vector_field(getattr(b, "b", b))
    emap = mesh.edge_to_elements()
    inflow, charac, outflow, gplus = [], [], [], []
    for k, (i, j, tag) in enumerate(mesh.boundary_edges):
        mid = 0.5 * (mesh.nodes[i] + mesh.nodes[j])
        bmid = bf(mid)
        (elem,) = emap[_edge_key(i, j)]
        opp = [v for v in mesh.elements[elem] if v not in (i, j)][0]
        e = mesh.nodes[j] - mesh.nodes[i]
        n = np.array([-e[1], e[0]])
        if np.dot(n, mesh.nodes[opp] - mesh.nodes[i]) > 0:
            n = -n  # outward
        n = n / np.linalg.norm(n)
        bn = float(np.dot(bmid, n))
        tol = CHARACTERISTIC_RTOL * np.linalg.norm(bmid)
        if abs(bn) <= tol:
            charac.append(k)
        elif bn < 0:
            inflow.append(k)
            if tag != "D":
                raise ValidationError(
                    "inflow boundary edge (%d,%d) is not Dirichlet" % (i, j))
        else:
            outflow.append(k)
        if tag == "D" and bn >= -tol:
            gplus.append((i, j))
    for i, j, _v in mesh.constraint_edges:
        gplus.append((i, j))
    return BoundaryClassification(inflow, charac, outflow, gplus)


def upwind_element(mesh, node, b):
    """Element containing x_i - lambda*b for all small lambda > 0.

    When the ray runs along an edge, the lowest-index adjacent element
    is selected.  Raises UpwindNotFound when no element qualifies.
    """
    bvec = np.asarray(b, dtype=float)
    nb = np.linalg.norm(bvec)
    if nb == 0.0:
        raise ValidationError("wind vanishes at node %d" % node)
    d = -bvec / nb
    x = mesh.nodes[node]
    hits = []
    for k, tri in enumerate(mesh.elements):
        if node not in tri:
            continue
        others = [v for v in tri if v != node]
        e1 = mesh.nodes[others[0]] - x
        e2 = mesh.nodes[others[1]] - x
        det = e1[0] * e2[1] - e1[1] * e2[0]
        if det == 0.0:
            continue
        # d = alpha*e1 + beta*e2; inside the cone iff alpha, beta >= 0
        alpha = (d[0] * e2[1] - d[1] * e2[0]) / det
        beta = (e1[0] * d[1] - e1[1] * d[0]) / det
        scale = abs(alpha) + abs(beta) + 1.0 / min(
            np.linalg.norm(e1), np.linalg.norm(e2))
        tol = 1e-12 * scale
        if alpha >= -tol and beta >= -tol:
            hits.append(k)
    if not hits:
        raise UpwindNotFound("no upwind element at node %d" % node)
    return min(hits)


@dataclass
class OmegaPlusDecomposition:
    omega_plus: list
    omega_hat: list
    n_delta: list
    b_h: list
    removed_upwind: list = field(default_factory=list)

    def omega_plus_set(self):
        return set(self.omega_plus)

    def omega_hat_set(self):
        return set(self.omega_hat)


def _interior_nodes_of(mesh, element_set):
    """Free nodes whose incident elements all lie in element_set.

    Pinned nodes (Dirichlet, constraint edge, prescribed value) are
    excluded: their dof is determined by data.  Free Neumann-wall nodes
    are included; when fully surrounded by Omega_h+ they have an empty
    residual row and a relaxed Galerkin row, so without an Omega_hat
    anchor nothing determines them.
    """
    excluded = (mesh.dirichlet_node_set() | mesh.constraint_node_set()
                | set(mesh.node_values))
    nmap = mesh.node_to_elements()
    out = []
    for v in range(mesh.n_nodes):
        if v in excluded or not nmap[v]:
            continue
        if all(k in element_set for k in nmap[v]):
            out.append(v)
    return out


def _extract_n_delta(mesh, omega_plus_set):
    """Vertices of partial Omega_h+ that are not Dirichlet nodes."""
    dir_nodes = mesh.dirichlet_node_set()
    bnd_nodes = mesh.boundary_node_set()
    nmap = mesh.node_to_elements()
    n_delta = []
    seen = set()
    for k in sorted(omega_plus_set):
        for v in mesh.elements[k]:
            v = int(v)
            if v in seen:
                continue
            seen.add(v)
            on_bdry = (v in bnd_nodes
                       or any(e not in omega_plus_set for e in nmap[v]))
            if on_bdry and v not in dir_nodes:
                n_delta.append(v)
    return sorted(n_delta)


def build_omega_plus(mesh, classification, b):
    """B_h = elements meeting Gamma_D^{0+}; remove the upwind triangle of
    every node interior to B_h; extract N_delta."""
    bf = vector_field(b)
    gnodes = classification.gamma_d_0plus_nodes()
    b_h = sorted(k for k, tri in enumerate(mesh.elements)
                 if any(int(v) in gnodes for v in tri))
    b_h_set = set(b_h)
    omega_plus = set(b_h)
    removed = []
    for v in _interior_nodes_of(mesh, b_h_set):
        up = upwind_element(mesh, v, bf(mesh.nodes[v]))
        if up in omega_plus:
            omega_plus.discard(up)
            removed.append(up)
    omega_hat = sorted(set(range(mesh.n_elements)) - omega_plus)
    return OmegaPlusDecomposition(sorted(omega_plus), omega_hat,
                                  _extract_n_delta(mesh, omega_plus),
                                  b_h, sorted(removed))


def build_omega_plus_shrunk(mesh, b, delta, bounds=(-1.0, 1.0),
                            samples_per_side=800):
    """Omega_h+ = elements intersecting the outflow part (b.n >= 0, n the
    outward normal of the inset square) of the boundary of the square
    shrunk by delta.  Used for winds tangent to the physical boundary."""
    lo, hi = bounds
    if not delta > 0 or lo + delta >= hi - delta:
        raise ValidationError("inset delta empties the domain")
    bf = vector_field(b)
    a, c = lo + delta, hi - delta
    sides = [
        (np.array([c, a]), np.array([c, c]), np.array([1.0, 0.0])),    # right
        (np.array([a, c]), np.array([c, c]), np.array([0.0, 1.0])),    # top
        (np.array([a, a]), np.array([a, c]), np.array([-1.0, 0.0])),   # left
        (np.array([a, a]), np.array([c, a]), np.array([0.0, -1.0])),   # bottom
    ]
    pts = []
    for p0, p1, n in sides:
        ts = (np.arange(samples_per_side) + 0.5) / samples_per_side
        seg = p0[None, :] + ts[:, None] * (p1 - p0)[None, :]
        keep = np.array([np.dot(bf(p), n) >= 0.0 for p in seg])
        pts.extend(seg[keep])
    if not pts:
        raise ValidationError("outflow portion of the inset square is empty")
    pts = np.asarray(pts)
    omega_plus = set()
    p0 = mesh.nodes[mesh.elements[:, 0]]
    p1 = mesh.nodes[mesh.elements[:, 1]]
    p2 = mesh.nodes[mesh.elements[:, 2]]
    det = ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
           - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))
    for q in pts:
        l1 = ((q[0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
              - (p2[:, 0] - p0[:, 0]) * (q[1] - p0[:, 1])) / det
        l2 = ((p1[:, 0] - p0[:, 0]) * (q[1] - p0[:, 1])
              - (q[0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1])) / det
        inside = (l1 >= -1e-12) & (l2 >= -1e-12) & (l1 + l2 <= 1 + 1e-12)
        omega_plus.update(np.nonzero(inside)[0].tolist())
    b_h = sorted(omega_plus)
    removed = []
    for v in _interior_nodes_of(mesh, omega_plus):
        bv = bf(mesh.nodes[v])
        if np.linalg.norm(bv) == 0.0:
            continue
        up = upwind_element(mesh, v, bv)
        if up in omega_plus:
            omega_plus.discard(up)
            removed.append(up)
    omega_hat = sorted(set(range(mesh.n_elements)) - omega_plus)
    return OmegaPlusDecomposition(sorted(omega_plus), omega_hat,
                                  _extract_n_delta(mesh, omega_plus),
                                  b_h, sorted(removed))


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class DiagnosticsReport:
    components: list            # element lists, largest first
    isolated_components: list   # all but the largest component
    parallel_edges: list        # (element, (i, j)) downwind with edge || b
    downwind: list              # Omega_hat elements downwind of Omega_h+

    def has_defects(self):
        return bool(self.isolated_components) or bool(self.parallel_edges)

    def to_text(self):
        lines = ["components: %d" % len(self.components)]
        for comp in self.components:
            lines.append("  size %d: %s" % (len(comp), " ".join(map(str, comp))))
        lines.append("isolated components: %d" % len(self.isolated_components))
        for comp in self.isolated_components:
            lines.append("  %s" % " ".join(map(str, comp)))
        lines.append("parallel downwind edges: %d" % len(self.parallel_edges))
        for k, (i, j) in self.parallel_edges:
            lines.append("  element %d edge (%d,%d)" % (k, i, j))
        lines.append("downwind elements: %s" % " ".join(map(str, self.downwind)))
        return "\n".join(lines) + "\n"


def _ray_hits_triangle(x, d, tri_pts, tmin=1e-12):
    """Does the ray x + t*d (t > tmin) intersect the triangle?

    Clips the parameter interval against the triangle's three edge
    half-planes (triangle positively oriented).
    """
    lo, hi = tmin, np.inf
    for a in range(3):
        p, q = tri_pts[a], tri_pts[(a + 1) % 3]
        e = q - p
        n = np.array([-e[1], e[0]])  # inward normal for ccw orientation
        num = np.dot(n, x - p)
        den = np.dot(n, d)
        if abs(den) < 1e-300:
            if num < -1e-14 * (np.linalg.norm(n) + 1.0):
                return False
            continue
        t_cross = -num / den
        if den > 0:
            lo = max(lo, t_cross)
        else:
            hi = min(hi, t_cross)
        if lo > hi:
            return False
    return lo <= hi


def element_downwind_of(mesh, decomposition, k, bf):
    """True if the upwind ray from element k's barycenter hits Omega_h+."""
    bary = mesh.nodes[mesh.elements[k]].mean(axis=0)
    b = bf(bary)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return False
    d = -b / nb
    for j in decomposition.omega_plus:
        if _ray_hits_triangle(bary, d, mesh.nodes[mesh.elements[j]]):
            return True
    return False


def first_upwind_hit(mesh, decomposition, k, bf):
    """Omega_h+ element first hit by the upwind ray from k's barycenter."""
    bary = mesh.nodes[mesh.elements[k]].mean(axis=0)
    b = bf(bary)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return None
    d = -b / nb
    best, best_t = None, np.inf
    for j in decomposition.omega_plus:
        t = _ray_entry_parameter(bary, d, mesh.nodes[mesh.elements[j]])
        if t is not None and t < best_t:
            best, best_t = j, t
    return best


def _ray_entry_parameter(x, d, tri_pts, tmin=1e-12):
    lo, hi = tmin, np.inf
    for a in range(3):
        p, q = tri_pts[a], tri_pts[(a + 1) % 3]
        e = q - p
        n = np.array([-e[1], e[0]])
        num = np.dot(n, x - p)
        den = np.dot(n, d)
        if abs(den) < 1e-300:
            if num < -1e-14 * (np.linalg.norm(n) + 1.0):
                return None
            continue
        t_cross = -num / den
        if den > 0:
            lo = max(lo, t_cross)
        else:
            hi = min(hi, t_cross)
        if lo > hi:
            return None
    return lo


def diagnose(decomposition, mesh, b):
    """Connectivity of Omega_hat and wind-parallel downwind edges."""
    bf = vector_field(b)
    hat = decomposition.omega_hat
    hat_set = set(hat)
    # connected components under shared-edge adjacency
    parent = {k: k for k in hat}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for key, elems in mesh.edge_to_elements().items():
        if len(elems) == 2 and all(e in hat_set for e in elems):
            a, c = find(elems[0]), find(elems[1])
            if a != c:
                parent[max(a, c)] = min(a, c)
    groups = {}
    for k in hat:
        groups.setdefault(find(k), []).append(k)
    components = sorted((sorted(g) for g in groups.values()),
                        key=lambda g: (-len(g), g))
    # a component carrying any prescribed data (Dirichlet or embedded
    # values) is pinned through it along characteristics; only fully
    # data-free components admit a convective kernel
    pinned = (mesh.dirichlet_node_set() | mesh.constraint_node_set()
              | set(mesh.node_values))
    isolated = [comp for comp in components
                if not set(mesh.elements[comp].ravel().tolist()) & pinned]

    nmap = mesh.node_to_elements()

    def opposite_edge_parallel(k, opp):
        tri = [int(v) for v in mesh.elements[k]]
        i, j = [v for v in tri if v != opp]
        bary = mesh.nodes[tri].mean(axis=0)
        bvec = bf(bary)
        e = mesh.nodes[j] - mesh.nodes[i]
        cross = bvec[0] * e[1] - bvec[1] * e[0]
        return (abs(cross) <= PARALLEL_RTOL * np.linalg.norm(bvec)
                * np.linalg.norm(e)), _edge_key(i, j)

    downwind, parallel = [], []
    for k in hat:
        if not element_downwind_of(mesh, decomposition, k, bf):
            continue
        downwind.append(k)
        for opp in (int(v) for v in mesh.elements[k]):
            # kernel candidate: the basis function of the vertex opposite
            # a wind-parallel edge.  It needs a dof (not pinned) and its
            # convective derivative must vanish on every element of
            # Omega_hat it touches, i.e. each such element must have its
            # opposite edge parallel to the wind as well
            if opp in pinned:
                continue
            ok, key = opposite_edge_parallel(k, opp)
            if not ok:
                continue
            if all(opposite_edge_parallel(kk, opp)[0]
                   for kk in nmap[opp] if kk in hat_set):
                parallel.append((int(k), key))
    return DiagnosticsReport(components, isolated, sorted(parallel), downwind)


# ---------------------------------------------------------------------------
# remediation


def absorb_isolated(mesh, decomposition, report, b):
    """Remove isolated components of Omega_hat by moving their elements
    into Omega_h+ and relaxing the equations at their boundary nodes.

    The alternative to upwind refinement; the right remedy when the
    defect has no refinable Omega_h+ element upwind (e.g. a pocket cut
    off by an embedded layer next to a Neumann wall).
    """
    if not report.isolated_components:
        return decomposition
    bf = vector_field(b)
    plus = decomposition.omega_plus_set()
    for comp in report.isolated_components:
        plus |= set(comp)
    # enlargement can strip free nodes of all Omega_hat support; restore
    # an anchor by removing their upwind elements, as in build_omega_plus
    removed = list(decomposition.removed_upwind)
    for v in _interior_nodes_of(mesh, plus):
        up = upwind_element(mesh, v, bf(mesh.nodes[v]))
        if up in plus:
            plus.discard(up)
            removed.append(up)
    omega_hat = sorted(set(range(mesh.n_elements)) - plus)
    return OmegaPlusDecomposition(sorted(plus), omega_hat,
                                  _extract_n_delta(mesh, plus),
                                  decomposition.b_h, sorted(removed))


def _refinement_targets(mesh, decomposition, report, bf):
    """Omega_h+ elements upwind of each defect element."""
    plus = decomposition.omega_plus_set()
    defects = []
    for comp in report.isolated_components:
        defects.extend((k, False) for k in comp)
    defects.extend((k, True) for k, _e in report.parallel_edges)
    targets = set()
    emap = mesh.edge_to_elements()
    for k, is_parallel in defects:
        local = set()
        a, bb, c = mesh.elements[k]
        bary = mesh.nodes[[a, bb, c]].mean(axis=0)
        bvec = bf(bary)
        for i, j in ((a, bb), (bb, c), (c, a)):
            adj = [e for e in emap[_edge_key(int(i), int(j))] if e != k]
            if not adj or adj[0] not in plus:
                continue
            e = mesh.nodes[j] - mesh.nodes[i]
            n = np.array([-e[1], e[0]])
            opp = [v for v in (a, bb, c) if v not in (i, j)][0]
            if np.dot(n, mesh.nodes[opp] - mesh.nodes[i]) > 0:
                n = -n  # outward from the defect element
            if np.dot(bvec, n) <= 1e-12 * np.linalg.norm(bvec) * np.linalg.norm(n):
                local.add(adj[0])
        if is_parallel:
            hit = first_upwind_hit(mesh, decomposition, k, bf)
            if hit is not None:
                local.add(hit)
        if not local:
            # fallback: every Omega_h+ edge-neighbor, else the first ray hit
            for i, j in ((a, bb), (bb, c), (c, a)):
                for e in emap[_edge_key(int(i), int(j))]:
                    if e != k and e in plus:
                        local.add(e)
            if not local:
                hit = first_upwind_hit(mesh, decomposition, k, bf)
                if hit is not None:
                    local.add(hit)
        targets |= local
    return sorted(targets)


def remediate(mesh, decomposition, report, b, max_rounds=2):
    """Red-refine the Omega_h+ elements upwind of each defect; rebuild the
    decomposition and repeat at most once.  Returns the repaired mesh."""
    bf = vector_field(b)
    if not report.has_defects():
        return mesh
    current = mesh
    for _ in range(max_rounds):
        targets = _refinement_targets(current, decomposition, report, bf)
        if not targets:
            raise RemediationError("no refinable upwind elements found")
        current = red_refine(current, targets)
        classification = classify_boundary(current, b)
        decomposition = build_omega_plus(current, classification, b)
        report = diagnose(decomposition, current, b)
        if not report.has_defects():
            return current
    raise RemediationError(
        "uniqueness defects persisted after %d refinement rounds" % max_rounds)
