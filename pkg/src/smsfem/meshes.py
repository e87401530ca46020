"""1D partitions and 2D conforming triangulations.

Generators (uniform, Shishkin, perturbed structured), outflow strips,
red refinement with hanging-node closure, and plain-text file I/O.
All operations return new meshes; meshes are immutable once built.
"""

import math
from dataclasses import dataclass

import numpy as np


class ArgumentError(ValueError):
    pass


class GenerationError(RuntimeError):
    pass


class MeshFileError(ValueError):
    """Parse or validation failure; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


# ---------------------------------------------------------------------------
# 1D meshes


class Mesh1D:
    """Strictly increasing partition of an interval (default [0, 1])."""

    def __init__(self, nodes):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.size < 3:
            raise ArgumentError("mesh needs at least 2 cells")
        if np.any(np.diff(nodes) <= 0):
            raise ArgumentError("nodes must be strictly increasing")
        self.nodes = nodes

    @property
    def J(self):
        return self.nodes.size - 1

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def h(self):
        return float(self.widths.max())


def uniform_mesh_1d(J, interval=(0.0, 1.0)):
    if J < 2:
        raise ArgumentError("J must be at least 2")
    a, b = interval
    return Mesh1D(np.linspace(a, b, J + 1))


@dataclass(frozen=True)
class ShishkinSpec1D:
    """Shishkin transition spec: sigma = min(1/2, (2/beta) eps log N)."""

    N: int
    eps: float
    beta: float = 1.0

    @property
    def sigma(self):
        return min(0.5, (2.0 / self.beta) * self.eps * math.log(self.N))


def shishkin_mesh_1d(spec=None, N=None, eps=None, beta=1.0, sigma=None):
    """Piecewise-uniform mesh: N cells on [0, 1-sigma], N on [1-sigma, 1].

    Either pass a ShishkinSpec1D, or N/eps/beta, or N with an explicit
    sigma (e.g. the 4*eps*log(2N) convention).
    """
    if spec is not None:
        N, sigma = spec.N, spec.sigma
    elif sigma is None:
        if N is None or eps is None:
            raise ArgumentError("need N and eps (or an explicit sigma)")
        sigma = ShishkinSpec1D(N, eps, beta).sigma
    if N < 2:
        raise ArgumentError("N must be at least 2 (log N degenerate for N=1)")
    if not 0.0 < sigma <= 0.5:
        raise ArgumentError("sigma must lie in (0, 1/2]")
    coarse = np.arange(N + 1) * (1.0 - sigma) / N
    fine = (1.0 - sigma) + np.arange(1, N + 1) * sigma / N
    return Mesh1D(np.concatenate([coarse, fine]))


# ---------------------------------------------------------------------------
# 2D triangulations


class Triangulation:
    """Conforming triangulation with tagged boundary edges.

    Parameters
    ----------
    nodes : (n, 2) array
    elements : (m, 3) int array
        Normalized to positive orientation on construction.
    boundary_edges : list of (i, j, tag), tag in {'D', 'N'}
    constraint_edges : list of (i, j, value)
        Interior element edges carrying a Dirichlet value (embedded
        layer characteristics).
    node_values : dict node -> value
        Dirichlet value overrides (data discontinuities, layer values).
    """

    def __init__(self, nodes, elements, boundary_edges, constraint_edges=None,
                 node_values=None, audit=True):
        self.nodes = np.ascontiguousarray(np.asarray(nodes, dtype=float))
        elements = np.asarray(elements, dtype=np.int64).copy()
        areas = _signed_areas(self.nodes, elements)
        flip = areas < 0
        elements[flip, 1], elements[flip, 2] = (
            elements[flip, 2].copy(), elements[flip, 1].copy())
        self.elements = elements
        self.boundary_edges = [(int(i), int(j), str(t)) for i, j, t in boundary_edges]
        self.constraint_edges = [(int(i), int(j), float(v))
                                 for i, j, v in (constraint_edges or [])]
        self.node_values = dict(node_values or {})
        for i, j, v in self.constraint_edges:
            self.node_values.setdefault(i, v)
            self.node_values.setdefault(j, v)
        self._edge_map = None
        if audit:
            self.audit_conformity()

    # -- derived structure --------------------------------------------------

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    def areas(self):
        return _signed_areas(self.nodes, self.elements)

    def edge_to_elements(self):
        """Map sorted node pair -> list of adjacent element indices."""
        if self._edge_map is None:
            emap = {}
            for k, (a, b, c) in enumerate(self.elements):
                for i, j in ((a, b), (b, c), (c, a)):
                    key = (min(i, j), max(i, j))
                    emap.setdefault(key, []).append(k)
            self._edge_map = emap
        return self._edge_map

    def neighbors(self, k):
        """Element indices sharing an edge with element k."""
        emap = self.edge_to_elements()
        a, b, c = self.elements[k]
        out = []
        for i, j in ((a, b), (b, c), (c, a)):
            for other in emap[(min(i, j), max(i, j))]:
                if other != k:
                    out.append(other)
        return out

    def node_to_elements(self):
        nmap = [[] for _ in range(self.n_nodes)]
        for k, tri in enumerate(self.elements):
            for v in tri:
                nmap[v].append(k)
        return nmap

    def boundary_node_set(self):
        out = set()
        for i, j, _t in self.boundary_edges:
            out.add(i)
            out.add(j)
        return out

    def constraint_node_set(self):
        out = set()
        for i, j, _v in self.constraint_edges:
            out.add(i)
            out.add(j)
        return out

    def dirichlet_node_set(self):
        out = set()
        for i, j, t in self.boundary_edges:
            if t == "D":
                out.add(i)
                out.add(j)
        out |= self.constraint_node_set()
        return out

    def audit_conformity(self):
        areas = self.areas()
        if np.any(areas <= 0):
            raise GenerationError("degenerate or inverted element")
        emap = self.edge_to_elements()
        btags = {}
        for i, j, t in self.boundary_edges:
            key = (min(i, j), max(i, j))
            if key in btags:
                raise GenerationError("duplicate boundary edge %s" % (key,))
            btags[key] = t
        for key, elems in emap.items():
            if len(elems) == 1:
                if key not in btags:
                    raise GenerationError(
                        "element edge %s on boundary but untagged" % (key,))
            elif len(elems) == 2:
                if key in btags:
                    raise GenerationError(
                        "interior edge %s tagged as boundary" % (key,))
            else:
                raise GenerationError(
                    "edge %s shared by %d elements" % (key, len(elems)))
        for key in btags:
            if key not in emap or len(emap[key]) != 1:
                raise GenerationError(
                    "boundary edge %s not an element edge" % (key,))
        for i, j, _v in self.constraint_edges:
            key = (min(i, j), max(i, j))
            if key not in emap:
                raise GenerationError(
                    "constraint edge %s not an element edge" % (key,))


def _signed_areas(nodes, elements):
    p = nodes[elements]
    return 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
                  - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))


def _edge_key(i, j):
    return (min(i, j), max(i, j))


# -- generators -------------------------------------------------------------


def structured_triangulation(nx, ny, diagonal="SW-NE",
                             domain=((0.0, 0.0), (1.0, 1.0)), tag_fn=None):
    """Structured grid of nx*ny cells, two triangles each.

    `tag_fn(midpoint) -> 'D' | 'N'` assigns boundary tags; default all 'D'.
    """
    xs = np.linspace(domain[0][0], domain[1][0], nx + 1)
    ys = np.linspace(domain[0][1], domain[1][1], ny + 1)
    return tensor_triangulation(xs, ys, diagonal=diagonal, tag_fn=tag_fn)


def tensor_triangulation(xs, ys, diagonal="SW-NE", tag_fn=None):
    """Triangulated tensor grid over the given coordinate lines."""
    if diagonal not in ("SW-NE", "NW-SE"):
        raise ArgumentError("diagonal must be SW-NE or NW-SE")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    nx, ny = xs.size - 1, ys.size - 1
    if nx < 1 or ny < 1:
        raise ArgumentError("need at least one cell per direction")
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    elements = []
    for j in range(ny):
        for i in range(nx):
            sw, se = nid(i, j), nid(i + 1, j)
            nw, ne = nid(i, j + 1), nid(i + 1, j + 1)
            if diagonal == "SW-NE":
                elements.append((sw, se, ne))
                elements.append((sw, ne, nw))
            else:
                elements.append((sw, se, nw))
                elements.append((se, ne, nw))
    boundary = []
    for i in range(nx):
        boundary.append((nid(i, 0), nid(i + 1, 0)))
        boundary.append((nid(i, ny), nid(i + 1, ny)))
    for j in range(ny):
        boundary.append((nid(0, j), nid(0, j + 1)))
        boundary.append((nid(nx, j), nid(nx, j + 1)))
    edges = []
    for i, j in boundary:
        mid = 0.5 * (nodes[i] + nodes[j])
        tag = tag_fn(mid) if tag_fn is not None else "D"
        edges.append((i, j, tag))
    return Triangulation(nodes, elements, edges)


def shishkin_lines(N, sigma, L=1.0):
    """Coordinate lines of a 1D Shishkin partition of [0, L]."""
    coarse = np.arange(N + 1) * (L - sigma) / N
    fine = (L - sigma) + np.arange(1, N + 1) * sigma / N
    return np.concatenate([coarse, fine])


def tensor_shishkin_2d(Nx, Ny, sigma_x, sigma_y, diagonal="SW-NE", tag_fn=None):
    """Tensor product of two 1D Shishkin partitions of [0, 1]."""
    if not (0.0 < sigma_x < 1.0 and 0.0 < sigma_y < 1.0):
        raise ArgumentError("transitions must lie in (0, 1)")
    xs = shishkin_lines(Nx, sigma_x)
    ys = shishkin_lines(Ny, sigma_y)
    return tensor_triangulation(xs, ys, diagonal=diagonal, tag_fn=tag_fn)


def perturb_structured(mesh, amplitude_fraction, seed, frozen=(), max_retries=200):
    """Displace interior nodes by uniform [-a*h, a*h] per coordinate.

    h is the shortest edge incident to the node in the input mesh.
    Boundary, constraint and `frozen` nodes stay fixed.  Displacements
    that invert an element are resampled.
    """
    if not 0.0 <= amplitude_fraction <= 1.0 / 3.0 + 1e-15:
        raise ArgumentError("amplitude_fraction must lie in [0, 1/3]")
    rng = np.random.default_rng(seed)
    fixed = mesh.boundary_node_set() | mesh.constraint_node_set() | set(frozen)
    nodes = mesh.nodes.copy()
    if amplitude_fraction == 0.0:
        return Triangulation(nodes, mesh.elements, mesh.boundary_edges,
                             mesh.constraint_edges, mesh.node_values)
    hloc = np.full(mesh.n_nodes, np.inf)
    for key in mesh.edge_to_elements():
        i, j = key
        d = np.linalg.norm(mesh.nodes[i] - mesh.nodes[j])
        hloc[i] = min(hloc[i], d)
        hloc[j] = min(hloc[j], d)
    nmap = mesh.node_to_elements()
    movable = [k for k in range(mesh.n_nodes) if k not in fixed]
    for k in movable:
        amp = amplitude_fraction * hloc[k]
        orig = nodes[k].copy()
        for _ in range(max_retries):
            nodes[k] = orig + rng.uniform(-amp, amp, size=2)
            sub = mesh.elements[nmap[k]]
            if np.all(_signed_areas(nodes, sub) > 0):
                break
        else:
            raise GenerationError("could not keep element areas positive")
    return Triangulation(nodes, mesh.elements, mesh.boundary_edges,
                         mesh.constraint_edges, mesh.node_values)


# -- outflow strip ----------------------------------------------------------


def build_outflow_strip(mesh, on, thickness=None, wind=None):
    """Insert a strip of elements along a subset of the boundary.

    The target boundary nodes are displaced into the domain along the
    averaged inward edge normals; new boundary nodes are created at the
    original positions and each resulting rectangle is split in two by
    the diagonal from its upstream-most corner.

    Parameters
    ----------
    on : iterable of boundary-edge indices, or predicate on edge midpoint
    thickness : displacement; default the local boundary-edge length
    wind : optional wind vector/function for the diagonal rule
    """
    if callable(on):
        idx = [k for k, (i, j, _t) in enumerate(mesh.boundary_edges)
               if on(0.5 * (mesh.nodes[i] + mesh.nodes[j]))]
    else:
        idx = sorted(int(k) for k in on)
    if not idx:
        return mesh
    target_edges = [mesh.boundary_edges[k] for k in idx]
    target_set = {_edge_key(i, j) for i, j, _t in target_edges}
    target_nodes = sorted({v for i, j, _t in target_edges for v in (i, j)})

    emap = mesh.edge_to_elements()
    # inward unit normal of each target edge (toward the adjacent element)
    normals = {}
    lengths = {}
    for i, j, _t in target_edges:
        key = _edge_key(i, j)
        (k,) = emap[key]
        a, b, c = mesh.elements[k]
        opp = [v for v in (a, b, c) if v not in key][0]
        e = mesh.nodes[key[1]] - mesh.nodes[key[0]]
        n = np.array([-e[1], e[0]])
        if np.dot(n, mesh.nodes[opp] - mesh.nodes[key[0]]) < 0:
            n = -n
        normals[key] = n / np.linalg.norm(n)
        lengths[key] = float(np.linalg.norm(e))

    nodes = mesh.nodes.copy().tolist()
    new_of = {}
    for v in target_nodes:
        keys = [k for k in normals if v in k]
        n = sum(normals[k] for k in keys)
        nn = np.linalg.norm(n)
        if nn == 0.0:
            raise GenerationError("opposing normals at strip node %d" % v)
        n = n / nn
        t = thickness if thickness is not None else float(
            np.mean([lengths[k] for k in keys]))
        orig = mesh.nodes[v].copy()
        new_idx = len(nodes)
        nodes.append(list(orig))          # new boundary node at old position
        nodes[v] = list(orig + t * n)     # existing node moves inward
        new_of[v] = new_idx
    nodes = np.asarray(nodes)

    def upstream_key(corner_idx):
        if wind is None:
            return (corner_idx,)
        b = wind(nodes[corner_idx]) if callable(wind) else np.asarray(wind, float)
        return (float(np.dot(b, nodes[corner_idx])), corner_idx)

    elements = mesh.elements.tolist()
    for i, j, _t in target_edges:
        ai, aj = new_of[i], new_of[j]
        # quad corners in cyclic order: ai -- aj -- j -- i
        corners = [ai, aj, j, i]
        c = min(corners, key=upstream_key)
        if c in (ai, j):
            elements.append((ai, aj, j))
            elements.append((ai, j, i))
        else:
            elements.append((ai, aj, i))
            elements.append((aj, j, i))

    boundary = []
    cap_tags = {}
    for k, (i, j, t) in enumerate(mesh.boundary_edges):
        if k in set(idx):
            boundary.append((new_of[i], new_of[j], t))
        else:
            boundary.append((i, j, t))
            for v in (i, j):
                if v in new_of:
                    cap_tags[v] = t
    for v, t in sorted(cap_tags.items()):
        boundary.append((v, new_of[v], t))

    try:
        out = Triangulation(nodes, elements, boundary,
                            mesh.constraint_edges, mesh.node_values)
    except GenerationError as exc:
        raise GenerationError("strip generation failed: %s" % exc) from exc
    return out


# -- red refinement with hanging-node closure --------------------------------


def red_refine(mesh, elements):
    """Split each listed element into 4 similar triangles.

    Neighbors left with hanging nodes are closed by longest-edge
    bisection, recursively, until the mesh is conforming.
    """
    subset = sorted(set(int(e) for e in elements))
    if not subset:
        raise ArgumentError("element subset must be nonempty")
    if any(e < 0 or e >= mesh.n_elements for e in subset):
        raise ArgumentError("element index out of range")
    nodes = mesh.nodes.tolist()
    midpoint = {}

    def mid(i, j):
        key = _edge_key(i, j)
        if key not in midpoint:
            midpoint[key] = len(nodes)
            nodes.append(list(0.5 * (np.asarray(nodes[i]) + np.asarray(nodes[j]))))
        return midpoint[key]

    tris = []
    subset_set = set(subset)
    for k, (a, b, c) in enumerate(mesh.elements):
        if k in subset_set:
            mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
            tris.extend([(a, mab, mca), (mab, b, mbc),
                         (mca, mbc, c), (mab, mbc, mca)])
        else:
            tris.append((int(a), int(b), int(c)))

    # closure: bisect the longest edge of any element with a hanging node
    for _round in range(10 * (len(tris) + len(subset))):
        changed = False
        next_tris = []
        for tri in tris:
            a, b, c = tri
            hanging = any(_edge_key(i, j) in midpoint
                          for i, j in ((a, b), (b, c), (c, a)))
            if not hanging:
                next_tris.append(tri)
                continue
            changed = True
            pts = np.asarray(nodes)
            edges = [(a, b, c), (b, c, a), (c, a, b)]
            def elen(e):
                return float(np.linalg.norm(pts[e[0]] - pts[e[1]]))
            # longest edge; deterministic tie-break on the sorted node pair
            i, j, opp = max(edges, key=lambda e: (elen(e), _edge_key(e[0], e[1])))
            m = mid(i, j)
            next_tris.append((i, m, opp))
            next_tris.append((m, j, opp))
        tris = next_tris
        if not changed:
            break
    else:
        raise GenerationError("hanging-node closure did not terminate")

    def split_tagged(edge_list, make):
        out = []
        stack = list(edge_list)
        while stack:
            entry = stack.pop()
            i, j = entry[0], entry[1]
            key = _edge_key(i, j)
            if key in midpoint:
                m = midpoint[key]
                stack.append(make(i, m, entry))
                stack.append(make(m, j, entry))
            else:
                out.append(entry)
        out.sort()
        return out

    boundary = split_tagged(mesh.boundary_edges, lambda i, j, e: (i, j, e[2]))
    constraints = split_tagged(mesh.constraint_edges, lambda i, j, e: (i, j, e[2]))
    return Triangulation(np.asarray(nodes), tris, boundary,
                         constraints, mesh.node_values)


# -- file I/O ----------------------------------------------------------------


def write_mesh(mesh, path):
    with open(path, "w") as fh:
        fh.write("# smsfem mesh\n")
        fh.write("NODES %d\n" % mesh.n_nodes)
        for x, y in mesh.nodes:
            fh.write("%.17g %.17g\n" % (x, y))
        fh.write("ELEMENTS %d\n" % mesh.n_elements)
        for a, b, c in mesh.elements:
            fh.write("%d %d %d\n" % (a, b, c))
        nb = len(mesh.boundary_edges) + len(mesh.constraint_edges)
        fh.write("BOUNDARY %d\n" % nb)
        for i, j, t in mesh.boundary_edges:
            if t == "D" and i in mesh.node_values and j in mesh.node_values \
                    and mesh.node_values[i] == mesh.node_values[j]:
                fh.write("%d %d D %.17g\n" % (i, j, mesh.node_values[i]))
            else:
                fh.write("%d %d %s\n" % (i, j, t))
        for i, j, v in mesh.constraint_edges:
            fh.write("%d %d D %.17g\n" % (i, j, v))


def read_mesh(path):
    with open(path) as fh:
        raw = fh.readlines()
    lines = []
    for ln, text in enumerate(raw, start=1):
        text = text.split("#", 1)[0].strip()
        if text:
            lines.append((ln, text))
    pos = 0

    def expect_header(name):
        nonlocal pos
        if pos >= len(lines):
            raise MeshFileError("missing %s section" % name,
                                raw and len(raw) or 1)
        ln, text = lines[pos]
        parts = text.split()
        if len(parts) != 2 or parts[0] != name:
            raise MeshFileError("expected '%s <count>'" % name, ln)
        try:
            count = int(parts[1])
        except ValueError:
            raise MeshFileError("bad %s count" % name, ln)
        pos += 1
        return count

    n = expect_header("NODES")
    nodes = []
    for _ in range(n):
        if pos >= len(lines):
            raise MeshFileError("unexpected end of NODES", len(raw))
        ln, text = lines[pos]
        parts = text.split()
        if len(parts) != 2:
            raise MeshFileError("expected 'x y'", ln)
        try:
            nodes.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise MeshFileError("bad coordinate", ln)
        pos += 1

    m = expect_header("ELEMENTS")
    elements = []
    for _ in range(m):
        if pos >= len(lines):
            raise MeshFileError("unexpected end of ELEMENTS", len(raw))
        ln, text = lines[pos]
        parts = text.split()
        if len(parts) != 3:
            raise MeshFileError("expected 'i j k'", ln)
        try:
            tri = tuple(int(p) for p in parts)
        except ValueError:
            raise MeshFileError("bad element index", ln)
        for v in tri:
            if not 0 <= v < n:
                raise MeshFileError("element references node %d" % v, ln)
        elements.append(tri)
        pos += 1

    b = expect_header("BOUNDARY")
    tagged = []
    for _ in range(b):
        if pos >= len(lines):
            raise MeshFileError("unexpected end of BOUNDARY", len(raw))
        ln, text = lines[pos]
        parts = text.split()
        if len(parts) not in (3, 4) or parts[2] not in ("D", "N"):
            raise MeshFileError("expected 'i j D|N [value]'", ln)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise MeshFileError("bad edge index", ln)
        for v in (i, j):
            if not 0 <= v < n:
                raise MeshFileError("boundary edge references node %d" % v, ln)
        value = None
        if len(parts) == 4:
            if parts[2] != "D":
                raise MeshFileError("value only allowed on D edges", ln)
            try:
                value = float(parts[3])
            except ValueError:
                raise MeshFileError("bad value", ln)
        tagged.append((ln, i, j, parts[2], value))
        pos += 1
    if pos != len(lines):
        raise MeshFileError("trailing content", lines[pos][0])

    # split tagged edges into true boundary edges and interior constraints
    counts = {}
    for a, bb, c in elements:
        for e in ((a, bb), (bb, c), (c, a)):
            counts[_edge_key(*e)] = counts.get(_edge_key(*e), 0) + 1
    boundary, constraints, node_values = [], [], {}
    for ln, i, j, tag, value in tagged:
        key = _edge_key(i, j)
        if counts.get(key, 0) == 2:
            if value is None:
                raise MeshFileError("interior edge tagged without value", ln)
            constraints.append((i, j, value))
        else:
            boundary.append((i, j, tag))
            if value is not None:
                node_values[i] = value
                node_values[j] = value
    try:
        return Triangulation(np.asarray(nodes), elements, boundary,
                             constraints, node_values)
    except GenerationError as exc:
        raise MeshFileError("mesh validation failed: %s" % exc, 1) from exc


def write_node_values_csv(mesh, values, path, comments=()):
    """CSV dump of nodal values: header 'x,y,value'."""
    with open(path, "w") as fh:
        for line in comments:
            fh.write("# %s\n" % line)
        fh.write("x,y,value\n")
        for (x, y), v in zip(mesh.nodes, values):
            fh.write("%.17g,%.17g,%.17g\n" % (x, y, v))


# -- trochoid boundary (curved-domain fixture) --------------------------------


def trochoid_point(t, sigma=0.9):
    """Boundary curve of the curved test domain (tilted centered trochoid)."""
    t = np.asarray(t, dtype=float)
    scale = (26.0 + 7.0 * (1.0 - np.sin(2.0 * t) ** 9)) / (40.0 * (2.0 + sigma) * np.sqrt(2.0))
    u = 2.0 * np.cos(t) - sigma * np.cos(2.0 * t)
    v = 2.0 * np.sin(t) - sigma * np.sin(2.0 * t)
    x = scale * (u - v)
    y = scale * (u + v)
    return np.stack([x, y], axis=-1)
