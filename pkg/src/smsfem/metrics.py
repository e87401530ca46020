"""Error and oscillation measures for the computed approximations:
nodal errors, convective-derivative residuals, layer oscillation and
smearing indicators, and log-log rate fits."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import assembly


class ArgumentError(ValueError):
    pass


NOT_CROSSED = float("nan")


@dataclass
class MetricReport:
    values: dict
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.values.items():
            if isinstance(v, float) and math.isinf(v):
                raise ArgumentError("metric %s is not finite" % k)

    def rows(self):
        return [(k, self.values[k]) for k in sorted(self.values)]

    def write_csv(self, path):
        with open(path, "w") as fh:
            for k, v in sorted(self.provenance.items()):
                fh.write("# %s=%s\n" % (k, v))
            fh.write("metric,value\n")
            for k, v in self.rows():
                fh.write("%s,%.16e\n" % (k, v))


# ---------------------------------------------------------------------------
# P1 point evaluation


def _barycentric(tri, point):
    a, b, c = tri
    det = ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    l1 = ((point[0] - a[0]) * (c[1] - a[1])
          - (c[0] - a[0]) * (point[1] - a[1])) / det
    l2 = ((b[0] - a[0]) * (point[1] - a[1])
          - (point[0] - a[0]) * (b[1] - a[1])) / det
    return np.array([1.0 - l1 - l2, l1, l2])


def locate_point(mesh, point, tol=1e-12):
    """Element index and barycentric coordinates containing the point."""
    p = mesh.nodes[mesh.elements]
    a, b, c = p[:, 0], p[:, 1], p[:, 2]
    det = ((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
           - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1]))
    l1 = ((point[0] - a[:, 0]) * (c[:, 1] - a[:, 1])
          - (c[:, 0] - a[:, 0]) * (point[1] - a[:, 1])) / det
    l2 = ((b[:, 0] - a[:, 0]) * (point[1] - a[:, 1])
          - (point[0] - a[:, 0]) * (b[:, 1] - a[:, 1])) / det
    l0 = 1.0 - l1 - l2
    lam = np.stack([l0, l1, l2], axis=1)
    inside = (lam >= -tol).all(axis=1)
    hits = np.nonzero(inside)[0]
    if hits.size == 0:
        raise ArgumentError("point (%g, %g) outside the mesh"
                            % (point[0], point[1]))
    k = int(hits[0])
    return k, np.clip(lam[k], 0.0, 1.0)


def evaluate_p1(mesh, u, points):
    """Evaluate the P1 function with nodal values u at the given points."""
    u = np.asarray(u, dtype=float)
    out = np.empty(len(points))
    for i, pt in enumerate(np.atleast_2d(points)):
        k, lam = locate_point(mesh, pt)
        out[i] = float(lam @ u[mesh.elements[k]])
    return out


def element_gradients(mesh, u):
    """Constant gradient of the P1 function on each element."""
    _area, grads, _p = assembly.element_geometry(mesh)
    u = np.asarray(u, dtype=float)
    return np.einsum("kv,kvd->kd", u[mesh.elements], grads)


# ---------------------------------------------------------------------------
# nodal and residual errors


def linf_nodal_error(mesh, u, exact, nodes=None):
    """max |u(x_i) - exact(x_i)| over the given node subset (default all)."""
    if nodes is None:
        nodes = np.arange(mesh.n_nodes)
    nodes = np.asarray(nodes, dtype=int)
    if nodes.size == 0:
        raise ArgumentError("empty node subset")
    ex = np.array([exact(mesh.nodes[v]) for v in nodes])
    return float(np.abs(np.asarray(u)[nodes] - ex).max())


def convective_residual_l2(mesh, u, spec, region):
    """||b . grad(w) + c w - f||_{L^2} over the given element set.

    Mid-edge quadrature per element (exact for the P1 residual whenever
    b, c and f are at most linear on each element).
    """
    region = list(region)
    area, grads, p = assembly.element_geometry(mesh)
    u = np.asarray(u, dtype=float)
    total = 0.0
    for k in region:
        tri = mesh.elements[k]
        grad = u[tri] @ grads[k]
        mids = 0.5 * (p[k] + np.roll(p[k], -1, axis=0))
        uq = assembly._MIDEDGE_PHI.T @ u[tri]
        for q, uval in zip(mids, uq):
            r = (float(np.dot(spec.b_fn(q), grad))
                 + spec.c_fn(q) * uval - spec.f_fn(q))
            total += area[k] / 3.0 * r * r
    return math.sqrt(total)


def h1_seminorm_error(mesh, u, exact_gradient, region=None):
    """Elementwise mid-edge quadrature of |grad(w) - grad(u)|^2."""
    area, grads, p = assembly.element_geometry(mesh)
    u = np.asarray(u, dtype=float)
    region = range(mesh.n_elements) if region is None else region
    total = 0.0
    for k in region:
        grad = u[mesh.elements[k]] @ grads[k]
        mids = 0.5 * (p[k] + np.roll(p[k], -1, axis=0))
        for q in mids:
            d = grad - np.asarray(exact_gradient(q), dtype=float)
            total += area[k] / 3.0 * float(d @ d)
    return math.sqrt(total)


# ---------------------------------------------------------------------------
# layer oscillation and smearing measures (unit-square problems)


def osc_smear(mesh, u, n=64):
    """Oscillation and smearing along the vertical midline.

    osc = max_y {w(0.5, y) - w(0.5, 0.5)} and smear = max_y {w(0.5, 0.5)
    - w(0.5, y)} over y in {1/n, ..., (n-1)/n}.
    """
    ys = np.arange(1, n) / n
    vals = evaluate_p1(mesh, u, [(0.5, y) for y in ys])
    center = evaluate_p1(mesh, u, [(0.5, 0.5)])[0]
    return float((vals - center).max()), float((center - vals).max())


def osc_para_exp(mesh, u):
    """Barycenter-gradient oscillation measures for the parabolic layers
    along y = 0 and y = 1 and the exponential layer at x = 1.

    osc_para(2) = max{ max_{O2} -dw/dy, max_{O3} dw/dy } with
    O2 = (0,0.9)x(0,0.1], O3 = (0,0.9)x[0.9,1); osc_exp = max_{O4} dw/dx
    with O4 = [0.9,1)x(0.1,0.9).
    """
    grads = element_gradients(mesh, u)
    bary = mesh.nodes[mesh.elements].mean(axis=1)
    x, y = bary[:, 0], bary[:, 1]
    in2 = (x > 0) & (x < 0.9) & (y > 0) & (y <= 0.1)
    in3 = (x > 0) & (x < 0.9) & (y >= 0.9) & (y < 1)
    in4 = (x >= 0.9) & (x < 1) & (y > 0.1) & (y < 0.9)
    if not (in2.any() and in3.any() and in4.any()):
        raise ArgumentError("mesh too coarse for the layer regions")
    osc_para2 = max(float((-grads[in2, 1]).max()), float(grads[in3, 1].max()))
    osc_exp = float(grads[in4, 0].max())
    return osc_para2, osc_exp


def osc_int_smear_int(mesh, u, step=1.0 / 512.0):
    """Interior-layer oscillation over O1 = {x <= 0.5, y >= 0.1} and layer
    thickness on the line y = 0.25.

    osc_int = sqrt(sum over mesh nodes in O1 of min{0,w}^2 + max{0,w-1}^2);
    smear_int = x2 - x1 where x1, x2 are the first points with
    w(x, 0.25) >= 0.1 and >= 0.9 (linear interpolation between samples).
    Returns NOT_CROSSED for smear_int if a threshold is never reached.
    """
    u = np.asarray(u, dtype=float)
    in1 = (mesh.nodes[:, 0] <= 0.5) & (mesh.nodes[:, 1] >= 0.1)
    w = u[in1]
    osc_int = math.sqrt(float((np.minimum(0.0, w) ** 2).sum()
                              + (np.maximum(0.0, w - 1.0) ** 2).sum()))
    xs = np.arange(0.0, 1.0 + 0.5 * step, step)
    vals = evaluate_p1(mesh, u, [(x, 0.25) for x in xs])

    def first_crossing(threshold):
        idx = np.nonzero(vals >= threshold)[0]
        if idx.size == 0:
            return NOT_CROSSED
        i = int(idx[0])
        if i == 0:
            return float(xs[0])
        frac = (threshold - vals[i - 1]) / (vals[i] - vals[i - 1])
        return float(xs[i - 1] + frac * step)

    x1, x2 = first_crossing(0.1), first_crossing(0.9)
    smear_int = (NOT_CROSSED if math.isnan(x1) or math.isnan(x2)
                 else x2 - x1)
    return osc_int, smear_int


def over_undershoot(u):
    """Clipped nodal extrema for solutions with target range [0, 1]:
    (max{0, max w - 1}, min{0, min w})."""
    u = np.asarray(u, dtype=float)
    return (max(0.0, float(u.max()) - 1.0), min(0.0, float(u.min())))


def fit_rate(pairs):
    """Least-squares slope of log(error) against log(h)."""
    pairs = list(pairs)
    if len(pairs) < 3:
        raise ArgumentError("need at least 3 (h, error) pairs")
    h = np.array([p[0] for p in pairs], dtype=float)
    e = np.array([p[1] for p in pairs], dtype=float)
    if (h <= 0).any() or (e <= 0).any():
        raise ArgumentError("(h, error) pairs must be positive")
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])
