"""Config-driven experiment harness.

Reproduces the benchmark studies (manufactured layers, same-grid
comparisons, random-grid statistics, parabolic and interior layers, the
channel-with-hole problem and the recirculating vortex) and writes CSV
tables plus whitespace x-y plot-data files.  Outputs embed the full
configuration and seed as comment lines; apart from wall-time columns,
data sections are byte-identical across reruns with the same seed.
"""

import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import fixtures, metrics, problems, solvers
from .assembly import ProblemSpec, compute_supg_parameters
from .layers import embed_characteristic, snap_nodes, straight_characteristic
from .meshes import (Triangulation, perturb_structured,
                     structured_triangulation, tensor_triangulation,
                     write_node_values_csv)
from .wind import (absorb_isolated, build_omega_plus,
                   build_omega_plus_shrunk, classify_boundary, diagnose,
                   remediate)


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# configuration


def parse_config(path):
    """Flat key=value file; '#' comments; repeated keys accumulate."""
    raw = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    for ln, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("%s:%d: expected key=value" % (path, ln))
        key, value = line.split("=", 1)
        raw.setdefault(key.strip(), []).append(value.strip())
    return raw


_METHODS = ("galerkin", "supg", "supg-shishkin", "sms-galerkin", "sms-supg")

_DESK = {
    "ex1": dict(N=[5, 10, 20, 40], eps=[1e-4, 1e-8],
                methods=["supg-shishkin", "sms-galerkin", "sms-supg"]),
    "ex2": dict(N=[10, 20, 40], eps=[1e-8],
                methods=["supg", "sms-galerkin", "sms-supg"]),
    "ex3": dict(N=[40], eps=[1e-8], grids=50,
                methods=["supg", "sms-galerkin", "sms-supg"]),
    "ex4": dict(N=[20, 64], eps=[1e-8],
                methods=["supg", "sms-galerkin", "sms-supg"]),
    "ex5": dict(N=[16, 64], eps=[1e-8],
                methods=["supg", "sms-galerkin", "sms-supg"]),
    "ex6": dict(N=[], eps=[1e-8],
                methods=["supg", "sms-galerkin", "sms-supg"]),
    "ex7": dict(N=[8, 20], eps=[1e-4, 1e-6, 1e-10, 1e-14],
                methods=["supg", "sms-galerkin", "sms-supg"]),
    "comp-ex2": dict(N=[10, 20, 40], eps=[1e-8],
                     methods=["supg", "sms-galerkin", "sms-supg"]),
    "comp-ex3": dict(N=[10, 20, 40], eps=[1e-8], grids=10,
                     methods=["supg", "sms-galerkin", "sms-supg"]),
    "comp-ex4": dict(N=[40], eps=[1e-8], grids=10,
                     methods=["supg", "sms-galerkin", "sms-supg"]),
    "comp-ex5": dict(N=[64], eps=[1e-8], grids=10,
                     methods=["supg", "sms-galerkin", "sms-supg"]),
    "comp-ex6": dict(N=[], eps=[1e-8], grids=10,
                     methods=["supg", "sms-galerkin", "sms-supg"]),
}

_PAPER = {
    "ex1": dict(N=[5, 10, 20, 40, 80, 160, 320]),
    "ex3": dict(grids=200, N=[80]),
    "comp-ex3": dict(grids=200, N=[10, 20, 40, 80]),
    "comp-ex4": dict(grids=200),
    "comp-ex5": dict(grids=200),
    "comp-ex6": dict(grids=100),
}


@dataclass
class ExperimentConfig:
    experiment: str
    methods: list = None
    N: list = None
    eps: list = None
    seed: int = 0
    grids: int = None
    scale: str = "desk"
    out: str = "."
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in _DESK:
            raise ConfigError("unknown experiment %r (known: %s)"
                              % (self.experiment, ", ".join(sorted(_DESK))))
        if self.scale not in ("desk", "paper"):
            raise ConfigError("scale must be 'desk' or 'paper'")
        defaults = dict(_DESK[self.experiment])
        if self.scale == "paper":
            defaults.update(_PAPER.get(self.experiment, {}))
        if self.methods is None:
            self.methods = list(defaults["methods"])
        if self.N is None:
            self.N = list(defaults["N"])
        if self.eps is None:
            self.eps = list(defaults["eps"])
        if self.grids is None:
            self.grids = defaults.get("grids")
        for m in self.methods:
            if m not in _METHODS:
                raise ConfigError("unknown method %r (known: %s)"
                                  % (m, ", ".join(_METHODS)))
        for e in self.eps:
            if not e > 0.0:
                raise ConfigError("eps must be positive, got %r" % e)


def _cast(key, value, kind):
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError("bad value for %s: %r" % (key, value))


def config_from_mapping(raw, experiment=None, out=None, seed=None, scale=None):
    """Build an ExperimentConfig from a parse_config mapping, with CLI
    overrides taking precedence over file entries."""
    raw = {k: list(v) for k, v in raw.items()}

    def take_scalar(key, kind, default=None):
        vals = raw.pop(key, None)
        if vals is None:
            return default
        if len(vals) != 1:
            raise ConfigError("key %s given %d times, expected once"
                              % (key, len(vals)))
        return _cast(key, vals[0], kind)

    def take_list(key, kind):
        vals = raw.pop(key, None)
        if vals is None:
            return None
        return [_cast(key, v, kind) for v in vals]

    file_exp = take_scalar("experiment", str)
    file_seed = take_scalar("seed", int, 0)
    file_scale = take_scalar("scale", str, "desk")
    file_out = take_scalar("out", str, ".")
    exp = experiment or file_exp
    if exp is None:
        raise ConfigError("no experiment id given")
    cfg = ExperimentConfig(
        experiment=exp,
        methods=take_list("method", str),
        N=take_list("N", int),
        eps=take_list("eps", float),
        seed=seed if seed is not None else file_seed,
        grids=take_scalar("grids", int),
        scale=scale or file_scale,
        out=out or file_out,
        options={k: (v[0] if len(v) == 1 else v) for k, v in raw.items()},
    )
    return cfg


def _config_comments(cfg):
    lines = ["experiment = %s" % cfg.experiment,
             "scale = %s" % cfg.scale,
             "seed = %d" % cfg.seed]
    for m in cfg.methods:
        lines.append("method = %s" % m)
    for n in cfg.N:
        lines.append("N = %d" % n)
    for e in cfg.eps:
        lines.append("eps = %s" % repr(e))
    if cfg.grids is not None:
        lines.append("grids = %d" % cfg.grids)
    for k in sorted(cfg.options):
        v = cfg.options[k]
        for item in (v if isinstance(v, list) else [v]):
            lines.append("%s = %s" % (k, item))
    return lines


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v):
    if isinstance(v, float):
        return "%.16e" % v
    return str(v)


def write_csv(path, header, rows, comments):
    with open(path, "w") as fh:
        for c in comments:
            fh.write("# %s\n" % c)
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_plot_data(path, points):
    with open(path, "w") as fh:
        for x, y in points:
            fh.write("%.16e %.16e\n" % (x, y))
    return path


# ---------------------------------------------------------------------------
# solve dispatch


def _solve_method(mesh, spec, method, decomposition=None, parameters=None):
    if method == "galerkin":
        return solvers.solve_galerkin(mesh, spec, with_constraints=True)
    if method == "supg":
        return solvers.solve_supg(mesh, spec, parameters,
                                  with_constraints=True)
    if method in ("sms-galerkin", "sms-supg"):
        sol = solvers.solve_sms(mesh, spec, decomposition,
                                base=method.split("-", 1)[1],
                                parameters=parameters)
        return sol.u
    raise ConfigError("method %r not runnable here" % method)


def _decomposition(mesh, b):
    return build_omega_plus(mesh, classify_boundary(mesh, b), b)


def _safe_decomposition(mesh, b):
    """Decomposition with uniqueness defects repaired; returns the
    (possibly refined) mesh and its decomposition.

    Isolated Omega_hat components (embedded layers can cut off data-free
    pockets) are absorbed into Omega_h+; wind-parallel downwind edges
    are cured by upwind refinement.
    """
    dec = _decomposition(mesh, b)
    report = diagnose(dec, mesh, b)
    if report.isolated_components:
        dec = absorb_isolated(mesh, dec, report, b)
        report = diagnose(dec, mesh, b)
    if report.parallel_edges:
        mesh = remediate(mesh, dec, report, b)
        dec = _decomposition(mesh, b)
    return mesh, dec


# ---------------------------------------------------------------------------
# grid builders


def mild_random_grid(N, b, seed, amplitude=1.0 / 3.0):
    """Uniform grid plus a full-height cell strip along the outflow sides
    of the unit square, interior nodes perturbed by +-amplitude*h with
    the strip nodes frozen."""
    h = 1.0 / N
    lines = np.concatenate([np.linspace(0.0, 1.0 - h, N), [1.0]])
    base = tensor_triangulation(lines, lines)
    bf = b if callable(b) else (lambda p, v=np.asarray(b, float): v)

    def outflow(coord):
        # does the wind leave through the high side of this coordinate?
        return bf(np.array([0.5, 0.5]))[coord] > 0.0

    frozen = [v for v in range(base.n_nodes)
              if (outflow(0) and base.nodes[v][0] >= 1.0 - h - 1e-12)
              or (outflow(1) and base.nodes[v][1] >= 1.0 - h - 1e-12)]
    return perturb_structured(base, amplitude, seed, frozen=frozen)


def interior_layer_mesh(N, snap_rule="nearest", seed=None,
                        amplitude=1.0 / 3.0):
    """Unit-square grid with the oblique interior characteristic of the
    discontinuous-data problem snapped and embedded."""
    mesh = structured_triangulation(N, N)
    if seed is not None:
        mesh = perturb_structured(mesh, amplitude, seed)
    o = np.asarray(problems.EX5_ORIGIN)
    b = problems.EX5_WIND
    t_exit = -o[1] / b[1]          # exits through y = 0
    path = straight_characteristic(o, o + t_exit * b,
                                   problems.EX5_LAYER_VALUE)
    mesh, _moved, _skipped = snap_nodes(mesh, path, snap_rule)
    mesh, _on_path = embed_characteristic(mesh, path)
    return mesh


_HEMKER_BOX = ((-3.0, -3.0), (9.0, 3.0))


def _hemker_exit(origin, b):
    (x0, y0), (x1, y1) = _HEMKER_BOX
    ts = []
    if b[0] > 0:
        ts.append((x1 - origin[0]) / b[0])
    if b[1] > 0:
        ts.append((y1 - origin[1]) / b[1])
    elif b[1] < 0:
        ts.append((y0 - origin[1]) / b[1])
    return np.asarray(origin) + min(ts) * np.asarray(b)


def hemker_layered_mesh(theta=0.0, snap_rule="hmin2/10"):
    """Channel-with-hole fixture with the two tangential characteristic
    layers snapped and embedded; retags y = -3 Dirichlet for theta > 0."""
    mesh = fixtures.load("channel_hole")
    if theta > 0.0:
        edges = []
        for i, j, t in mesh.boundary_edges:
            mid = 0.5 * (mesh.nodes[i] + mesh.nodes[j])
            if abs(mid[1] + 3.0) < 1e-9:
                t = "D"
            edges.append((i, j, t))
        mesh = Triangulation(mesh.nodes, mesh.elements, edges,
                             mesh.constraint_edges, mesh.node_values)
    b = np.array([math.cos(theta), math.sin(theta)])
    for origin in problems.hemker_layer_origins(theta):
        path = straight_characteristic(origin, _hemker_exit(origin, b),
                                       problems.EX5_LAYER_VALUE)
        mesh, _moved, _skipped = snap_nodes(mesh, path, snap_rule)
        mesh, _on_path = embed_characteristic(mesh, path)
    return mesh


# ---------------------------------------------------------------------------
# individual experiments


def _run_ex1(cfg):
    """Layer-resolving tensor-grid oracle vs SMS on the coarse subdomain."""
    prob = problems.catalog("ex1")
    rows = []
    curves = {}
    for eps in cfg.eps:
        spec = prob.build(eps)
        exact = problems.ex1_exact(eps)
        for N in cfg.N:
            sx = 2.0 * eps * math.log(N)
            sy = 1.5 * eps * math.log(2 * N)
            coarse_spec = ProblemSpec(eps=eps, b=spec.b, f=spec.f)
            cmesh = structured_triangulation(
                N, N, domain=((0.0, 0.0), (1.0 - sx, 1.0 - sy)))
            interior = sorted(set(range(cmesh.n_nodes))
                              - cmesh.boundary_node_set())
            decomposition = _decomposition(cmesh, spec.b)
            oracle = None
            for method in cfg.methods:
                t0 = time.perf_counter()
                if method == "supg-shishkin":
                    u, omesh, _mask = solvers.solve_shishkin_oracle_2d(
                        spec, N, sx, sy)
                    wall = time.perf_counter() - t0
                    # oracle nodes matching the interior coarse lattice
                    xs = cmesh.nodes[interior]
                    key = {(round(x, 12), round(y, 12)) for x, y in xs}
                    onodes = [v for v in range(omesh.n_nodes)
                              if (round(omesh.nodes[v][0], 12),
                                  round(omesh.nodes[v][1], 12)) in key]
                    err = metrics.linf_nodal_error(omesh, u, exact,
                                                   nodes=onodes)
                    oracle = err
                else:
                    u = _solve_method(cmesh, coarse_spec, method,
                                      decomposition=decomposition)
                    wall = time.perf_counter() - t0
                    err = metrics.linf_nodal_error(cmesh, u, exact,
                                                   nodes=interior)
                rows.append((method, N, eps, err, wall))
                curves.setdefault((method, eps), []).append((float(N), err))
    files = [write_csv(os.path.join(cfg.out, "ex1.csv"),
                       ["method", "N", "eps", "linf_coarse", "wall_time"],
                       rows, _config_comments(cfg))]
    for (method, eps), pts in sorted(curves.items()):
        name = "ex1_%s_eps%s.dat" % (method, ("%.0e" % eps).replace("-", "m"))
        files.append(write_plot_data(os.path.join(cfg.out, name), pts))
    return files


_CROSSWIND = {10: (0.7701, 1.57), 20: (0.8783, 1.615), 40: (0.9365, 1.64)}


def _crosswind_parameters(cfg, mesh, spec, N):
    """delta_c and delta_tau multiplier for the same-grid comparison;
    tabulated for N in {10, 20, 40}, otherwise user-supplied."""
    table = dict(_CROSSWIND)
    for key, idx in (("delta_c", 0), ("delta_multiplier", 1)):
        raw = cfg.options.get(key, [])
        for item in (raw if isinstance(raw, list) else [raw]):
            try:
                n_txt, val = str(item).split(":", 1)
                pair = list(table.get(int(n_txt), (None, None)))
                pair[idx] = float(val)
                table[int(n_txt)] = tuple(pair)
            except (ValueError, TypeError):
                raise ConfigError("expected %s = N:value, got %r"
                                  % (key, item))
    if N not in table or None in table[N]:
        raise ConfigError("no crosswind parameters for N=%d; supply "
                          "delta_c and delta_multiplier" % N)
    delta_c, multiplier = table[N]
    return compute_supg_parameters(mesh, spec, delta_c=delta_c,
                                   multiplier=multiplier)


def _run_same_grid(cfg, h1=False):
    """Same-grid comparison on the manufactured-layer problem; the SUPG
    baseline carries crosswind diffusion."""
    rows = []
    for eps in cfg.eps:
        spec = problems.ex1_spec(eps)
        exact = problems.ex1_exact(eps)
        grad = problems.ex1_exact_gradient(eps)
        for N in cfg.N:
            mesh = structured_triangulation(N, N)
            interior = sorted(set(range(mesh.n_nodes))
                              - mesh.boundary_node_set())
            decomposition = _decomposition(mesh, spec.b)
            if h1:
                # measure away from the unresolved outflow layers
                bary = mesh.nodes[mesh.elements].mean(axis=1)
                region = [k for k in range(mesh.n_elements)
                          if bary[k][0] < 1.0 - 1.0 / N
                          and bary[k][1] < 1.0 - 1.0 / N]
            for method in cfg.methods:
                params = None
                if method == "supg":
                    params = _crosswind_parameters(cfg, mesh, spec, N)
                u = _solve_method(mesh, spec, method,
                                  decomposition=decomposition,
                                  parameters=params)
                if h1:
                    err = metrics.h1_seminorm_error(mesh, u, grad,
                                                    region=region)
                    rows.append((method, N, eps, err))
                else:
                    err = metrics.linf_nodal_error(mesh, u, exact,
                                                   nodes=interior)
                    rows.append((method, N, eps, err))
    name = "comp-ex2.csv" if h1 else "ex2.csv"
    col = "h1_error" if h1 else "linf_interior"
    return [write_csv(os.path.join(cfg.out, name),
                      ["method", "N", "eps", col],
                      rows, _config_comments(cfg))]


def run_random_study(cfg):
    """Convective-residual errors of all methods over random mild grids;
    per-grid table, SUPG-descending plot ordering and mean-ratio summary."""
    rows = []
    errors = {m: [] for m in cfg.methods}
    N = cfg.N[0]
    eps = cfg.eps[0]
    spec = problems.ex3_spec(eps)
    grids = cfg.grids or 0
    for g in range(grids):
        mesh = mild_random_grid(N, spec.b, seed=cfg.seed + g)
        decomposition = _decomposition(mesh, spec.b)
        region = decomposition.omega_hat
        for method in cfg.methods:
            u = _solve_method(mesh, spec, method,
                              decomposition=decomposition)
            err = metrics.convective_residual_l2(mesh, u, spec, region)
            errors[method].append(err)
            rows.append((g, cfg.seed + g, method, err))
    files = [write_csv(os.path.join(cfg.out, "ex3_grids.csv"),
                       ["grid", "grid_seed", "method", "conv_residual_l2"],
                       rows, _config_comments(cfg))]
    summary = []
    order = None
    if grids and "supg" in errors:
        order = np.argsort(-np.asarray(errors["supg"]), kind="stable")
    for method in cfg.methods:
        vals = np.asarray(errors[method])
        mean = float(vals.mean()) if grids else float("nan")
        if method != "supg" and grids and "supg" in errors:
            ratio = float(np.mean(np.asarray(errors["supg"]) / vals))
        else:
            ratio = float("nan")
        summary.append((method, mean, ratio))
        if grids:
            idx = order if order is not None else np.arange(grids)
            pts = [(float(i), float(vals[j])) for i, j in enumerate(idx)]
            files.append(write_plot_data(
                os.path.join(cfg.out, "ex3_%s.dat" % method), pts))
    files.insert(1, write_csv(
        os.path.join(cfg.out, "ex3_summary.csv"),
        ["method", "mean_error", "mean_ratio_supg"],
        summary, _config_comments(cfg)))
    return files


def _run_comp_ex3(cfg):
    """Mean convective-residual error vs N on mild grids, with the
    log-log fit rate per method."""
    eps = cfg.eps[0]
    spec = problems.ex3_spec(eps)
    rows = []
    means = {m: [] for m in cfg.methods}
    for N in cfg.N:
        errs = {m: [] for m in cfg.methods}
        for g in range(cfg.grids or 0):
            mesh = mild_random_grid(N, spec.b, seed=cfg.seed + 1000 * N + g)
            decomposition = _decomposition(mesh, spec.b)
            region = decomposition.omega_hat
            for method in cfg.methods:
                u = _solve_method(mesh, spec, method,
                                  decomposition=decomposition)
                errs[method].append(metrics.convective_residual_l2(
                    mesh, u, spec, region))
        for method in cfg.methods:
            mean = float(np.mean(errs[method])) if errs[method] else \
                float("nan")
            means[method].append((float(N), mean))
            rows.append((method, N, eps, mean))
    files = [write_csv(os.path.join(cfg.out, "comp-ex3.csv"),
                       ["method", "N", "eps", "mean_conv_residual_l2"],
                       rows, _config_comments(cfg))]
    rates = []
    for method in cfg.methods:
        pts = [(n, e) for n, e in means[method] if e > 0.0]
        slope = metrics.fit_rate(pts) if len(pts) >= 3 else float("nan")
        rates.append((method, slope))
        files.append(write_plot_data(
            os.path.join(cfg.out, "comp-ex3_%s.dat" % method),
            means[method]))
    files.insert(1, write_csv(os.path.join(cfg.out, "comp-ex3_rates.csv"),
                              ["method", "fit_rate"], rates,
                              _config_comments(cfg)))
    return files


def _run_ex4(cfg):
    """Parabolic-layer problem on regular grids: crosswind oscillation
    and smearing measured on the mid-line."""
    rows = []
    files = []
    for eps in cfg.eps:
        spec = problems.ex4_spec(eps)
        for N in cfg.N:
            mesh = structured_triangulation(N, N)
            decomposition = _decomposition(mesh, spec.b)
            for method in cfg.methods:
                u = _solve_method(mesh, spec, method,
                                  decomposition=decomposition)
                osc, smear = metrics.osc_smear(mesh, u)
                rows.append((method, N, eps, osc, smear))
                if N == max(cfg.N) and eps == cfg.eps[0]:
                    path = os.path.join(cfg.out,
                                        "ex4_%s_N%d.csv" % (method, N))
                    write_node_values_csv(mesh, u, path,
                                          comments=_config_comments(cfg))
                    files.append(path)
    files.insert(0, write_csv(os.path.join(cfg.out, "ex4.csv"),
                              ["method", "N", "eps", "osc", "smear"],
                              rows, _config_comments(cfg)))
    return files


def _run_comp_ex4(cfg):
    """Directional-derivative oscillation measures on random mild grids
    for the parabolic-layer problem."""
    eps = cfg.eps[0]
    N = cfg.N[0]
    spec = problems.ex4_spec(eps)
    rows = []
    worst = {m: (0.0, 0.0) for m in cfg.methods}
    for g in range(cfg.grids or 0):
        mesh = mild_random_grid(N, spec.b, seed=cfg.seed + g)
        decomposition = _decomposition(mesh, spec.b)
        for method in cfg.methods:
            u = _solve_method(mesh, spec, method,
                              decomposition=decomposition)
            para, exp = metrics.osc_para_exp(mesh, u)
            rows.append((g, cfg.seed + g, method, para, exp))
            worst[method] = (max(worst[method][0], para),
                             max(worst[method][1], exp))
    files = [write_csv(os.path.join(cfg.out, "comp-ex4.csv"),
                       ["grid", "grid_seed", "method", "osc_para2",
                        "osc_exp"],
                       rows, _config_comments(cfg))]
    files.append(write_csv(
        os.path.join(cfg.out, "comp-ex4_summary.csv"),
        ["method", "max_osc_para2", "max_osc_exp"],
        [(m,) + worst[m] for m in cfg.methods], _config_comments(cfg)))
    return files


def _run_ex5(cfg):
    """Interior characteristic layer from discontinuous inflow data on
    regular grids with the layer embedded."""
    rows = []
    files = []
    snap = cfg.options.get("snap_rule", "nearest")
    for eps in cfg.eps:
        spec = problems.ex5_spec(eps)
        for N in cfg.N:
            mesh = interior_layer_mesh(N, snap_rule=snap)
            mesh, decomposition = _safe_decomposition(mesh, spec.b)
            for method in cfg.methods:
                u = _solve_method(mesh, spec, method,
                                  decomposition=decomposition)
                over, under = metrics.over_undershoot(u)
                oi, si = metrics.osc_int_smear_int(mesh, u)
                rows.append((method, N, eps, over, under, oi, si))
                if N == max(cfg.N) and eps == cfg.eps[0]:
                    path = os.path.join(cfg.out,
                                        "ex5_%s_N%d.csv" % (method, N))
                    write_node_values_csv(mesh, u, path,
                                          comments=_config_comments(cfg))
                    files.append(path)
    files.insert(0, write_csv(
        os.path.join(cfg.out, "ex5.csv"),
        ["method", "N", "eps", "overshoot", "undershoot", "osc_int",
         "smear_int"],
        rows, _config_comments(cfg)))
    return files


def _run_comp_ex5(cfg):
    """Interior-layer oscillation/smearing statistics over random grids
    with the wider snapping threshold."""
    eps = cfg.eps[0]
    N = cfg.N[0]
    spec = problems.ex5_spec(eps)
    snap = cfg.options.get("snap_rule", "2hmin2")
    rows = []
    acc = {m: [] for m in cfg.methods}

    def one(tag, seed):
        mesh = interior_layer_mesh(N, snap_rule=snap, seed=seed)
        mesh, decomposition = _safe_decomposition(mesh, spec.b)
        for method in cfg.methods:
            u = _solve_method(mesh, spec, method,
                              decomposition=decomposition)
            oi, si = metrics.osc_int_smear_int(mesh, u)
            rows.append((tag, method, oi, si))
            if seed is not None:
                acc[method].append((oi, si))

    one("regular", None)
    for g in range(cfg.grids or 0):
        one("random-%d" % g, cfg.seed + g)
    files = [write_csv(os.path.join(cfg.out, "comp-ex5.csv"),
                       ["grid", "method", "osc_int", "smear_int"],
                       rows, _config_comments(cfg))]
    summary = []
    for method in cfg.methods:
        vals = np.asarray(acc[method]) if acc[method] else \
            np.full((1, 2), np.nan)
        summary.append((method, float(np.nanmean(vals[:, 0])),
                        float(np.nanmean(vals[:, 1]))))
    files.append(write_csv(
        os.path.join(cfg.out, "comp-ex5_summary.csv"),
        ["method", "mean_osc_int", "mean_smear_int"],
        summary, _config_comments(cfg)))
    return files


def _run_ex6(cfg):
    """Channel-with-hole problem with the two characteristic layers
    embedded; nodal over- and undershoots per method."""
    rows = []
    files = []
    snap = cfg.options.get("snap_rule", "hmin2/10")
    mesh = hemker_layered_mesh(0.0, snap_rule=snap)
    for eps in cfg.eps:
        spec = problems.ex6_spec(eps)
        mesh, decomposition = _safe_decomposition(mesh, spec.b)
        for method in cfg.methods:
            u = _solve_method(mesh, spec, method,
                              decomposition=decomposition)
            over, under = metrics.over_undershoot(u)
            rows.append((method, eps, over, under))
            if eps == cfg.eps[0]:
                path = os.path.join(cfg.out, "ex6_%s.csv" % method)
                write_node_values_csv(mesh, u, path,
                                      comments=_config_comments(cfg))
                files.append(path)
    files.insert(0, write_csv(os.path.join(cfg.out, "ex6.csv"),
                              ["method", "eps", "overshoot", "undershoot"],
                              rows, _config_comments(cfg)))
    return files


def _run_comp_ex6(cfg):
    """Wind-angle sweep of the channel-with-hole problem; over- and
    undershoots per angle with the layers re-embedded each time."""
    eps = cfg.eps[0]
    snap = cfg.options.get("snap_rule", "hmin2/10")
    n_theta = cfg.grids or 10
    thetas = [(k + 1) * (math.pi / 4.0) / n_theta for k in range(n_theta)]
    rows = []
    curves = {m: [] for m in cfg.methods}
    for theta in thetas:
        mesh = hemker_layered_mesh(theta, snap_rule=snap)
        spec = problems.ex6_spec(eps, theta=theta)
        mesh, decomposition = _safe_decomposition(mesh, spec.b)
        for method in cfg.methods:
            u = _solve_method(mesh, spec, method,
                              decomposition=decomposition)
            over, under = metrics.over_undershoot(u)
            rows.append((method, theta, over, under))
            curves[method].append((theta, over - under))
    files = [write_csv(os.path.join(cfg.out, "comp-ex6.csv"),
                       ["method", "theta", "overshoot", "undershoot"],
                       rows, _config_comments(cfg))]
    for method in cfg.methods:
        files.append(write_plot_data(
            os.path.join(cfg.out, "comp-ex6_%s.dat" % method),
            curves[method]))
    return files


def _run_ex7(cfg):
    """Recirculating-vortex problem; the wind is tangent to the whole
    boundary, so the constraint band comes from an inset square."""
    rows = []
    files = []
    prob = problems.catalog("ex7")
    for eps in cfg.eps:
        spec = prob.build(eps)
        for N in cfg.N:
            mesh = structured_triangulation(N, N,
                                            domain=problems.GLAZING_DOMAIN)
            delta = float(cfg.options.get("shrink_delta", 2.0 / N))
            decomposition = build_omega_plus_shrunk(mesh, spec.b, delta,
                                                    bounds=(-1.0, 1.0))
            for method in cfg.methods:
                u = _solve_method(mesh, spec, method,
                                  decomposition=decomposition)
                lo, hi = float(u.min()), float(u.max())
                rows.append((method, N, eps, lo, hi))
                if method.startswith("sms") and lo < -1e-10:
                    raise solvers.SolveError(
                        "negative SMS nodal value %.3e (method %s, N=%d, "
                        "eps=%g)" % (lo, method, N, eps))
                if N == max(cfg.N) and eps == cfg.eps[0]:
                    path = os.path.join(cfg.out,
                                        "ex7_%s_N%d.csv" % (method, N))
                    write_node_values_csv(mesh, u, path,
                                          comments=_config_comments(cfg))
                    files.append(path)
    files.insert(0, write_csv(os.path.join(cfg.out, "ex7.csv"),
                              ["method", "N", "eps", "min_value",
                               "max_value"],
                              rows, _config_comments(cfg)))
    return files


_RUNNERS = {
    "ex1": _run_ex1,
    "ex2": lambda cfg: _run_same_grid(cfg, h1=False),
    "ex3": run_random_study,
    "ex4": _run_ex4,
    "ex5": _run_ex5,
    "ex6": _run_ex6,
    "ex7": _run_ex7,
    "comp-ex2": lambda cfg: _run_same_grid(cfg, h1=True),
    "comp-ex3": _run_comp_ex3,
    "comp-ex4": _run_comp_ex4,
    "comp-ex5": _run_comp_ex5,
    "comp-ex6": _run_comp_ex6,
}


def run(cfg):
    """Run the configured experiment; returns the written file paths."""
    os.makedirs(cfg.out, exist_ok=True)
    return _RUNNERS[cfg.experiment](cfg)
