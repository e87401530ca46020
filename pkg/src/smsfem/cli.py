"""Command-line interface: mesh generation/inspection, single solves,
uniqueness diagnostics and the experiment runner.

Exit codes: 0 success, 2 configuration error, 3 solver failure.
"""

import argparse
import os
import sys

import numpy as np

from . import experiments, metrics, problems
from .experiments import ConfigError, parse_config
from .layers import DegenerateCrossingError
from .meshes import (ArgumentError, GenerationError, MeshFileError,
                     perturb_structured, read_mesh, red_refine,
                     structured_triangulation, write_mesh,
                     write_node_values_csv)
from .problems import UnknownProblemError
from .solvers import SolveError
from .sparse import RankDeficiencyError
from .wind import (RemediationError, ValidationError, build_omega_plus_shrunk,
                   diagnose)

_CONFIG_ERRORS = (ConfigError, UnknownProblemError, MeshFileError,
                  ArgumentError, GenerationError, ValidationError,
                  FileNotFoundError, IsADirectoryError)
_SOLVER_ERRORS = (SolveError, RankDeficiencyError, RemediationError,
                  DegenerateCrossingError)

_FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def _scalar(raw, key, default=None):
    """Config values parse as lists (repeated keys accumulate); commands
    outside `experiment` take single values."""
    v = raw.get(key, default)
    if isinstance(v, list):
        if not v:
            return default
        if len(v) > 1:
            raise ConfigError("%s given %d times, expected once"
                              % (key, len(v)))
        return v[0]
    return v


def _as_float(raw, key, default):
    v = _scalar(raw, key, default)
    try:
        return float(v)
    except (TypeError, ValueError):
        raise ConfigError("%s must be a number, got %r" % (key, v))


def _as_int(raw, key, default):
    v = _scalar(raw, key, default)
    try:
        return int(v)
    except (TypeError, ValueError):
        raise ConfigError("%s must be an integer, got %r" % (key, v))


def _load_config(path):
    if path is None:
        return {}
    return parse_config(path)


def _mesh_from_config(raw, seed):
    """Build a mesh from the flat config mapping.

    kind = structured (default) | fixture | file, with nx/ny/diagonal/
    domain, fixture name or path, optional perturb amplitude and refine
    list ('all' or element ids).
    """
    kind = _scalar(raw, "kind", "structured")
    if kind == "structured":
        nx = _as_int(raw, "nx", _as_int(raw, "n", 8))
        ny = _as_int(raw, "ny", nx)
        diagonal = _scalar(raw, "diagonal", "SW-NE")
        dom = _scalar(raw, "domain")
        if dom is not None:
            parts = [float(t) for t in str(dom).replace(",", " ").split()]
            if len(parts) != 4:
                raise ConfigError("domain needs four numbers: x0 y0 x1 y1")
            domain = ((parts[0], parts[1]), (parts[2], parts[3]))
        else:
            domain = ((0.0, 0.0), (1.0, 1.0))
        mesh = structured_triangulation(nx, ny, diagonal=diagonal,
                                        domain=domain)
    elif kind == "fixture":
        name = _scalar(raw, "fixture")
        if not name:
            raise ConfigError("kind=fixture requires a fixture name")
        path = os.path.join(_FIXTURES, "%s.mesh" % name)
        if not os.path.exists(path):
            raise ConfigError("unknown fixture %r" % name)
        mesh = read_mesh(path)
    elif kind == "file":
        path = _scalar(raw, "path")
        if not path:
            raise ConfigError("kind=file requires path")
        mesh = read_mesh(path)
    else:
        raise ConfigError("unknown mesh kind %r" % kind)
    amp = _as_float(raw, "perturb", 0.0)
    if amp:
        mesh = perturb_structured(mesh, amp, seed)
    refine = _scalar(raw, "refine")
    if refine is not None:
        if refine == "all":
            targets = range(mesh.n_elements)
        else:
            try:
                targets = [int(t) for t in str(refine).split()]
            except ValueError:
                raise ConfigError("refine must be 'all' or element ids")
        mesh = red_refine(mesh, targets)
    return mesh


def _describe(mesh):
    tags = {}
    for _i, _j, t in mesh.boundary_edges:
        tags[t] = tags.get(t, 0) + 1
    areas = np.abs(mesh.areas())
    lines = ["nodes: %d" % mesh.n_nodes,
             "elements: %d" % mesh.n_elements,
             "boundary edges: %s" % " ".join(
                 "%s=%d" % (t, c) for t, c in sorted(tags.items())),
             "constraint edges: %d" % len(mesh.constraint_edges),
             "element area: min %.6e max %.6e" % (areas.min(), areas.max())]
    return "\n".join(lines)


def _wind_from_config(raw, spec=None):
    if "bx" in raw or "by" in raw:
        return np.array([_as_float(raw, "bx", 0.0),
                         _as_float(raw, "by", 0.0)])
    if spec is not None:
        return spec.b
    raise ConfigError("wind required: set bx/by or problem")


def _problem_setup(raw, seed):
    """Mesh, spec and decomposition for a single named-problem solve."""
    name = _scalar(raw, "problem")
    if not name:
        raise ConfigError("solve requires problem=<id>")
    prob = problems.catalog(name)
    if prob.dimension != 2:
        raise ConfigError("problem %r is one-dimensional; use the library "
                          "solvers directly" % name)
    eps = _as_float(raw, "eps", prob.default_eps)
    N = _as_int(raw, "N", 16)
    if name == "ex5":
        spec = problems.ex5_spec(eps)
        mesh = experiments.interior_layer_mesh(
            N, snap_rule=_scalar(raw, "snap_rule", "nearest"))
        mesh, dec = experiments._safe_decomposition(mesh, spec.b)
    elif name == "ex6":
        theta = _as_float(raw, "theta", 0.0)
        spec = problems.ex6_spec(eps, theta=theta)
        mesh = experiments.hemker_layered_mesh(
            theta, snap_rule=_scalar(raw, "snap_rule", "hmin2/10"))
        mesh, dec = experiments._safe_decomposition(mesh, spec.b)
    elif name == "ex7":
        spec = problems.ex7_spec(eps)
        mesh = structured_triangulation(N, N,
                                        domain=problems.GLAZING_DOMAIN)
        delta = _as_float(raw, "shrink_delta", 2.0 / N)
        dec = build_omega_plus_shrunk(mesh, spec.b, delta,
                                      bounds=(-1.0, 1.0))
    else:
        spec = prob.build(eps)
        if "kind" in raw or "fixture" in raw or "path" in raw:
            mesh = _mesh_from_config(raw, seed)
        else:
            mesh = structured_triangulation(N, N)
            amp = _as_float(raw, "perturb", 0.0)
            if amp:
                mesh = perturb_structured(mesh, amp, seed)
        dec = experiments._decomposition(mesh, spec.b)
    return mesh, spec, dec


def _cmd_mesh(args):
    raw = _load_config(args.config)
    mesh = _mesh_from_config(raw, args.seed)
    print(_describe(mesh))
    name = _scalar(raw, "write")
    if name or args.out != ".":
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, name or "mesh.mesh")
        write_mesh(mesh, path)
        print("wrote %s" % path)
    return 0


def _cmd_solve(args):
    raw = _load_config(args.config)
    mesh, spec, dec = _problem_setup(raw, args.seed)
    method = _scalar(raw, "method", "sms-supg")
    if method not in experiments._METHODS:
        raise ConfigError("unknown method %r (known: %s)"
                          % (method, ", ".join(experiments._METHODS)))
    u = experiments._solve_method(mesh, spec, method, decomposition=dec)
    over, under = metrics.over_undershoot(u)
    print("method: %s" % method)
    print("nodal range: [%.6e, %.6e]" % (u.min(), u.max()))
    print("overshoot: %.6e  undershoot: %.6e" % (over, under))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "%s_%s.csv" % (_scalar(raw, "problem"), method))
    write_node_values_csv(mesh, u, path)
    print("wrote %s" % path)
    return 0


def _cmd_diagnose(args):
    raw = _load_config(args.config)
    if _scalar(raw, "problem"):
        mesh, spec, dec = _problem_setup(raw, args.seed)
        b = spec.b
    else:
        mesh = _mesh_from_config(raw, args.seed)
        b = _wind_from_config(raw)
        dec = experiments._decomposition(mesh, b)
    report = diagnose(dec, mesh, b)
    sys.stdout.write(report.to_text())
    return 0


def _cmd_experiment(args):
    raw = _load_config(args.config)
    cfg = experiments.config_from_mapping(raw, experiment=args.id,
                                          out=args.out, seed=args.seed,
                                          scale=args.scale)
    files = experiments.run(cfg)
    for f in files:
        print("wrote %s" % f)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="smsfem",
        description="Stabilized FEM for convection-dominated problems: "
                    "meshes, solves, uniqueness diagnostics, experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--scale", choices=("desk", "paper"), default="desk")

    p_mesh = sub.add_parser("mesh", help="generate, inspect or refine a mesh")
    common(p_mesh)
    p_mesh.set_defaults(func=_cmd_mesh)

    p_solve = sub.add_parser("solve", help="solve one problem from config")
    common(p_solve)
    p_solve.set_defaults(func=_cmd_solve)

    p_diag = sub.add_parser("diagnose", help="uniqueness report for a mesh")
    common(p_diag)
    p_diag.set_defaults(func=_cmd_diagnose)

    p_exp = sub.add_parser("experiment", help="run a named experiment")
    p_exp.add_argument("id", help="ex1..ex7 or comp-ex2..comp-ex6")
    common(p_exp)
    p_exp.set_defaults(func=_cmd_experiment)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as e:
        print("config error: %s" % e, file=sys.stderr)
        return 2
    except _SOLVER_ERRORS as e:
        print("solver failure: %s" % e, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
