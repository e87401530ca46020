"""Characteristic tracing through the reduced problem, node snapping and
edge embedding of interior-layer paths."""

import numpy as np
import pytest

from smsfem import experiments
from smsfem.assembly import ProblemSpec
from smsfem.layers import (DegenerateCrossingError, TracingError,
                           discontinuity_value, embed_characteristic,
                           snap_nodes, straight_characteristic,
                           trace_characteristic)
from smsfem.meshes import Triangulation, structured_triangulation
from smsfem.problems import EX5_LAYER_VALUE, EX5_ORIGIN, EX5_WIND


def _unit_square(p):
    return 0.0 < p[0] < 1.0 and 0.0 < p[1] < 1.0


def test_discontinuity_value_is_mean():
    assert discontinuity_value(0.0, 1.0) == 0.5
    assert discontinuity_value(-2.0, 4.0) == 1.0


def test_trace_constant_wind_straight_path():
    path = trace_characteristic(EX5_WIND, EX5_ORIGIN, _unit_square,
                                EX5_LAYER_VALUE)
    assert np.allclose(path.points[0], EX5_ORIGIN)
    # wind (cos -pi/3, sin -pi/3) from (0, 0.7) exits through y = 0
    exit_pt = path.points[-1]
    assert abs(exit_pt[1]) <= 1e-6
    assert abs(exit_pt[0] - 0.7 / np.sqrt(3.0)) <= 1e-6
    # homogeneous reduced problem: the value is transported unchanged
    assert np.abs(path.values - EX5_LAYER_VALUE).max() <= 1e-12
    # all intermediate points stay on the straight characteristic
    d = np.array(EX5_WIND) / np.linalg.norm(EX5_WIND)
    rel = path.points - np.asarray(EX5_ORIGIN)
    assert np.abs(rel[:, 0] * d[1] - rel[:, 1] * d[0]).max() <= 1e-9


def test_trace_accumulates_source():
    path = trace_characteristic(np.array([1.0, 0.0]), (0.0, 0.5),
                                _unit_square, 1.0, f=2.0)
    assert abs(path.points[-1][0] - 1.0) <= 1e-6
    assert abs(path.values[-1] - 3.0) <= 1e-6


def test_trace_rejects_outward_wind():
    with pytest.raises(TracingError):
        trace_characteristic(np.array([-1.0, 0.0]), (0.0, 0.5),
                             _unit_square, 0.0)
    with pytest.raises(TracingError):
        trace_characteristic(np.array([0.0, 0.0]), (0.5, 0.5),
                             _unit_square, 0.0)


def test_trace_variable_wind_stays_inside_until_exit():
    wind = lambda p: np.array([1.0 + 0.1 * p[1], 0.2])
    path = trace_characteristic(wind, (0.0, 0.2), _unit_square, 0.25,
                                step=1e-3)
    assert all(_unit_square(p) for p in path.points[1:-1])
    assert not _unit_square(path.points[-1])
    assert np.abs(path.values - 0.25).max() <= 1e-12


def test_snap_nearest_moves_interior_row():
    m = structured_triangulation(4, 4)
    path = straight_characteristic((0.0, 0.55), (1.0, 0.55), 0.5)
    snapped, moved, skipped = snap_nodes(m, path)
    assert moved == [10, 11, 12, 13]
    assert skipped == []
    for v in moved:
        assert abs(snapped.nodes[v][1] - 0.55) <= 1e-12
        assert snapped.nodes[v][0] == m.nodes[v][0]
    assert np.all(snapped.areas() > 0)
    assert snapped.n_elements == m.n_elements


def test_snap_noop_when_nodes_already_on_path():
    m = structured_triangulation(4, 4)
    path = straight_characteristic((0.5, 0.0), (0.5, 1.0), 0.3)
    snapped, moved, _skipped = snap_nodes(m, path)
    assert moved == []
    assert np.array_equal(snapped.nodes, m.nodes)


def test_snap_numeric_threshold_rule():
    m = structured_triangulation(4, 4)
    path = straight_characteristic((0.0, 0.55), (1.0, 0.55), 0.5)
    _snapped, moved, _skipped = snap_nodes(m, path, threshold_rule=1e-6)
    assert moved == []  # nothing within the tight threshold


def test_embed_two_edge_crossing():
    m = Triangulation([(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)], [(0, 1, 2)],
                      [(0, 1, "D"), (1, 2, "D"), (2, 0, "D")])
    path = straight_characteristic((0.5, 0.0), (0.0, 0.5), 0.7)
    em, on_path = embed_characteristic(m, path)
    assert em.n_elements == 5
    assert abs(em.areas().sum() - 2.0) <= 1e-12
    assert len(on_path) == 2
    for v in on_path:
        q, d = path.closest_point(em.nodes[v])
        assert d <= 1e-12
    # the on-path edge became a valued constraint edge
    keys = {frozenset((i, j)): val for i, j, val in em.constraint_edges}
    assert keys[frozenset(on_path)] == 0.7


def test_embed_vertex_passthrough_bisects():
    m = Triangulation([(0.0, 0.0), (2.0, 0.0), (0.0, 2.0)], [(0, 1, 2)],
                      [(0, 1, "D"), (1, 2, "D"), (2, 0, "D")])
    path = straight_characteristic((0.0, 0.0), (1.0, 1.0), 0.4)
    em, on_path = embed_characteristic(m, path)
    assert em.n_elements == 2
    assert abs(em.areas().sum() - 2.0) <= 1e-12
    assert 0 in on_path and len(on_path) == 2


def test_snap_then_embed_counts():
    m = structured_triangulation(4, 4)
    path = straight_characteristic((0.0, 0.55), (1.0, 0.55), 0.5)
    snapped, _moved, _skipped = snap_nodes(m, path)
    em, on_path = embed_characteristic(snapped, path)
    assert em.n_elements == 33
    assert len(on_path) == 5
    assert abs(em.areas().sum() - 1.0) <= 1e-12
    # every on-path node carries the layer value through its edges
    for i, j, val in em.constraint_edges:
        assert val == 0.5


def test_interior_layer_mesh_solves_cleanly():
    # snapped and embedded layer mesh yields a uniquely solvable system
    from smsfem.problems import ex5_spec
    from smsfem.wind import build_omega_plus, classify_boundary, diagnose
    mesh = experiments.interior_layer_mesh(48)
    mesh, dec = experiments._safe_decomposition(mesh, np.array(EX5_WIND))
    report = diagnose(dec, mesh, np.array(EX5_WIND))
    assert not report.has_defects()
    from smsfem.solvers import solve_sms
    sol = solve_sms(mesh, ex5_spec(1e-8), dec)
    assert sol.u.min() >= -1e-6
    assert sol.u.max() <= 1.0 + 1e-6
