"""P1 assembly: bilinear forms, stabilization parameters, residual Gram
matrix, load vectors and the Dirichlet lifting."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smsfem import assembly, experiments
from smsfem.assembly import (ProblemSpec, assemble_galerkin, assemble_supg,
                             compute_supg_parameters, dirichlet_lift,
                             hat_moments_1d)
from smsfem.meshes import (Triangulation, perturb_structured,
                           structured_triangulation, uniform_mesh_1d)
from smsfem.wind import OmegaPlusDecomposition, build_omega_plus, \
    classify_boundary


def _one_triangle():
    return Triangulation([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], [(0, 1, 2)],
                         [(0, 1, "D"), (1, 2, "D"), (2, 0, "D")])


def test_residual_gram_one_triangle_hand_value():
    m = _one_triangle()
    spec = ProblemSpec(eps=0.0, b=np.array([1.0, 0.0]), f=0.0)
    dec = OmegaPlusDecomposition(omega_plus=[], omega_hat=[0], n_delta=[],
                                 b_h=[])
    ops = assemble_galerkin(m, spec, dec)
    # s_ij = area * (dx phi_i)(dx phi_j), gradients (-1, 1, 0), area 1/2
    gx = np.array([-1.0, 1.0, 0.0])
    expected = 0.5 * np.outer(gx, gx)
    assert np.allclose(ops.S_full.toarray(), expected, atol=1e-14)


def test_galerkin_convection_identity_1d():
    # pure convection on a uniform partition gives central differencing
    ops = assembly.assemble_1d(uniform_mesh_1d(6), 0.0, 1.0, 0.0)
    a = ops.A.toarray()
    assert np.allclose(a, -a.T, atol=1e-14)
    assert np.allclose(np.diag(a, 1), 0.5)


def test_diffusion_matrix_1d_hand_value():
    ops = assembly.assemble_1d(uniform_mesh_1d(4), 1.0, 0.0, 0.0)
    h = 0.25
    expected = (np.diag([2.0 / h] * 3) + np.diag([-1.0 / h] * 2, 1)
                + np.diag([-1.0 / h] * 2, -1))
    assert np.allclose(ops.A.toarray(), expected, atol=1e-12)


def test_hat_moments_constant():
    m = uniform_mesh_1d(5)
    mom = hat_moments_1d(1.0, m)
    h = 0.2
    assert np.allclose(mom[1:-1], h, atol=1e-14)
    assert np.allclose(mom[[0, -1]], h / 2.0, atol=1e-14)
    assert abs(mom.sum() - 1.0) <= 1e-14


def test_linear_exactness_galerkin():
    # the interpolant of a linear function solves the discrete problem
    u_lin = lambda p: 3.0 * p[0] - 2.0 * p[1] + 0.25
    spec = ProblemSpec(eps=0.0, b=np.array([2.0, 1.0]),
                       f=2.0 * 3.0 + 1.0 * (-2.0), g1=u_lin)
    m = perturb_structured(structured_triangulation(5, 5), 0.2, seed=1)
    from smsfem.solvers import solve_galerkin
    u = solve_galerkin(m, spec)
    exact = np.array([u_lin(p) for p in m.nodes])
    assert np.abs(u - exact).max() <= 1e-10


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=10 ** 6))
def test_residual_gram_positive_semidefinite(seed):
    rng = np.random.default_rng(seed)
    m = perturb_structured(structured_triangulation(4, 4), 0.25,
                           seed=seed % 100)
    b = rng.normal(size=2)
    b = b / max(np.linalg.norm(b), 1e-3)
    spec = ProblemSpec(eps=0.0, b=b, f=0.0, c=float(rng.uniform(0, 1)))
    dec = OmegaPlusDecomposition(omega_plus=[], omega_hat=list(
        range(m.n_elements)), n_delta=[], b_h=[])
    ops = assemble_galerkin(m, spec, dec)
    s = ops.S_full.toarray()
    assert np.allclose(s, s.T, atol=1e-13)
    x = rng.normal(size=s.shape[0])
    norm = max(np.abs(s).max(), 1e-300)
    assert x @ s @ x >= -1e-12 * norm * (x @ x)


def test_supg_parameter_branches():
    m = structured_triangulation(4, 4)
    b = np.array([1.0, 0.0])
    # strongly convective: every element on the large-Peclet branch
    spec = ProblemSpec(eps=1e-8, b=b, f=1.0)
    p = compute_supg_parameters(m, spec)
    assert np.all(p.pe > 1.0)
    assert np.allclose(p.delta, p.diam / (2.0 * np.linalg.norm(b)))
    # strongly diffusive: every element on the small-Peclet branch
    spec2 = ProblemSpec(eps=10.0, b=b, f=1.0)
    p2 = compute_supg_parameters(m, spec2)
    assert np.all(p2.pe <= 1.0)
    assert np.allclose(p2.delta, p2.diam ** 2 / (4.0 * spec2.eps))


def test_supg_parameter_branch_continuity():
    m = structured_triangulation(4, 4)
    b = np.array([1.0, 0.0])
    d = compute_supg_parameters(m, ProblemSpec(eps=1.0, b=b)).diam[0]
    nb = 1.0
    eps_star = nb * d / 2.0  # Peclet exactly 1
    p = compute_supg_parameters(m, ProblemSpec(eps=eps_star, b=b))
    assert np.allclose(p.pe, 1.0)
    # both branch formulas agree there
    assert np.allclose(p.delta, d / (2.0 * nb))
    assert np.allclose(p.delta, d * d / (4.0 * eps_star))


def test_supg_rejects_zero_diffusion():
    m = structured_triangulation(2, 2)
    spec = ProblemSpec(eps=0.0, b=np.array([1.0, 0.0]), f=1.0)
    with pytest.raises(ValueError):
        assemble_supg(m, spec)
    with pytest.raises(ValueError):
        compute_supg_parameters(m, spec)


def test_dirichlet_lift_homogeneous():
    m = structured_triangulation(3, 3)
    u_d, nodes = dirichlet_lift(m, ProblemSpec(eps=1.0, b=[1.0, 0.0]))
    assert np.all(u_d == 0.0)
    assert set(nodes) == m.boundary_node_set()


def test_dirichlet_lift_layer_value_overrides_data():
    # the embedded-characteristic node at the data discontinuity carries
    # the averaged layer value, not the one-sided boundary datum
    from smsfem.problems import ex5_spec
    mesh = experiments.interior_layer_mesh(8)
    spec = ex5_spec(1e-8)
    u_d, _nodes = dirichlet_lift(mesh, spec)
    hit = [v for v in range(mesh.n_nodes)
           if abs(mesh.nodes[v][0]) < 1e-12
           and abs(mesh.nodes[v][1] - 0.7) < 1e-9]
    assert len(hit) == 1
    assert abs(u_d[hit[0]] - 0.5) <= 1e-12


def test_neumann_load_constant_datum():
    tag = lambda p: "N" if p[0] > 1.0 - 1e-9 else "D"
    m = structured_triangulation(2, 2, tag_fn=tag)
    eps = 0.1
    base = ProblemSpec(eps=eps, b=np.array([1.0, 0.0]), f=0.0, g2=0.0)
    spec = ProblemSpec(eps=eps, b=np.array([1.0, 0.0]), f=0.0, g2=1.0)
    a0 = assemble_galerkin(m, base)
    a1 = assemble_galerkin(m, spec)
    diff = a1.load - a0.load
    mid = [i for i, v in enumerate(a1.free_nodes)
           if abs(m.nodes[v][0] - 1.0) < 1e-9
           and abs(m.nodes[v][1] - 0.5) < 1e-9]
    assert len(mid) == 1
    # eps * <g2, phi> over the two adjacent edges of length 1/2
    assert abs(diff[mid[0]] - eps * 0.5) <= 1e-12
    others = [i for i in range(diff.size) if i != mid[0]
              and abs(m.nodes[a1.free_nodes[i]][0] - 1.0) > 1e-9]
    assert np.abs(diff[others]).max() <= 1e-14


def test_constraint_selector_columns():
    m = structured_triangulation(4, 4)
    b = np.array([1.0, 1.0])
    dec = build_omega_plus(m, classify_boundary(m, b), b)
    spec = ProblemSpec(eps=0.0, b=b, f=1.0)
    ops = assemble_galerkin(m, spec, dec)
    e = ops.E.toarray()
    assert e.shape == (ops.A.n_rows, len(dec.n_delta))
    assert np.all(e.sum(axis=0) == 1.0)
    for col, v in enumerate(ops.n_delta):
        assert e[ops.free_index[v], col] == 1.0


def test_quadrature_exact_constant_coefficients():
    # constant b, linear f: assembled load is exact, matches symbolic value
    m = _one_triangle()
    spec = ProblemSpec(eps=0.0, b=np.array([1.0, 0.0]),
                       f=lambda p: 2.0 + 3.0 * p[0] + p[1])
    # int f*phi_i over the reference triangle, computed symbolically:
    # phi0=1-x-y, phi1=x, phi2=y; area 1/2
    expected = np.array([2.0 / 6.0 + 3.0 / 24.0 + 1.0 / 24.0,
                         2.0 / 6.0 + 3.0 / 12.0 + 1.0 / 24.0,
                         2.0 / 6.0 + 3.0 / 24.0 + 1.0 / 12.0])
    # all nodes are Dirichlet, so reconstruct the full load by lifting-free
    # assembly on an all-Neumann variant of the same triangle
    m2 = Triangulation(m.nodes, m.elements,
                       [(0, 1, "N"), (1, 2, "N"), (2, 0, "N")])
    ops2 = assemble_galerkin(m2, spec, with_constraints=False)
    assert np.abs(ops2.load - expected).max() <= 1e-13
