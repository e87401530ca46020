"""Galerkin, SUPG and SMS solution drivers.

The SMS approximation minimizes the elementwise convective residual
over Omega_hat subject to the relaxed discrete equations; its optimality
conditions form a symmetric indefinite saddle-point system solved here.
"""

from dataclasses import dataclass

import numpy as np

from . import assembly, sparse
from .wind import build_omega_plus, classify_boundary


class SolveError(RuntimeError):
    pass


@dataclass
class SmsSolution:
    u: np.ndarray          # nodal values on all nodes, lifting included
    z: np.ndarray          # multiplier on all nodes (zero on Dirichlet)
    t: np.ndarray          # constraint values, ascending N_delta order
    n_delta: list
    method: str
    residual: float
    size: int


def _check_residual(A, x, rhs, what):
    res = np.linalg.norm(A @ x - rhs) / max(np.linalg.norm(rhs), 1.0)
    if res > 1e-8:
        raise SolveError("%s residual %.3e exceeds tolerance" % (what, res))
    return res


def solve_galerkin(mesh, spec, with_constraints=False):
    """Plain Galerkin solve; returns full nodal values."""
    ops = assembly.assemble_galerkin(mesh, spec,
                                     with_constraints=with_constraints)
    try:
        x = sparse.solve_symmetric_indefinite(ops.A, ops.load)
    except sparse.RankDeficiencyError:
        raise
    _check_residual(ops.A.csr, x, ops.load, "Galerkin")
    u = ops.lifting.copy()
    u[ops.free_nodes] = x
    return u


def solve_supg(mesh, spec, parameters=None, with_constraints=False):
    ops = assembly.assemble_supg(mesh, spec, parameters,
                                 with_constraints=with_constraints)
    x = sparse.solve_symmetric_indefinite(ops.A, ops.load)
    _check_residual(ops.A.csr, x, ops.load, "SUPG")
    u = ops.lifting.copy()
    u[ops.free_nodes] = x
    return u


def default_decomposition(mesh, spec):
    classification = classify_boundary(mesh, spec.b)
    return build_omega_plus(mesh, classification, spec.b)


def solve_sms(mesh, spec, decomposition=None, base="galerkin",
              parameters=None):
    """Solve the SMS optimality system on the given decomposition.

    base selects the restriction: the Galerkin equations or the
    SUPG-stabilized ones (S and the residual load are always built from
    the plain convective operator).
    """
    if decomposition is None:
        decomposition = default_decomposition(mesh, spec)
    if base == "galerkin":
        ops = assembly.assemble_galerkin(mesh, spec, decomposition,
                                         with_constraints=True)
    elif base == "supg":
        ops = assembly.assemble_supg(mesh, spec, parameters, decomposition,
                                     with_constraints=True)
    else:
        raise ValueError("base must be 'galerkin' or 'supg'")
    return _solve_kkt(mesh, ops, method="sms-" + base)


def _solve_kkt(mesh, ops, method):
    n = ops.A.n_rows
    m = ops.E.n_cols
    system = sparse.SaddleSystem(ops.S, ops.A, ops.E,
                                 ops.residual_load, ops.load).symmetrize()
    M = system.matrix()
    asym = abs(M - M.T).max()
    if asym > 1e-14 * max(abs(M).max(), 1e-300):
        raise SolveError("saddle system lost symmetry: %.3e" % asym)
    try:
        x = sparse.solve_symmetric_indefinite(system)
    except sparse.RankDeficiencyError as exc:
        raise sparse.RankDeficiencyError(
            "SMS system singular; run diagnose/remediate on the mesh "
            "decomposition (%s)" % exc,
            near_null_vector=exc.near_null_vector) from exc
    uf = x[:n]
    t = x[n:n + m]
    z_free = -x[n + m:]  # un-negate the symmetrizing substitution
    residual = float(np.linalg.norm(M @ x - system.rhs())
                     / max(np.linalg.norm(system.rhs()), 1.0))
    # re-verify the constraint equation and the multiplier conditions
    cons = ops.A.csr @ uf + ops.E.csr @ t - ops.load
    rel = np.linalg.norm(cons) / max(np.linalg.norm(ops.load), 1.0)
    if rel > 1e-8:
        raise SolveError("SMS constraint equation residual %.3e" % rel)
    zmax = np.abs(z_free).max() if z_free.size else 0.0
    if zmax > 0:
        znd = max(abs(z_free[ops.free_index[v]]) for v in ops.n_delta) \
            if ops.n_delta else 0.0
        if znd > 1e-10 * zmax:
            raise SolveError("multiplier does not vanish on N_delta")
    u = ops.lifting.copy()
    u[ops.free_nodes] = uf
    z = np.zeros(mesh.n_nodes)
    z[ops.free_nodes] = z_free
    return SmsSolution(u=u, z=z, t=np.asarray(t), n_delta=list(ops.n_delta),
                       method=method, residual=residual, size=M.shape[0])


# ---------------------------------------------------------------------------
# 1D drivers


def solve_galerkin_1d(mesh1d, eps, b, f, u_left=0.0, u_right=0.0):
    ops = assembly.assemble_1d(mesh1d, eps, b, f, u_left, u_right)
    x = sparse.solve_symmetric_indefinite(ops.A, ops.load)
    _check_residual(ops.A.csr, x, ops.load, "Galerkin 1D")
    u = ops.lifting.copy()
    u[1:mesh1d.J] = x
    return u


def solve_sms_1d(mesh1d, eps, b, f, u_left=0.0, u_right=0.0):
    """1D SMS: single relaxation scalar alpha at x_{J-1}, residual
    minimized over (0, x_{J-1})."""
    ops = assembly.assemble_1d(mesh1d, eps, b, f, u_left, u_right)
    n = ops.A.n_rows
    system = sparse.SaddleSystem(ops.S, ops.A, ops.E,
                                 ops.residual_load, ops.load).symmetrize()
    x = sparse.solve_symmetric_indefinite(system)
    uf = x[:n]
    alpha = float(x[n])
    z = -x[n + 1:]
    cons = ops.A.csr @ uf + ops.E.csr @ np.array([alpha]) - ops.load
    rel = np.linalg.norm(cons) / max(np.linalg.norm(ops.load), 1.0)
    if rel > 1e-8:
        raise SolveError("1D SMS constraint residual %.3e" % rel)
    zmax = np.abs(z).max() if z.size else 0.0
    if zmax > 0 and abs(z[n - 1]) > 1e-10 * zmax:
        raise SolveError("1D multiplier does not vanish at x_{J-1}")
    u = ops.lifting.copy()
    u[1:mesh1d.J] = uf
    residual = float(np.linalg.norm(system.matrix() @ x - system.rhs())
                     / max(np.linalg.norm(system.rhs()), 1.0))
    return SmsSolution(u=u, z=np.concatenate([[0.0], z, [0.0]]),
                       t=np.array([alpha]), n_delta=[mesh1d.J - 1],
                       method="sms-1d", residual=residual, size=2 * n + 1)


def solve_shishkin_oracle_1d(N, eps, b, f, sigma):
    """Galerkin on the full 2N-cell Shishkin mesh (dense oracle).

    Returns (full nodal values, coarse part U_c = values at nodes 0..N,
    alpha* = u_N * a(phi_{N-1}, phi_N)).
    """
    from .meshes import shishkin_mesh_1d

    mesh = shishkin_mesh_1d(N=N, sigma=sigma)
    ops = assembly.assemble_1d(mesh, eps, b, f)
    x = np.linalg.solve(ops.A.toarray(), ops.load)
    u = ops.lifting.copy()
    u[1:mesh.J] = x
    h_N = mesh.widths[N - 1]  # last coarse cell
    alpha_star = u[N] * (-eps / h_N - b / 2.0)
    return u, u[:N + 1].copy(), float(alpha_star), mesh


def solve_shishkin_oracle_2d(problem_spec, N, sigma_x, sigma_y,
                             diagonal="SW-NE", tag_fn=None):
    """SUPG on the tensor 2Nx2N Shishkin grid; returns the solution, the
    mesh, and the coarse-node restriction mask (x <= 1-sx, y <= 1-sy)."""
    from .meshes import tensor_shishkin_2d

    mesh = tensor_shishkin_2d(N, N, sigma_x, sigma_y,
                              diagonal=diagonal, tag_fn=tag_fn)
    u = solve_supg(mesh, problem_spec)
    coarse = ((mesh.nodes[:, 0] <= 1.0 - sigma_x + 1e-14)
              & (mesh.nodes[:, 1] <= 1.0 - sigma_y + 1e-14))
    return u, mesh, coarse
