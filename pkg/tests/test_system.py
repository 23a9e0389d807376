import numpy as np
import pytest

from sfvem.polymesh import PolyMesh2D, generate_cube_mesh, generate_pentagon_mesh
from sfvem.projector import build_discretization, interpolate_exact
from sfvem.system import (
    DEFAULT_TOL,
    SolveError,
    SolverConfig,
    assemble,
    jacobi_pcg,
    reconstruct,
    solve_system,
)


class LinearXY:
    def u(self, pts):
        pts = np.atleast_2d(pts)
        return pts[:, 0] + 2.0 * pts[:, 1]

    def laplacian(self, pts):
        return np.zeros(np.atleast_2d(pts).shape[0])


class SinSin2D:
    def u(self, pts):
        pts = np.atleast_2d(pts)
        return np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])

    def laplacian(self, pts):
        return -2.0 * np.pi**2 * self.u(pts)

    def f(self, pts):
        return 2.0 * np.pi**2 * self.u(pts)


def unit_square_mesh():
    return PolyMesh2D(
        np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
        [[0, 1, 2, 3]],
    )


def test_square_cell_unit_load():
    # the square splits along the 1-3 diagonal, so hats at vertices 1 and 3
    # cover both triangles (2 * area/3) while 0 and 2 cover one (area/3)
    disc = build_discretization(unit_square_mesh(), 1)
    sysm = assemble(disc, f=lambda p: np.ones(p.shape[0]))
    assert np.allclose(sysm.b, [1 / 6, 1 / 3, 1 / 6, 1 / 3], atol=1e-14)


def test_zero_data_gives_zero_solution():
    disc = build_discretization(generate_pentagon_mesh(2), 2)
    sysm = assemble(disc)
    assert np.all(sysm.b == 0.0)
    res = solve_system(sysm, SolverConfig(method="pcg"))
    assert res.iterations == 0
    assert np.all(res.x == 0.0)
    field = reconstruct(disc, res.x)
    assert all(np.all(c == 0.0) for c in field.coefficients)


def test_constants_in_global_nullspace():
    disc = build_discretization(generate_pentagon_mesh(2), 1)
    sysm = assemble(disc)
    ones = np.ones(disc.layout.n_dofs)
    assert np.abs(sysm.A @ ones).max() < 1e-12


def test_matrix_symmetric():
    disc = build_discretization(generate_pentagon_mesh(2), 2)
    sysm = assemble(disc)
    diff = (sysm.A - sysm.A.T).tocoo()
    scale = np.abs(sysm.A.data).max()
    assert np.abs(diff.data).max() < 1e-12 * scale if diff.nnz else True


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_patch_test_2d(degree):
    problem = LinearXY()
    disc = build_discretization(generate_pentagon_mesh(2), degree)
    exact = interpolate_exact(disc, problem)
    sysm = assemble(disc, boundary_values=exact)
    res = solve_system(sysm)
    assert np.abs(res.x - exact).max() < 1e-9
    field = reconstruct(disc, res.x)
    for c, pr in enumerate(disc.projectors):
        space = pr.space
        vals = field.coefficients[c]
        assert np.abs(vals - problem.u(space.nodes)).max() < 1e-9


def test_cg_matches_dense():
    problem = SinSin2D()
    disc = build_discretization(generate_pentagon_mesh(2), 2)
    sysm = assemble(disc, f=problem.f)
    dense = solve_system(sysm, SolverConfig(method="dense"))
    pcg = solve_system(sysm, SolverConfig(method="pcg"))
    assert dense.method == "dense" and pcg.method == "pcg"
    assert np.abs(dense.x - pcg.x).max() < 1e-10
    assert pcg.iterations > 0
    assert pcg.residuals[-1] <= DEFAULT_TOL * pcg.residuals[0]


def test_auto_method_picks_dense_on_small_systems():
    disc = build_discretization(generate_pentagon_mesh(2), 1)
    sysm = assemble(disc, f=SinSin2D().f)
    assert solve_system(sysm).method == "dense"


def test_pcg_zero_rhs():
    disc = build_discretization(generate_pentagon_mesh(1), 1)
    sysm = assemble(disc)
    x, iters, residuals = jacobi_pcg(sysm.free_matrix(), np.zeros(sysm.n_free), 1e-12, 10)
    assert iters == 0 and residuals == [0.0] and np.all(x == 0.0)


def test_pcg_exhaustion_reports_history():
    problem = SinSin2D()
    disc = build_discretization(generate_pentagon_mesh(3), 1)
    sysm = assemble(disc, f=problem.f)
    with pytest.raises(SolveError) as err:
        jacobi_pcg(sysm.free_matrix(), sysm.free_rhs(), 1e-12, 3)
    assert "3 iterations" in str(err.value)
    assert len(err.value.residuals) == 4
    assert all(r > 0 for r in err.value.residuals)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(method="lu")


def test_env_tolerance_override(monkeypatch):
    monkeypatch.setenv("SFVEM_CG_TOL", "1e-6")
    assert SolverConfig().tol == 1e-6
    monkeypatch.delenv("SFVEM_CG_TOL")
    assert SolverConfig().tol == DEFAULT_TOL


def test_boundary_lifting_moves_to_rhs():
    problem = LinearXY()
    disc = build_discretization(generate_pentagon_mesh(2), 1)
    exact = interpolate_exact(disc, problem)
    sysm = assemble(disc, boundary_values=exact)
    assert np.all(sysm.lift[sysm.fixed] == exact[sysm.fixed])
    assert np.all(sysm.lift[sysm.free] == 0.0)
    manual = (sysm.b - sysm.A @ sysm.lift)[sysm.free]
    assert np.array_equal(sysm.free_rhs(), manual)


def test_galerkin_orthogonality():
    problem = SinSin2D()
    disc = build_discretization(generate_pentagon_mesh(2), 2)
    sysm = assemble(disc, f=problem.f)
    res = solve_system(sysm, SolverConfig(method="dense"))
    residual = sysm.free_rhs() - sysm.free_matrix() @ res.x[sysm.free]
    scale = np.abs(sysm.free_rhs()).max()
    rng = np.random.default_rng(7)
    for _ in range(20):
        v = rng.standard_normal(sysm.n_free)
        assert abs(v @ residual) <= 1e-10 * scale * np.linalg.norm(v)


def _locate(space, point):
    for t, tri in enumerate(space.sub.simplices):
        verts = space.sub.points[tri]
        mat = np.column_stack([verts[1] - verts[0], verts[2] - verts[0]])
        ref = np.linalg.solve(mat, point - verts[0])
        if ref.min() >= -1e-12 and ref.sum() <= 1 + 1e-12:
            return t, ref
    raise AssertionError("point not inside any macro simplex")


def test_reconstruction_continuous_across_edges():
    problem = SinSin2D()
    mesh = generate_pentagon_mesh(2)
    disc = build_discretization(mesh, 3)
    sysm = assemble(disc, f=problem.f)
    field = reconstruct(disc, solve_system(sysm).x)
    rng = np.random.default_rng(11)
    interior = np.nonzero(~mesh.boundary_edges)[0]
    jumps = []
    for _ in range(200):
        eid = rng.choice(interior)
        a, b = mesh.vertices[mesh.edges[eid]]
        point = a + rng.uniform(0.05, 0.95) * (b - a)
        left, right = mesh.edge_cells[eid]
        vals = []
        for c in (left, right):
            t, ref = _locate(disc.projectors[c].space, point)
            vals.append(field.eval_cell(c, ref[None, :], t)[0])
        jumps.append(abs(vals[0] - vals[1]))
    assert max(jumps) < 1e-10


def test_assembly_deterministic():
    problem = SinSin2D()
    mesh = generate_cube_mesh(1)
    a = assemble(build_discretization(mesh, 2), f=lambda p: p[:, 0])
    b = assemble(build_discretization(mesh, 2), f=lambda p: p[:, 0])
    assert np.array_equal(a.A.data, b.A.data)
    assert np.array_equal(a.A.indices, b.A.indices)
    assert np.array_equal(a.A.indptr, b.A.indptr)
    assert np.array_equal(a.b, b.b)

    c = assemble(build_discretization(generate_pentagon_mesh(2), 2), f=problem.f)
    d = assemble(build_discretization(generate_pentagon_mesh(2), 2), f=problem.f)
    assert np.array_equal(c.A.data, d.A.data)
    assert np.array_equal(c.b, d.b)
