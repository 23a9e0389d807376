import numpy as np
import pytest

from sfvem.macrofe import (
    build_macro_space,
    field_norms,
    load_vector,
    local_mass,
    local_stiffness,
    moment_matrix,
    moment_vector,
)
from sfvem.macrosub import MacroSubdivision, subdivide_mesh, subdivide_polygon
from sfvem.polybasis import ScaledMonomialBasis, gauss_lobatto, space_dimension
from sfvem.polymesh import PolyMesh2D, generate_cube_mesh, generate_pentagon_mesh

REF_TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def single_triangle_space(degree):
    sub = MacroSubdivision(
        dim=2,
        points=REF_TRI,
        keys=[("v", 0), ("v", 1), ("v", 2)],
        simplices=np.array([[0, 1, 2]]),
        n_parent=3,
        parent_measure=0.5,
        edge_parent={(0, 1): 0, (1, 2): 1, (0, 2): 2},
    )
    return build_macro_space(sub, degree)


def square_space(degree):
    mesh = PolyMesh2D(
        np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]),
        [[0, 1, 2, 3]],
    )
    subs, _ = subdivide_mesh(mesh)
    return build_macro_space(subs[0], degree)


def pentagon_space(cell, degree, level=1):
    mesh = generate_pentagon_mesh(level)
    subs, _ = subdivide_mesh(mesh)
    return build_macro_space(subs[cell], degree)


def cube_space(degree, strategy):
    mesh = generate_cube_mesh(1)
    subs, _ = subdivide_mesh(mesh, strategy=strategy)
    return build_macro_space(subs[0], degree)


def test_reference_triangle_stiffness():
    # classic P1 element matrix on the unit right triangle
    space = single_triangle_space(1)
    expected = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    order = np.argsort([space.node_ids[("vert", ("v", i))] for i in range(3)])
    S = local_stiffness(space)[np.ix_(order, order)]
    assert np.abs(S - expected).max() < 1e-14


def test_reference_triangle_p2_moments():
    # against the constant: vertex functions integrate to 0, edge bumps to 1/6
    space = single_triangle_space(2)
    basis = ScaledMonomialBasis(center=np.zeros(2), scale=1.0, degree=0, dim=2)
    col = moment_vector(space, basis, 0)
    for ent, nid in space.node_ids.items():
        want = 0.0 if ent[0] == "vert" else 1.0 / 6.0
        assert abs(col[nid] - want) < 1e-14


@pytest.mark.parametrize("degree", [1, 2, 3, 4])
def test_stiffness_annihilates_constants(degree):
    space = pentagon_space(1, degree)
    S = local_stiffness(space)
    assert np.abs(S @ np.ones(space.n_nodes)).max() < 1e-12
    assert np.abs(S - S.T).max() < 1e-13


@pytest.mark.parametrize("degree", [1, 2, 3])
def test_mass_total_is_cell_measure(degree):
    space = pentagon_space(0, degree)
    M = local_mass(space)
    assert abs(M.sum() - space.sub.parent_measure) < 1e-13
    assert np.abs(M - M.T).max() < 1e-14


@pytest.mark.parametrize(
    "builder,degree,n_nodes,n_interior",
    [
        (lambda: pentagon_space(0, 2), 2, 12, 2),
        (lambda: single_triangle_space(1), 1, 3, 0),
        (lambda: square_space(1), 1, 4, 0),
        (lambda: square_space(2), 2, 9, 1),
        (lambda: cube_space(1, "kuhn"), 1, 8, 0),
        (lambda: cube_space(2, "kuhn"), 2, 27, 1),
        (lambda: cube_space(1, "center"), 1, 9, 1),
        (lambda: cube_space(2, "center"), 2, 35, 9),
    ],
)
def test_node_counts(builder, degree, n_nodes, n_interior):
    space = builder()
    assert space.n_nodes == n_nodes
    assert int((~space.boundary).sum()) == n_interior


def test_nodes_are_distinct():
    for space in (pentagon_space(0, 3), cube_space(3, "center")):
        nodes = space.nodes
        diff = nodes[:, None, :] - nodes[None, :, :]
        dist = np.sqrt((diff**2).sum(-1))
        np.fill_diagonal(dist, 1.0)
        assert dist.min() > 1e-3


def test_edge_interior_ordering():
    space = pentagon_space(0, 4)
    a, b = ("v", 0), ("v", 1)
    fwd = space.edge_interior_nodes(a, b)
    assert fwd == space.edge_interior_nodes(b, a)[::-1]
    pa = space.nodes[space.vertex_node(a)]
    pb = space.nodes[space.vertex_node(b)]
    gl = gauss_lobatto(5)
    for j, nid in enumerate(fwd, start=1):
        assert np.abs(space.nodes[nid] - (pa + gl[j] * (pb - pa))).max() < 1e-15


@pytest.mark.parametrize("degree", [1, 2, 3, 4, 5])
def test_polynomial_reproduction_2d(degree):
    # nodal interpolation of any P_k function is exact on the macro space
    rng = np.random.default_rng(7 + degree)
    space = pentagon_space(2, degree)
    basis = ScaledMonomialBasis(center=np.array([0.5, 0.25]), scale=0.5,
                                degree=degree, dim=2)
    c = rng.standard_normal(basis.n)
    coeffs = basis.eval(space.nodes) @ c
    for t in range(space.sub.n_simplices):
        ref = rng.dirichlet(np.ones(3), size=6)[:, 1:]
        pts = space.physical_points(t, ref)
        got = space.eval_in_simplex(t, ref, coeffs)
        want = basis.eval(pts) @ c
        assert np.abs(got - want).max() < 1e-11
        ggot = space.grad_in_simplex(t, ref, coeffs)
        gwant = np.einsum("pnd,n->pd", basis.grad(pts), c)
        assert np.abs(ggot - gwant).max() < 1e-10


@pytest.mark.parametrize("strategy", ["kuhn", "center"])
def test_polynomial_reproduction_3d(strategy):
    rng = np.random.default_rng(11)
    space = cube_space(3, strategy)
    basis = ScaledMonomialBasis(center=np.full(3, 0.5), scale=0.5, degree=3, dim=3)
    c = rng.standard_normal(basis.n)
    coeffs = basis.eval(space.nodes) @ c
    for t in range(space.sub.n_simplices):
        ref = rng.dirichlet(np.ones(4), size=4)[:, 1:]
        pts = space.physical_points(t, ref)
        got = space.eval_in_simplex(t, ref, coeffs)
        assert np.abs(got - basis.eval(pts) @ c).max() < 1e-11


@pytest.mark.parametrize("degree", [2, 3, 4, 5])
def test_interior_dimension_2d(degree):
    # strictly more interior nodes than interior moment constraints
    mesh = generate_pentagon_mesh(1)
    subs, _ = subdivide_mesh(mesh)
    for sub in subs:
        space = build_macro_space(sub, degree)
        assert int((~space.boundary).sum()) > space_dimension(2, degree - 2)


@pytest.mark.parametrize("strategy", ["kuhn", "center"])
@pytest.mark.parametrize("degree", [2, 3, 4])
def test_interior_moment_pairing_3d(degree, strategy):
    # interior nodes must pair injectively with the constraint polynomials
    space = cube_space(degree, strategy)
    interior = np.nonzero(~space.boundary)[0]
    nb = space_dimension(3, degree - 2)
    assert interior.shape[0] >= nb
    basis = ScaledMonomialBasis(center=np.full(3, 0.5), scale=0.5,
                                degree=degree - 2, dim=3)
    MI = moment_matrix(space, basis)[interior]
    assert np.linalg.matrix_rank(MI, tol=1e-10) == nb


def test_load_vector_matches_moment_column():
    space = pentagon_space(3, 2)
    basis = ScaledMonomialBasis(center=np.array([0.75, 0.25]), scale=0.25,
                                degree=2, dim=2)
    member = 4
    f = lambda pts: basis.eval(pts)[:, member]
    lv = load_vector(space, f, exactness=2 + 2)
    assert np.abs(lv - moment_vector(space, basis, member)).max() < 1e-14


def test_field_norms_linear():
    space = square_space(2)
    l2, h1 = field_norms(space, space.nodes[:, 0] + 2.0 * space.nodes[:, 1])
    # u = x + 2y on the unit square
    assert abs(l2 - np.sqrt(8.0 / 3.0)) < 1e-13
    assert abs(h1 - np.sqrt(5.0)) < 1e-13


def test_face_nodes_match_across_cells():
    # both cells of a shared face must create byte-identical node keys/coords
    mesh = generate_cube_mesh(2)
    subs, _ = subdivide_mesh(mesh, strategy="kuhn")
    f = next(f for f in range(len(mesh.faces)) if len(mesh.face_cells[f]) == 2)
    c0, c1 = mesh.face_cells[f]
    s0 = build_macro_space(subs[c0], 3)
    s1 = build_macro_space(subs[c1], 3)
    fverts = set(("v", int(v)) for v in mesh.faces[f])

    def on_face(space):
        out = {}
        for ent, nid in space.node_ids.items():
            if ent[0] == "vert":
                ks = {ent[1]}
            elif ent[0] == "edge":
                ks = {ent[1], ent[2]}
            elif ent[0] == "tri":
                ks = {ent[1], ent[2], ent[3]}
            else:
                continue
            if all(x in fverts or x == ("f", f) for x in ks):
                out[ent] = nid
        return out

    n0, n1 = on_face(s0), on_face(s1)
    assert set(n0) == set(n1) and len(n0) == 16
    for ent in n0:
        assert np.array_equal(s0.nodes[n0[ent]], s1.nodes[n1[ent]])


def test_interior_nodes_of_center_cube():
    # only entities touching the added centroid are interior at k=2
    space = cube_space(2, "center")
    cid_key = ("c", 0)
    for nid in np.nonzero(~space.boundary)[0]:
        ent = space.node_entities[nid]
        assert cid_key in ent[1:4]


def test_determinism():
    a = pentagon_space(1, 3)
    b = pentagon_space(1, 3)
    assert np.array_equal(a.nodes, b.nodes)
    assert np.array_equal(a.conn, b.conn)
    assert a.node_entities == b.node_entities
    assert np.array_equal(local_stiffness(a), local_stiffness(b))
