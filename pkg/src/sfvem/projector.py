"""Local H1 projections from trace/moment data onto the macro spaces.

A field in the nonconforming trial space is known through its vertex
values, its values at Gauss-Lobatto points inside each mesh edge, and the
coefficients of its negative (surface) Laplacian in scaled monomials, per
face in 3D and per cell.  The projector reconstructs, cell by cell, the
continuous macro-space function with the same boundary trace whose
interior gradient residual is orthogonal to all interior nodal functions.
In 3D the trace itself is first reconstructed face by face with the 2D
version of the same solve, using in-plane coordinates.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .macrofe import build_macro_space, load_vector, local_stiffness, moment_matrix
from .macrosub import MacroSubdivision, subdivide_mesh
from .polybasis import (
    ScaledMonomialBasis,
    gauss_lobatto,
    map_quadrature,
    simplex_quadrature,
    space_dimension,
)
from .polymesh import PolyMesh2D, _shoelace, face_frame

DATA_EXACTNESS_MARGIN = 4


class TildeDofLayout:
    """Global numbering: vertices, edge points, face moments, cell moments."""

    def __init__(self, mesh, degree):
        self.mesh = mesh
        self.degree = int(degree)
        self.dim = 2 if isinstance(mesh, PolyMesh2D) else 3
        k = self.degree
        self.per_edge = k - 1
        self.per_face = space_dimension(2, k - 2) if self.dim == 3 else 0
        self.per_cell = space_dimension(self.dim, k - 2)
        self.edge_offset = mesh.n_vertices
        if self.dim == 3:
            self.face_offset = self.edge_offset + mesh.n_edges * self.per_edge
            self.cell_offset = self.face_offset + mesh.n_faces * self.per_face
        else:
            self.face_offset = None
            self.cell_offset = self.edge_offset + mesh.n_edges * self.per_edge
        self.n_dofs = self.cell_offset + mesh.n_cells * self.per_cell
        self.edge_index = {
            (int(a), int(b)): i for i, (a, b) in enumerate(mesh.edges)
        }
        self._flag_boundary()

    def _flag_boundary(self):
        mesh = self.mesh
        mask = np.zeros(self.n_dofs, dtype=bool)
        mask[: mesh.n_vertices] = mesh.boundary_vertices
        for e in np.nonzero(mesh.boundary_edges)[0]:
            mask[self.edge_dofs(e)] = True
        if self.dim == 3:
            for f in np.nonzero(mesh.boundary_faces)[0]:
                mask[self.face_dofs(f)] = True
        self.boundary = mask

    def vertex_dof(self, v):
        return int(v)

    def edge_dofs(self, e):
        start = self.edge_offset + e * self.per_edge
        return np.arange(start, start + self.per_edge)

    def face_dofs(self, f):
        start = self.face_offset + f * self.per_face
        return np.arange(start, start + self.per_face)

    def cell_dofs(self, c):
        start = self.cell_offset + c * self.per_cell
        return np.arange(start, start + self.per_cell)

    def cell_edge_ids(self, c):
        if self.dim == 2:
            return sorted(self.mesh.cell_edges[c])
        ids = set()
        for f, _ in self.mesh.cells[c]:
            ids.update(self.mesh.face_edges[f])
        return sorted(ids)

    def cell_tilde_dofs(self, c):
        """Cell-local dof order: vertices, edges, faces, then cell moments."""
        mesh = self.mesh
        parts = []
        if self.dim == 2:
            parts.append(np.asarray(mesh.cells[c], dtype=int))
        else:
            parts.append(mesh.cell_vertex_ids(c))
        for e in self.cell_edge_ids(c):
            parts.append(self.edge_dofs(e))
        if self.dim == 3:
            for f, _ in mesh.cells[c]:
                parts.append(self.face_dofs(f))
        parts.append(self.cell_dofs(c))
        return np.concatenate(parts).astype(int)

    def face_tilde_dofs(self, f):
        """Face-local dof order: loop vertices, loop edges, face moments."""
        mesh = self.mesh
        parts = [np.asarray(mesh.faces[f], dtype=int)]
        for e in sorted(mesh.face_edges[f]):
            parts.append(self.edge_dofs(e))
        parts.append(self.face_dofs(f))
        return np.concatenate(parts).astype(int)


def _trace_rows(space, layout, matrix, positions):
    """Identity rows tying boundary vertex/edge nodes to their trace dofs."""
    k = layout.degree
    for ent, nid in space.node_ids.items():
        if not space.boundary[nid]:
            continue
        if ent[0] == "vert" and ent[1][0] == "v":
            matrix[nid, positions[layout.vertex_dof(ent[1][1])]] = 1.0
        elif ent[0] == "edge" and ent[1][0] == "v" and ent[2][0] == "v":
            a, b = ent[1][1], ent[2][1]
            j = ent[3]
            dofs = layout.edge_dofs(layout.edge_index[(a, b)])
            matrix[nid, positions[int(dofs[j - 1])]] = 1.0


def _interior_solve(space, matrix, positions, moment_basis, moment_cols):
    """Fill interior rows: gradient-orthogonality against interior nodes."""
    interior = np.nonzero(~space.boundary)[0]
    if interior.shape[0] == 0:
        return local_stiffness(space)
    bdry = np.nonzero(space.boundary)[0]
    S = local_stiffness(space)
    rhs = -S[np.ix_(interior, bdry)] @ matrix[bdry]
    if moment_basis is not None:
        MI = moment_matrix(space, moment_basis)[interior]
        rhs[:, moment_cols] += MI
    matrix[interior] = cho_solve(cho_factor(S[np.ix_(interior, interior)]), rhs)
    return S


class FaceContext:
    """Per-face data shared by both adjacent cells in 3D.

    Holds the in-plane macro space, the face moment basis, and the trace
    reconstruction matrix from the face's tilde dofs to macro node values.
    """

    def __init__(self, mesh, f, ftri, degree, layout):
        self.face_id = f
        self.origin, self.t1, self.t2, self.normal = face_frame(mesh, f)
        loop = ftri.vertex_ids
        n = len(loop)
        self.sub = MacroSubdivision(
            dim=2,
            points=ftri.plane,
            keys=ftri.keys,
            simplices=ftri.triangles,
            n_parent=n,
            parent_measure=abs(_shoelace(ftri.plane[:n])),
            edge_parent={
                tuple(sorted((i, (i + 1) % n))): i for i in range(n)
            },
        )
        self.space = build_macro_space(self.sub, degree)
        self.gather = layout.face_tilde_dofs(f)
        positions = {int(g): i for i, g in enumerate(self.gather)}
        if degree >= 2:
            self.basis = ScaledMonomialBasis(
                center=np.zeros(2),
                scale=mesh.face_diameter(f),
                degree=degree - 2,
                dim=2,
            )
            cols = [positions[int(g)] for g in layout.face_dofs(f)]
        else:
            self.basis = None
            cols = []
        self.T = np.zeros((self.space.n_nodes, self.gather.shape[0]))
        _trace_rows(self.space, layout, self.T, positions)
        _interior_solve(self.space, self.T, positions, self.basis, cols)

    def lift(self, plane_points):
        """Plane coordinates to 3D coordinates."""
        p = np.atleast_2d(plane_points)
        return self.origin + p[:, :1] * self.t1 + p[:, 1:] * self.t2


class ElementProjector:
    """Projection of one cell's tilde dofs onto its macro space."""

    def __init__(self, cell, space, gather, matrix, stiffness, basis):
        self.cell = cell
        self.space = space
        self.gather = gather
        self.P = matrix
        self.basis = basis
        # element matrix of the projected gradients
        self.A = matrix.T @ stiffness @ matrix

    def element_load(self, f, exactness):
        return self.P.T @ load_vector(self.space, f, exactness)

    def macro_coefficients(self, dof_vector):
        return self.P @ np.asarray(dof_vector)[self.gather]


def cell_moment_basis(mesh, c, degree, dim):
    if degree < 2:
        return None
    return ScaledMonomialBasis(
        center=mesh.cell_centroid(c),
        scale=mesh.cell_diameter(c),
        degree=degree - 2,
        dim=dim,
    )


def project_element(mesh, c, sub, degree, layout, face_contexts=None):
    space = build_macro_space(sub, degree)
    gather = layout.cell_tilde_dofs(c)
    positions = {int(g): i for i, g in enumerate(gather)}
    P = np.zeros((space.n_nodes, gather.shape[0]))
    if layout.dim == 2:
        _trace_rows(space, layout, P, positions)
    else:
        for f, _ in mesh.cells[c]:
            ctx = face_contexts[f]
            cols = np.array([positions[int(g)] for g in ctx.gather])
            for ent, row in ctx.space.node_ids.items():
                P[space.node_ids[ent], cols] = ctx.T[row]
    basis = cell_moment_basis(mesh, c, degree, layout.dim)
    if basis is not None:
        cols = [positions[int(g)] for g in layout.cell_dofs(c)]
    else:
        cols = []
    S = _interior_solve(space, P, positions, basis, cols)
    return ElementProjector(c, space, gather, P, S, basis)


class Discretization:
    """Everything derived from (mesh, degree, subdivision strategy)."""

    def __init__(self, mesh, degree, strategy="auto"):
        self.mesh = mesh
        self.degree = int(degree)
        self.strategy = strategy
        self.layout = TildeDofLayout(mesh, degree)
        self.subs, self.face_tris = subdivide_mesh(mesh, strategy=strategy)
        if self.layout.dim == 3:
            self.face_contexts = [
                FaceContext(mesh, f, self.face_tris[f], self.degree, self.layout)
                for f in range(mesh.n_faces)
            ]
        else:
            self.face_contexts = None
        self.projectors = [
            project_element(
                mesh, c, self.subs[c], self.degree, self.layout,
                self.face_contexts,
            )
            for c in range(mesh.n_cells)
        ]

    @property
    def n_dofs(self):
        return self.layout.n_dofs


def build_discretization(mesh, degree, strategy="auto"):
    return Discretization(mesh, degree, strategy)


def _basis_gram(basis, quad, coord_sets):
    G = np.zeros((basis.n, basis.n))
    for coords in coord_sets:
        pts, w = map_quadrature(quad, coords)
        vals = basis.eval(pts)
        G += np.einsum("q,qi,qj->ij", w, vals, vals)
    return G


def interpolate_exact(disc, problem):
    """Tilde dofs of a smooth function, with exact vertex/edge traces.

    Face and cell moment dofs carry the L2 projection of the negative
    (surface) Laplacian; quadrature runs a few orders above the trial
    degree so smooth data is resolved well past discretization error.
    """
    mesh, layout, k = disc.mesh, disc.layout, disc.degree
    x = np.zeros(layout.n_dofs)
    x[: mesh.n_vertices] = problem.u(mesh.vertices)
    if k >= 2:
        gl = gauss_lobatto(k + 1)[1:-1]
        va = mesh.vertices[mesh.edges[:, 0]]
        vb = mesh.vertices[mesh.edges[:, 1]]
        pts = va[:, None, :] + gl[None, :, None] * (vb - va)[:, None, :]
        vals = problem.u(pts.reshape(-1, pts.shape[-1]))
        x[layout.edge_offset : layout.edge_offset + pts.shape[0] * pts.shape[1]] = vals
    exactness = 2 * k + DATA_EXACTNESS_MARGIN
    if layout.dim == 3 and k >= 2:
        quad = simplex_quadrature(2, exactness)
        for ctx in disc.face_contexts:
            tris = [ctx.sub.simplex_coords(t) for t in range(ctx.sub.n_simplices)]
            G = _basis_gram(ctx.basis, quad, tris)
            rhs = np.zeros(ctx.basis.n)
            for coords in tris:
                p2, w = map_quadrature(quad, coords)
                H = problem.hessian(ctx.lift(p2))
                lap = (
                    np.einsum("i,qij,j->q", ctx.t1, H, ctx.t1)
                    + np.einsum("i,qij,j->q", ctx.t2, H, ctx.t2)
                )
                rhs += ctx.basis.eval(p2).T @ (w * -lap)
            x[layout.face_dofs(ctx.face_id)] = np.linalg.solve(G, rhs)
    if k >= 2:
        quad = simplex_quadrature(layout.dim, exactness)
        for c in range(mesh.n_cells):
            basis = disc.projectors[c].basis
            sub = disc.subs[c]
            simps = [sub.simplex_coords(t) for t in range(sub.n_simplices)]
            G = _basis_gram(basis, quad, simps)
            rhs = np.zeros(basis.n)
            for coords in simps:
                pts, w = map_quadrature(quad, coords)
                rhs += basis.eval(pts).T @ (w * -problem.laplacian(pts))
            x[layout.cell_dofs(c)] = np.linalg.solve(G, rhs)
    return x
