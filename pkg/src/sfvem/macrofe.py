"""Continuous piecewise-P_k spaces on macro subdivisions.

Nodes are owned by entities (macro vertex, sub-edge, triangle facet, tet
interior) and identified by the entity's point keys, never by coordinate
hashing.  Two simplices sharing a facet therefore share the facet's nodes
exactly, and a face shared by two 3D cells produces the same node keys in
both cells, which is what the projection transfer relies on.

Edge-interior nodes sit at Gauss-Lobatto images ordered from the
smaller-key endpoint; facet/interior nodes at principal-lattice points.
"""

from functools import lru_cache

import numpy as np

from .polybasis import gauss_lobatto, lagrange_simplex, map_quadrature, simplex_quadrature


class MacroFeSpace:
    """Nodal C0 space of degree k on one cell's macro subdivision."""

    def __init__(self, sub, degree):
        self.sub = sub
        self.degree = int(degree)
        self.dim = sub.dim
        self._build()

    def _build(self):
        sub, k = self.sub, self.degree
        ref = lagrange_simplex(sub.dim, k)
        gl = gauss_lobatto(k + 1)
        pts = sub.points
        keys = sub.keys

        node_ids = {}
        coords = []
        entities = []

        def node(entity, position):
            nid = node_ids.get(entity)
            if nid is None:
                nid = len(coords)
                node_ids[entity] = nid
                coords.append(position)
                entities.append(entity)
            return nid

        conn = np.empty((sub.n_simplices, ref.n), dtype=int)
        for t, simplex in enumerate(sub.simplices):
            vloc = [int(v) for v in simplex]
            vkeys = [keys[v] for v in vloc]
            for s, m in enumerate(ref.multi):
                support = np.nonzero(m)[0]
                if support.shape[0] == 1:
                    v = vloc[support[0]]
                    nid = node(("vert", keys[v]), pts[v])
                elif support.shape[0] == 2:
                    p, q = support
                    a, b = vloc[p], vloc[q]
                    if vkeys[p] < vkeys[q]:
                        u, w, j = a, b, int(m[q])
                    else:
                        u, w, j = b, a, int(m[p])
                    nid = node(
                        ("edge", keys[u], keys[w], j),
                        pts[u] + gl[j] * (pts[w] - pts[u]),
                    )
                elif support.shape[0] == 3:
                    trip = sorted(
                        ((vkeys[p], vloc[p], int(m[p])) for p in support)
                    )
                    (k0, v0, m0), (k1, v1, m1), (k2, v2, m2) = trip
                    nid = node(
                        ("tri", k0, k1, k2, (m0, m1, m2)),
                        (m0 * pts[v0] + m1 * pts[v1] + m2 * pts[v2]) / k,
                    )
                else:
                    lam = np.asarray(m, dtype=float) / k
                    nid = node(
                        ("tet", t, tuple(int(x) for x in m)),
                        lam @ pts[vloc],
                    )
                conn[t, s] = nid

        self.nodes = np.asarray(coords)
        self.node_ids = node_ids
        self.node_entities = entities
        self.conn = conn
        self._flag_boundary()

    def _flag_boundary(self):
        sub, keys = self.sub, self.sub.keys
        bverts = set()
        bpairs = set()
        btris = set()
        for facet in sub.boundary_facets():
            fkeys = sorted(keys[v] for v in facet)
            bverts.update(fkeys)
            for i in range(len(fkeys)):
                for j in range(i + 1, len(fkeys)):
                    bpairs.add((fkeys[i], fkeys[j]))
            if len(fkeys) == 3:
                btris.add(tuple(fkeys))
        flags = np.zeros(self.n_nodes, dtype=bool)
        for nid, ent in enumerate(self.node_entities):
            if ent[0] == "vert":
                flags[nid] = ent[1] in bverts
            elif ent[0] == "edge":
                pair = (ent[1], ent[2]) if ent[1] < ent[2] else (ent[2], ent[1])
                flags[nid] = pair in bpairs
            elif ent[0] == "tri":
                flags[nid] = (ent[1], ent[2], ent[3]) in btris
        self.boundary = flags

    @property
    def n_nodes(self):
        return len(self.node_entities)

    def vertex_node(self, key):
        return self.node_ids[("vert", key)]

    def edge_interior_nodes(self, key_a, key_b):
        """Node ids along the sub-edge, ordered from key_a towards key_b."""
        k = self.degree
        if key_a < key_b:
            return [self.node_ids[("edge", key_a, key_b, j)] for j in range(1, k)]
        return [self.node_ids[("edge", key_b, key_a, k - j)] for j in range(1, k)]

    def eval_in_simplex(self, t, ref_points, coeffs):
        """Evaluate a coefficient field at reference points of simplex t."""
        ref = lagrange_simplex(self.dim, self.degree)
        return ref.eval(np.atleast_2d(ref_points)) @ np.asarray(coeffs)[self.conn[t]]

    def grad_in_simplex(self, t, ref_points, coeffs):
        ref = lagrange_simplex(self.dim, self.degree)
        verts = self.sub.simplex_coords(t)
        inv = np.linalg.inv(verts[1:] - verts[0])
        # reference gradients pull back through the transposed inverse Jacobian
        grads = np.einsum("pnd,ed->pne", ref.grad(np.atleast_2d(ref_points)), inv)
        return np.einsum("pnd,n->pd", grads, np.asarray(coeffs)[self.conn[t]])

    def physical_points(self, t, ref_points):
        verts = self.sub.simplex_coords(t)
        ref_points = np.atleast_2d(ref_points)
        return verts[0] + ref_points @ (verts[1:] - verts[0])


def build_macro_space(sub, degree):
    """MacroFeSpace over a checked subdivision."""
    return MacroFeSpace(sub, degree)


@lru_cache(maxsize=None)
def _ref_tables(dim, degree, exactness):
    quad = simplex_quadrature(dim, exactness)
    ref = lagrange_simplex(dim, degree)
    vals = ref.eval(quad.points)
    grads = ref.grad(quad.points)
    vals.flags.writeable = False
    grads.flags.writeable = False
    return quad, vals, grads


def local_stiffness(space):
    """Gradient Gram matrix of the nodal basis over the whole cell.

    Symmetric positive semidefinite with the constants as kernel.
    """
    k, d = space.degree, space.dim
    quad, _, grads = _ref_tables(d, k, max(2 * k - 2, 0))
    n = space.n_nodes
    out = np.zeros((n, n))
    for t in range(space.sub.n_simplices):
        verts = space.sub.simplex_coords(t)
        jac = verts[1:] - verts[0]
        det = abs(float(np.linalg.det(jac)))
        pg = np.einsum("qnd,ed->qne", grads, np.linalg.inv(jac))
        local = np.einsum("q,qid,qjd->ij", quad.weights * det, pg, pg)
        idx = space.conn[t]
        out[np.ix_(idx, idx)] += local
    return out


def local_mass(space):
    """L2 Gram matrix of the nodal basis; symmetric positive definite."""
    k, d = space.degree, space.dim
    quad, vals, _ = _ref_tables(d, k, 2 * k)
    n = space.n_nodes
    out = np.zeros((n, n))
    for t in range(space.sub.n_simplices):
        verts = space.sub.simplex_coords(t)
        det = abs(float(np.linalg.det(verts[1:] - verts[0])))
        local = np.einsum("q,qi,qj->ij", quad.weights * det, vals, vals)
        idx = space.conn[t]
        out[np.ix_(idx, idx)] += local
    return out


def moment_matrix(space, basis, exactness=None):
    """Integrals of every nodal function against every basis member.

    Shape (n_nodes, len(basis)); exactness defaults to degree+basis.degree,
    which is exact since both factors are polynomial.
    """
    k, d = space.degree, space.dim
    if exactness is None:
        exactness = k + max(basis.degree, 0)
    quad, vals, _ = _ref_tables(d, k, exactness)
    out = np.zeros((space.n_nodes, basis.n))
    for t in range(space.sub.n_simplices):
        pts, w = map_quadrature(quad, space.sub.simplex_coords(t))
        mono = basis.eval(pts)
        local = np.einsum("q,qi,qb->ib", w, vals, mono)
        out[space.conn[t]] += local
    return out


def moment_vector(space, basis, member):
    """Integrals of the nodal functions against one basis member."""
    return moment_matrix(space, basis)[:, member]


def load_vector(space, f, exactness):
    """Integrals of f against every nodal function."""
    k, d = space.degree, space.dim
    quad, vals, _ = _ref_tables(d, k, exactness)
    out = np.zeros(space.n_nodes)
    for t in range(space.sub.n_simplices):
        pts, w = map_quadrature(quad, space.sub.simplex_coords(t))
        out[space.conn[t]] += vals.T @ (w * np.asarray(f(pts)))
    return out


def field_norms(space, coeffs):
    """(L2 norm, H1 seminorm) of a coefficient field over the cell."""
    k, d = space.degree, space.dim
    quad, vals, grads = _ref_tables(d, k, 2 * k)
    coeffs = np.asarray(coeffs)
    l2 = 0.0
    h1 = 0.0
    for t in range(space.sub.n_simplices):
        verts = space.sub.simplex_coords(t)
        jac = verts[1:] - verts[0]
        det = abs(float(np.linalg.det(jac)))
        local = coeffs[space.conn[t]]
        vq = vals @ local
        l2 += float(np.dot(quad.weights * det, vq * vq))
        gq = np.einsum("qnd,ed,n->qe", grads, np.linalg.inv(jac), local)
        h1 += float(np.dot(quad.weights * det, np.einsum("qe,qe->q", gq, gq)))
    return np.sqrt(l2), np.sqrt(h1)


def interpolate_nodal(space, func):
    """Node values of a pointwise-defined function."""
    return np.asarray(func(space.nodes), dtype=float)
