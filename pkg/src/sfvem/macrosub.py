"""Simplicial macro subdivisions of mesh cells.

Every cell is split into at least two simplices without splitting any cell
edge: triangles get an interior barycenter (3 sub-triangles), larger
polygons are ear-clipped, and polyhedra either get the 6-tet corner
subdivision (axis-aligned hexahedra, no added points) or are coned from
face triangulations to the cell centroid.  In 3D the triangulation of a
shared face is computed once per face and reused by both cells, so traces
match across the mesh.

Points carry hashable keys (('v', id) for parent vertices, ('f', id) and
('c', id) for added face/cell points); downstream node matching works on
those keys, never on coordinates.
"""

import itertools
import math

import numpy as np

from .polymesh import (
    CheckResult,
    GeometryError,
    ValidationReport,
    _shoelace,
    face_frame,
    face_plane_coords,
)


class MacroSubdivision:
    """Simplicial partition of a single cell.

    points[:n_parent] are the parent cell vertices in their reference
    order; the rest are added interior/face points.  `edge_parent` (2D)
    and `facet_parent` (3D) map sorted local vertex tuples of boundary
    facets to the parent entity they lie on.
    """

    def __init__(self, dim, points, keys, simplices, n_parent, parent_measure,
                 edge_parent=None, facet_parent=None, face_loops=None):
        self.dim = dim
        self.points = np.asarray(points, dtype=float)
        self.keys = list(keys)
        self.simplices = np.asarray(simplices, dtype=int)
        self.n_parent = n_parent
        self.parent_measure = float(parent_measure)
        self.edge_parent = dict(edge_parent or {})
        self.facet_parent = dict(facet_parent or {})
        self.face_loops = dict(face_loops or {})

    @property
    def n_simplices(self):
        return self.simplices.shape[0]

    def simplex_coords(self, t):
        return self.points[self.simplices[t]]

    def simplex_measure(self, t):
        verts = self.simplex_coords(t)
        jac = verts[1:] - verts[0]
        return float(np.linalg.det(jac)) / math.factorial(self.dim)

    def boundary_facets(self):
        """Sorted local tuples of facets on the parent boundary."""
        if self.dim == 2:
            return set(self.edge_parent)
        return set(self.facet_parent)

    def internal_edges(self):
        """Sorted local vertex pairs of sub-edges not on the parent boundary."""
        on_boundary = set()
        if self.dim == 2:
            on_boundary = set(self.edge_parent)
        else:
            for tri in self.facet_parent:
                for pair in itertools.combinations(tri, 2):
                    on_boundary.add(pair)
        edges = set()
        for simplex in self.simplices:
            for pair in itertools.combinations(sorted(int(v) for v in simplex), 2):
                if pair not in on_boundary:
                    edges.add(pair)
        return edges


def _orient2(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def ear_clip(points):
    """Triangulate a simple CCW polygon picking the lowest-index ear first.

    A candidate ear is rejected when any other remaining vertex lies inside
    or on its closed triangle, so the result is a conforming triangulation
    with no hanging nodes.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n < 3:
        raise GeometryError("polygon needs at least 3 vertices")
    scale = float(np.abs(pts - pts.mean(axis=0)).max())
    eps = 1e-14 * scale * scale
    active = list(range(n))
    triangles = []
    while len(active) > 3:
        found = None
        for pos, v in enumerate(active):
            prev = active[pos - 1]
            nxt = active[(pos + 1) % len(active)]
            a, b, c = pts[prev], pts[v], pts[nxt]
            if _orient2(a, b, c) <= eps:
                continue
            blocked = False
            for w in active:
                if w in (prev, v, nxt):
                    continue
                p = pts[w]
                if (
                    _orient2(a, b, p) >= -eps
                    and _orient2(b, c, p) >= -eps
                    and _orient2(c, a, p) >= -eps
                ):
                    blocked = True
                    break
            if not blocked:
                found = pos
                break
        if found is None:
            raise GeometryError("no valid ear; polygon is not simple")
        pos = found
        triangles.append(
            (active[pos - 1], active[pos], active[(pos + 1) % len(active)])
        )
        del active[pos]
    triangles.append(tuple(active))
    return np.array(triangles, dtype=int)


def subdivide_polygon(points, keys=None, added_key=("c", 0)):
    """Macro triangulation of one polygon.

    Triangles receive their barycenter and a 3-way split; polygons with 4
    or more vertices are ear-clipped (no added point).
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if keys is None:
        keys = [("v", i) for i in range(n)]
    area = _shoelace(pts)
    if area <= 0.0:
        raise GeometryError("polygon loop must be CCW with positive area")
    if n == 3:
        center = pts.mean(axis=0)
        all_pts = np.vstack([pts, center])
        all_keys = list(keys) + [added_key]
        tris = np.array([[0, 1, 3], [1, 2, 3], [2, 0, 3]], dtype=int)
    else:
        all_pts = pts
        all_keys = list(keys)
        tris = ear_clip(pts)
    edge_parent = {}
    for i in range(n):
        j = (i + 1) % n
        edge_parent[(min(i, j), max(i, j))] = i
    return MacroSubdivision(2, all_pts, all_keys, tris, n, area, edge_parent=edge_parent)


class FaceTriangulation:
    """Shared triangulation of one 3D mesh face.

    plane / points3d hold the loop vertices first, then any added point;
    triangles index into them.  Both neighbouring cells consume this
    object, which is what keeps their macro traces identical.
    """

    def __init__(self, face_id, vertex_ids, plane, points3d, keys, triangles):
        self.face_id = face_id
        self.vertex_ids = vertex_ids
        self.plane = plane
        self.points3d = points3d
        self.keys = keys
        self.triangles = triangles

    @property
    def n_added(self):
        return self.plane.shape[0] - len(self.vertex_ids)


def triangulate_face(mesh, f, strategy):
    """Build the FaceTriangulation for face f under the given strategy."""
    loop = mesh.faces[f]
    plane = face_plane_coords(mesh, f)
    # the frame normal comes from the loop itself, so the projection is CCW
    keys = [("v", int(v)) for v in loop]
    pts3d = mesh.vertices[loop]
    if strategy == "kuhn":
        if len(loop) != 4:
            raise GeometryError(f"face {f}: corner subdivision needs quad faces")
        p = int(np.argmin(loop))
        tris = np.array(
            [
                [p, (p + 1) % 4, (p + 2) % 4],
                [p, (p + 2) % 4, (p + 3) % 4],
            ],
            dtype=int,
        )
        return FaceTriangulation(f, loop, plane, pts3d, keys, tris)
    if len(loop) == 3:
        center2 = plane.mean(axis=0)
        center3 = pts3d.mean(axis=0)
        plane = np.vstack([plane, center2])
        pts3d = np.vstack([pts3d, center3])
        keys = keys + [("f", int(f))]
        tris = np.array([[0, 1, 3], [1, 2, 3], [2, 0, 3]], dtype=int)
    else:
        tris = ear_clip(plane)
    return FaceTriangulation(f, loop, plane, pts3d, keys, tris)


def _is_axis_aligned_cube(mesh, c):
    vids = mesh.cell_vertex_ids(c)
    if vids.shape[0] != 8:
        return False
    if any(len(mesh.faces[f]) != 4 for f, _ in mesh.cells[c]):
        return False
    coords = mesh.vertices[vids]
    for axis in range(3):
        vals = np.unique(coords[:, axis])
        if vals.shape[0] != 2:
            return False
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    expect = {
        tuple(np.where(bits, hi, lo))
        for bits in itertools.product([0, 1], repeat=3)
    }
    return {tuple(p) for p in coords} == expect


def pick_strategy(mesh, c, strategy="auto"):
    if strategy == "auto":
        return "kuhn" if _is_axis_aligned_cube(mesh, c) else "center"
    if strategy == "kuhn" and not _is_axis_aligned_cube(mesh, c):
        raise GeometryError(f"cell {c}: corner subdivision needs an axis-aligned cube")
    return strategy


def _kuhn_tets(codes):
    # codes: local index per corner bit-tuple of the cube
    tets = []
    for perm in itertools.permutations(range(3)):
        bits = [0, 0, 0]
        path = [codes[(0, 0, 0)]]
        for axis in perm:
            bits[axis] = 1
            path.append(codes[tuple(bits)])
        tets.append(path)
    return tets


def subdivide_polyhedron(mesh, c, strategy="auto", face_tris=None):
    """Macro tetrahedralization of cell c of a PolyMesh3D.

    face_tris maps face id -> FaceTriangulation; faces missing from it are
    triangulated on the fly with the cell's strategy (fine for single-cell
    meshes, but mesh-wide drivers should pass a shared registry).
    """
    strategy = pick_strategy(mesh, c, strategy)
    vids = mesh.cell_vertex_ids(c)
    local = {int(g): i for i, g in enumerate(vids)}
    points = [mesh.vertices[g] for g in vids]
    keys = [("v", int(g)) for g in vids]
    n_parent = len(points)

    def face_tri(f):
        if face_tris is not None and f in face_tris:
            return face_tris[f]
        return triangulate_face(mesh, f, "kuhn" if strategy == "kuhn" else "center")

    # lift face triangulations into cell-local indexing
    face_local_tris = {}
    face_loops = {}
    for f, _ in mesh.cells[c]:
        ft = face_tri(f)
        idx = [local[int(g)] for g in ft.vertex_ids]
        face_loops[f] = tuple(idx)
        for add in range(ft.n_added):
            points.append(ft.points3d[len(ft.vertex_ids) + add])
            keys.append(ft.keys[len(ft.vertex_ids) + add])
            idx.append(len(points) - 1)
        face_local_tris[f] = [tuple(idx[v] for v in tri) for tri in ft.triangles]

    facet_parent = {}
    for f, _ in mesh.cells[c]:
        for tri in face_local_tris[f]:
            facet_parent[tuple(sorted(tri))] = f

    if strategy == "kuhn":
        coords = np.asarray(points[:8])
        lo = coords.min(axis=0)
        codes = {}
        for i, p in enumerate(coords):
            codes[tuple(int(x) for x in (p > lo))] = i
        tets = _kuhn_tets(codes)
    else:
        centroid = mesh.cell_centroid(c)
        points.append(centroid)
        keys.append(("c", int(c)))
        apex = len(points) - 1
        tets = []
        for f, _ in mesh.cells[c]:
            for tri in face_local_tris[f]:
                tets.append([tri[0], tri[1], tri[2], apex])

    pts = np.asarray(points, dtype=float)
    fixed = []
    for tet in tets:
        verts = pts[list(tet)]
        if np.linalg.det(verts[1:] - verts[0]) < 0:
            tet = [tet[0], tet[2], tet[1], tet[3]]
        fixed.append(tet)
    return MacroSubdivision(
        3,
        pts,
        keys,
        np.asarray(fixed, dtype=int),
        n_parent,
        mesh.cell_volume(c),
        facet_parent=facet_parent,
        face_loops=face_loops,
    )


def triangulate_mesh_faces(mesh, strategy="auto"):
    """One FaceTriangulation per face, honoring each face's owning strategy.

    A face adjacent to any non-cube cell (or under strategy='center') uses
    the generic rule; pure kuhn neighbourhoods use the corner diagonal.
    """
    per_face = {}
    for f in range(mesh.n_faces):
        styles = {
            pick_strategy(mesh, c, strategy) for c in mesh.face_cells[f]
        }
        per_face[f] = triangulate_face(
            mesh, f, "kuhn" if styles == {"kuhn"} else "center"
        )
    return per_face


def subdivide_mesh(mesh, strategy="auto"):
    """Subdivide every cell; returns (subdivisions, face_tris or None)."""
    if mesh.dim == 2:
        subs = []
        for c, loop in enumerate(mesh.cells):
            keys = [("v", int(v)) for v in loop]
            subs.append(
                subdivide_polygon(mesh.cell_coords(c), keys=keys, added_key=("c", c))
            )
        return subs, None
    face_tris = triangulate_mesh_faces(mesh, strategy)
    subs = [
        subdivide_polyhedron(mesh, c, strategy=strategy, face_tris=face_tris)
        for c in range(mesh.n_cells)
    ]
    return subs, face_tris


_MIN_VOLUME_FRACTION = 1e-6


def check_constraints(sub):
    """Verify a MacroSubdivision supports the interpolation space.

    Checks simplex count, positive volumes, exact partition with conforming
    internal facets, unsplit parent edges, and that internal mid-edge nodes
    exist and touch every simplex.
    """
    checks = []
    dim = sub.dim
    nt = sub.n_simplices

    if dim == 2:
        checks.append(
            CheckResult("simplex-count", nt >= 2, f"{nt} triangles")
        )
    else:
        per_face = {}
        for f in sub.facet_parent.values():
            per_face[f] = per_face.get(f, 0) + 1
        lacking = [f for f, k in per_face.items() if k < 2]
        checks.append(
            CheckResult(
                "face-triangle-count",
                not lacking,
                "" if not lacking else f"face {lacking[0]} has a single triangle",
            )
        )

    h = float(np.max(np.linalg.norm(
        sub.points[:sub.n_parent, None, :] - sub.points[None, :sub.n_parent, :], axis=2
    )))
    measures = np.array([sub.simplex_measure(t) for t in range(nt)])
    floor = _MIN_VOLUME_FRACTION * h**dim
    bad = np.nonzero(measures < floor)[0]
    checks.append(
        CheckResult(
            "positive-volume",
            bad.size == 0,
            "" if bad.size == 0 else f"simplex {bad[0]}: measure {measures[bad[0]]:.3e}",
        )
    )

    # conforming partition: boundary facets once, internal facets twice,
    # measures adding up to the parent cell measure
    counts = {}
    for simplex in sub.simplices:
        s = sorted(int(v) for v in simplex)
        for facet in itertools.combinations(s, dim):
            counts[facet] = counts.get(facet, 0) + 1
    tagged = sub.boundary_facets()
    conform = ""
    for facet, k in counts.items():
        if facet in tagged and k != 1:
            conform = f"boundary facet {facet} used {k} times"
            break
        if facet not in tagged and k == 1:
            conform = f"facet {facet} is neither internal nor on the boundary"
            break
        if k > 2:
            conform = f"facet {facet} used {k} times"
            break
    vol_ok = abs(measures.sum() - sub.parent_measure) <= 1e-12 * sub.parent_measure
    if not vol_ok and not conform:
        conform = f"measures sum to {measures.sum()!r}, cell has {sub.parent_measure!r}"
    checks.append(CheckResult("conforming-partition", not conform and vol_ok, conform))

    if dim == 2:
        missing = ""
        parent_edges = set(sub.edge_parent)
        seen = {e: 0 for e in parent_edges}
        for simplex in sub.simplices:
            s = sorted(int(v) for v in simplex)
            for pair in itertools.combinations(s, 2):
                if pair in seen:
                    seen[pair] += 1
        bad_edges = [e for e, k in seen.items() if k != 1]
        if bad_edges:
            missing = f"parent edge {bad_edges[0]} lies on {seen[bad_edges[0]]} triangles"
        checks.append(CheckResult("parent-edges-unsplit", not missing, missing))
    else:
        # every loop edge of every face must be an edge of exactly one of
        # that face's triangles, which is what "no parent edge is split" means
        missing = ""
        facet_edge_count = {}
        for facet, f in sub.facet_parent.items():
            for pair in itertools.combinations(facet, 2):
                key = (f, pair)
                facet_edge_count[key] = facet_edge_count.get(key, 0) + 1
        for f, loop in sub.face_loops.items():
            for a, b in zip(loop, loop[1:] + loop[:1]):
                pair = (min(a, b), max(a, b))
                k = facet_edge_count.get((f, pair), 0)
                if k != 1:
                    missing = f"face {f}: loop edge {pair} lies on {k} triangles"
                    break
            if missing:
                break
        checks.append(CheckResult("parent-edges-unsplit", not missing, missing))

        few = [
            t for t in range(nt)
            if sum(
                1
                for facet in itertools.combinations(sorted(int(v) for v in sub.simplices[t]), 3)
                if facet not in tagged
            ) < 2
        ]
        checks.append(
            CheckResult(
                "internal-facets",
                not few,
                "" if not few else f"tet {few[0]} has fewer than 2 internal facets",
            )
        )

    internal = sub.internal_edges()
    touched = []
    for simplex in sub.simplices:
        s = sorted(int(v) for v in simplex)
        touched.append(any(pair in internal for pair in itertools.combinations(s, 2)))
    ok = bool(internal) and all(touched)
    detail = ""
    if not internal:
        detail = "no internal mid-edge nodes"
    elif not all(touched):
        detail = f"simplex {touched.index(False)} touches no internal edge"
    checks.append(CheckResult("bubble-support", ok, detail))

    return ValidationReport(checks)
