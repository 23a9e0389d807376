"""Polygonal and polyhedral meshes: data model, generators, I/O, validation.

Meshes are immutable after construction.  2D cells are CCW vertex loops;
3D cells reference oriented faces with a sign telling whether the stored
loop is outward for that cell.  The three built-in families (pentagons,
hexagons, cubes) tile the unit square/cube, refine by doubling the tiling
count per level, and produce exactly dyadic vertex coordinates so that the
mesh size halves bitwise between levels.
"""

import math

import numpy as np


class MeshError(Exception):
    """Base class for mesh construction and I/O failures."""


class MeshFormatError(MeshError):
    """Malformed mesh file; carries the 1-based offending line number."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class TopologyError(MeshError):
    pass


class GeometryError(MeshError):
    pass


class CheckResult:
    def __init__(self, name, passed, detail=""):
        self.name = name
        self.passed = passed
        self.detail = detail

    def __repr__(self):
        status = "ok" if self.passed else "FAIL"
        return f"<{self.name}: {status}{': ' + self.detail if self.detail else ''}>"


class ValidationReport:
    """Outcome of a battery of named checks."""

    def __init__(self, checks):
        self.checks = list(checks)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def failures(self):
        return [c for c in self.checks if not c.passed]

    def summary(self):
        lines = []
        for c in self.checks:
            status = "ok  " if c.passed else "FAIL"
            detail = f"  {c.detail}" if c.detail else ""
            lines.append(f"[{status}] {c.name}{detail}")
        return "\n".join(lines)


def _shoelace(coords):
    x = coords[:, 0]
    y = coords[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _polygon_centroid(coords):
    x = coords[:, 0]
    y = coords[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = 0.5 * cross.sum()
    cx = ((x + np.roll(x, -1)) * cross).sum() / (6.0 * area)
    cy = ((y + np.roll(y, -1)) * cross).sum() / (6.0 * area)
    return np.array([cx, cy])


def _diameter(coords):
    d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    return math.sqrt(float(d2.max()))


class PolyMesh2D:
    """Conforming polygonal mesh of a planar domain.

    Parameters
    ----------
    vertices : (nv, 2) array
    cells : sequence of vertex-id loops
    strict : bool
        If False (default) clockwise loops are reversed; if True they raise
        GeometryError.
    """

    dim = 2

    def __init__(self, vertices, cells, strict=False):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise GeometryError("vertex array must be (n, 2)")
        nv = self.vertices.shape[0]
        loops = []
        for ci, loop in enumerate(cells):
            loop = np.asarray(loop, dtype=int)
            if loop.size < 3:
                raise TopologyError(f"cell {ci}: fewer than 3 vertices")
            if loop.min() < 0 or loop.max() >= nv:
                raise TopologyError(f"cell {ci}: vertex id out of range")
            if len(set(loop.tolist())) != loop.size:
                raise TopologyError(f"cell {ci}: repeated vertex in loop")
            area = _shoelace(self.vertices[loop])
            if area == 0.0:
                raise GeometryError(f"cell {ci}: zero area")
            if area < 0.0:
                if strict:
                    raise GeometryError(f"cell {ci}: clockwise loop")
                loop = loop[::-1].copy()
            loops.append(loop)
        self.cells = loops
        self._build_edges()

    def _build_edges(self):
        edge_ids = {}
        edges = []
        edge_cells = []
        cell_edges = []
        for ci, loop in enumerate(self.cells):
            ids = []
            for a, b in zip(loop, np.roll(loop, -1)):
                key = (int(min(a, b)), int(max(a, b)))
                eid = edge_ids.get(key)
                if eid is None:
                    eid = len(edges)
                    edge_ids[key] = eid
                    edges.append(key)
                    edge_cells.append([ci])
                else:
                    edge_cells[eid].append(ci)
                    if len(edge_cells[eid]) > 2:
                        raise TopologyError(
                            f"edge {key[0]}-{key[1]}: shared by more than two cells "
                            f"(third is cell {ci})"
                        )
                ids.append(eid)
            cell_edges.append(np.array(ids, dtype=int))
        self.edges = np.array(edges, dtype=int).reshape(-1, 2)
        self.cell_edges = cell_edges
        self.edge_cells = edge_cells
        self.boundary_edges = np.array([len(c) == 1 for c in edge_cells], dtype=bool)
        bv = np.zeros(self.vertices.shape[0], dtype=bool)
        for eid in np.nonzero(self.boundary_edges)[0]:
            bv[self.edges[eid]] = True
        self.boundary_vertices = bv

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return self.edges.shape[0]

    def cell_coords(self, c):
        return self.vertices[self.cells[c]]

    def cell_area(self, c):
        return _shoelace(self.cell_coords(c))

    def cell_centroid(self, c):
        return _polygon_centroid(self.cell_coords(c))

    def cell_diameter(self, c):
        return _diameter(self.cell_coords(c))


def _newell_normal(coords):
    n = np.zeros(3)
    rolled = np.roll(coords, -1, axis=0)
    n[0] = np.sum((coords[:, 1] - rolled[:, 1]) * (coords[:, 2] + rolled[:, 2]))
    n[1] = np.sum((coords[:, 2] - rolled[:, 2]) * (coords[:, 0] + rolled[:, 0]))
    n[2] = np.sum((coords[:, 0] - rolled[:, 0]) * (coords[:, 1] + rolled[:, 1]))
    return n


class PolyMesh3D:
    """Polyhedral mesh: vertices, planar face loops, cells as signed faces.

    A cell lists (face_id, sign) pairs; sign +1 means the stored loop runs
    counterclockwise when seen from outside that cell.  With strict=False
    the signs are rederived per cell so every surface is consistently
    outward; strict=True requires the input signs to already be consistent.
    """

    dim = 3

    def __init__(self, vertices, faces, cells, strict=False):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise GeometryError("vertex array must be (n, 3)")
        nv = self.vertices.shape[0]
        self.faces = []
        for fi, loop in enumerate(faces):
            loop = np.asarray(loop, dtype=int)
            if loop.size < 3:
                raise TopologyError(f"face {fi}: fewer than 3 vertices")
            if loop.min() < 0 or loop.max() >= nv:
                raise TopologyError(f"face {fi}: vertex id out of range")
            if len(set(loop.tolist())) != loop.size:
                raise TopologyError(f"face {fi}: repeated vertex in loop")
            self.faces.append(loop)
        self.cells = []
        face_cells = [[] for _ in self.faces]
        for ci, refs in enumerate(cells):
            refs = [(int(f), int(s)) for f, s in refs]
            if len(refs) < 4:
                raise TopologyError(f"cell {ci}: fewer than 4 faces")
            for f, s in refs:
                if f < 0 or f >= len(self.faces):
                    raise TopologyError(f"cell {ci}: face id {f} out of range")
                if s not in (-1, 1):
                    raise TopologyError(f"cell {ci}: face sign must be +1 or -1")
                face_cells[f].append(ci)
                if len(face_cells[f]) > 2:
                    raise TopologyError(f"face {f}: shared by more than two cells")
            self.cells.append(self._orient_cell(ci, refs, strict))
        self.face_cells = face_cells
        self.boundary_faces = np.array([len(c) == 1 for c in face_cells], dtype=bool)
        self._build_edges()

    def _orient_cell(self, ci, refs, strict):
        # orient faces of one cell into a closed outward surface
        loops = {f: self.faces[f] for f, _ in refs}
        adjacency = {}
        for f, _ in refs:
            loop = loops[f]
            for a, b in zip(loop, np.roll(loop, -1)):
                adjacency.setdefault((int(min(a, b)), int(max(a, b))), []).append(f)
        for key, fs in adjacency.items():
            if len(fs) != 2:
                raise TopologyError(
                    f"cell {ci}: edge {key[0]}-{key[1]} lies on {len(fs)} of its faces"
                )
        if strict:
            signs = {f: s for f, s in refs}
        else:
            signs = {refs[0][0]: 1}
            stack = [refs[0][0]]
            directed = {}
            for f, _ in refs:
                loop = loops[f]
                directed[f] = {
                    (int(a), int(b)) for a, b in zip(loop, np.roll(loop, -1))
                }
            while stack:
                f = stack.pop()
                for key, fs in adjacency.items():
                    if f not in fs:
                        continue
                    other = fs[0] if fs[1] == f else fs[1]
                    if other == f:
                        continue
                    a, b = key
                    f_fwd = (a, b) in directed[f]
                    if signs[f] == -1:
                        f_fwd = not f_fwd
                    needed = -1 if ((a, b) in directed[other]) == f_fwd else 1
                    if other in signs:
                        if signs[other] != needed:
                            raise TopologyError(f"cell {ci}: non-orientable face set")
                    else:
                        signs[other] = needed
                        stack.append(other)
            if len(signs) != len(refs):
                raise TopologyError(f"cell {ci}: face set is not edge-connected")
        oriented = [(f, signs[f]) for f, _ in refs]
        vol = self._signed_volume(oriented)
        if vol == 0.0:
            raise GeometryError(f"cell {ci}: zero volume")
        if vol < 0.0:
            if strict:
                raise GeometryError(f"cell {ci}: inward-oriented surface")
            oriented = [(f, -s) for f, s in oriented]
            vol = -vol
        if strict:
            # verify the surface is closed with these signs
            count = {}
            for f, s in oriented:
                loop = self.faces[f] if s == 1 else self.faces[f][::-1]
                for a, b in zip(loop, np.roll(loop, -1)):
                    count[(int(a), int(b))] = count.get((int(a), int(b)), 0) + 1
            for (a, b), c in count.items():
                if count.get((b, a), 0) != c:
                    raise TopologyError(
                        f"cell {ci}: edge {a}-{b} not traversed once each way"
                    )
        return oriented

    def _signed_volume(self, oriented):
        total = 0.0
        for f, s in oriented:
            pts = self.vertices[self.faces[f]]
            p0 = pts[0]
            for i in range(1, len(pts) - 1):
                total += s * float(np.linalg.det(np.array([p0, pts[i], pts[i + 1]])))
        return total / 6.0

    def _build_edges(self):
        edge_ids = {}
        edges = []
        face_edges = []
        for loop in self.faces:
            ids = []
            for a, b in zip(loop, np.roll(loop, -1)):
                key = (int(min(a, b)), int(max(a, b)))
                eid = edge_ids.get(key)
                if eid is None:
                    eid = len(edges)
                    edge_ids[key] = eid
                    edges.append(key)
                ids.append(eid)
            face_edges.append(np.array(ids, dtype=int))
        self.edges = np.array(edges, dtype=int).reshape(-1, 2)
        self.face_edges = face_edges
        be = np.zeros(self.edges.shape[0], dtype=bool)
        bv = np.zeros(self.vertices.shape[0], dtype=bool)
        for fi in np.nonzero(self.boundary_faces)[0]:
            be[self.face_edges[fi]] = True
            bv[self.faces[fi]] = True
        self.boundary_edges = be
        self.boundary_vertices = bv

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_edges(self):
        return self.edges.shape[0]

    def cell_vertex_ids(self, c):
        seen = []
        got = set()
        for f, _ in self.cells[c]:
            for v in self.faces[f]:
                v = int(v)
                if v not in got:
                    got.add(v)
                    seen.append(v)
        return np.array(seen, dtype=int)

    def cell_volume(self, c):
        return self._signed_volume(self.cells[c])

    def cell_centroid(self, c):
        num = np.zeros(3)
        vol = 0.0
        for f, s in self.cells[c]:
            pts = self.vertices[self.faces[f]]
            p0 = pts[0]
            for i in range(1, len(pts) - 1):
                v = s * float(np.linalg.det(np.array([p0, pts[i], pts[i + 1]]))) / 6.0
                vol += v
                num += v * (p0 + pts[i] + pts[i + 1]) / 4.0
        return num / vol

    def cell_diameter(self, c):
        return _diameter(self.vertices[self.cell_vertex_ids(c)])

    def face_diameter(self, f):
        return _diameter(self.vertices[self.faces[f]])


def face_frame(mesh, f):
    """Deterministic in-plane frame of a 3D face.

    Returns (origin, t1, t2, normal): origin is the in-plane area centroid,
    (t1, t2, normal) an orthonormal right-handed triple.  Both cells next
    to the face get the identical frame because it depends only on the
    stored loop.
    """
    coords = mesh.vertices[mesh.faces[f]]
    normal = _newell_normal(coords)
    norm = np.linalg.norm(normal)
    if norm == 0.0:
        raise GeometryError(f"face {f}: degenerate normal")
    normal = normal / norm
    edge = coords[1] - coords[0]
    t1 = edge - np.dot(edge, normal) * normal
    t1 = t1 / np.linalg.norm(t1)
    t2 = np.cross(normal, t1)
    mean = coords.mean(axis=0)
    plane = (coords - mean) @ np.column_stack([t1, t2])
    centroid2 = _polygon_centroid(plane)
    origin = mean + centroid2[0] * t1 + centroid2[1] * t2
    return origin, t1, t2, normal


def face_plane_coords(mesh, f):
    """Loop vertices of a face expressed in its own frame, shape (n, 2)."""
    origin, t1, t2, _ = face_frame(mesh, f)
    coords = mesh.vertices[mesh.faces[f]]
    return (coords - origin) @ np.column_stack([t1, t2])


def mesh_size(mesh):
    """Largest cell diameter."""
    return max(mesh.cell_diameter(c) for c in range(mesh.n_cells))


# ---------------------------------------------------------------------------
# generators
#
# All three families tile the unit square/cube with an integer-coordinate
# unit cell scaled by 1/N, N = 2**(level-1).  Coordinates are built as
# (integer)/(S*N) with S*N a power of two and numerators small enough that
# every coordinate, difference and squared distance is exact in binary;
# that is what makes mesh_size halve bitwise from level to level.

_PENTA_SCALE = 4
_PENTA_VERTS = [
    (0, 0), (2, 0), (4, 0), (0, 2), (1, 1), (2, 2), (3, 3), (4, 2),
    (0, 4), (2, 4), (4, 4),
]
_PENTA_CELLS = [
    [(0, 0), (2, 0), (2, 2), (1, 1), (0, 2)],
    [(2, 0), (4, 0), (4, 2), (3, 3), (2, 2)],
    [(0, 2), (1, 1), (2, 2), (2, 4), (0, 4)],
    [(2, 2), (3, 3), (4, 2), (4, 4), (2, 4)],
]

_HEXA_SCALE = 1 << 26
_HEXA_RAW = {
    "p00": (0.0, 0.0), "p10": (0.5, 0.0), "p20": (1.0, 0.0),
    "p01": (0.0, 0.5), "p21": (1.0, 0.5),
    "p02": (0.0, 1.0), "p12": (0.5, 1.0), "p22": (1.0, 1.0),
    "a": (0.4444, 0.1429), "b": (0.2222, 0.2222), "c": (0.1818, 0.4444),
    "d": (0.7273, 0.2857), "e": (0.8182, 0.5), "f": (0.5556, 0.5),
    "g": (0.4444, 0.8571), "h": (0.7273, 0.6667), "i": (0.2222, 0.6667),
}
_HEXA_CELLS = [
    ["p00", "p10", "a", "b", "c", "p01"],
    ["p10", "p20", "p21", "e", "d", "a"],
    ["b", "a", "f", "g", "i", "c"],
    ["f", "a", "d", "e", "h", "g"],
    ["e", "p21", "p22", "p12", "g", "h"],
    ["p01", "c", "i", "g", "p12", "p02"],
]


def _tile_unit_cell(level, scale, unit_verts, unit_cells):
    n = 1 << (level - 1)
    denom = scale * n
    ids = {}
    coords = []
    cells = []

    def vid(key):
        i = ids.get(key)
        if i is None:
            i = len(coords)
            ids[key] = i
            coords.append((key[0] / denom, key[1] / denom))
        return i

    for j in range(n):
        for i in range(n):
            ox, oy = i * scale, j * scale
            for loop in unit_cells:
                cells.append([vid((ox + x, oy + y)) for x, y in loop])
    return PolyMesh2D(np.array(coords), cells)


def generate_pentagon_mesh(level):
    """Pentagon tiling of the unit square, 4 * 4**(level-1) cells."""
    if level < 1:
        raise ValueError("level must be >= 1")
    return _tile_unit_cell(level, _PENTA_SCALE, _PENTA_VERTS, _PENTA_CELLS)


def generate_hexagon_mesh(level):
    """Hexagon tiling of the unit square, 6 * 4**(level-1) cells.

    Interior unit-cell coordinates are snapped to multiples of 2**-26 so
    the tiling arithmetic stays exact; the snap moves each coordinate by
    less than 8e-9.
    """
    if level < 1:
        raise ValueError("level must be >= 1")
    table = {
        k: (round(v[0] * _HEXA_SCALE), round(v[1] * _HEXA_SCALE))
        for k, v in _HEXA_RAW.items()
    }
    cells = [[table[name] for name in loop] for loop in _HEXA_CELLS]
    return _tile_unit_cell(level, _HEXA_SCALE, list(table.values()), cells)


def generate_cube_mesh(level):
    """Uniform cube mesh of the unit cube, 8**(level-1) cells."""
    if level < 1:
        raise ValueError("level must be >= 1")
    n = 1 << (level - 1)
    m = n + 1

    def vid(i, j, k):
        return (k * m + j) * m + i

    verts = np.array(
        [(i / n, j / n, k / n) for k in range(m) for j in range(m) for i in range(m)]
    )
    faces = []
    fid = {}
    # x-normal, then y-normal, then z-normal planes
    for i in range(m):
        for k in range(n):
            for j in range(n):
                fid[("x", i, j, k)] = len(faces)
                faces.append(
                    [vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)]
                )
    for j in range(m):
        for k in range(n):
            for i in range(n):
                fid[("y", i, j, k)] = len(faces)
                faces.append(
                    [vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)]
                )
    for k in range(m):
        for j in range(n):
            for i in range(n):
                fid[("z", i, j, k)] = len(faces)
                faces.append(
                    [vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)]
                )
    cells = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                cells.append(
                    [
                        (fid[("x", i, j, k)], 1),
                        (fid[("x", i + 1, j, k)], 1),
                        (fid[("y", i, j, k)], 1),
                        (fid[("y", i, j + 1, k)], 1),
                        (fid[("z", i, j, k)], 1),
                        (fid[("z", i, j, k + 1)], 1),
                    ]
                )
    return PolyMesh3D(verts, faces, cells)


# ---------------------------------------------------------------------------
# file format
#
#   sfvem-mesh <dim> <nv> <ncell> [<nface>]
#   v x y [z]
#   f i0 i1 ...          (3D only, before cells)
#   c i0 i1 ...          (2D: CCW vertex loop; 3D: signed face refs +i / -i)
#
# '#' starts a comment; indices are 0-based.

_HEADER = "sfvem-mesh"


def write_mesh(mesh, path):
    """Write a mesh in the text format; floats keep full precision."""
    lines = []
    if mesh.dim == 2:
        lines.append(f"{_HEADER} 2 {mesh.n_vertices} {mesh.n_cells}")
        for x, y in mesh.vertices:
            lines.append(f"v {float(x)!r} {float(y)!r}")
        for loop in mesh.cells:
            lines.append("c " + " ".join(str(int(v)) for v in loop))
    else:
        lines.append(f"{_HEADER} 3 {mesh.n_vertices} {mesh.n_cells} {mesh.n_faces}")
        for x, y, z in mesh.vertices:
            lines.append(f"v {float(x)!r} {float(y)!r} {float(z)!r}")
        for loop in mesh.faces:
            lines.append("f " + " ".join(str(int(v)) for v in loop))
        for refs in mesh.cells:
            lines.append(
                "c " + " ".join(("+" if s > 0 else "-") + str(f) for f, s in refs)
            )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path, strict=False):
    """Read a mesh written by write_mesh; raises MeshFormatError on bad input."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()
    rows = []
    for lineno, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            rows.append((lineno, body.split()))
    if not rows:
        raise MeshFormatError(1, "empty file")
    lineno, head = rows[0]
    if head[0] != _HEADER:
        raise MeshFormatError(lineno, f"expected '{_HEADER}' header")
    try:
        dim = int(head[1])
        counts = [int(t) for t in head[2:]]
    except (ValueError, IndexError):
        raise MeshFormatError(lineno, "malformed header") from None
    if dim == 2:
        if len(counts) != 2:
            raise MeshFormatError(lineno, "2D header needs <nv> <ncell>")
        nv, ncell = counts
        nf = 0
    elif dim == 3:
        if len(counts) != 3:
            raise MeshFormatError(lineno, "3D header needs <nv> <ncell> <nface>")
        nv, ncell, nf = counts
    else:
        raise MeshFormatError(lineno, f"unsupported dimension {dim}")
    verts, faces, cells = [], [], []
    for lineno, tokens in rows[1:]:
        tag, rest = tokens[0], tokens[1:]
        if tag == "v":
            if len(rest) != dim:
                raise MeshFormatError(lineno, f"vertex needs {dim} coordinates")
            try:
                verts.append([float(t) for t in rest])
            except ValueError:
                raise MeshFormatError(lineno, "bad coordinate") from None
        elif tag == "f":
            if dim != 3:
                raise MeshFormatError(lineno, "face record in a 2D file")
            try:
                faces.append([int(t) for t in rest])
            except ValueError:
                raise MeshFormatError(lineno, "bad face index") from None
        elif tag == "c":
            if dim == 2:
                try:
                    cells.append([int(t) for t in rest])
                except ValueError:
                    raise MeshFormatError(lineno, "bad cell index") from None
            else:
                refs = []
                for t in rest:
                    if t[0] not in "+-" or not t[1:].isdigit():
                        raise MeshFormatError(
                            lineno, f"cell face ref '{t}' must look like +3 or -3"
                        )
                    refs.append((int(t[1:]), 1 if t[0] == "+" else -1))
                cells.append(refs)
        else:
            raise MeshFormatError(lineno, f"unknown record '{tag}'")
    if len(verts) != nv:
        raise MeshFormatError(lineno, f"header promised {nv} vertices, found {len(verts)}")
    if len(cells) != ncell:
        raise MeshFormatError(lineno, f"header promised {ncell} cells, found {len(cells)}")
    if dim == 3 and len(faces) != nf:
        raise MeshFormatError(lineno, f"header promised {nf} faces, found {len(faces)}")
    if dim == 2:
        return PolyMesh2D(np.array(verts, dtype=float).reshape(nv, 2), cells, strict=strict)
    return PolyMesh3D(np.array(verts, dtype=float).reshape(nv, 3), faces, cells, strict=strict)


# ---------------------------------------------------------------------------
# validation


def _segments_properly_intersect(p, q, r, s):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_segment(a, b, c):
        return (
            min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
            and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])
        )

    o1, o2 = orient(p, q, r), orient(p, q, s)
    o3, o4 = orient(r, s, p), orient(r, s, q)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True
    for a, b, c in ((p, q, r), (p, q, s), (r, s, p), (r, s, q)):
        if orient(a, b, c) == 0 and on_segment(a, b, c):
            return True
    return False


def _loop_is_simple(coords):
    n = len(coords)
    for i in range(n):
        a, b = coords[i], coords[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = coords[j], coords[(j + 1) % n]
            if _segments_properly_intersect(a, b, c, d):
                return False
    return True


def _duplicate_vertices(vertices, tol=1e-14):
    order = np.lexsort(vertices.T[::-1])
    sv = vertices[order]
    for i in range(1, len(sv)):
        j = i - 1
        while j >= 0 and sv[i, 0] - sv[j, 0] <= tol:
            if np.max(np.abs(sv[i] - sv[j])) <= tol:
                return int(order[j]), int(order[i])
            j -= 1
    return None


def _validate_2d(mesh):
    checks = []

    dup = _duplicate_vertices(mesh.vertices)
    checks.append(
        CheckResult(
            "vertex-duplicates",
            dup is None,
            "" if dup is None else f"vertices {dup[0]} and {dup[1]} coincide",
        )
    )

    bad = None
    for ci in range(mesh.n_cells):
        coords = mesh.cell_coords(ci)
        if _shoelace(coords) <= 0.0:
            bad = f"cell {ci}: non-positive area"
            break
        if not _loop_is_simple(coords):
            bad = f"cell {ci}: self-intersecting loop"
            break
    checks.append(CheckResult("cell-loops-simple", bad is None, bad or ""))

    bad = None
    for eid, cs in enumerate(mesh.edge_cells):
        if len(cs) not in (1, 2):
            bad = f"edge {mesh.edges[eid]}: incident to {len(cs)} cells"
            break
    checks.append(CheckResult("edge-sharing", bad is None, bad or ""))

    # interior edges must be traversed once in each direction
    directed = {}
    for ci, loop in enumerate(mesh.cells):
        for a, b in zip(loop, np.roll(loop, -1)):
            directed.setdefault((int(a), int(b)), []).append(ci)
    bad = None
    for (a, b), cs in directed.items():
        if len(cs) > 1:
            bad = f"edge {a}-{b}: traversed twice in the same direction (cells {cs[0]}, {cs[1]})"
            break
    checks.append(CheckResult("interior-edge-orientation", bad is None, bad or ""))

    # chained boundary loops enclose the same area the cells add up to
    area_sum = sum(mesh.cell_area(c) for c in range(mesh.n_cells))
    succ = {}
    chain_ok = True
    detail = ""
    for (a, b), cs in directed.items():
        if (b, a) in directed:
            continue
        if a in succ:
            chain_ok = False
            detail = f"boundary branches at vertex {a}"
            break
        succ[a] = b
    boundary_area = 0.0
    if chain_ok:
        seen = set()
        for start in sorted(succ):
            if start in seen:
                continue
            loop = [start]
            cur = succ[start]
            while cur != start:
                if cur in seen or cur not in succ:
                    chain_ok = False
                    detail = f"boundary chain broken at vertex {cur}"
                    break
                loop.append(cur)
                seen.add(cur)
                cur = succ[cur]
            seen.add(start)
            if not chain_ok:
                break
            boundary_area += _shoelace(mesh.vertices[np.array(loop)])
    area_ok = chain_ok and abs(area_sum - boundary_area) <= 1e-12 * max(abs(area_sum), 1.0)
    if chain_ok and not area_ok:
        detail = f"cells sum to {area_sum!r} but the boundary encloses {boundary_area!r}"
    checks.append(CheckResult("area-tiling", area_ok, detail))
    return ValidationReport(checks)


def _validate_3d(mesh):
    checks = []

    dup = _duplicate_vertices(mesh.vertices)
    checks.append(
        CheckResult(
            "vertex-duplicates",
            dup is None,
            "" if dup is None else f"vertices {dup[0]} and {dup[1]} coincide",
        )
    )

    bad = None
    for fi in range(mesh.n_faces):
        coords = mesh.vertices[mesh.faces[fi]]
        origin, t1, t2, normal = face_frame(mesh, fi)
        dev = np.abs((coords - origin) @ normal).max()
        if dev > 1e-10 * mesh.face_diameter(fi):
            bad = f"face {fi}: deviates {dev:.2e} from its plane"
            break
        plane = (coords - origin) @ np.column_stack([t1, t2])
        if abs(_shoelace(plane)) <= 0.0:
            bad = f"face {fi}: zero area"
            break
        if not _loop_is_simple(plane):
            bad = f"face {fi}: self-intersecting loop"
            break
    checks.append(CheckResult("face-planarity", bad is None, bad or ""))

    bad = None
    for fi, cs in enumerate(mesh.face_cells):
        if len(cs) not in (1, 2):
            bad = f"face {fi}: incident to {len(cs)} cells"
            break
    checks.append(CheckResult("face-sharing", bad is None, bad or ""))

    bad = None
    for ci, refs in enumerate(mesh.cells):
        count = {}
        for f, s in refs:
            loop = mesh.faces[f] if s == 1 else mesh.faces[f][::-1]
            for a, b in zip(loop, np.roll(loop, -1)):
                count[(int(a), int(b))] = count.get((int(a), int(b)), 0) + 1
        for (a, b), c in count.items():
            if c != 1 or count.get((b, a), 0) != 1:
                bad = f"cell {ci}: edge {a}-{b} not traversed exactly once each way"
                break
        if bad:
            break
    checks.append(CheckResult("cell-watertight", bad is None, bad or ""))

    bad = None
    for ci in range(mesh.n_cells):
        vol = mesh.cell_volume(ci)
        if vol <= 0.0:
            bad = f"cell {ci}: non-positive volume {vol!r}"
            break
        # same integral routed through the centroid fan
        centroid = mesh.cell_centroid(ci)
        alt = 0.0
        for f, s in mesh.cells[ci]:
            pts = mesh.vertices[mesh.faces[f]] - centroid
            p0 = pts[0]
            for i in range(1, len(pts) - 1):
                alt += s * float(np.linalg.det(np.array([p0, pts[i], pts[i + 1]]))) / 6.0
        if abs(alt - vol) > 1e-10 * vol:
            bad = f"cell {ci}: volume mismatch {vol!r} vs {alt!r}"
            break
    checks.append(CheckResult("cell-volumes", bad is None, bad or ""))
    return ValidationReport(checks)


def validate_mesh(mesh):
    """Run the full battery of geometry/topology checks.

    Returns a ValidationReport whose entries name the first offending
    entity on failure.
    """
    if mesh.dim == 2:
        return _validate_2d(mesh)
    return _validate_3d(mesh)
