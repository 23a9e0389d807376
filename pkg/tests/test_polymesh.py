"""Mesh families, file round trips, and validation failure modes."""

import math

import numpy as np
import pytest

from sfvem import polymesh as pm


def shoelace(pts):
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


class TestGenerators:
    def test_pentagon_counts_and_areas(self):
        mesh = pm.generate_pentagon_mesh(1)
        assert mesh.n_vertices == 11
        assert mesh.n_cells == 4
        areas = [mesh.cell_area(c) for c in range(4)]
        assert abs(areas[0] - 0.1875) < 1e-15
        assert all(a > 0 for a in areas)
        assert abs(sum(areas) - 1.0) < 1e-14
        assert pm.generate_pentagon_mesh(2).n_cells == 16

    def test_pentagon_first_cell_matches_unit_pattern(self):
        mesh = pm.generate_pentagon_mesh(1)
        loop = mesh.vertices[mesh.cells[0]]
        expect = np.array([[0, 0], [0.5, 0], [0.5, 0.5], [0.25, 0.25], [0, 0.5]])
        np.testing.assert_array_equal(loop, expect)

    def test_hexagon_counts_and_coordinates(self):
        mesh = pm.generate_hexagon_mesh(1)
        assert mesh.n_vertices == 17
        assert mesh.n_cells == 6
        assert abs(sum(mesh.cell_area(c) for c in range(6)) - 1.0) < 1e-12
        # the interior pattern nodes sit at their tabulated positions
        targets = [(0.4444, 0.1429), (0.2222, 0.2222), (0.1818, 0.4444),
                   (0.7273, 0.2857), (0.8182, 0.5), (0.5556, 0.5),
                   (0.4444, 0.8571), (0.7273, 0.6667), (0.2222, 0.6667)]
        for t in targets:
            dist = np.min(np.linalg.norm(mesh.vertices - np.array(t), axis=1))
            assert dist < 1e-7
        assert pm.generate_hexagon_mesh(2).n_cells == 24

    def test_cube_counts_and_volumes(self):
        mesh = pm.generate_cube_mesh(1)
        assert (mesh.n_vertices, mesh.n_faces, mesh.n_cells) == (8, 6, 1)
        mesh = pm.generate_cube_mesh(2)
        assert (mesh.n_vertices, mesh.n_faces, mesh.n_cells) == (27, 36, 8)
        vols = [mesh.cell_volume(c) for c in range(8)]
        np.testing.assert_allclose(vols, 0.125, rtol=1e-14)
        assert pm.generate_cube_mesh(3).n_cells == 64

    @pytest.mark.parametrize(
        "gen",
        [pm.generate_pentagon_mesh, pm.generate_hexagon_mesh, pm.generate_cube_mesh],
    )
    def test_mesh_size_halves_exactly(self, gen):
        sizes = [pm.mesh_size(gen(level)) for level in range(1, 6)]
        for coarse, fine in zip(sizes, sizes[1:]):
            assert fine * 2.0 == coarse

    def test_pentagon_mesh_size_value(self):
        assert pm.mesh_size(pm.generate_pentagon_mesh(1)) == math.sqrt(10.0) / 4.0

    @pytest.mark.parametrize("level", [1, 2, 3])
    @pytest.mark.parametrize(
        "gen",
        [pm.generate_pentagon_mesh, pm.generate_hexagon_mesh, pm.generate_cube_mesh],
    )
    def test_families_validate(self, gen, level):
        report = pm.validate_mesh(gen(level))
        assert report.passed, report.summary()

    def test_boundary_flags(self):
        mesh = pm.generate_pentagon_mesh(2)
        onsq = (
            (np.abs(mesh.vertices) < 1e-15) | (np.abs(mesh.vertices - 1.0) < 1e-15)
        ).any(axis=1)
        np.testing.assert_array_equal(mesh.boundary_vertices, onsq)
        mesh3 = pm.generate_cube_mesh(2)
        assert int(mesh3.boundary_faces.sum()) == 24


class TestConstruction:
    def test_clockwise_loop_is_reversed(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        mesh = pm.PolyMesh2D(verts, [[0, 3, 2, 1]])
        assert mesh.cell_area(0) > 0
        with pytest.raises(pm.GeometryError, match="clockwise"):
            pm.PolyMesh2D(verts, [[0, 3, 2, 1]], strict=True)

    def test_edge_shared_three_times(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [1.5, 0.5]])
        with pytest.raises(pm.TopologyError, match="edge 0-1"):
            pm.PolyMesh2D(verts, [[0, 1, 2], [0, 3, 1], [0, 1, 4]])

    def test_cell_index_out_of_range(self):
        verts = np.zeros((3, 2))
        with pytest.raises(pm.TopologyError, match="cell 0"):
            pm.PolyMesh2D(verts, [[0, 1, 7]])

    def test_3d_cell_orientation_fixed_automatically(self):
        mesh = pm.generate_cube_mesh(1)
        flipped = [[(f, -s) for f, s in mesh.cells[0]]]
        rebuilt = pm.PolyMesh3D(mesh.vertices, [f for f in mesh.faces], flipped)
        assert rebuilt.cell_volume(0) > 0

    def test_3d_open_surface_rejected(self):
        mesh = pm.generate_cube_mesh(1)
        refs = mesh.cells[0][:-1]
        with pytest.raises(pm.TopologyError, match="cell 0"):
            pm.PolyMesh3D(mesh.vertices, [f for f in mesh.faces[:-1]], [refs])


class TestIO:
    def test_round_trip_2d(self, tmp_path):
        mesh = pm.generate_hexagon_mesh(2)
        path = tmp_path / "hexa.msh"
        pm.write_mesh(mesh, path)
        back = pm.read_mesh(path)
        np.testing.assert_array_equal(mesh.vertices, back.vertices)
        assert len(mesh.cells) == len(back.cells)
        for a, b in zip(mesh.cells, back.cells):
            np.testing.assert_array_equal(a, b)

    def test_round_trip_3d(self, tmp_path):
        mesh = pm.generate_cube_mesh(2)
        path = tmp_path / "cube.msh"
        pm.write_mesh(mesh, path)
        back = pm.read_mesh(path)
        np.testing.assert_array_equal(mesh.vertices, back.vertices)
        assert back.n_faces == mesh.n_faces
        for a, b in zip(mesh.faces, back.faces):
            np.testing.assert_array_equal(a, b)
        assert back.cells == mesh.cells

    def test_comments_and_blank_lines(self, tmp_path):
        path = tmp_path / "tri.msh"
        path.write_text(
            "# triangle\n\nsfvem-mesh 2 3 1\nv 0 0\nv 1 0  # corner\nv 0 1\nc 0 1 2\n"
        )
        mesh = pm.read_mesh(path)
        assert mesh.n_cells == 1

    @pytest.mark.parametrize(
        "content,lineno",
        [
            ("bogus 2 1 1\n", 1),
            ("sfvem-mesh 4 0 0\n", 1),
            ("sfvem-mesh 2 1 0\nv 0\n", 2),
            ("sfvem-mesh 2 1 0\nv 0 0\nf 0 1 2\n", 3),
            ("sfvem-mesh 2 2 0\nv 0 0\n", 2),
            ("sfvem-mesh 3 1 1 1\nv 0 0 0\nf 0 0 0\nc 5\n", 4),
        ],
    )
    def test_malformed_files(self, tmp_path, content, lineno):
        path = tmp_path / "bad.msh"
        path.write_text(content)
        with pytest.raises(pm.MeshFormatError) as err:
            pm.read_mesh(path)
        assert err.value.line == lineno


class TestValidation:
    def test_duplicate_vertex_detected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 2e-15]])
        mesh = pm.PolyMesh2D(verts, [[0, 1, 2]])
        report = pm.validate_mesh(mesh)
        assert not report.passed
        assert any(c.name == "vertex-duplicates" and not c.passed for c in report.checks)

    def test_overlapping_cells_detected(self):
        verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.8]])
        mesh = pm.PolyMesh2D(verts, [[0, 1, 2, 3], [0, 1, 4]])
        report = pm.validate_mesh(mesh)
        failed = {c.name for c in report.failures}
        assert "interior-edge-orientation" in failed
        assert "area-tiling" in failed

    def test_nonplanar_face_detected(self):
        mesh = pm.generate_cube_mesh(1)
        verts = mesh.vertices.copy()
        verts[0, 0] += 1e-5
        bad = pm.PolyMesh3D(verts, [f for f in mesh.faces], [list(c) for c in mesh.cells])
        report = pm.validate_mesh(bad)
        assert any(c.name == "face-planarity" and not c.passed for c in report.checks)

    def test_report_summary_format(self):
        report = pm.validate_mesh(pm.generate_pentagon_mesh(1))
        text = report.summary()
        assert "area-tiling" in text and "FAIL" not in text


class TestFaceFrames:
    def test_frame_is_orthonormal(self):
        mesh = pm.generate_cube_mesh(2)
        for f in range(mesh.n_faces):
            origin, t1, t2, normal = pm.face_frame(mesh, f)
            basis = np.array([t1, t2, normal])
            np.testing.assert_allclose(basis @ basis.T, np.eye(3), atol=1e-14)
            np.testing.assert_allclose(np.cross(t1, t2), normal, atol=1e-14)

    def test_plane_coords_reproduce_face(self):
        mesh = pm.generate_cube_mesh(1)
        f = 0
        origin, t1, t2, _ = pm.face_frame(mesh, f)
        plane = pm.face_plane_coords(mesh, f)
        lifted = origin + plane @ np.array([t1, t2])
        np.testing.assert_allclose(lifted, mesh.vertices[mesh.faces[f]], atol=1e-14)
        assert abs(shoelace(plane)) > 0.9
