"""
Macro subdivision of single cells
=================================

Every polygonal cell is split into triangles (polyhedra into
tetrahedra) before anything else happens; the projection targets the
continuous piecewise polynomials on that subdivision.  Polygons are ear
clipped without new points.  Cubes can be split two ways: six
tetrahedra through a main diagonal (kuhn) or a cone from the body
center over the triangulated faces.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sfvem.macrosub import check_constraints, subdivide_polygon, subdivide_polyhedron
from sfvem.polymesh import generate_cube_mesh, generate_pentagon_mesh

mesh = generate_pentagon_mesh(1)

fig, axes = plt.subplots(1, 4, figsize=(13, 3.4))
for c in range(4):
    sub = subdivide_polygon(mesh.cell_coords(c))
    ax = axes[c]
    for t in range(sub.n_simplices):
        tri = sub.simplex_coords(t)
        ax.fill(tri[:, 0], tri[:, 1], alpha=0.25)
        ax.plot(np.append(tri[:, 0], tri[0, 0]), np.append(tri[:, 1], tri[0, 1]),
                "k-", lw=0.8)
    report = check_constraints(sub)
    ax.set_title(f"cell {c}: {sub.n_simplices} triangles, "
                 f"{'ok' if report.passed else 'INVALID'}")
    ax.set_aspect("equal")
fig.tight_layout()
fig.savefig("pentagon_subdivisions.png", dpi=120)
print("wrote pentagon_subdivisions.png")

# the two reflex pentagons admit exactly one diagonal pair, so the
# ear clip has no freedom there; the convex ones pick the first valid ear
cube = generate_cube_mesh(1)
for strategy in ("kuhn", "center"):
    sub = subdivide_polyhedron(cube, 0, strategy=strategy)
    report = check_constraints(sub)
    print(f"cube via {strategy}: {sub.n_simplices} tetrahedra, "
          f"constraints {'pass' if report.passed else 'FAIL'}")
