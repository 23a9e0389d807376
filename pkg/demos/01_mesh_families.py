"""
Built-in mesh families
======================

Three refinement families drive every study in this package: a pentagon
tiling and a hexagon tiling of the unit square, and a cube grid on the
unit cube.  Each level halves the mesh size.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Polygon

from sfvem.polymesh import (
    generate_cube_mesh,
    generate_hexagon_mesh,
    generate_pentagon_mesh,
    mesh_size,
)

# counts and sizes over the first few levels
for name, gen in (("pentagon", generate_pentagon_mesh),
                  ("hexagon", generate_hexagon_mesh),
                  ("cube", generate_cube_mesh)):
    for level in (1, 2, 3):
        mesh = gen(level)
        print(f"{name} level {level}: {mesh.n_vertices} vertices, "
              f"{mesh.n_cells} cells, h = {mesh_size(mesh):.4f}")

# draw the two polygonal families at levels 1 and 2
fig, axes = plt.subplots(2, 2, figsize=(8, 8))
for row, gen in enumerate((generate_pentagon_mesh, generate_hexagon_mesh)):
    for col, level in enumerate((1, 2)):
        mesh = gen(level)
        ax = axes[row][col]
        for c in range(mesh.n_cells):
            ax.add_patch(Polygon(mesh.cell_coords(c), fill=False, lw=0.8))
        ax.set_xlim(-0.05, 1.05)
        ax.set_ylim(-0.05, 1.05)
        ax.set_aspect("equal")
        ax.set_title(f"level {level}, {mesh.n_cells} cells")
fig.tight_layout()
fig.savefig("mesh_families.png", dpi=120)
print("wrote mesh_families.png")
