"""
Local projection and polynomial reproduction
============================================

The degrees of freedom on a cell are vertex values, edge point values,
and moments of the negative Laplacian.  From these a local solve
produces the cell's piecewise-polynomial reconstruction.  The operator
is consistent: feeding it the dof data of a polynomial of matching
degree returns that polynomial exactly, which is what the error
estimates lean on.
"""

import numpy as np

from sfvem.polybasis import ScaledMonomialBasis, polynomial_field
from sfvem.polymesh import PolyMesh2D, generate_pentagon_mesh
from sfvem.projector import build_discretization, interpolate_exact

parent = generate_pentagon_mesh(1)
ids = list(parent.cells[0])
mesh = PolyMesh2D(parent.vertices[ids], [list(range(len(ids)))])
print("one pentagon cell, vertices:")
print(mesh.vertices)

for degree in (1, 2, 3, 4):
    disc = build_discretization(mesh, degree)
    proj = disc.projectors[0]

    basis = ScaledMonomialBasis([0.25, 0.25], 0.5, degree)
    rng = np.random.default_rng(degree)
    poly = polynomial_field(basis, rng.standard_normal(basis.n))

    dofs = interpolate_exact(disc, poly)
    reconstructed = proj.macro_coefficients(dofs)
    exact = poly.u(proj.space.nodes)
    err = np.abs(reconstructed - exact).max() / max(1.0, np.abs(exact).max())
    print(f"degree {degree}: {disc.n_dofs} dofs on the cell, "
          f"{proj.space.nodes.shape[0]} macro nodes, node error {err:.2e}")
