"""Stabilizer-free virtual element solver for Poisson problems.

Subpackages cover polygonal/polyhedral meshes, macro simplicial
subdivisions, local projection operators, global assembly, and a
convergence-study harness.
"""

__version__ = "0.1.0"
