"""Global assembly and linear solves.

The bilinear form pairs projected gradients, so the global matrix is the
scatter-sum of the per-cell projected element matrices.  Dirichlet data
enters through a lifting vector: fixed dofs are eliminated symmetrically
and their coupling moves to the right-hand side.
"""

import os

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse import coo_matrix

TOL_ENV = "SFVEM_CG_TOL"
DEFAULT_TOL = 1e-12
DENSE_LIMIT = 2000


class SolveError(RuntimeError):
    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class SolverConfig:
    """method: auto (dense below DENSE_LIMIT free dofs, else pcg)."""

    def __init__(self, method="auto", tol=None, max_iter=None):
        if method not in ("auto", "dense", "pcg"):
            raise ValueError(f"unknown solver method: {method}")
        self.method = method
        if tol is None:
            tol = float(os.environ.get(TOL_ENV, DEFAULT_TOL))
        self.tol = tol
        self.max_iter = max_iter


class SolveResult:
    def __init__(self, x, iterations, residuals, method):
        self.x = x
        self.iterations = iterations
        self.residuals = residuals
        self.method = method


class LinearSystem:
    """Full matrix plus the boundary lifting, before elimination."""

    def __init__(self, A, b, boundary_mask, lift):
        self.A = A
        self.b = b
        self.boundary = boundary_mask
        self.free = np.nonzero(~boundary_mask)[0]
        self.fixed = np.nonzero(boundary_mask)[0]
        self.lift = lift
        self._A_free = None

    @property
    def n_free(self):
        return self.free.shape[0]

    def free_matrix(self):
        if self._A_free is None:
            self._A_free = self.A[self.free][:, self.free].tocsr()
        return self._A_free

    def free_rhs(self):
        return (self.b - self.A @ self.lift)[self.free]

    def expand(self, x_free):
        x = self.lift.copy()
        x[self.free] = x_free
        return x


def assemble(disc, f=None, boundary_values=None, exactness=None):
    """Scatter the element matrices and loads into the global system."""
    layout = disc.layout
    n = layout.n_dofs
    if exactness is None:
        exactness = 2 * disc.degree + 4
    rows, cols, vals = [], [], []
    b = np.zeros(n)
    for pr in disc.projectors:
        g = pr.gather
        rows.append(np.repeat(g, g.shape[0]))
        cols.append(np.tile(g, g.shape[0]))
        vals.append(pr.A.ravel())
        if f is not None:
            b[g] += pr.element_load(f, exactness)
    A = coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    lift = np.zeros(n)
    if boundary_values is not None:
        lift[layout.boundary] = np.asarray(boundary_values)[layout.boundary]
    return LinearSystem(A, b, layout.boundary.copy(), lift)


def jacobi_pcg(A, b, tol, max_iter):
    """Conjugate gradients with diagonal preconditioning.

    Returns (x, iterations, residual norms); raises SolveError when the
    iteration budget runs out or the matrix shows indefinite behaviour.
    At tight tolerances the recurrence residual drifts from the true
    one, so convergence is re-verified against b - A x and the
    iteration restarted (budget permitting) until they agree.
    """
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, [0.0]
    diag = A.diagonal()
    if diag.min() <= 0.0:
        raise SolveError("nonpositive diagonal entry; matrix is not SPD")
    x = np.zeros_like(b)
    residuals = [bnorm]
    it = 0
    true_prev = None
    for sweep in range(4):
        if sweep == 0:
            r = b.copy()
        else:
            r = b - A @ x
            rnorm = float(np.linalg.norm(r))
            # honest value for the iterate the recurrence just accepted
            residuals[-1] = rnorm
            if rnorm <= tol * bnorm:
                return x, it, residuals
            if true_prev is not None and rnorm >= 0.5 * true_prev:
                # stagnated at the attainable floor for double precision
                return x, it, residuals
            true_prev = rnorm
        z = r / diag
        p = z.copy()
        rz = float(r @ z)
        while it < max_iter:
            Ap = A @ p
            pAp = float(p @ Ap)
            if pAp <= 0.0:
                raise SolveError("negative curvature direction; matrix is not SPD",
                                 residuals)
            alpha = rz / pAp
            x += alpha * p
            r -= alpha * Ap
            it += 1
            rnorm = float(np.linalg.norm(r))
            residuals.append(rnorm)
            if rnorm <= tol * bnorm:
                break
            z = r / diag
            rz_next = float(r @ z)
            p = z + (rz_next / rz) * p
            rz = rz_next
        else:
            raise SolveError(
                f"no convergence within {max_iter} iterations "
                f"(residual {residuals[-1]:.3e}, target {tol * bnorm:.3e})",
                residuals,
            )
    return x, it, residuals


def solve_system(system, config=None):
    if config is None:
        config = SolverConfig()
    method = config.method
    if method == "auto":
        method = "dense" if system.n_free <= DENSE_LIMIT else "pcg"
    rhs = system.free_rhs()
    if method == "dense":
        A = system.free_matrix().toarray()
        # moment and vertex dofs live on very different scales; factoring
        # the Jacobi-equilibrated matrix keeps the forward error near
        # machine level instead of growing with the raw condition number
        if A.shape[0]:
            s = A.diagonal()
            if np.any(s <= 0.0):
                raise SolveError("dense factorization failed: nonpositive diagonal")
            s = 1.0 / np.sqrt(s)
            A_eq = s[:, None] * A * s[None, :]
            try:
                factor = cho_factor(A_eq)
            except np.linalg.LinAlgError as exc:
                raise SolveError(f"dense factorization failed: {exc}")
            rhs_eq = s * rhs
            y = cho_solve(factor, rhs_eq)
            for _ in range(2):
                y += cho_solve(factor, rhs_eq - A_eq @ y)
            x_free = s * y
        else:
            x_free = rhs
        result = SolveResult(system.expand(x_free), 0, [], "dense")
    else:
        A = system.free_matrix()
        max_iter = config.max_iter
        if max_iter is None:
            max_iter = 10 * max(system.n_free, 1)
        x_free, iters, residuals = jacobi_pcg(A, rhs, config.tol, max_iter)
        result = SolveResult(system.expand(x_free), iters, residuals, "pcg")
    return result


class MacroField:
    """Per-cell macro coefficients of a projected dof vector."""

    def __init__(self, disc, coefficients):
        self.disc = disc
        self.coefficients = coefficients

    def cell_space(self, c):
        return self.disc.projectors[c].space

    def eval_cell(self, c, ref_points, simplex):
        return self.cell_space(c).eval_in_simplex(
            simplex, ref_points, self.coefficients[c]
        )


def reconstruct(disc, x):
    """Project a global dof vector into every cell's macro space."""
    return MacroField(disc, [pr.macro_coefficients(x) for pr in disc.projectors])
