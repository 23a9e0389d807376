"""Polynomial toolbox: scaled monomials, simplex quadrature, nodal bases.

Scaled monomial bases live on physical cells (centered at the cell centroid,
scaled by its diameter); quadrature rules and Lagrange bases live on the
reference simplex and are mapped affinely.  All evaluation routines are
vectorized over (n, dim) point arrays.
"""

import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre


def multi_indices(dim, degree):
    """Exponent tuples of all monomials with total degree <= degree.

    Graded lexicographic order: ascending total degree, ties broken with the
    leading exponent descending, so for dim=2 the sequence starts
    1, x, y, x^2, xy, y^2.

    Parameters
    ----------
    dim : int
        Number of variables (1, 2 or 3).
    degree : int
        Maximum total degree; negative yields an empty list.

    Returns
    -------
    list of tuple of int
    """
    out = []
    for total in range(degree + 1):
        out.extend(_exponents_of_degree(dim, total))
    return out


def _exponents_of_degree(dim, total):
    if dim == 1:
        return [(total,)]
    out = []
    for first in range(total, -1, -1):
        for rest in _exponents_of_degree(dim - 1, total - first):
            out.append((first,) + rest)
    return out


def space_dimension(dim, degree):
    """dim P_degree(R^dim); zero when degree < 0."""
    if degree < 0:
        return 0
    return math.comb(degree + dim, dim)


class ScaledMonomialBasis:
    """Monomials ((x - center) / scale)^alpha through a total degree.

    The constant member is first, so the coefficient of the constant in an
    expansion is independent of center and scale.
    """

    def __init__(self, center, scale, degree, dim=None):
        self.center = np.asarray(center, dtype=float)
        self.scale = float(scale)
        self.degree = int(degree)
        self.dim = int(dim) if dim is not None else self.center.shape[0]
        if self.center.shape != (self.dim,):
            raise ValueError("center has wrong length for dimension")
        if self.scale <= 0.0:
            raise ValueError("scale must be positive")
        self.exponents = np.array(multi_indices(self.dim, self.degree), dtype=int).reshape(-1, self.dim)

    def __len__(self):
        return self.exponents.shape[0]

    @property
    def n(self):
        return self.exponents.shape[0]

    def _local(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - self.center) / self.scale

    def eval(self, points):
        """Values at the given points, shape (npoints, nbasis)."""
        x = self._local(points)
        return np.prod(x[:, None, :] ** self.exponents[None, :, :], axis=2)

    def grad(self, points):
        """Gradients at the given points, shape (npoints, nbasis, dim)."""
        x = self._local(points)
        npts = x.shape[0]
        out = np.zeros((npts, self.n, self.dim))
        for i in range(self.dim):
            exp = self.exponents.copy()
            coef = exp[:, i].astype(float) / self.scale
            exp[:, i] = np.maximum(exp[:, i] - 1, 0)
            out[:, :, i] = coef * np.prod(x[:, None, :] ** exp[None, :, :], axis=2)
        return out

    def hessian(self, points):
        """Second derivatives, shape (npoints, nbasis, dim, dim)."""
        x = self._local(points)
        npts = x.shape[0]
        out = np.zeros((npts, self.n, self.dim, self.dim))
        for i in range(self.dim):
            for j in range(i, self.dim):
                exp = self.exponents.copy()
                if i == j:
                    coef = exp[:, i] * (exp[:, i] - 1)
                else:
                    coef = exp[:, i] * exp[:, j]
                exp[:, i] -= 1
                exp[:, j] -= 1
                vals = np.where(coef > 0, coef, 0) / self.scale**2
                exp = np.maximum(exp, 0)
                block = vals * np.prod(x[:, None, :] ** exp[None, :, :], axis=2)
                out[:, :, i, j] = block
                out[:, :, j, i] = block
        return out


@lru_cache(maxsize=None)
def gauss_lobatto(n):
    """n Gauss-Lobatto abscissae on [0, 1], ascending, endpoints included.

    Interior points are the roots of the derivative of the Legendre
    polynomial of degree n-1, symmetrized so that t and 1-t pair up to
    rounding.
    """
    if n < 2:
        raise ValueError("need at least the two endpoints")
    if n == 2:
        pts = np.array([0.0, 1.0])
    else:
        series = np.zeros(n)
        series[-1] = 1.0
        interior = np.sort(legendre.legroots(legendre.legder(series)))
        interior = (interior - interior[::-1]) / 2.0
        pts = np.concatenate(([-1.0], interior, [1.0]))
        pts = (pts + 1.0) / 2.0
        if n % 2 == 1:
            pts[n // 2] = 0.5
    pts.flags.writeable = False
    return pts


class Quadrature:
    """Positive rule on the reference simplex; weights sum to 1/dim!."""

    def __init__(self, dim, bary, weights):
        self.dim = dim
        self.bary = bary
        self.weights = weights
        bary.flags.writeable = False
        weights.flags.writeable = False

    @property
    def points(self):
        """Cartesian coordinates on the reference simplex."""
        return self.bary[:, 1:]

    def __len__(self):
        return self.weights.shape[0]


def _gauss01(n):
    x, w = legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=None)
def simplex_quadrature(dim, exactness):
    """Rule integrating P_exactness exactly on the reference simplex.

    Built by collapsing tensor Gauss rules (Duffy transform), so point
    counts are not minimal but positivity and exactness are structural.

    Parameters
    ----------
    dim : int
        1, 2 or 3.
    exactness : int
        Highest total polynomial degree integrated exactly.

    Returns
    -------
    Quadrature
    """
    p = max(int(exactness), 0)
    if dim == 1:
        x, w = _gauss01(max((p + 2) // 2, 1))
        cart = x[:, None]
    elif dim == 2:
        # jacobian (1-u) raises the u-degree of a total-degree-p monomial to p+1
        u, wu = _gauss01((p + 3) // 2)
        v, wv = _gauss01((p + 2) // 2)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        ww = wu[:, None] * wv[None, :] * (1.0 - uu)
        cart = np.column_stack([uu.ravel(), (vv * (1.0 - uu)).ravel()])
        w = ww.ravel()
    elif dim == 3:
        u, wu = _gauss01((p + 4) // 2)
        v, wv = _gauss01((p + 3) // 2)
        s, ws = _gauss01((p + 2) // 2)
        uu, vv, ss = np.meshgrid(u, v, s, indexing="ij")
        jac = (1.0 - uu) ** 2 * (1.0 - vv)
        ww = wu[:, None, None] * wv[None, :, None] * ws[None, None, :] * jac
        y = vv * (1.0 - uu)
        z = ss * (1.0 - uu) * (1.0 - vv)
        cart = np.column_stack([uu.ravel(), y.ravel(), z.ravel()])
        w = ww.ravel()
    else:
        raise ValueError("dimension must be 1, 2 or 3")
    bary = np.column_stack([1.0 - cart.sum(axis=1), cart])
    return Quadrature(dim, bary, w)


def map_quadrature(quad, vertices):
    """Map a reference rule onto the simplex spanned by `vertices`.

    Returns physical points (n, dim) and weights summing to the simplex
    measure.
    """
    verts = np.asarray(vertices, dtype=float)
    pts = quad.bary @ verts
    jac = verts[1:] - verts[0]
    det = abs(float(np.linalg.det(jac)))
    return pts, quad.weights * det


class LagrangeSimplexBasis:
    """Nodal P_k basis on the reference simplex.

    Nodes follow the principal lattice except along edges, where interior
    nodes sit at Gauss-Lobatto images; this is what lets macro-element
    traces coincide with the edge degrees of freedom without a change of
    basis.  Unisolvence reduces to the 1D/2D trace cases, so the warped set
    stays unisolvent for every degree handled here.
    """

    def __init__(self, dim, degree):
        if degree < 1:
            raise ValueError("degree must be at least 1")
        self.dim = dim
        self.degree = degree
        self.multi = np.array(
            [(degree - sum(m),) + m for m in _all_lattice(dim, degree)], dtype=int
        )
        gl = gauss_lobatto(degree + 1)
        nodes = []
        for m in self.multi:
            support = np.nonzero(m)[0]
            lam = np.asarray(m, dtype=float) / degree
            if support.shape[0] == 2:
                a, b = support
                t = gl[m[b]]
                lam = np.zeros(dim + 1)
                lam[a] = 1.0 - t
                lam[b] = t
            nodes.append(lam[1:])
        self.nodes = np.array(nodes)
        centroid = np.full(dim, 1.0 / (dim + 1))
        self._mono = ScaledMonomialBasis(centroid, 1.0, degree, dim)
        vand = self._mono.eval(self.nodes)
        self._coef = np.linalg.inv(vand)

    @property
    def n(self):
        return self.multi.shape[0]

    def eval(self, points):
        """Basis values, shape (npoints, nnodes)."""
        return self._mono.eval(points) @ self._coef

    def grad(self, points):
        """Basis gradients, shape (npoints, nnodes, dim)."""
        return np.einsum("pbd,bn->pnd", self._mono.grad(points), self._coef)


def _all_lattice(dim, degree):
    # lattice multi-indices (m1..mdim) with sum <= degree, m0 implied
    out = []
    for total in range(degree + 1):
        out.extend(_exponents_of_degree(dim, total))
    return out


@lru_cache(maxsize=None)
def lagrange_simplex(dim, degree):
    """Cached LagrangeSimplexBasis for the given dimension and degree."""
    return LagrangeSimplexBasis(dim, degree)


class PolynomialField:
    """Polynomial with manufactured-solution interface (u, grad, Laplacian)."""

    def __init__(self, basis, coeffs):
        self.basis = basis
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.shape != (basis.n,):
            raise ValueError("coefficient count does not match basis")

    def u(self, points):
        return self.basis.eval(points) @ self.coeffs

    def grad_u(self, points):
        return np.einsum("pbd,b->pd", self.basis.grad(points), self.coeffs)

    def hessian(self, points):
        return np.einsum("pbij,b->pij", self.basis.hessian(points), self.coeffs)

    def laplacian(self, points):
        h = self.basis.hessian(points)
        return np.einsum("pbii,b->p", h, self.coeffs)


def polynomial_field(basis, coeffs):
    """Wrap coefficients over a ScaledMonomialBasis as a manufactured field."""
    return PolynomialField(basis, coeffs)
