"""Finite-difference assembly of the confining and fiber Hamiltonians.

The kinetic part is the standard 5-point Laplacian with homogeneous Dirichlet
walls one spacing outside the node span; potentials enter as diagonal
multiplication operators. Every assembled matrix is symmetric by
construction, and the fiber operators differ from the base Hamiltonian only
on the diagonal, so the perturbation never couples distinct fibers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, TailMissing
from .model import eval_confining_potential, eval_singular_term


@dataclass
class SymOp:
    """Sparse symmetric operator on the n^2 grid nodes plus metadata."""

    matrix: sp.csr_matrix
    grid: object
    kind: str
    meta: dict = field(default_factory=dict)

    @property
    def dimension(self):
        return self.matrix.shape[0]

    def matvec(self, v):
        return self.matrix @ v

    def dense(self):
        return self.matrix.toarray()

    def symmetry_defect(self):
        return abs(self.matrix - self.matrix.T).max()


def laplacian_2d(grid):
    """Negative 5-point Laplacian (positive definite) with Dirichlet walls."""
    n, h = grid.n, grid.h
    main = np.full(n, 2.0 / h ** 2)
    off = np.full(n - 1, -1.0 / h ** 2)
    T = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    eye = sp.identity(n, format="csr")
    return (sp.kron(T, eye) + sp.kron(eye, T)).tocsr()


def assemble_H(grid, confining_field):
    """H = -Laplacian + diag(V0); symmetric positive semidefinite."""
    if confining_field.grid is not grid and confining_field.values.shape != (grid.d,):
        raise DimensionMismatch("confining field does not live on this grid")
    matrix = laplacian_2d(grid) + sp.diags(confining_field.values, format="csr")
    return SymOp(matrix.tocsr(), grid, "H", {})


def fiber_shift_diag(grid, params, p, eta=None, include_tail=None):
    """Diagonal of the full fiber perturbation eta * V at perturbation
    strength eta (default eps^beta), including the tail term when present:

        eta * p * (eta * p + 2 |x|^alpha Theta)
        + eta * eta^(gamma - alpha - 1) * W

    ``include_tail=False`` selects the analytic branch of a tailed model.
    """
    if eta is None:
        eta = params.epsilon ** params.beta
    if include_tail is None:
        include_tail = params.has_tail
    f = grid.r ** params.alpha * params.theta(grid.theta)
    diag = eta * p * (eta * p + 2.0 * f)
    if include_tail:
        if not params.has_tail:
            raise TailMissing("fiber assembly with tail requested, model has none")
        if eta > 0.0:
            eps_eff = eta ** (1.0 / params.beta)
            params_eff = params if eps_eff == params.epsilon else \
                type(params)(alpha=params.alpha, epsilon=eps_eff,
                             theta=params.theta, tail=params.tail, p0=params.p0)
            w = eval_singular_term(grid, params_eff, p).values
            diag = diag + eta * eta ** (params.tail_gamma - params.alpha - 1.0) * w
    return diag


def assemble_fiber_H(grid, params, p, include_tail=None):
    """Fiber Hamiltonian H + eps^beta p V (+ tail term when present)."""
    base = assemble_H(grid, eval_confining_potential(grid, params))
    shift = fiber_shift_diag(grid, params, p, include_tail=include_tail)
    matrix = (base.matrix + sp.diags(shift, format="csr")).tocsr()
    kind = "fiber+tail" if (include_tail if include_tail is not None
                            else params.has_tail) else "fiber"
    return SymOp(matrix, grid, kind,
                 {"p": p, "epsilon": params.epsilon, "alpha": params.alpha})


def _smooth(values, n, passes=3):
    """Few passes of 5-point nearest-neighbour averaging (zero outside)."""
    u = values.reshape(n, n)
    for _ in range(passes):
        padded = np.zeros((n + 2, n + 2))
        padded[1:-1, 1:-1] = u
        u = (4.0 * padded[1:-1, 1:-1] + padded[:-2, 1:-1] + padded[2:, 1:-1]
             + padded[1:-1, :-2] + padded[1:-1, 2:]) / 8.0
    return u.ravel()


@dataclass
class BoundReport:
    """Sampled verification of the relative bound of the fiber potential."""

    samples: int
    violations: int
    worst_margin: float
    margins: np.ndarray

    @property
    def ok(self):
        return self.violations == 0


def h_bound_check(H_op, Vfield, sample_count, params, p, seed=0):
    """Check ||V u|| <= (sqrt 2 + eps^beta |p|) ||u|| + sqrt 2 ||H u|| on
    smoothed Gaussian random fields; reports the worst margin (rhs - lhs).
    """
    if Vfield.values.shape[0] != H_op.dimension:
        raise DimensionMismatch("potential and operator dimensions differ")
    rng = np.random.default_rng(seed)
    h = H_op.grid.h
    eb = params.epsilon ** params.beta
    const = np.sqrt(2.0) + eb * abs(p)
    margins = np.empty(sample_count)
    for i in range(sample_count):
        u = _smooth(rng.standard_normal(H_op.dimension), H_op.grid.n)
        u /= h * np.linalg.norm(u)
        lhs = h * np.linalg.norm(Vfield.values * u)
        rhs = const * h * np.linalg.norm(u) + np.sqrt(2.0) * h * np.linalg.norm(H_op.matvec(u))
        margins[i] = rhs - lhs
    return BoundReport(samples=sample_count,
                       violations=int(np.sum(margins < 0)),
                       worst_margin=float(margins.min()),
                       margins=margins)
