"""Rayleigh-Schrodinger coefficients and almost-invariant subspaces.

Two independent routes to the perturbed eigenvalue are implemented: the
analytic coefficient formulas built from the coupling tensor, and a tracking
oracle that diagonalizes the perturbed operator directly over a sweep of the
perturbation strength. For singular (not relatively bounded) perturbations
the truncated projection series T_N, its spectral lift P_N, commutator
defects, and the intertwining unitary replace the convergent expansion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (DefectTooLarge, DegenerateFirstOrder, GapTooSmall,
                     ProjectionsTooFar, RankMismatch, TrackingLost)
from .model import eval_confining_potential
from .operators import assemble_H, fiber_shift_diag
from .spectral import group_degenerate, lowest_eigenpairs


# ---------------------------------------------------------------------------
# coupling tensor and coefficient formulas
# ---------------------------------------------------------------------------

@dataclass
class CouplingTensor:
    """Matrix elements v[i, j] = 2 <chi_i, |x|^alpha Theta chi_j> over all
    computed eigenstates, viewed blockwise through the cluster structure."""

    matrix: np.ndarray
    spectral: object
    field: np.ndarray            # nodal values of |x|^alpha Theta

    def block(self, n, l):
        rows = self.spectral.clusters[n].members
        cols = self.spectral.clusters[l].members
        return self.matrix[np.ix_(rows, cols)]

    def symmetry_defect(self):
        return float(np.max(np.abs(self.matrix - self.matrix.T)))


def coupling_matrix(spectral, grid, params):
    """Grid quadrature of the level-coupling matrix elements."""
    f = grid.r ** params.alpha * params.theta(grid.theta)
    X = spectral.eigenvectors
    matrix = 2.0 * grid.h ** 2 * (X.T @ (f[:, None] * X))
    return CouplingTensor(matrix=matrix, spectral=spectral, field=f)


@dataclass
class RSCoefficients:
    """First and second perturbation coefficients for one cluster.

    For a degenerate cluster the within-cluster coupling block is
    diagonalized first; ``basis`` holds that rotation and the coefficients
    refer to the rotated members. ``tail_estimate`` bounds the part of the
    second-order sum lost to the level cap via the next-gap inequality.
    """

    cluster_index: int
    lambda0: float
    lambda1: np.ndarray
    lambda2: np.ndarray
    basis: np.ndarray
    level_cap: float
    levels_used: int
    tail_estimate: np.ndarray


def rs_coefficients(coupling, spectral, n, level_cap=None, degeneracy_tol=1e-8):
    """lambda1_k = rotated diagonal coupling; lambda2_k = 1 - sum over levels
    outside the cluster of |v|^2 / (lambda_l - lambda_n).

    ``level_cap`` truncates the spectral sum (default 8 * lambda_n; pass
    np.inf to keep every computed level). Raises DegenerateFirstOrder when a
    multi-member cluster does not split simply at first order, since the
    plain second-order formula is then unreliable.
    """
    if spectral.clusters is None:
        raise ValueError("spectral data has no cluster structure")
    cluster = spectral.clusters[n]
    lam = cluster.value
    members = np.array(cluster.members)
    m = len(members)
    if level_cap is None:
        level_cap = 8.0 * lam

    block = coupling.matrix[np.ix_(members, members)]
    if m == 1:
        lambda1 = np.array([block[0, 0]])
        basis = np.eye(1)
    else:
        lambda1, basis = sla.eigh(0.5 * (block + block.T))
        if np.any(np.diff(lambda1) < degeneracy_tol * max(1.0, abs(lam))):
            raise DegenerateFirstOrder(
                f"cluster {n} first-order values {lambda1} are not simple")

    vals = spectral.eigenvalues
    member_set = set(cluster.members)
    outside = np.array([i for i in range(spectral.k)
                        if i not in member_set and vals[i] <= level_cap],
                       dtype=int)
    rows = basis.T @ coupling.matrix[members, :]        # (m, k) rotated rows

    grid = spectral.grid
    lambda2 = np.empty(m)
    tail = np.empty(m)
    above = vals[vals > level_cap]
    for k_idx in range(m):
        if len(outside):
            lambda2[k_idx] = 1.0 - np.sum(
                rows[k_idx, outside] ** 2 / (vals[outside] - lam))
        else:
            lambda2[k_idx] = 1.0
        if len(above) or not spectral.complete:
            # completeness: sum over ALL levels of |v|^2 = ||2 f chi_k||^2,
            # and every neglected level lies above the cap (or above the
            # computed window), so the next gap bounds the lost sum
            chi = spectral.eigenvectors[:, members] @ basis[:, k_idx]
            total = grid.h ** 2 * np.sum((2.0 * coupling.field * chi) ** 2)
            used = np.sum(rows[k_idx, outside] ** 2) + np.sum(rows[k_idx, members] ** 2)
            next_val = above.min() if len(above) else vals.max()
            tail[k_idx] = max(0.0, total - used) / (next_val - lam)
        else:
            tail[k_idx] = 0.0

    return RSCoefficients(cluster_index=n, lambda0=float(lam), lambda1=lambda1,
                          lambda2=lambda2, basis=basis, level_cap=float(level_cap),
                          levels_used=len(outside), tail_estimate=tail)


# ---------------------------------------------------------------------------
# eigenvalue tracking oracle
# ---------------------------------------------------------------------------

@dataclass
class OracleFit:
    """Polynomial fit of a tracked eigenvalue branch over a strength sweep."""

    lambda0: float
    lambda1: float
    lambda2: float
    coefficients: np.ndarray
    etas: np.ndarray
    values: np.ndarray
    min_overlap: float


def eigenvalue_tracking_oracle(grid, params, n, eta_list, degree=3,
                               gap_tol=1e-6, overlap_floor=0.9, method=None,
                               k_extra=4):
    """Track the continuation of cluster ``n`` of H under the perturbation
    eta * (eta + 2 |x|^alpha Theta) by direct diagonalization at each eta,
    matching branches through eigenvector overlap, then least-squares fit a
    polynomial in eta. Returns the constant, linear, and quadratic
    coefficients (the higher fitted orders only absorb Taylor remainder).

    The perturbed operators never include a tail: this oracle follows the
    analytic branch only. Raises TrackingLost when the best overlap drops
    below ``overlap_floor``.
    """
    etas = np.asarray(sorted(eta_list), dtype=float)
    if len(etas) < 4:
        raise ValueError("need at least 4 sweep values")
    if np.any(etas <= 0):
        raise ValueError("sweep values must be positive")
    if degree >= len(etas) + 1:
        raise ValueError("fit degree too high for the sweep size")

    base = assemble_H(grid, eval_confining_potential(grid, params))
    k = None
    spectral = None
    for kk in (max(8, 2 * (n + 2)), 24, 48):
        spectral = group_degenerate(
            lowest_eigenpairs(base, min(kk, grid.d), method=method),
            gap_tol, limit=min(kk, grid.d) - 1)
        if len(spectral.clusters) > n:
            k = min(kk, grid.d)
            break
    if k is None or len(spectral.clusters) <= n:
        raise ValueError(f"cluster {n} not reachable with {k} eigenpairs")
    cluster = spectral.clusters[n]
    members = np.array(cluster.members)
    m = len(members)
    h = grid.h

    ref = spectral.eigenvectors[:, members]             # (d, m), h-orthonormal
    k_window = int(members.max()) + 1 + k_extra
    values = np.empty((len(etas), m))
    min_overlap = 1.0
    prev = ref
    for row, eta in enumerate(etas):
        shift = fiber_shift_diag(grid, params, 1.0, eta=eta, include_tail=False)
        op = assemble_H(grid, eval_confining_potential(grid, params))
        op.matrix = (op.matrix + sp.diags(shift)).tocsr()
        sub = lowest_eigenpairs(op, min(k_window, grid.d), method=method)
        overlaps = h ** 2 * (sub.eigenvectors.T @ prev)   # (k_window, m)
        weight = np.sum(overlaps ** 2, axis=1)
        picked = np.sort(np.argsort(weight)[-m:])
        quality = float(np.sqrt(np.sum(weight[picked]) / m))
        min_overlap = min(min_overlap, quality)
        if quality < overlap_floor:
            raise TrackingLost(
                f"overlap {quality:.3f} below {overlap_floor} at eta={eta}")
        values[row] = np.sort(sub.eigenvalues[picked])
        prev = sub.eigenvectors[:, picked]

    branch = values.mean(axis=1) if m > 1 else values[:, 0]
    coeffs = np.polynomial.polynomial.polyfit(etas, branch, degree)
    return OracleFit(lambda0=float(coeffs[0]), lambda1=float(coeffs[1]),
                     lambda2=float(coeffs[2]), coefficients=coeffs,
                     etas=etas, values=branch, min_overlap=min_overlap)


# ---------------------------------------------------------------------------
# reduced resolvent
# ---------------------------------------------------------------------------

class ReducedResolvent:
    """Action of the reduced resolvent S of H at an isolated eigenvalue.

    S inverts H - lambda on the orthogonal complement of the cluster
    eigenspace and annihilates the eigenspace itself. Computed eigenpairs
    handle the low modes spectrally; whatever mass lies beyond the computed
    window is treated by a deflated shifted solve (MINRES), which is safe
    because that remainder lives strictly above the computed spectrum.
    """

    def __init__(self, spectral, cluster_index, gap_floor=1e-8,
                 solver_rtol=1e-11, remainder_tol=1e-12):
        cluster = spectral.clusters[cluster_index]
        vals = spectral.eigenvalues
        lam = cluster.value
        others = np.array([i for i in range(spectral.k)
                           if i not in cluster.members])
        if len(others):
            gap = float(np.min(np.abs(vals[others] - lam)))
            if gap < gap_floor:
                raise GapTooSmall(f"gap {gap:.3e} below floor {gap_floor}")
        self.spectral = spectral
        self.cluster = cluster
        self.lam = lam
        self.h2 = spectral.grid.h ** 2
        self.weights = np.zeros(spectral.k)
        self.weights[others] = 1.0 / (vals[others] - lam)
        self.solver_rtol = solver_rtol
        self.remainder_tol = remainder_tol

    def project_cluster(self, block):
        X = self.spectral.eigenvectors[:, self.cluster.members]
        return X @ (self.h2 * (X.T @ block))

    def __call__(self, block):
        """Apply S columnwise to a vector or (d, m) block."""
        vec_in = block.ndim == 1
        B = block[:, None] if vec_in else block
        X = self.spectral.eigenvectors
        coeffs = self.h2 * (X.T @ B)
        out = X @ (self.weights[:, None] * coeffs)
        if not self.spectral.complete:
            resid = B - X @ coeffs
            rnorm = np.linalg.norm(resid, axis=0)
            ref = max(np.linalg.norm(B, axis=0).max(), 1.0)
            if np.any(rnorm > self.remainder_tol * ref):
                A = self.spectral.op.matrix - self.lam * sp.identity(
                    self.spectral.op.dimension, format="csr")
                for j in np.nonzero(rnorm > self.remainder_tol * ref)[0]:
                    w, info = spla.minres(A, resid[:, j], rtol=self.solver_rtol,
                                          maxiter=20000)
                    if info != 0:
                        raise GapTooSmall(
                            f"deflated solve stalled (minres info={info})")
                    w = w - (X @ (self.h2 * (X.T @ w)))
                    out[:, j] += w
        return out[:, 0] if vec_in else out


def reduced_resolvent_apply(spectral, lambda_target, vec, gap_floor=1e-8):
    """Apply the reduced resolvent at the cluster nearest ``lambda_target``."""
    idx = spectral.cluster_of(lambda_target)
    return ReducedResolvent(spectral, idx, gap_floor=gap_floor)(vec)


# ---------------------------------------------------------------------------
# projection series terms
# ---------------------------------------------------------------------------

def _compositions(total, slots):
    """All tuples of ``slots`` nonnegative integers summing to ``total``."""
    if slots == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, slots - 1):
            yield (head,) + rest


def _q_term_matrix(j, S, P_cols, Vdiag):
    """Sum over operator compositions for the j-th projection-series term.

    Each summand contains at least one eigenprojection factor (the exponents
    cannot all be positive), so it assembles as a low-rank outer product and
    no dense-by-dense multiplication is ever needed.
    """
    d, m = P_cols.shape

    def apply_ops(ops, block):
        # ops are (kind, power) pairs applied right-to-left on the block
        for kind, power in reversed(ops):
            if kind == "V":
                block = Vdiag[:, None] * block
            elif kind == "S":
                for _ in range(power):
                    block = S(block)
            else:                                   # projector slot
                block = P_cols @ (P_cols.T @ block)
        return block

    total = np.zeros((d, d))
    for comp in _compositions(j, j + 1):
        zeros = [i for i, nu in enumerate(comp) if nu == 0]
        assert zeros, "every composition must contain a projector slot"
        z0 = zeros[0]
        sign = (-1.0) ** (j + 1) * (-1.0) ** len(zeros)

        left_ops = []
        for i in range(z0):
            if comp[i] > 0:
                left_ops.append(("S", comp[i]))
            else:
                left_ops.append(("P", 0))
            left_ops.append(("V", 0))
        right_ops = []
        for i in range(z0 + 1, j + 1):
            right_ops.append(("V", 0))
            if comp[i] > 0:
                right_ops.append(("S", comp[i]))
            else:
                right_ops.append(("P", 0))

        left = apply_ops(left_ops, P_cols)
        # right factor: transpose of the symmetric op chain applied forward
        rblock = P_cols
        for kind, power in right_ops:
            if kind == "V":
                rblock = Vdiag[:, None] * rblock
            elif kind == "S":
                for _ in range(power):
                    rblock = S(rblock)
            else:
                rblock = P_cols @ (P_cols.T @ rblock)
        total += sign * (left @ rblock.T)
    return total


def series_term_Q(j, spectral, Vdiag, lambda_target, resolvent=None):
    """j-th term of the perturbed-projection series as a dense matrix.

    Q_0 is the unperturbed spectral projection; higher terms alternate the
    reduced resolvent and the perturbation around at least one projection
    factor per summand (convention: zeroth resolvent power = minus the
    projection).
    """
    idx = spectral.cluster_of(lambda_target)
    S = resolvent if resolvent is not None else ReducedResolvent(spectral, idx)
    members = list(spectral.clusters[idx].members)
    P_cols = spectral.grid.h * spectral.eigenvectors[:, members]
    return _q_term_matrix(j, S, P_cols, np.asarray(Vdiag, dtype=float))


def sym_norm(M):
    """Spectral norm of a symmetric dense matrix."""
    d = M.shape[0]
    if d <= 1600:
        return float(np.max(np.abs(sla.eigvalsh(M))))
    try:
        val = spla.eigsh(M, k=1, which="LM", return_eigenvectors=False,
                         maxiter=3000)
        return float(abs(val[0]))
    except (spla.ArpackNoConvergence, spla.ArpackError):
        return float(np.max(np.abs(sla.eigvalsh(M))))


def op_norm(M):
    """Spectral norm of a general dense matrix (largest singular value)."""
    d = M.shape[0]
    if d <= 1600:
        return float(np.linalg.norm(M, 2))
    try:
        val = spla.svds(M, k=1, return_singular_vectors=False, maxiter=5000)
        return float(val[0])
    except Exception:
        return float(np.linalg.norm(M, 2))


def truncated_series_T(N, eta, Qs):
    """T_N = sum of eta^j Q_j for j <= N and its idempotency defect
    ||T_N^2 - T_N|| (spectral norm of the symmetric defect matrix)."""
    if len(Qs) < N + 1:
        raise ValueError(f"need Q_0..Q_{N}, got {len(Qs)} terms")
    T = sum((eta ** j) * Qs[j] for j in range(N + 1))
    T = np.asarray(T)
    defect = sym_norm(T @ T - T)
    return T, float(defect)


@dataclass
class AlmostProjection:
    """Orthogonal projection lifted from an almost projection."""

    matrix: np.ndarray
    rank: int
    defect: float
    distance_to_T: float


def almost_projection_P(T, defect=None):
    """Spectral projection of the symmetric matrix T onto eigenvalues inside
    the unit disk around 1 (finite-dimensional contour integral).

    Requires the idempotency defect below 1/8, otherwise the separating
    circle may touch the spectrum and DefectTooLarge is raised.
    """
    T = 0.5 * (T + T.T)
    if defect is None:
        defect = sym_norm(T @ T - T)
    if not defect < 0.125:
        raise DefectTooLarge(f"defect {defect:.4f} >= 1/8")
    vals, vecs = sla.eigh(T)
    inside = np.abs(vals - 1.0) < 0.5
    rank = int(np.sum(inside))
    U = vecs[:, inside]
    P = U @ U.T
    return AlmostProjection(matrix=P, rank=rank, defect=float(defect),
                            distance_to_T=float(sym_norm(P - T)))


def commutator_defect(fiber_op, P):
    """Spectral norm of [H_fiber, P]; small norm certifies that ran P is an
    almost invariant subspace of the fiber dynamics."""
    P = np.asarray(P.matrix if isinstance(P, AlmostProjection) else P)
    M = np.asarray(fiber_op.matrix @ P)
    return op_norm(M - M.T)      # P and H symmetric, so PH = (HP)^T


# ---------------------------------------------------------------------------
# intertwiner and effective eigenpair
# ---------------------------------------------------------------------------

def sz_nagy_intertwiner(P, Q):
    """Unitary U with Q = U P U^T, mapping ran P onto ran Q:

        U = (1 - (Q - P)^2)^(-1/2) (Q P + (1 - Q)(1 - P))

    Raises ProjectionsTooFar when ||P - Q|| >= 1.
    """
    P = np.asarray(P.matrix if isinstance(P, AlmostProjection) else P)
    Q = np.asarray(Q.matrix if isinstance(Q, AlmostProjection) else Q)
    D = Q - P
    dist = sym_norm(D)
    if not dist < 1.0:
        raise ProjectionsTooFar(f"||P - Q|| = {dist:.6f} >= 1")
    M = np.eye(P.shape[0]) - D @ D
    vals, vecs = sla.eigh(M)
    inv_half = (vecs * (1.0 / np.sqrt(vals))) @ vecs.T
    eye = np.eye(P.shape[0])
    return inv_half @ (Q @ P + (eye - Q) @ (eye - P))


@dataclass
class EffectiveEigenpair:
    """Rank-one trace eigenvalue and intertwined eigenvector, with the
    residual of the compressed eigenproblem."""

    value: float
    vector: np.ndarray
    residual: float


def effective_eigenpair(P_N, fiber_op, chi_ref):
    """lambda_tilde = Tr(P H P) on a rank-one almost-invariant projection;
    the vector is the reference eigenfunction carried over by the
    intertwining unitary from the unperturbed projection to P."""
    P = np.asarray(P_N.matrix if isinstance(P_N, AlmostProjection) else P_N)
    rank = int(round(float(np.trace(P))))
    if rank != 1:
        raise RankMismatch(f"need a rank-1 projection, got rank {rank}")
    A = fiber_op.matrix
    lam = float(np.trace(np.asarray(A @ P)))     # Tr(P H P) = Tr(H P)
    h = fiber_op.grid.h
    P_ref = np.outer(chi_ref, chi_ref) * h ** 2
    U = sz_nagy_intertwiner(P_ref, P)
    chi = U @ chi_ref
    compressed = P @ (A @ (P @ chi))
    residual = h * np.linalg.norm(compressed - lam * chi)
    return EffectiveEigenpair(value=lam, vector=chi, residual=float(residual))


# ---------------------------------------------------------------------------
# bundled construction over one perturbation strength
# ---------------------------------------------------------------------------

@dataclass
class SeriesOperators:
    """Everything the almost-invariant study needs at one strength eta."""

    eta: float
    lambda_target: float
    resolvent: ReducedResolvent
    Qs: list
    T: np.ndarray
    defect: float
    projection: AlmostProjection
    intertwiner: np.ndarray
    effective: EffectiveEigenpair
    commutator: float


def build_series(spectral, grid, params, cluster_index, eta, N, p=1.0,
                 include_tail=None):
    """Assemble Q_0..Q_N, T_N, P_N, the intertwiner, the effective eigenpair
    and the commutator defect of the fiber operator at strength eta."""
    if include_tail is None:
        include_tail = params.has_tail
    cluster = spectral.clusters[cluster_index]
    lam = cluster.value
    S = ReducedResolvent(spectral, cluster_index)
    members = list(cluster.members)
    P_cols = grid.h * spectral.eigenvectors[:, members]

    # full perturbation potential at strength eta: eta * V is the fiber shift
    shift = fiber_shift_diag(grid, params, p, eta=eta, include_tail=include_tail)
    Vdiag = shift / eta if eta != 0 else 2.0 * p * (
        grid.r ** params.alpha * params.theta(grid.theta))

    Qs = [_q_term_matrix(j, S, P_cols, Vdiag) for j in range(N + 1)]
    T, defect = truncated_series_T(N, eta, Qs)
    proj = almost_projection_P(T, defect=defect)

    base = assemble_H(grid, eval_confining_potential(grid, params))
    fiber = type(base)((base.matrix + sp.diags(shift)).tocsr(), grid,
                       "fiber+tail" if include_tail else "fiber",
                       {"eta": eta, "p": p})
    comm = commutator_defect(fiber, proj)

    chi_ref = spectral.eigenvectors[:, members[0]]
    if proj.rank == 1:
        eff = effective_eigenpair(proj, fiber, chi_ref)
        U = sz_nagy_intertwiner(np.outer(chi_ref, chi_ref) * grid.h ** 2,
                                proj.matrix)
    else:
        eff = None
        U = None
    return SeriesOperators(eta=float(eta), lambda_target=float(lam),
                           resolvent=S, Qs=Qs, T=T, defect=float(defect),
                           projection=proj, intertwiner=U, effective=eff,
                           commutator=float(comm))
