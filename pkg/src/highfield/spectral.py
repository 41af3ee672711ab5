"""Low-lying eigenpairs, degeneracy clustering, decay diagnostics.

Eigenvectors are normalized in the grid L2 inner product <u, v> = h^2 sum(uv)
so that discrete sums approximate plane integrals. The dense path (full
diagonalization) doubles as the oracle for the Lanczos path and provides the
complete basis needed by the perturbation-series machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AmbiguousCluster, GapTooSmall, NoConvergence, SingularShift

#: largest dimension handled by dense diagonalization by default
DENSE_LIMIT = 4096


@dataclass(frozen=True)
class Cluster:
    """A group of numerically degenerate eigenvalues."""

    value: float
    members: tuple

    @property
    def multiplicity(self):
        return len(self.members)


@dataclass(frozen=True)
class GapInfo:
    """Isolation data for one cluster: distance to the rest of the computed
    spectrum and the radius of the separating contour."""

    value: float
    gap: float

    @property
    def contour_radius(self):
        return 0.5 * self.gap


@dataclass
class SpectralData:
    """Eigenvalues (ascending), h^2-orthonormal eigenvectors, residuals."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray     # (d, k), columns
    residuals: np.ndarray
    grid: object
    op: object = None
    clusters: tuple = None

    @property
    def k(self):
        return len(self.eigenvalues)

    @property
    def complete(self):
        """True when the full basis of the discrete space was computed."""
        return self.k == self.eigenvectors.shape[0]

    def project_coeffs(self, vec):
        """Expansion coefficients <chi_i, vec> in the weighted inner product."""
        return self.grid.h ** 2 * (self.eigenvectors.T @ vec)

    def cluster_of(self, value, tol=None):
        """Index of the cluster whose value is nearest to ``value``."""
        if self.clusters is None:
            raise ValueError("call group_degenerate first")
        dist = [abs(c.value - value) for c in self.clusters]
        idx = int(np.argmin(dist))
        if tol is not None and dist[idx] > tol:
            raise ValueError(f"no cluster within {tol} of {value}")
        return idx


def _fix_signs(vectors):
    """Deterministic sign: the largest-magnitude entry of each column > 0."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def lowest_eigenpairs(op, k, tol_eig=1e-8, method=None):
    """k lowest eigenpairs of a SymOp.

    method: "dense" (full or subset dense diagonalization, the oracle path)
    or "lanczos" (shift-invert); default picks dense for d <= DENSE_LIMIT.
    Raises NoConvergence when residuals miss ``tol_eig``.
    """
    d = op.dimension
    if not 1 <= k <= d:
        raise ValueError(f"k={k} out of range for dimension {d}")
    if method is None:
        method = "dense" if d <= DENSE_LIMIT else "lanczos"

    if method == "dense":
        A = op.dense()
        if k == d:
            vals, vecs = sla.eigh(A)
        else:
            vals, vecs = sla.eigh(A, subset_by_index=(0, k - 1))
    elif method == "lanczos":
        try:
            vals, vecs = spla.eigsh(op.matrix, k=k, sigma=0.0, which="LM")
        except spla.ArpackNoConvergence as exc:
            raise NoConvergence(f"shift-invert Lanczos stalled: {exc}") from exc
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
    else:
        raise ValueError(f"unknown method {method!r}")

    residuals = np.linalg.norm(op.matrix @ vecs - vecs * vals, axis=0)
    if np.any(residuals > tol_eig):
        raise NoConvergence(
            f"worst residual {residuals.max():.3e} exceeds tol_eig={tol_eig}")
    vecs = _fix_signs(vecs) / op.grid.h      # h^2-normalize
    return SpectralData(eigenvalues=vals, eigenvectors=vecs,
                        residuals=residuals, grid=op.grid, op=op)


def group_degenerate(spectral, gap_tol, limit=None):
    """Cluster consecutive eigenvalues closer than ``gap_tol``.

    Gaps strictly inside (gap_tol, 2*gap_tol) are undecidable and raise
    AmbiguousCluster instead of being merged or split silently. ``limit``
    clusters only the first that many eigenvalues (the top of a computed
    window may truncate a cluster, so callers typically compute one extra).
    """
    vals = spectral.eigenvalues
    m = len(vals) if limit is None else min(limit, len(vals))
    clusters = []
    start = 0
    for i in range(1, m + 1):
        if i == m:
            split = True
        else:
            gap = vals[i] - vals[i - 1]
            if gap_tol < gap < 2.0 * gap_tol:
                raise AmbiguousCluster(
                    f"gap {gap:.3e} between eigenvalues {i - 1} and {i} lies "
                    f"inside ({gap_tol:.3e}, {2 * gap_tol:.3e})")
            split = gap >= gap_tol
        if split:
            members = tuple(range(start, i))
            clusters.append(Cluster(value=float(np.mean(vals[start:i])),
                                    members=members))
            start = i
    return replace(spectral, clusters=tuple(clusters))


def gap_info(spectral, cluster_index):
    """Distance from a cluster to the rest of the computed spectrum."""
    cluster = spectral.clusters[cluster_index]
    others = np.array([v for i, v in enumerate(spectral.eigenvalues)
                       if i not in cluster.members])
    if len(others) == 0:
        raise GapTooSmall("no other eigenvalues computed, gap unknown")
    gap = float(np.min(np.abs(others - cluster.value)))
    if gap <= 0.0:
        raise GapTooSmall(f"cluster {cluster_index} is not isolated")
    return GapInfo(value=cluster.value, gap=gap)


@dataclass
class DecayReport:
    """Exponentially weighted norms and radial decay fit of an eigenvector."""

    omegas: np.ndarray
    weighted_norms: np.ndarray
    annulus_r: np.ndarray
    annulus_logmean: np.ndarray
    decay_rate: float            # slope of log|chi| vs r
    gaussian_rate: float         # slope of log|chi| vs r^2
    boundary_mass_fraction: float


def decay_profile(chi, grid, omega_list, fit_window=(0.2, 0.8), n_annuli=12,
                  shell_fraction=0.1):
    """Weighted norms ||exp(omega <x>) chi|| with <x> = sqrt(1 + |x|^2),
    annular least-squares decay fits, and the mass in the outer box shell.
    """
    omegas = np.asarray(omega_list, dtype=float)
    h = grid.h
    bracket = np.sqrt(1.0 + grid.r ** 2)
    weighted = np.array([h * np.linalg.norm(np.exp(w * bracket) * chi)
                         for w in omegas])

    lo, hi = fit_window[0] * grid.L, fit_window[1] * grid.L
    edges = np.linspace(lo, hi, n_annuli + 1)
    mids, logmeans = [], []
    abschi = np.abs(chi)
    for a, b in zip(edges[:-1], edges[1:]):
        mask = (grid.r >= a) & (grid.r < b)
        if not np.any(mask):
            continue
        mids.append(0.5 * (a + b))
        logmeans.append(np.log(max(abschi[mask].mean(), 1e-300)))
    mids = np.array(mids)
    logmeans = np.array(logmeans)
    decay_rate = float(np.polyfit(mids, logmeans, 1)[0])
    gaussian_rate = float(np.polyfit(mids ** 2, logmeans, 1)[0])

    shell = np.maximum(np.abs(grid.x1), np.abs(grid.x2)) >= (1.0 - shell_fraction) * grid.L
    boundary_mass = float(h ** 2 * np.sum(chi[shell] ** 2))
    return DecayReport(omegas=omegas, weighted_norms=weighted,
                       annulus_r=mids, annulus_logmean=logmeans,
                       decay_rate=decay_rate, gaussian_rate=gaussian_rate,
                       boundary_mass_fraction=boundary_mass)


def weighted_resolvent_norm(op, z, omega, rtol=1e-3, max_iter=400, seed=0,
                            spectrum_hint=None):
    """Estimate ||exp(omega <x>) (H - z)^{-1} exp(-omega <x>)|| by power
    iteration on the conjugated solve; each application is one sparse solve
    plus diagonal scaling. Relative accuracy ~rtol.
    """
    if spectrum_hint is not None:
        dist = np.min(np.abs(np.asarray(spectrum_hint) - z))
        if dist < 1e-10 * max(1.0, abs(z)):
            raise SingularShift(f"z={z} within {dist:.3e} of computed spectrum")
    bracket = np.sqrt(1.0 + op.grid.r ** 2)
    scale = np.exp(omega * bracket)
    complex_shift = np.iscomplexobj(np.asarray(z)) and np.imag(z) != 0
    shifted = op.matrix.astype(complex) if complex_shift else op.matrix
    A = (shifted - z * sp.identity(op.dimension, dtype=shifted.dtype)).tocsc()
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise SingularShift(f"factorization failed at z={z}: {exc}") from exc

    def apply_B(v):
        return scale * lu.solve(v / scale)

    def apply_Bh(v):
        # B^H = D^{-1} (H - conj(z))^{-1} D; H real symmetric
        if complex_shift:
            return np.conj(scale * lu.solve(np.conj(v) / scale))
        return (1.0 / scale) * lu.solve(scale * v)

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.dimension).astype(complex if complex_shift else float)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = apply_B(v)
        u = apply_Bh(w)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        new_sigma = np.sqrt(np.real(np.vdot(v, u)))
        v = u / nu
        if sigma > 0 and abs(new_sigma - sigma) <= 0.05 * rtol * new_sigma:
            return float(new_sigma)
        sigma = new_sigma
    raise NoConvergence(f"power iteration did not settle within {max_iter} steps")
