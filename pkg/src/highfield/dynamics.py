"""Exact fibered propagation and the drift-dispersion effective solution.

States live fiberwise: a complex array psi_hat(x, p) over the 2D grid and
the dual momentum grid of a periodic z-interval. Propagation solves each
fiber's Schrodinger equation i eps^(2 beta) d_t psi = H(p) psi exactly
through an eigendecomposition (reference path, dimension <= dense limit) or
with an adaptive Lanczos exponential. Error norms against the effective
solution are taken directly in fiber space, which sidesteps the wraparound
of the large drift in a periodic box.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import (DimensionMismatch, ExpansionIncomplete, NoConvergence,
                     SupportExceedsGrid)
from .model import eval_confining_potential
from .operators import assemble_H, fiber_shift_diag
from .perturbation import coupling_matrix, rs_coefficients
from .spectral import group_degenerate, lowest_eigenpairs

DENSE_LIMIT = 4096


@dataclass(frozen=True)
class ZGrid:
    """Periodic z-interval [-Z, Z) with its dual momentum grid."""

    Z: float
    n_z: int

    def __post_init__(self):
        if self.n_z & (self.n_z - 1):
            raise ValueError("n_z must be a power of two")

    @property
    def dz(self):
        return 2.0 * self.Z / self.n_z

    @property
    def dp(self):
        return np.pi / self.Z

    @property
    def z(self):
        return -self.Z + self.dz * np.arange(self.n_z)

    @property
    def p(self):
        return self.dp * (np.arange(self.n_z) - self.n_z // 2)


@dataclass
class AmplitudeSpec:
    """Smooth compactly supported momentum bump, unit L2 norm.

    a_hat(p) is proportional to exp(-1/(1 - s^2)) for s = (p - center)/width
    inside |s| < 1 and exactly zero outside, so the support hypothesis of the
    effective description holds on the nose.
    """

    center: float
    width: float
    zgrid: ZGrid
    values: np.ndarray = field(init=False)

    def __post_init__(self):
        p = self.zgrid.p
        if self.center - self.width < p.min() or self.center + self.width > p.max():
            raise SupportExceedsGrid(
                f"support [{self.center - self.width}, {self.center + self.width}] "
                f"not inside [{p.min():.3f}, {p.max():.3f}]")
        s = (p - self.center) / self.width
        vals = np.zeros_like(p)
        inside = np.abs(s) < 1.0
        vals[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
        norm = np.sqrt(self.zgrid.dp * np.sum(vals ** 2))
        self.values = vals / norm

    @property
    def p0(self):
        """Momentum support radius."""
        return abs(self.center) + self.width

    @property
    def support(self):
        return np.nonzero(self.values != 0.0)[0]


@dataclass
class FiberState:
    """Complex field psi_hat(x_node, p_m) with a time stamp."""

    values: np.ndarray
    t: float
    grid: object
    zgrid: ZGrid

    def fiber_norms(self):
        return self.grid.h * np.linalg.norm(self.values, axis=0)

    def total_norm(self):
        return float(np.sqrt(self.zgrid.dp * np.sum(self.fiber_norms() ** 2)))

    def active_fibers(self):
        return np.nonzero(np.linalg.norm(self.values, axis=0) > 0.0)[0]


@dataclass(frozen=True)
class EffectiveParams:
    """Cluster eigenvalue and its first two perturbation coefficients."""

    lam: float
    lam1: float
    lam2: float

    @property
    def effective_mass(self):
        return 1.0 / self.lam2

    def drift_velocity(self, eps, beta):
        return eps ** (-beta) * self.lam1


def build_initial_fibered(amp, chi, zgrid, grid):
    """psi_hat_0(x, p) = a_hat(p) chi(x); unit total norm when chi is."""
    if chi.shape != (grid.d,):
        raise DimensionMismatch("eigenvector does not live on this grid")
    values = np.asarray(chi, dtype=complex)[:, None] * amp.values[None, :]
    return FiberState(values=values, t=0.0, grid=grid, zgrid=zgrid)


def _lanczos_expm(matvec, v, tau, tol=1e-9, m_max=40, max_substeps=4096):
    """w ~ exp(-i tau A) v for symmetric A via adaptive-substep Lanczos."""
    norm0 = np.linalg.norm(v)
    if norm0 == 0.0 or tau == 0.0:
        return v.copy()
    done = 0.0
    w = v.astype(complex)
    dt = tau
    substeps = 0
    while abs(done) < abs(tau):
        if abs(done + dt) > abs(tau):
            dt = tau - done
        beta = np.linalg.norm(w)
        V = np.empty((len(w), m_max + 1), dtype=complex)
        alphas = np.zeros(m_max)
        betas = np.zeros(m_max + 1)
        V[:, 0] = w / beta
        ok = False
        m_used = m_max
        for m in range(m_max):
            u = matvec(V[:, m])
            if m > 0:
                u = u - betas[m] * V[:, m - 1]
            alphas[m] = np.real(np.vdot(V[:, m], u))
            u = u - alphas[m] * V[:, m]
            # full reorthogonalization keeps the small tridiagonal faithful
            u = u - V[:, :m + 1] @ (V[:, :m + 1].conj().T @ u)
            betas[m + 1] = np.linalg.norm(u)
            if betas[m + 1] < 1e-14 * max(1.0, abs(alphas[m])):
                m_used = m + 1
                ok = True
                break
            V[:, m + 1] = u / betas[m + 1]
        Tm = np.diag(alphas[:m_used]) + np.diag(betas[1:m_used], 1) + \
            np.diag(betas[1:m_used], -1)
        evals, evecs = np.linalg.eigh(Tm)
        small = evecs @ (np.exp(-1j * dt * evals) * evecs[0, :].conj())
        if not ok:
            err = abs(betas[m_used] * small[-1] * dt)
            if err > tol * norm0:
                dt *= 0.5
                substeps += 1
                if substeps > max_substeps:
                    raise NoConvergence("Lanczos step control exhausted")
                continue
        w = beta * (V[:, :m_used] @ small)
        done += dt
        substeps += 1
        if substeps > max_substeps:
            raise NoConvergence("Lanczos propagation exceeded substep budget")
    return w


class FiberPropagator:
    """Exact-in-time propagator for the active fibers of one model.

    The dense path eigendecomposes each fiber Hamiltonian once and then
    evaluates arbitrary times for free; the Krylov path runs an adaptive
    Lanczos exponential per requested time.
    """

    def __init__(self, params, grid, zgrid, p_indices, include_tail=None,
                 method=None, tol=1e-9, threads=1):
        self.params = params
        self.grid = grid
        self.zgrid = zgrid
        self.p_indices = np.asarray(p_indices, dtype=int)
        self.include_tail = params.has_tail if include_tail is None else include_tail
        self.method = method or ("dense" if grid.d <= DENSE_LIMIT else "krylov")
        self.tol = tol
        self.threads = threads
        self.base = assemble_H(grid, eval_confining_potential(grid, params))
        self._factored = {}
        if self.method == "dense":
            base_dense = self.base.dense()

            def factor(m):
                p = zgrid.p[m]
                shift = fiber_shift_diag(grid, params, p,
                                         include_tail=self.include_tail)
                A = base_dense + np.diag(shift)
                return m, sla.eigh(A)

            if threads > 1:
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    for m, pair in pool.map(factor, self.p_indices):
                        self._factored[m] = pair
            else:
                for m in self.p_indices:
                    self._factored[m] = factor(m)[1]
        else:
            for m in self.p_indices:
                p = zgrid.p[m]
                shift = fiber_shift_diag(grid, params, p,
                                         include_tail=self.include_tail)
                self._factored[m] = (self.base.matrix +
                                     sp.diags(shift)).tocsr()

    def evolve(self, state, t):
        """Evolve by duration t (scaled time factor eps^(-2 beta) applied)."""
        scale = t * self.params.epsilon ** (-2.0 * self.params.beta)
        values = state.values.copy()
        for m in state.active_fibers():
            if m not in self._factored:
                raise DimensionMismatch(
                    f"fiber {m} active but not prepared; prepare all fibers "
                    "in the amplitude support")
            v = state.values[:, m]
            if self.method == "dense":
                evals, evecs = self._factored[m]
                values[:, m] = evecs @ (np.exp(-1j * scale * evals) *
                                        (evecs.T @ v))
            else:
                A = self._factored[m]
                values[:, m] = _lanczos_expm(lambda x: A @ x, v, scale,
                                             tol=self.tol)
        return FiberState(values=values, t=state.t + t, grid=state.grid,
                          zgrid=state.zgrid)


def propagate_fiber(params, state, t, include_tail=None, method=None,
                    tol=1e-9, threads=1):
    """One-shot fibered propagation by duration t."""
    prop = FiberPropagator(params, state.grid, state.zgrid,
                           state.active_fibers(), include_tail=include_tail,
                           method=method, tol=tol, threads=threads)
    return prop.evolve(state, t)


def effective_solution_fibered(t, eff, amp, chi, zgrid, eps, *, beta, grid):
    """Drift-dispersion approximation in fiber space: pure phases

        exp(-i t eps^(-2 beta) lam) exp(-i t eps^(-beta) p lam1)
        exp(-i t p^2 lam2)

    applied to the initial tensor state a_hat(p) chi(x)."""
    p = zgrid.p
    phase = np.exp(-1j * t * (eps ** (-2.0 * beta) * eff.lam
                              + eps ** (-beta) * p * eff.lam1
                              + p ** 2 * eff.lam2))
    values = np.asarray(chi, dtype=complex)[:, None] * \
        (amp.values * phase)[None, :]
    return FiberState(values=values, t=t, grid=grid, zgrid=zgrid)


def synthesize(state, zgrid):
    """Inverse discrete Fourier transform p -> z per grid node, normalized so
    the z-space norm equals the fibered norm (discrete Plancherel)."""
    M = zgrid.n_z
    k = np.arange(M) - M // 2
    twiddle = np.exp(-1j * np.pi * k)
    shifted = np.fft.ifftshift(state.values * twiddle[None, :], axes=1)
    out = (zgrid.dp / np.sqrt(2.0 * np.pi)) * M * np.fft.ifft(shifted, axis=1)
    return out


# ---------------------------------------------------------------------------
# convergence studies
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceTable:
    """Errors E(eps, t) between exact fibered and effective solutions, with
    log-log slopes in eps at each time and growth ratios in t at each eps."""

    entries: list                 # (eps, t, error) rows
    slopes: dict                  # t -> fitted slope of log E vs log eps
    growth: dict                  # eps -> list of (t_i, t_j, ratio)
    eff: EffectiveParams
    cluster_index: int

    def rows(self):
        out = []
        for eps, t, err in self.entries:
            out.append((eps, t, err, self.slopes[t]))
        return out


def _fit_slope(xs, ys):
    if len(xs) < 2:
        return float("nan")
    xs = np.log(np.asarray(xs))
    ys = np.log(np.maximum(np.asarray(ys), 1e-300))
    return float(np.polyfit(xs, ys, 1)[0])


def error_study(params, cluster_index, t_list, eps_list, grid, zgrid=None,
                amp=None, member=0, level_cap=np.inf, gap_tol=1e-2,
                method=None, threads=1, spectral=None, k_eig=None):
    """Propagate exactly and compare with the drift-dispersion solution.

    Errors are fibered L2 norms of the difference, computed per (eps, t).
    The spectral data, coupling and coefficients are produced on the same
    grid so that both routes discretize identically.
    """
    if zgrid is None:
        zgrid = ZGrid(32.0, 256)
    if amp is None:
        amp = AmplitudeSpec(1.0, 0.5, zgrid)
    if spectral is None:
        base = assemble_H(grid, eval_confining_potential(grid, params))
        k = k_eig or (grid.d if grid.d <= DENSE_LIMIT else 48)
        spectral = lowest_eigenpairs(base, k)
    if spectral.clusters is None:
        # only the spectrum up to the target cluster needs resolved
        # degeneracies; the second-order sums treat higher levels one by one
        limit = min(spectral.k, 4 * (cluster_index + 1))
        spectral = group_degenerate(spectral, gap_tol, limit=limit)
    coup = coupling_matrix(spectral, grid, params)
    rs = rs_coefficients(coup, spectral, cluster_index, level_cap=level_cap)
    cluster = spectral.clusters[cluster_index]
    rotated = spectral.eigenvectors[:, list(cluster.members)] @ rs.basis
    chi = rotated[:, member]
    eff = EffectiveParams(lam=rs.lambda0, lam1=float(rs.lambda1[member]),
                          lam2=float(rs.lambda2[member]))

    t_list = list(t_list)
    entries = []
    errors = {}
    for eps in eps_list:
        model_eps = type(params)(alpha=params.alpha, epsilon=float(eps),
                                 theta=params.theta, tail=params.tail,
                                 p0=params.p0)
        state0 = build_initial_fibered(amp, chi, zgrid, grid)
        prop = FiberPropagator(model_eps, grid, zgrid, amp.support,
                               method=method, threads=threads)
        for t in t_list:
            exact = prop.evolve(state0, t)
            approx = effective_solution_fibered(
                t, eff, amp, chi, zgrid, eps, beta=params.beta, grid=grid)
            diff = exact.values - approx.values
            err = float(np.sqrt(zgrid.dp * np.sum(
                (grid.h * np.linalg.norm(diff, axis=0)) ** 2)))
            entries.append((float(eps), float(t), err))
            errors[(float(eps), float(t))] = err

    slopes = {}
    for t in t_list:
        es = [e for e in eps_list]
        slopes[float(t)] = _fit_slope(es, [errors[(float(e), float(t))]
                                           for e in es])
    growth = {}
    for eps in eps_list:
        ratios = []
        for t_a, t_b in zip(t_list[:-1], t_list[1:]):
            e_a = errors[(float(eps), float(t_a))]
            e_b = errors[(float(eps), float(t_b))]
            ratios.append((float(t_a), float(t_b),
                           e_b / e_a if e_a > 0 else np.inf))
        growth[float(eps)] = ratios
    return ConvergenceTable(entries=entries, slopes=slopes, growth=growth,
                            eff=eff, cluster_index=cluster_index)


# ---------------------------------------------------------------------------
# general initial data
# ---------------------------------------------------------------------------

@dataclass
class ExpansionEntry:
    """One term a_hat(p) chi_k^n(x) of an eigenfunction expansion."""

    cluster_index: int
    member: int
    amplitude: np.ndarray         # sampled on zgrid.p


@dataclass
class GeneralEvolveReport:
    """Bookkeeping of the truncation and compact-support approximations."""

    kept: list                    # (cluster_index, member) pairs
    tail_mass: float              # 1 - sum of kept squared amplitude norms
    compact_residuals: list       # ||a_hat - b_hat|| per kept entry
    error_budget: float           # sqrt(tail mass) + sum of residuals
    per_entry_norms: list


def _compact_window(values, dp, target):
    """Smallest centered window around the amplitude peak whose complement
    carries at most ``target`` L2 norm; returns the masked amplitude."""
    norms2 = dp * np.abs(values) ** 2
    center = int(np.argmax(np.abs(values)))
    lo = hi = center
    total = np.sum(norms2)
    while np.sqrt(max(total - np.sum(norms2[lo:hi + 1]), 0.0)) > target:
        if lo > 0:
            lo -= 1
        if hi < len(values) - 1:
            hi += 1
        if lo == 0 and hi == len(values) - 1:
            break
    masked = np.zeros_like(values)
    masked[lo:hi + 1] = values[lo:hi + 1]
    return masked


def evolve_general(psi0_expansion, delta, params, t, grid, zgrid,
                   spectral=None, level_cap=np.inf, gap_tol=1e-2):
    """Propagate general initial data by the superposition of per-cluster
    drift-dispersion solutions.

    Keeps clusters until the dropped mass is at most delta (requires the
    expansion itself to carry at least 1 - delta of the unit mass, otherwise
    ExpansionIncomplete); replaces each amplitude by a compactly windowed
    version with per-entry L2 residual at most delta / #entries; returns the
    approximate fiber state at time t and the triangle-inequality budget.
    """
    if spectral is None:
        base = assemble_H(grid, eval_confining_potential(grid, params))
        k = grid.d if grid.d <= DENSE_LIMIT else 48
        spectral = lowest_eigenpairs(base, k)
    if spectral.clusters is None:
        top = max(e.cluster_index for e in psi0_expansion)
        limit = min(spectral.k, 4 * (top + 1))
        spectral = group_degenerate(spectral, gap_tol, limit=limit)

    entries = list(psi0_expansion)
    masses = [zgrid.dp * float(np.sum(np.abs(e.amplitude) ** 2))
              for e in entries]
    total_mass = sum(masses)
    implicit_tail = max(0.0, 1.0 - total_mass)
    if implicit_tail > delta:
        raise ExpansionIncomplete(
            f"expansion carries {total_mass:.6f} of unit mass; tail "
            f"{implicit_tail:.3e} exceeds delta={delta}")

    # keep clusters in energy order until the dropped mass fits the budget
    order = np.argsort([spectral.clusters[e.cluster_index].value
                        for e in entries])
    kept_idx = []
    kept_mass = 0.0
    for pos in order:
        kept_idx.append(int(pos))
        kept_mass += masses[pos]
        if implicit_tail + (total_mass - kept_mass) <= delta:
            break
    tail_mass = 1.0 - sum(masses[i] for i in kept_idx)

    delta1 = delta / max(1, len(kept_idx))
    values = np.zeros((grid.d, zgrid.n_z), dtype=complex)
    compact_residuals = []
    kept = []
    coup = coupling_matrix(spectral, grid, params)
    for i in kept_idx:
        entry = entries[i]
        rs = rs_coefficients(coup, spectral, entry.cluster_index,
                             level_cap=level_cap)
        cluster = spectral.clusters[entry.cluster_index]
        rotated = spectral.eigenvectors[:, list(cluster.members)] @ rs.basis
        chi = rotated[:, entry.member]
        eff = EffectiveParams(lam=rs.lambda0,
                              lam1=float(rs.lambda1[entry.member]),
                              lam2=float(rs.lambda2[entry.member]))
        b_hat = _compact_window(np.asarray(entry.amplitude), zgrid.dp, delta1)
        resid = float(np.sqrt(zgrid.dp * np.sum(
            np.abs(entry.amplitude - b_hat) ** 2)))
        compact_residuals.append(resid)
        kept.append((entry.cluster_index, entry.member))
        p = zgrid.p
        eps = params.epsilon
        beta = params.beta
        phase = np.exp(-1j * t * (eps ** (-2.0 * beta) * eff.lam
                                  + eps ** (-beta) * p * eff.lam1
                                  + p ** 2 * eff.lam2))
        values += np.asarray(chi, dtype=complex)[:, None] * \
            (b_hat * phase)[None, :]

    report = GeneralEvolveReport(
        kept=kept, tail_mass=float(tail_mass),
        compact_residuals=compact_residuals,
        error_budget=float(np.sqrt(max(tail_mass, 0.0)) +
                           sum(compact_residuals)),
        per_entry_norms=[float(np.sqrt(m)) for m in masses])
    state = FiberState(values=values, t=float(t), grid=grid, zgrid=zgrid)
    return state, report
