"""Acceptance suite: one test per exit criterion, each printing a summary
line with the measured quantities at its stated tolerance.

Criteria 1-8 exercise the numerical core; criterion 9 (figure rendering from
the CSV outputs) lives in the frontend package's own test suite and consumes
only files produced by the CLI, so the core suite runs without it.
"""

import time

import numpy as np
import pytest
import scipy.sparse as sp

from highfield import (
    AmplitudeSpec, DefectTooLarge, Grid2D, ZGrid, almost_projection_P,
    assemble_H, build_series, coupling_matrix, decay_profile,
    eigenvalue_tracking_oracle, error_study, eval_confining_potential,
    eval_effective_potential, fiber_shift_diag, group_degenerate,
    h_bound_check, lowest_eigenpairs, make_model, parse_scenario,
    propagate_fiber, rs_coefficients, build_initial_fibered, run, series_term_Q,
    sym_norm, sz_nagy_intertwiner, weighted_resolvent_norm,
)
from conftest import loglog_slope


def report(num, name, detail, checks):
    status = "PASS" if all(checks.values()) else "FAIL"
    print(f"\nACCEPTANCE {num} ({name}): {status} - {detail}")
    for label, ok in checks.items():
        if not ok:
            print(f"    failed: {label}")
    assert all(checks.values()), f"criterion {num} failed: " + \
        ", ".join(label for label, ok in checks.items() if not ok)


def test_criterion_1_spectrum_oracle():
    t0 = time.perf_counter()
    params = make_model(1.0, 1.0, 0.1)
    grid = Grid2D(8.0, 128)
    op = assemble_H(grid, eval_confining_potential(grid, params))
    spec = group_degenerate(lowest_eigenpairs(op, 7, method="lanczos"),
                            1e-2, limit=6)
    elapsed = time.perf_counter() - t0
    targets = np.array([2.0, 4.0, 4.0, 6.0, 6.0, 6.0])
    rel = np.abs(spec.eigenvalues[:6] - targets) / targets
    mults = [c.multiplicity for c in spec.clusters]
    checks = {
        "eigenvalues within 5e-3 (relative)": bool(np.max(rel) <= 5e-3),
        "multiplicities (1, 2, 3)": mults == [1, 2, 3],
        "runtime < 30 s": elapsed < 30.0,
    }
    report(1, "spectrum oracle",
           f"max relative deviation {np.max(rel):.2e}, multiplicities "
           f"{tuple(mults)}, {elapsed:.1f} s", checks)


def test_criterion_2_coefficient_agreement():
    t0 = time.perf_counter()
    params = make_model(1.0, 1.0, 0.1)
    # continuum moment check needs a fine grid (quadrature error is O(h^2))
    fine = Grid2D(8.0, 256)
    op = assemble_H(fine, eval_confining_potential(fine, params))
    spec = group_degenerate(lowest_eigenpairs(op, 2, method="lanczos"),
                            1e-2, limit=1)
    coup = coupling_matrix(spec, fine, params)
    lambda1 = coup.matrix[0, 0]

    # formula-vs-oracle agreement is a same-grid statement
    grid = Grid2D(8.0, 40)
    op40 = assemble_H(grid, eval_confining_potential(grid, params))
    dense = group_degenerate(lowest_eigenpairs(op40, grid.d, method="dense"),
                             1e-2, limit=12)
    rs = rs_coefficients(coupling_matrix(dense, grid, params), dense, 0,
                         level_cap=np.inf)
    fit = eigenvalue_tracking_oracle(grid, params, 0,
                                     np.linspace(0.02, 0.16, 8), degree=4)
    elapsed = time.perf_counter() - t0
    d1 = abs(lambda1 - np.sqrt(np.pi))
    d2 = abs(rs.lambda2[0] - fit.lambda2)
    checks = {
        "|lambda1 - sqrt(pi)| <= 1e-3": d1 <= 1e-3,
        "|lambda2 formula - oracle fit| <= 1e-4": d2 <= 1e-4,
        "runtime < 2 min": elapsed < 120.0,
    }
    report(2, "coefficient agreement",
           f"|l1 - sqrt(pi)| = {d1:.2e}, |l2 - fit| = {d2:.2e}, "
           f"{elapsed:.1f} s", checks)


def _rate_study(params):
    # zero-centered wide bump (same support radius p0 = 1.5): the momentum
    # window then spans enough dephasing periods that the three-point slope
    # fit tracks the envelope rather than sub-envelope interference
    grid = Grid2D(8.0, 48)
    zgrid = ZGrid(32.0, 256)
    amp = AmplitudeSpec(0.0, 1.5, zgrid)
    return error_study(params, 0, [1.0, 2.0], [0.1, 0.05, 0.025], grid,
                       zgrid=zgrid, amp=amp, level_cap=np.inf)


def test_criterion_3_effective_dynamics_rate():
    t0 = time.perf_counter()
    params = make_model(1.0, 1.0, 0.1)
    table = _rate_study(params)
    elapsed = time.perf_counter() - t0
    slope = table.slopes[1.0]
    errors = {(e, t): err for e, t, err in table.entries}
    growth_ok = all(errors[(eps, 2.0)] <= 2.5 * errors[(eps, 1.0)] + 1e-8
                    for eps in (0.1, 0.05, 0.025))
    checks = {
        "slope in [0.2, 0.8]": 0.2 <= slope <= 0.8,
        "E(eps, 2t) <= 2.5 E(eps, t) + 1e-8": growth_ok,
        "runtime < 10 min": elapsed < 600.0,
    }
    report(3, "drift-dispersion error rate",
           f"slope at t=1: {slope:.3f}, {elapsed:.0f} s", checks)


def test_criterion_4_singular_stability(dense32_tail, grid32, tailed):
    t0 = time.perf_counter()
    from highfield import TailSpec
    params = make_model(1.0, 1.0, 0.1,
                        tail_spec=TailSpec(gamma=4.0, delta=4.0, coeff=1.0))
    table = _rate_study(params)
    slope = table.slopes[1.0]

    etas = [2.0 ** -k for k in range(3, 8)]
    diffs = []
    for eta in etas:
        so = build_series(dense32_tail, grid32, tailed, 0, eta, 2, p=1.0)
        shift = fiber_shift_diag(grid32, tailed, 1.0, eta=eta,
                                 include_tail=False)
        op = assemble_H(grid32, eval_confining_potential(grid32, tailed))
        op.matrix = (op.matrix + sp.diags(shift)).tocsr()
        sub = lowest_eigenpairs(op, 4, method="dense")
        ov = grid32.h ** 2 * np.abs(sub.eigenvectors.T
                                    @ dense32_tail.eigenvectors[:, 0])
        lam_eta = sub.eigenvalues[np.argmax(ov)]
        diffs.append(abs(so.effective.value - lam_eta))
    agreement_slope = loglog_slope(etas, diffs)
    elapsed = time.perf_counter() - t0
    checks = {
        "slope in [0.2, 0.8] with tail": 0.2 <= slope <= 0.8,
        "|lambda_tilde2 - lambda(eta)| slope >= 2.7": agreement_slope >= 2.7,
        "runtime < 15 min": elapsed < 900.0,
    }
    report(4, "stability under singular tail",
           f"error slope {slope:.3f}, eigenvalue agreement slope "
           f"{agreement_slope:.2f}, {elapsed:.0f} s", checks)


def test_criterion_5_almost_invariance_scaling(dense32_tail, grid32, tailed):
    t0 = time.perf_counter()
    etas = [2.0 ** -k for k in range(3, 8)]
    t_slopes = {}
    c_slopes = {}
    p_defects = []
    ranks = []
    for N in (0, 1, 2):
        t_def, comm = [], []
        for eta in etas:
            so = build_series(dense32_tail, grid32, tailed, 0, eta, N, p=1.0)
            t_def.append(so.defect)
            comm.append(so.commutator)
            ranks.append(so.projection.rank)
            p_defects.append(sym_norm(
                so.projection.matrix @ so.projection.matrix
                - so.projection.matrix))
        # T_0 is exactly the unperturbed projection, so its defect vanishes
        # identically and satisfies every power law vacuously
        t_slopes[N] = (np.inf if max(t_def) <= 1e-12
                       else loglog_slope(etas, t_def))
        c_slopes[N] = loglog_slope(etas, comm)
    with pytest.raises(DefectTooLarge):
        q = np.zeros(16)
        q[0] = 1.0
        almost_projection_P(0.6 * np.outer(q, q))
    elapsed = time.perf_counter() - t0
    checks = {
        "T-defect slopes >= N+1-0.3":
            all(t_slopes[N] >= N + 1 - 0.3 for N in (0, 1, 2)),
        "commutator slopes >= N+1-0.3":
            all(c_slopes[N] >= N + 1 - 0.3 for N in (0, 1, 2)),
        "||P^2 - P|| <= 1e-10": max(p_defects) <= 1e-10,
        "rank stable over the sweep": len(set(ranks)) == 1,
        "DefectTooLarge raised at defect >= 1/8": True,
        "runtime < 5 min": elapsed < 300.0,
    }
    ts = {N: ("exact-0" if np.isinf(t_slopes[N]) else f"{t_slopes[N]:.2f}")
          for N in t_slopes}
    report(5, "almost-invariance scaling",
           f"T slopes {ts}, commutator slopes "
           f"{ {N: round(s, 2) for N, s in c_slopes.items()} }, "
           f"max ||P^2-P|| = {max(p_defects):.1e}, {elapsed:.0f} s", checks)


def test_criterion_6_intertwiner():
    from scipy.linalg import expm
    rng = np.random.default_rng(12)
    worst_unitary = worst_intertwine = worst_ratio = 0.0
    for trial in range(50):
        d = 24
        rank = 1 + trial % 5
        Q0, _ = np.linalg.qr(rng.standard_normal((d, rank)))
        P = Q0 @ Q0.T
        skew = rng.standard_normal((d, d)) * (0.01 + 0.004 * (trial % 7))
        skew -= skew.T
        R = expm(skew)
        Q = R @ P @ R.T
        U = sz_nagy_intertwiner(P, Q)
        eye = np.eye(d)
        worst_unitary = max(worst_unitary, np.max(np.abs(U.T @ U - eye)))
        worst_intertwine = max(worst_intertwine,
                               np.max(np.abs(U @ P @ U.T - Q)))
        dist = np.linalg.norm(Q - P, 2)
        if dist > 0:
            worst_ratio = max(worst_ratio,
                              np.linalg.norm(eye - U, 2) / dist)
    checks = {
        "||U^T U - I|| <= 1e-10": worst_unitary <= 1e-10,
        "intertwining residual <= 1e-10": worst_intertwine <= 1e-10,
        "||1 - U|| <= 10 ||P - Q||": worst_ratio <= 10.0,
    }
    report(6, "intertwining unitary",
           f"worst unitarity {worst_unitary:.1e}, worst residual "
           f"{worst_intertwine:.1e}, worst ratio {worst_ratio:.2f}", checks)


def test_criterion_7_decay_surrogates(spec128, grid128):
    norm = weighted_resolvent_norm(spec128.op, -1.0, 0.0)
    product = 3.0 * norm
    rep = decay_profile(spec128.eigenvectors[:, 0], grid128,
                        [0.0, 0.25, 0.5])
    checks = {
        "resolvent norm x 3 = 1 within 2e-3": abs(product - 1.0) <= 2e-3,
        "boundary mass < 1e-10": rep.boundary_mass_fraction < 1e-10,
        "Gaussian log-slope within 10% of -1/2":
            abs(rep.gaussian_rate + 0.5) <= 0.05,
    }
    report(7, "resolvent and eigenfunction decay",
           f"3/dist product {product:.5f}, boundary mass "
           f"{rep.boundary_mass_fraction:.1e}, gaussian rate "
           f"{rep.gaussian_rate:.4f}", checks)


def test_criterion_8_invariant_suite(dense32_tail, grid32, tailed, dense32,
                                     harmonic, zgrid, bump, tmp_path):
    # relative bound of the fiber potential on 200 sampled vectors
    params = make_model(1.0, 1.0, 0.25)
    grid48 = Grid2D(8.0, 48)
    H48 = assemble_H(grid48, eval_confining_potential(grid48, params))
    V48 = eval_effective_potential(grid48, params, 2.0)
    bound = h_bound_check(H48, V48, 200, params, 2.0, seed=23)

    # dense-path fiber unitarity and time reversal
    chi = dense32.eigenvectors[:, 0]
    state = build_initial_fibered(bump, chi, zgrid, grid32)
    out = propagate_fiber(harmonic, state, 1.0)
    unitarity = float(np.max(np.abs(out.fiber_norms() - state.fiber_norms())))
    back = propagate_fiber(harmonic, out, -1.0)
    reversal = float(np.max(np.abs(back.values - state.values)))

    # series recursions at a representative strength
    lam = dense32_tail.clusters[0].value
    eta = 2.0 ** -4
    Vdiag = fiber_shift_diag(grid32, tailed, 1.0, eta=eta) / eta
    Qs = [series_term_Q(j, dense32_tail, Vdiag, lam) for j in range(4)]
    q_rec = max(np.max(np.abs(Qs[j] - sum(Qs[l] @ Qs[j - l]
                                          for l in range(j + 1))))
                for j in range(4))
    A = dense32_tail.op.matrix.toarray()
    Vm = np.diag(Vdiag)
    smooth = dense32_tail.eigenvectors[:, :8]
    c_rec = max(np.max(np.linalg.norm(
        ((A @ Qs[j + 1] - Qs[j + 1] @ A) + (Vm @ Qs[j] - Qs[j] @ Vm))
        @ smooth, axis=0)) for j in range(3))

    # byte-identical reruns of a full CLI study
    cfg = """
[model]
alpha = 1.0
epsilon = 0.1

[grid]
L = 6.0
n = 24

[zgrid]
Z = 32.0
n_z = 128

[study]
k = 4
eps = 0.2 0.1
t = 0.25 0.5
"""
    blobs = []
    for name in ("a", "b"):
        out_dir = tmp_path / name
        plan = parse_scenario(cfg, "converge", out_dir=str(out_dir), seed=9)
        assert run(plan) == 0
        blobs.append((out_dir / "convergence.csv").read_bytes())
    checks = {
        "relative bound holds on 200 samples": bound.violations == 0,
        "fiber unitarity <= 1e-12 (dense)": unitarity <= 1e-12,
        "Q-recursion residual <= 1e-8": q_rec <= 1e-8,
        "commutator-recursion residual <= 1e-6": c_rec <= 1e-6,
        "time reversal <= 1e-8": reversal <= 1e-8,
        "byte-identical reruns": blobs[0] == blobs[1],
    }
    report(8, "invariant suite",
           f"bound margin {bound.worst_margin:.3f}, unitarity "
           f"{unitarity:.1e}, Q-rec {q_rec:.1e}, comm-rec {c_rec:.1e}, "
           f"reversal {reversal:.1e}", checks)


def test_criterion_9_note():
    print("\nACCEPTANCE 9 (figure rendering): covered by the frontend "
          "package test suite (vitest), which consumes the CSV contracts "
          "produced here; all core criteria run without it.")
