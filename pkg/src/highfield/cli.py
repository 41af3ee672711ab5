"""Batch orchestration: scenario configs, run dispatch, bit-exact outputs.

Configs are line-oriented ``[section]`` / ``key = value`` text with a fixed
schema; unknown keys are hard errors. Tables are CSV with 17-significant-
digit decimals and LF endings; fields are a one-line JSON header followed by
raw little-endian float64 payload. Identical (config, seed) pairs reproduce
outputs byte for byte: summation orders are fixed and no timestamps are
written.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (AssumptionViolated, HighFieldError, ParseError,
                     SupportExceedsGrid)
from .model import (AzimuthalProfile, Grid2D, TailSpec,
                    eval_confining_potential, make_model)
from .operators import assemble_H
from .dynamics import (AmplitudeSpec, EffectiveParams, ZGrid,
                       ExpansionEntry, FiberPropagator,
                       build_initial_fibered, error_study,
                       evolve_general, synthesize)
from .perturbation import (build_series, coupling_matrix,
                           eigenvalue_tracking_oracle, rs_coefficients,
                           sym_norm)
from .spectral import decay_profile, group_degenerate, lowest_eigenpairs

COMMANDS = ("spectrum", "coeffs", "evolve", "converge", "almostinv", "decay",
            "general")

# schema: section -> key -> (type, required, default)
_SCHEMA = {
    "model": {
        "alpha": ("float", True, None),
        "epsilon": ("float", False, 0.1),
        "theta": ("floats", False, (1.0,)),
        "theta_sin": ("floats", False, ()),
        "tail_gamma": ("float", False, None),
        "tail_delta": ("float", False, None),
        "tail_coeff": ("float", False, None),
    },
    "grid": {
        "L": ("float", False, 8.0),
        "n": ("int", False, 128),
    },
    "zgrid": {
        "Z": ("float", False, 32.0),
        "n_z": ("int", False, 256),
    },
    "amplitude": {
        "center": ("float", False, 1.0),
        "width": ("float", False, 0.5),
    },
    "study": {
        "cluster": ("int", False, 0),
        "k": ("int", False, 8),
        "gap_tol": ("float", False, 1e-2),
        "eps": ("floats", False, (0.1, 0.05, 0.025)),
        "t": ("floats", False, (0.25, 0.5, 1.0)),
        "eta": ("floats", False, tuple(2.0 ** -k for k in range(3, 8))),
        "order": ("int", False, 2),
        "level_cap": ("float", False, 0.0),     # 0 = default 8 * lambda rule
        "p": ("float", False, 1.0),
        "omega": ("floats", False, (0.0, 0.25, 0.5)),
        "delta": ("float", False, 0.05),
        "general_clusters": ("ints", False, (0,)),
        "general_members": ("ints", False, ()),
        "general_weights": ("floats", False, (1.0,)),
        "oracle_eta": ("floats", False,
                       (0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16)),
        "oracle_degree": ("int", False, 4),
    },
}


def _parse_value(kind, text, line_no, key):
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        if kind == "floats":
            return tuple(float(tok) for tok in text.split())
        if kind == "ints":
            return tuple(int(tok) for tok in text.split())
        return text
    except ValueError as exc:
        raise ParseError(f"bad {kind} value for key '{key}': {text!r}",
                         line=line_no, key=key) from exc


@dataclass
class RunPlan:
    """One validated batch run; everything run() needs, nothing implicit."""

    command: str
    model: object
    grid: Grid2D
    zgrid: ZGrid
    amplitude: AmplitudeSpec
    study: dict
    out_dir: str = "."
    seed: int = 0
    threads: int = 1
    config_hash: str = ""


def parse_scenario(config_text, command, out_dir=".", seed=0, threads=1):
    """Parse and validate scenario text into a RunPlan.

    Unknown sections or keys raise ParseError with the offending line;
    model-assumption violations surface as AssumptionViolated.
    """
    if command not in COMMANDS:
        raise ParseError(f"unknown command {command!r}; "
                         f"expected one of {', '.join(COMMANDS)}")
    values = {}
    section = None
    for line_no, raw in enumerate(config_text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SCHEMA:
                raise ParseError(f"unknown section '{section}'", line=line_no)
            values.setdefault(section, {})
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=line_no)
        if section is None:
            raise ParseError("key outside any [section]", line=line_no)
        key, _, text = (part.strip() for part in line.partition("="))
        if key not in _SCHEMA[section]:
            raise ParseError(f"unknown key '{key}' in [{section}]",
                             line=line_no, key=key)
        if key in values[section]:
            raise ParseError(f"duplicate key '{key}'", line=line_no, key=key)
        kind = _SCHEMA[section][key][0]
        values[section][key] = _parse_value(kind, text, line_no, key)

    resolved = {}
    for sec, keys in _SCHEMA.items():
        resolved[sec] = {}
        for key, (kind, required, default) in keys.items():
            if key in values.get(sec, {}):
                resolved[sec][key] = values[sec][key]
            elif required:
                raise ParseError(f"missing required key '{key}' in [{sec}]",
                                 key=key)
            else:
                resolved[sec][key] = default

    mdl = resolved["model"]
    tail_keys = [mdl["tail_gamma"], mdl["tail_delta"], mdl["tail_coeff"]]
    if any(v is not None for v in tail_keys):
        if any(v is None for v in tail_keys):
            raise ParseError("tail requires tail_gamma, tail_delta and "
                             "tail_coeff together", key="tail_gamma")
        tail = TailSpec(gamma=mdl["tail_gamma"], delta=mdl["tail_delta"],
                        coeff=mdl["tail_coeff"])
    else:
        tail = None

    zgrid = ZGrid(resolved["zgrid"]["Z"], resolved["zgrid"]["n_z"])
    amp = AmplitudeSpec(resolved["amplitude"]["center"],
                        resolved["amplitude"]["width"], zgrid)
    profile = AzimuthalProfile.cosine(mdl["theta"], mdl["theta_sin"])
    model = make_model(mdl["alpha"], profile, mdl["epsilon"],
                       tail_spec=tail, p0=amp.p0)
    grid = Grid2D(resolved["grid"]["L"], resolved["grid"]["n"])
    study = resolved["study"]
    for name in ("eps", "t", "eta"):
        if len(study[name]) == 0:
            raise ParseError(f"study list '{name}' must not be empty",
                             key=name)

    config_hash = hashlib.sha256(config_text.encode("utf-8")).hexdigest()[:16]
    return RunPlan(command=command, model=model, grid=grid, zgrid=zgrid,
                   amplitude=amp, study=study, out_dir=out_dir,
                   seed=int(seed), threads=int(threads),
                   config_hash=config_hash)


# ---------------------------------------------------------------------------
# bit-exact writers
# ---------------------------------------------------------------------------

def format_value(value):
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_table(rows, path, header=(), meta=None):
    """CSV writer: UTF-8, LF endings, '.' decimals, 17 significant digits.

    ``meta`` (a mapping) is embedded as a single leading comment line so the
    data payload stays a plain CSV table.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if meta:
        tokens = " ".join(f"{k}={v}" for k, v in sorted(meta.items()))
        lines.append(f"# {tokens}")
    if header:
        lines.append(",".join(str(h) for h in header))
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path):
    """Read back a write_table CSV: (header, rows of floats/strs, meta)."""
    meta = {}
    header = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                for token in line[1:].split():
                    if "=" in token:
                        k, _, v = token.partition("=")
                        meta[k] = v
                continue
            if header is None:
                header = line.split(",")
                continue
            parsed = []
            for tok in line.split(","):
                try:
                    parsed.append(float(tok))
                except ValueError:
                    parsed.append(tok)
            rows.append(parsed)
    return header, rows, meta


def write_field(values, grid_meta, path, meta=None):
    """One-line JSON header (shape, dtype, extents, re/im interleave flag)
    followed by raw row-major little-endian float64 payload."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.ascontiguousarray(values)
    is_complex = np.iscomplexobj(values)
    payload = values.astype("<c16" if is_complex else "<f8")
    header = {
        "shape": list(values.shape),
        "dtype": "float64",
        "endian": "little",
        "interleaved_complex": bool(is_complex),
        "grid": grid_meta,
    }
    if meta:
        header.update(meta)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(payload.view("<f8").tobytes())


def read_field(path):
    """Read back a write_field file: (values, header dict)."""
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    shape = tuple(header["shape"])
    if header["interleaved_complex"]:
        values = raw.view("<c16").reshape(shape).astype(complex)
    else:
        values = raw.reshape(shape).astype(float)
    return values, header


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

def _level_cap(plan):
    """Config value 0 selects the default truncation rule."""
    cap = plan.study["level_cap"]
    return None if cap == 0.0 else cap


def _meta(plan):
    return {"config": plan.config_hash, "seed": plan.seed}


def _spectrum_data(plan, k=None, extra=1):
    op = assemble_H(plan.grid, eval_confining_potential(plan.grid, plan.model))
    k = k or plan.study["k"]
    kk = min(k + extra, plan.grid.d)
    spec = lowest_eigenpairs(op, kk)
    return group_degenerate(spec, plan.study["gap_tol"], limit=k), op


def _run_spectrum(plan, out):
    spec, _ = _spectrum_data(plan)
    rows = []
    for ci, cluster in enumerate(spec.clusters):
        for idx in cluster.members:
            rows.append((idx, spec.eigenvalues[idx], spec.residuals[idx],
                         ci, cluster.multiplicity))
    write_table(rows, out / "spectrum.csv",
                header=("index", "eigenvalue", "residual", "cluster",
                        "multiplicity"), meta=_meta(plan))
    mults = [c.multiplicity for c in spec.clusters]
    print(f"spectrum: {len(rows)} eigenvalues, lambda0="
          f"{spec.eigenvalues[0]:.6f}, multiplicities {mults}")
    if np.any(spec.eigenvalues <= 0):
        print("FAILED positivity: nonpositive eigenvalue", file=sys.stderr)
        return 1
    return 0


def _run_coeffs(plan, out):
    spec, _ = _spectrum_data(plan)
    coup = coupling_matrix(spec, plan.grid, plan.model)
    n = plan.study["cluster"]
    rs = rs_coefficients(coup, spec, n, level_cap=_level_cap(plan))
    fit = eigenvalue_tracking_oracle(
        plan.grid, plan.model, n, plan.study["oracle_eta"],
        degree=plan.study["oracle_degree"])
    rows = []
    for k_idx in range(len(rs.lambda1)):
        rows.append((n, k_idx, rs.lambda0, rs.lambda1[k_idx],
                     rs.lambda2[k_idx], rs.tail_estimate[k_idx],
                     fit.lambda0, fit.lambda1, fit.lambda2))
    write_table(rows, out / "coeffs.csv",
                header=("cluster", "member", "lambda", "lambda1", "lambda2",
                        "tail_estimate", "oracle_lambda", "oracle_lambda1",
                        "oracle_lambda2"), meta=_meta(plan))
    dl2 = abs(rs.lambda2[0] - fit.lambda2)
    print(f"coeffs: lambda1={rs.lambda1[0]:.6f} lambda2={rs.lambda2[0]:.6f} "
          f"|formula-oracle|={dl2:.2e}")
    return 0


def _run_evolve(plan, out):
    spec, _ = _spectrum_data(plan)
    n = plan.study["cluster"]
    coup = coupling_matrix(spec, plan.grid, plan.model)
    rs = rs_coefficients(coup, spec, n, level_cap=_level_cap(plan))
    cluster = spec.clusters[n]
    chi = (spec.eigenvectors[:, list(cluster.members)] @ rs.basis)[:, 0]
    state = build_initial_fibered(plan.amplitude, chi, plan.zgrid, plan.grid)
    prop = FiberPropagator(plan.model, plan.grid, plan.zgrid,
                           plan.amplitude.support, threads=plan.threads)
    eff = EffectiveParams(rs.lambda0, float(rs.lambda1[0]), float(rs.lambda2[0]))
    rows = []
    worst_drift = 0.0
    for t in plan.study["t"]:
        evolved = prop.evolve(state, t)
        drift = float(np.max(np.abs(evolved.fiber_norms()
                                    - state.fiber_norms())))
        worst_drift = max(worst_drift, drift)
        psi = synthesize(evolved, plan.zgrid)
        env = np.linalg.norm(psi, axis=0)
        z_peak = float(plan.zgrid.z[int(np.argmax(env))])
        v_drift = eff.drift_velocity(plan.model.epsilon, plan.model.beta)
        pred = (v_drift * t + plan.zgrid.Z) % (2 * plan.zgrid.Z) - plan.zgrid.Z
        rows.append((t, evolved.total_norm(), drift, z_peak, pred))
        write_field(psi, {"kind": "xz", "L": plan.grid.L, "n": plan.grid.n,
                          "Z": plan.zgrid.Z, "n_z": plan.zgrid.n_z},
                    out / f"field_t{format_value(float(t))}.bin",
                    meta=_meta(plan))
    write_table(rows, out / "evolve.csv",
                header=("t", "total_norm", "fiber_norm_drift", "z_peak",
                        "z_drift_prediction"), meta=_meta(plan))
    print(f"evolve: {len(rows)} snapshot(s), worst fiber-norm drift "
          f"{worst_drift:.2e}")
    if worst_drift > 1e-8:
        print("FAILED unitarity: fiber norm drift above 1e-8", file=sys.stderr)
        return 1
    return 0


def _run_converge(plan, out):
    table = error_study(plan.model, plan.study["cluster"], plan.study["t"],
                        plan.study["eps"], plan.grid, zgrid=plan.zgrid,
                        amp=plan.amplitude, level_cap=_level_cap(plan),
                        gap_tol=plan.study["gap_tol"], threads=plan.threads)
    write_table(table.rows(), out / "convergence.csv",
                header=("eps", "t", "error", "slope"), meta=_meta(plan))
    slopes = {t: s for t, s in sorted(table.slopes.items())}
    print("converge: slopes " + " ".join(
        f"t={t:g}:{s:.3f}" for t, s in slopes.items()))
    return 0


def _run_almostinv(plan, out):
    spec, _ = _spectrum_data(plan, k=max(plan.study["k"], 8))
    n = plan.study["cluster"]
    rows = []
    slopes = {}
    for N in range(plan.study["order"] + 1):
        defects, comms = [], []
        for eta in plan.study["eta"]:
            so = build_series(spec, plan.grid, plan.model, n, eta, N,
                              p=plan.study["p"])
            p_defect = sym_norm(so.projection.matrix @ so.projection.matrix
                                - so.projection.matrix)
            rows.append((N, eta, so.defect, p_defect, so.commutator,
                         so.projection.rank,
                         so.effective.value if so.effective else np.nan))
            defects.append(so.defect)
            comms.append(so.commutator)
        etas = np.asarray(plan.study["eta"])
        t_slope = (np.nan if max(defects) < 1e-12 else
                   float(np.polyfit(np.log(etas), np.log(defects), 1)[0]))
        c_slope = float(np.polyfit(np.log(etas), np.log(comms), 1)[0])
        slopes[N] = (t_slope, c_slope)
    write_table(rows, out / "defects.csv",
                header=("N", "eta", "t_defect", "p_defect",
                        "commutator_defect", "rank", "lambda_tilde"),
                meta=_meta(plan))
    summary = " ".join(
        f"N={N}:T={'exact0' if np.isnan(ts) else format(ts, '.2f')}"
        f",C={cs:.2f}" for N, (ts, cs) in slopes.items())
    print(f"almostinv: slopes {summary}")
    return 0


def _run_decay(plan, out):
    spec, op = _spectrum_data(plan)
    n = plan.study["cluster"]
    cluster = spec.clusters[n]
    rows = []
    for member in cluster.members:
        rep = decay_profile(spec.eigenvectors[:, member], plan.grid,
                            plan.study["omega"])
        for w, nv in zip(rep.omegas, rep.weighted_norms):
            rows.append(("omega_norm", member, w, nv))
        for r, lm in zip(rep.annulus_r, rep.annulus_logmean):
            rows.append(("annulus_logmean", member, r, lm))
        rows.append(("decay_rate", member, 0.0, rep.decay_rate))
        rows.append(("gaussian_rate", member, 0.0, rep.gaussian_rate))
        rows.append(("boundary_mass", member, 0.0,
                     rep.boundary_mass_fraction))
    write_table(rows, out / "decay.csv",
                header=("series", "member", "x", "value"), meta=_meta(plan))
    print(f"decay: cluster {n}, boundary mass "
          f"{rows[-1][3]:.3e}, gaussian rate {rows[-2][3]:.4f}")
    return 0


def _run_general(plan, out):
    spec, _ = _spectrum_data(plan)
    clusters = plan.study["general_clusters"]
    members = plan.study["general_members"] or tuple(0 for _ in clusters)
    weights = np.asarray(plan.study["general_weights"], dtype=float)
    if not (len(clusters) == len(members) == len(weights)):
        raise ParseError("general_clusters, general_members and "
                         "general_weights must have equal lengths",
                         key="general_clusters")
    weights = weights / np.linalg.norm(weights)
    expansion = [ExpansionEntry(c, m, w * plan.amplitude.values)
                 for c, m, w in zip(clusters, members, weights)]
    state, report = evolve_general(expansion, plan.study["delta"], plan.model,
                                   plan.study["t"][-1], plan.grid, plan.zgrid,
                                   spectral=spec,
                                   level_cap=_level_cap(plan))
    rows = [(c, m, nrm, resid)
            for (c, m), nrm, resid in zip(report.kept,
                                          report.per_entry_norms,
                                          report.compact_residuals)]
    write_table(rows, out / "general.csv",
                header=("cluster", "member", "amplitude_norm",
                        "compact_residual"), meta=_meta(plan))
    write_table([(report.tail_mass, report.error_budget, state.total_norm())],
                out / "general_summary.csv",
                header=("tail_mass", "error_budget", "state_norm"),
                meta=_meta(plan))
    write_field(state.values, {"kind": "fiber", "L": plan.grid.L,
                               "n": plan.grid.n, "Z": plan.zgrid.Z,
                               "n_z": plan.zgrid.n_z},
                out / "general_state.bin", meta=_meta(plan))
    print(f"general: kept {len(report.kept)} entries, tail mass "
          f"{report.tail_mass:.3e}, budget {report.error_budget:.3e}")
    return 0


_DISPATCH = {
    "spectrum": _run_spectrum,
    "coeffs": _run_coeffs,
    "evolve": _run_evolve,
    "converge": _run_converge,
    "almostinv": _run_almostinv,
    "decay": _run_decay,
    "general": _run_general,
}


def run(plan):
    """Execute a RunPlan; returns a process exit code."""
    out = Path(plan.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return _DISPATCH[plan.command](plan, out)
    except HighFieldError as exc:
        print(f"FAILED {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="highfield",
        description="high-field magnetic Schrodinger laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True)
        cmd.add_argument("--out", default="out")
        cmd.add_argument("--seed", type=int, default=0)
        cmd.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    try:
        plan = parse_scenario(text, args.command, out_dir=args.out,
                              seed=args.seed, threads=args.threads)
    except (ParseError, AssumptionViolated, SupportExceedsGrid) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return run(plan)


if __name__ == "__main__":
    sys.exit(main())
