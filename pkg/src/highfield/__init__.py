"""Numerical laboratory for the high-field dynamics of translationally
invariant magnetic Schrodinger operators: spectra of the confining fiber
Hamiltonian, Rayleigh-Schrodinger coefficients, drift-dispersion effective
solutions, exact fibered propagation, convergence-rate studies, and the
almost-invariant-subspace machinery for singular perturbations.
"""

from .errors import (
    AmbiguousCluster, AssumptionViolated, DefectTooLarge, DegenerateFirstOrder,
    DimensionMismatch, ExpansionIncomplete, GapTooSmall, HighFieldError,
    NoConvergence, ParseError, ProjectionsTooFar, RankMismatch, SingularShift,
    SupportExceedsGrid, TailMissing, TrackingLost,
)
from .model import (
    AzimuthalProfile, Grid2D, ModelParams, ScalarField, TailSpec,
    eval_confining_potential, eval_effective_potential, eval_singular_term,
    make_model, tail_bound_ratio,
)
from .operators import (
    BoundReport, SymOp, assemble_H, assemble_fiber_H, fiber_shift_diag,
    h_bound_check, laplacian_2d,
)
from .spectral import (
    Cluster, DecayReport, GapInfo, SpectralData, decay_profile, gap_info,
    group_degenerate, lowest_eigenpairs, weighted_resolvent_norm,
)
from .perturbation import (
    AlmostProjection, CouplingTensor, EffectiveEigenpair, OracleFit,
    RSCoefficients, ReducedResolvent, SeriesOperators, almost_projection_P,
    build_series, commutator_defect, coupling_matrix,
    eigenvalue_tracking_oracle, effective_eigenpair, reduced_resolvent_apply,
    rs_coefficients, series_term_Q, sym_norm, sz_nagy_intertwiner,
    truncated_series_T,
)
from .dynamics import (
    AmplitudeSpec, ConvergenceTable, EffectiveParams, ExpansionEntry,
    FiberPropagator, FiberState, GeneralEvolveReport, ZGrid,
    build_initial_fibered, effective_solution_fibered, error_study,
    evolve_general, propagate_fiber, synthesize,
)
from .cli import (
    RunPlan, parse_scenario, read_field, read_table, run, write_field,
    write_table,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
