"""Physical model: parameters, azimuthal profiles, potentials.

The confining potential is V0(x) = |x|^(2*alpha) * Theta(theta)^2 on the
plane, with an azimuthal profile Theta bounded between positive constants.
An optional singular tail modifies the vector potential away from the origin
and enters the fiber operators through an extra diagonal term, evaluated here
exactly from its defining expression.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import AssumptionViolated, DimensionMismatch, TailMissing

#: number of angles used to certify profile positivity
PROFILE_SAMPLES = 4096

#: admissible band for the profile periodicity defect |Theta(0) - Theta(2pi)|
PERIOD_TOL = 1e-12


@dataclass(frozen=True)
class AzimuthalProfile:
    """Angular factor Theta(theta), a finite cosine/sine series.

    ``coefficients[k]`` multiplies cos(k*theta) (k = 0 is the constant term);
    ``sin_coefficients[k]`` multiplies sin((k+1)*theta). ``kind`` is
    "constant" when only the constant term is present.
    """

    kind: str
    coefficients: tuple
    sin_coefficients: tuple = ()

    @staticmethod
    def constant(value=1.0):
        return AzimuthalProfile("constant", (float(value),))

    @staticmethod
    def cosine(coefficients, sin_coefficients=()):
        coeffs = tuple(float(c) for c in coefficients)
        sins = tuple(float(s) for s in sin_coefficients)
        if len(coeffs) == 1 and not sins:
            return AzimuthalProfile("constant", coeffs)
        return AzimuthalProfile("cosine-series", coeffs, sins)

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full_like(theta, self.coefficients[0])
        for k, c in enumerate(self.coefficients[1:], start=1):
            if c != 0.0:
                out = out + c * np.cos(k * theta)
        for k, s in enumerate(self.sin_coefficients, start=1):
            if s != 0.0:
                out = out + s * np.sin(k * theta)
        return out

    def sampled_range(self, samples=PROFILE_SAMPLES):
        """(min, max) of Theta over a dense uniform angular sample."""
        theta = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
        values = self(theta)
        return float(values.min()), float(values.max())

    def validate(self):
        """Check positivity and 2pi-periodicity; raise AssumptionViolated."""
        c1, c2 = self.sampled_range()
        if not (0.0 < c1 <= c2 < np.inf):
            raise AssumptionViolated(
                "profile positivity 0 < c1 <= Theta <= c2", c1,
                "profile must stay strictly positive over all angles")
        defect = abs(float(self(0.0)) - float(self(2.0 * np.pi)))
        if not defect < PERIOD_TOL:
            raise AssumptionViolated(
                "profile 2pi-periodicity", defect,
                f"|Theta(0) - Theta(2pi)| must be < {PERIOD_TOL}")
        return c1, c2


@dataclass(frozen=True)
class TailSpec:
    """One homogeneous-tail term a(y) = coeff * |y|^gamma (|y| < 1),
    coeff * |y|^delta (|y| >= 1), optionally modulated by an angular factor.

    The exponent window 3 + alpha <= gamma <= delta is checked by
    :func:`make_model` (it depends on alpha).
    """

    gamma: float
    delta: float
    coeff: float = 1.0
    angular: AzimuthalProfile | None = None

    def __call__(self, y1, y2):
        r = np.hypot(y1, y2)
        inner = r < 1.0
        out = np.where(inner,
                       np.power(r, self.gamma, where=r > 0, out=np.zeros_like(r)),
                       np.power(r, self.delta, where=r > 0, out=np.zeros_like(r)))
        out = self.coeff * out
        if self.angular is not None:
            out = out * self.angular(np.arctan2(y2, y1))
        return out


@dataclass(frozen=True)
class ModelParams:
    """Validated model parameters. beta is derived, never stored."""

    alpha: float
    epsilon: float
    theta: AzimuthalProfile
    tail: tuple = ()            # zero or more TailSpec terms
    p0: float = 1.5             # momentum support radius of the amplitude

    @property
    def beta(self):
        return 1.0 / (self.alpha + 1.0)

    @property
    def has_tail(self):
        return len(self.tail) > 0

    @property
    def tail_gamma(self):
        """Leading inner exponent: the smallest gamma among the tail terms."""
        if not self.tail:
            raise TailMissing("model has no singular tail")
        return min(t.gamma for t in self.tail)

    @property
    def tail_delta(self):
        """Leading outer exponent: the largest delta among the tail terms."""
        if not self.tail:
            raise TailMissing("model has no singular tail")
        return max(t.delta for t in self.tail)

    def tail_value(self, y1, y2):
        if not self.tail:
            raise TailMissing("model has no singular tail")
        total = np.zeros_like(np.asarray(y1, dtype=float))
        for term in self.tail:
            total = total + term(y1, y2)
        return total


def make_model(alpha, theta_spec, epsilon, tail_spec=None, p0=1.5):
    """Build validated ModelParams.

    ``theta_spec`` may be an AzimuthalProfile, a scalar (constant profile) or
    a sequence of cosine coefficients. ``tail_spec`` may be a TailSpec or a
    sequence of them. Raises AssumptionViolated on any broken hypothesis.
    """
    if not alpha > 0:
        raise AssumptionViolated("alpha > 0", alpha)
    if not (0.0 < epsilon <= 1.0):
        raise AssumptionViolated("epsilon in (0, 1]", epsilon)

    if isinstance(theta_spec, AzimuthalProfile):
        theta = theta_spec
    elif np.isscalar(theta_spec):
        theta = AzimuthalProfile.constant(theta_spec)
    else:
        theta = AzimuthalProfile.cosine(theta_spec)
    theta.validate()

    if tail_spec is None:
        tail = ()
    elif isinstance(tail_spec, TailSpec):
        tail = (tail_spec,)
    else:
        tail = tuple(tail_spec)
    for term in tail:
        if not (3.0 + alpha <= term.gamma <= term.delta < np.inf):
            raise AssumptionViolated(
                "tail exponents 3 + alpha <= gamma <= delta",
                (term.gamma, term.delta),
                f"need gamma >= {3.0 + alpha} and gamma <= delta")
        if term.angular is not None:
            term.angular.validate()

    return ModelParams(alpha=float(alpha), epsilon=float(epsilon),
                       theta=theta, tail=tail, p0=float(p0))


class Grid2D:
    """Uniform Cartesian grid on [-L, L]^2 with n nodes per axis.

    All n^2 nodes are unknowns of the discrete operators; homogeneous
    Dirichlet walls sit one spacing outside the node span. Polar angle at the
    origin is 0 by convention (V0 stays finite there since alpha > 0).
    """

    def __init__(self, L, n):
        if not L > 0:
            raise ValueError(f"grid half-width must be positive, got {L}")
        if n < 16:
            raise ValueError(f"need at least 16 nodes per axis, got {n}")
        self.L = float(L)
        self.n = int(n)
        self.h = 2.0 * self.L / (self.n - 1)
        self.axis = np.linspace(-self.L, self.L, self.n)
        X1, X2 = np.meshgrid(self.axis, self.axis, indexing="ij")
        self.x1 = X1.ravel()
        self.x2 = X2.ravel()
        self.r = np.hypot(self.x1, self.x2)
        self.theta = np.arctan2(self.x2, self.x1)

    @property
    def d(self):
        return self.n * self.n

    def __repr__(self):
        return f"Grid2D(L={self.L}, n={self.n})"


@dataclass
class ScalarField:
    """Real nodal values over a Grid2D; entries must be finite."""

    values: np.ndarray
    grid: Grid2D
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.d,):
            raise DimensionMismatch(
                f"field has shape {self.values.shape}, grid wants ({self.grid.d},)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("scalar field contains non-finite entries")


def eval_confining_potential(grid, params):
    """V0(x) = |x|^(2 alpha) Theta(theta)^2 at every node."""
    values = grid.r ** (2.0 * params.alpha) * params.theta(grid.theta) ** 2
    return ScalarField(values, grid)


def eval_effective_potential(grid, params, p):
    """Fiber perturbation potential eps^beta * p + 2 |x|^alpha Theta(theta)."""
    eb = params.epsilon ** params.beta
    values = eb * p + 2.0 * grid.r ** params.alpha * params.theta(grid.theta)
    return ScalarField(values, grid)


def eval_singular_term(grid, params, p):
    """Singular fiber potential produced by the tail, exactly as defined:

        eps^(beta (alpha - gamma + 2)) * ( 2 eps^(-2 + beta alpha) |x|^alpha
            Theta a(eps^beta x) - 2 p eps^(-1) a(eps^beta x)
            + eps^(-2) a(eps^beta x)^2 )

    with gamma the leading inner exponent. The pointwise polynomial bound
    |W| <= C (1 + |p|)(1 + |x|)^(2 delta) is measured and reported through
    ``info["bound_ratio"]``.
    """
    if not params.has_tail:
        raise TailMissing("singular term requested without a tail")
    eps = params.epsilon
    beta = params.beta
    gamma = params.tail_gamma
    eb = eps ** beta
    a_scaled = params.tail_value(eb * grid.x1, eb * grid.x2)
    f = grid.r ** params.alpha * params.theta(grid.theta)
    values = eps ** (beta * (params.alpha - gamma + 2.0)) * (
        2.0 * eps ** (-2.0 + beta * params.alpha) * f * a_scaled
        - 2.0 * p * eps ** (-1.0) * a_scaled
        + eps ** (-2.0) * a_scaled ** 2)
    field_ = ScalarField(values, grid)
    field_.info["bound_ratio"] = tail_bound_ratio(field_, params, p)
    return field_


def tail_bound_ratio(field_, params, p):
    """max over nodes of |W| / ((1 + |p|)(1 + |x|)^(2 delta)).

    Finite uniformly in eps; used as the measured constant of the polynomial
    bound on the singular term.
    """
    grid = field_.grid
    envelope = (1.0 + abs(p)) * (1.0 + grid.r) ** (2.0 * params.tail_delta)
    return float(np.max(np.abs(field_.values) / envelope))
