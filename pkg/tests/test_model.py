import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from highfield import (
    AssumptionViolated, AzimuthalProfile, Grid2D, TailSpec, TailMissing,
    eval_confining_potential, eval_effective_potential, eval_singular_term,
    make_model, tail_bound_ratio,
)


def test_beta_relation_exact():
    params = make_model(1.0, 1.0, 0.1)
    assert params.beta == 0.5
    for alpha in (0.5, 1.0, 2.0, 3.7):
        p = make_model(alpha, 1.0, 0.3)
        assert p.beta * (alpha + 1.0) == 1.0


def test_parameter_windows():
    with pytest.raises(AssumptionViolated):
        make_model(-1.0, 1.0, 0.1)
    with pytest.raises(AssumptionViolated):
        make_model(1.0, 1.0, 0.0)
    with pytest.raises(AssumptionViolated):
        make_model(1.0, 1.0, 1.5)


def test_profile_positivity_and_extrema():
    params = make_model(1.0, [1.0, 0.0, 0.3], 0.1)
    c1, c2 = params.theta.sampled_range()
    assert c1 == pytest.approx(0.7, abs=1e-12)
    assert c2 == pytest.approx(1.3, abs=1e-12)
    # a profile dipping below zero violates the standing assumption
    with pytest.raises(AssumptionViolated):
        make_model(1.0, [1.0, 1.2], 0.1)


def test_profile_periodicity():
    prof = AzimuthalProfile.cosine([1.0, 0.2, 0.1], sin_coefficients=[0.05])
    assert abs(prof(0.0) - prof(2.0 * np.pi)) < 1e-12
    prof.validate()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.2, 0.2), min_size=0, max_size=4))
def test_profile_bounds_enclose_samples(coeffs):
    prof = AzimuthalProfile.cosine([1.0] + coeffs)
    c1, c2 = prof.validate()
    # sampling certifies the bounds up to |Theta'| * half the sample spacing
    slack = sum(k * abs(c) for k, c in enumerate(prof.coefficients)) * \
        np.pi / 4096
    theta = np.linspace(0, 2 * np.pi, 333)
    vals = prof(theta)
    assert np.all(vals >= c1 - slack - 1e-12)
    assert np.all(vals <= c2 + slack + 1e-12)


def test_tail_window():
    # alpha = 1 needs gamma >= 4
    with pytest.raises(AssumptionViolated):
        make_model(1.0, 1.0, 0.1, tail_spec=TailSpec(gamma=2.0, delta=4.0))
    with pytest.raises(AssumptionViolated):
        make_model(1.0, 1.0, 0.1, tail_spec=TailSpec(gamma=5.0, delta=4.5))
    params = make_model(1.0, 1.0, 0.1, tail_spec=TailSpec(gamma=4.0, delta=4.0))
    assert params.tail_gamma == 4.0


def test_confining_potential_point_values(harmonic):
    grid = Grid2D(2.0, 17)       # contains (1, 0), (0, 1) and the origin
    v0 = eval_confining_potential(grid, harmonic)
    at = {(x1, x2): val for x1, x2, val in
          zip(grid.x1, grid.x2, v0.values)}
    assert at[(1.0, 0.0)] == pytest.approx(1.0, abs=1e-14)
    assert at[(0.0, 0.0)] == 0.0
    aniso = make_model(1.0, [1.0, 0.0, 0.3], 0.1)
    v0a = eval_confining_potential(grid, aniso)
    ata = {(x1, x2): val for x1, x2, val in
           zip(grid.x1, grid.x2, v0a.values)}
    # theta = pi/2: profile 1 + 0.3 cos(pi) = 0.7, squared
    assert ata[(0.0, 1.0)] == pytest.approx(0.49, abs=1e-14)


def test_confining_potential_profile_bounds(harmonic):
    grid = Grid2D(4.0, 24)
    aniso = make_model(1.5, [1.0, 0.1, 0.3], 0.1)
    c1, c2 = aniso.theta.sampled_range()
    v0 = eval_confining_potential(grid, aniso)
    envelope = grid.r ** (2 * aniso.alpha)
    assert np.all(v0.values >= c1 ** 2 * envelope - 1e-12)
    assert np.all(v0.values <= c2 ** 2 * envelope + 1e-12)
    assert np.all(v0.values >= 0.0)


def test_effective_potential_point_values():
    grid = Grid2D(5.0, 21)       # nodes at half-integers, contains (1,0),(3,4)
    params = make_model(1.0, 1.0, 0.25)
    field = eval_effective_potential(grid, params, 2.0)
    at = {(x1, x2): val for x1, x2, val in
          zip(grid.x1, grid.x2, field.values)}
    assert at[(1.0, 0.0)] == pytest.approx(3.0, abs=1e-14)      # 0.5*2 + 2
    p0 = eval_effective_potential(grid, params, 0.0)
    at0 = {(x1, x2): val for x1, x2, val in
           zip(grid.x1, grid.x2, p0.values)}
    assert at0[(0.0, 0.0)] == 0.0
    unit = make_model(1.0, 1.0, 1.0)
    f = eval_effective_potential(grid, unit, -1.0)
    atf = {(x1, x2): val for x1, x2, val in
           zip(grid.x1, grid.x2, f.values)}
    assert atf[(3.0, 4.0)] == pytest.approx(9.0, abs=1e-13)     # -1 + 2*5


def test_singular_term_zero_coeff():
    grid = Grid2D(4.0, 24)
    params = make_model(1.0, 1.0, 0.25,
                        tail_spec=TailSpec(gamma=4.0, delta=4.0, coeff=0.0))
    w = eval_singular_term(grid, params, 0.0)
    assert np.all(w.values == 0.0)


def test_singular_term_requires_tail(harmonic):
    grid = Grid2D(4.0, 24)
    with pytest.raises(TailMissing):
        eval_singular_term(grid, harmonic, 0.0)


def test_singular_term_point_value():
    # independent evaluation of the defining expression at x = (1, 0),
    # alpha=1, gamma=delta=4, coeff=1, eps=0.25 (beta=1/2), p=0:
    #   prefactor eps^(beta(alpha-gamma+2)) = eps^(-1/2) = 2
    #   a(eps^beta x) = |0.5|^4 = eps^2 = 0.0625
    #   2 eps^(-2+beta) * 1 * a = 2 * eps^(-3/2) * eps^2 = 2 sqrt(eps) = 1.0
    #   eps^(-2) a^2 = eps^2 = 0.0625
    expected = 2.0 * (1.0 + 0.0625)          # = 2.125
    grid = Grid2D(2.0, 17)
    params = make_model(1.0, 1.0, 0.25,
                        tail_spec=TailSpec(gamma=4.0, delta=4.0, coeff=1.0))
    w = eval_singular_term(grid, params, 0.0)
    at = {(x1, x2): val for x1, x2, val in
          zip(grid.x1, grid.x2, w.values)}
    assert at[(1.0, 0.0)] == pytest.approx(expected, rel=1e-14)


def test_singular_bound_monotone_beyond_max():
    # p = 0: no sign-alternating cross term, so the measured constant decays
    # monotonically once past its maximum over the eps sweep
    grid = Grid2D(8.0, 64)
    tail = TailSpec(gamma=4.0, delta=5.0, coeff=1.0)
    ratios = []
    for k in range(1, 8):
        params = make_model(1.0, 1.0, 2.0 ** -k, tail_spec=tail)
        w = eval_singular_term(grid, params, 0.0)
        ratios.append(tail_bound_ratio(w, params, 0.0))
    peak = int(np.argmax(ratios))
    for a, b in zip(ratios[peak:], ratios[peak + 1:]):
        assert b <= a * (1.0 + 1e-12)


def test_singular_bound_uniform_in_eps():
    # p = 1 sweep: the constant stays uniformly bounded (it settles toward
    # its small-eps limit instead of diverging)
    grid = Grid2D(8.0, 64)
    tail = TailSpec(gamma=4.0, delta=5.0, coeff=1.0)
    ratios = []
    for eps in (0.5, 0.25, 0.1, 0.05, 0.025, 0.0125):
        params = make_model(1.0, 1.0, eps, tail_spec=tail)
        w = eval_singular_term(grid, params, 1.0)
        ratios.append(tail_bound_ratio(w, params, 1.0))
    assert max(ratios) < np.inf
    assert abs(ratios[-1] - ratios[-2]) <= 0.1 * ratios[-1]


def test_grid_and_field_validation(harmonic):
    with pytest.raises(ValueError):
        Grid2D(0.0, 32)
    with pytest.raises(ValueError):
        Grid2D(4.0, 8)
    grid = Grid2D(4.0, 17)
    assert grid.h == pytest.approx(2 * 4.0 / 16)
    assert grid.theta[grid.r == 0.0] == 0.0
    from highfield import ScalarField
    with pytest.raises(ValueError):
        ScalarField(np.full(grid.d, np.nan), grid)


def test_tail_sum_of_terms():
    # two homogeneous terms act additively and validate jointly
    terms = (TailSpec(gamma=4.0, delta=4.0, coeff=1.0),
             TailSpec(gamma=5.0, delta=6.0, coeff=0.5))
    params = make_model(1.0, 1.0, 0.25, tail_spec=terms)
    assert params.tail_gamma == 4.0 and params.tail_delta == 6.0
    val = params.tail_value(np.array([0.5]), np.array([0.0]))
    assert val[0] == pytest.approx(0.5 ** 4 + 0.5 * 0.5 ** 5, rel=1e-14)
