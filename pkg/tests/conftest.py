import numpy as np
import pytest

from highfield import (
    Grid2D, TailSpec, ZGrid, AmplitudeSpec, assemble_H,
    eval_confining_potential, group_degenerate, lowest_eigenpairs, make_model,
)


@pytest.fixture(scope="session")
def harmonic():
    return make_model(1.0, 1.0, 0.1)


@pytest.fixture(scope="session")
def tailed():
    return make_model(1.0, 1.0, 0.25,
                      tail_spec=TailSpec(gamma=4.0, delta=4.0, coeff=1.0))


@pytest.fixture(scope="session")
def grid128():
    return Grid2D(8.0, 128)


@pytest.fixture(scope="session")
def spec128(harmonic, grid128):
    """Lanczos path on the reference harmonic grid, clustered."""
    op = assemble_H(grid128, eval_confining_potential(grid128, harmonic))
    spec = lowest_eigenpairs(op, 7, method="lanczos")
    return group_degenerate(spec, 1e-2, limit=6)


@pytest.fixture(scope="session")
def grid40():
    return Grid2D(8.0, 40)


@pytest.fixture(scope="session")
def dense40(harmonic, grid40):
    """Complete dense basis on a moderate grid, low part clustered."""
    op = assemble_H(grid40, eval_confining_potential(grid40, harmonic))
    spec = lowest_eigenpairs(op, grid40.d, method="dense")
    return group_degenerate(spec, 1e-2, limit=12)


@pytest.fixture(scope="session")
def grid32():
    return Grid2D(8.0, 32)


@pytest.fixture(scope="session")
def dense32(harmonic, grid32):
    op = assemble_H(grid32, eval_confining_potential(grid32, harmonic))
    spec = lowest_eigenpairs(op, grid32.d, method="dense")
    return group_degenerate(spec, 1e-2, limit=10)


@pytest.fixture(scope="session")
def dense32_tail(tailed, grid32):
    """Same base operator as dense32 (the tail enters only fiber shifts)."""
    op = assemble_H(grid32, eval_confining_potential(grid32, tailed))
    spec = lowest_eigenpairs(op, grid32.d, method="dense")
    return group_degenerate(spec, 1e-2, limit=10)


@pytest.fixture(scope="session")
def zgrid():
    return ZGrid(32.0, 256)


@pytest.fixture(scope="session")
def bump(zgrid):
    return AmplitudeSpec(1.0, 0.5, zgrid)


def loglog_slope(xs, ys):
    return float(np.polyfit(np.log(np.asarray(xs, dtype=float)),
                            np.log(np.asarray(ys, dtype=float)), 1)[0])
