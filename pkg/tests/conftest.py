import pytest

from critbd import renewal


@pytest.fixture(scope="session")
def cross_solve():
    """Volterra solution fine enough for 1e-4 cross-validation on [0, 50]."""
    return renewal.solve_renewal(0.00125, 50.0)


@pytest.fixture(scope="session")
def cross_ode():
    """Truncated-system oracle on [0, 50], snapshots every 0.01."""
    return renewal.solve_ode_truncation(400, 0.00125, 50.0, output_step=0.01)


@pytest.fixture(scope="session")
def tail_solve():
    """Long-horizon cdf for the tail diagnostics (extrapolated triple)."""
    return renewal.solve_renewal_refined(0.0125, 400.0, levels=3)


@pytest.fixture(scope="session")
def gf_solve():
    """Short-horizon fine solve for the generating-function identity."""
    return renewal.solve_renewal(0.001, 10.0)


@pytest.fixture(scope="session")
def gf_ode():
    return renewal.solve_ode_truncation(400, 0.00125, 10.0, output_step=0.01)
