import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qfc.config import load_scenario
from qfc.dispersion import load_material

settings.register_profile("qfc", deadline=None, max_examples=30,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qfc")

_CRITERIA = {}


@pytest.fixture
def record_criterion():
    """Store one summary line per acceptance criterion; printed at the end of the run."""
    def record(number, passed, detail):
        _CRITERIA[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[k])


@pytest.fixture(scope="session")
def material():
    return load_material()


@pytest.fixture(scope="session")
def scenario():
    return load_scenario()


@pytest.fixture(scope="session")
def paper_setup(scenario):
    return scenario.to_setup()


def gaussian_grid_jsd(alpha, beta, gamma, n=256, half=8.0):
    """Synthetic correlated Gaussian exp(-a x^2 - b y^2 + 2 g x y) on a square grid, as a normalized Jsd."""
    from qfc.jsd import Jsd, SpectralGrid
    x = np.linspace(-half, half, n)
    grid = SpectralGrid(1000.0 + x, 500.0 + x)
    amp = np.exp(-alpha * x[:, None] ** 2 - beta * x[None, :] ** 2 + 2 * gamma * x[:, None] * x[None, :])
    norm = np.sqrt(np.sum(amp**2) * grid.d_omega_i * grid.d_omega_o)
    return Jsd(grid, amp / norm, norm)


@pytest.fixture(scope="session")
def geometry_result(paper_setup, scenario):
    from qfc.optimize import geometry_comparison
    sw = scenario.sweep
    return geometry_comparison(paper_setup, counter_bracket=tuple(x * 1e-12 for x in sw.duration_bracket_ps),
                               co_bracket=tuple(x * 1e-12 for x in sw.co_duration_bracket_ps))


@pytest.fixture(scope="session")
def qpm_rows(paper_setup, scenario):
    from qfc.optimize import qpm_order_tradeoff
    return {r.order: r for r in qpm_order_tradeoff(paper_setup, scenario.sweep.qpm_orders,
                                                   scenario.sweep.reference_power_w)}
