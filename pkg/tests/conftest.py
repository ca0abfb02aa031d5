import numpy as np
import pytest

from hpzpair import _accel
from hpzpair.coefficients import PhysicalParams

# (physical parameters, p, r_s) for the five reference scenarios
FIGURES = {
    "fig1": (dict(temperature=0.1, kappa=-0.2), 1.0, 1.0),
    "fig2": (dict(temperature=10.0, kappa=0.2), 1.1, 3.0),
    "fig3": (dict(temperature=1e-4, kappa=0.0), 11.0, 3.0),
    "fig4": (dict(temperature=1.0, kappa=5.0), 1.2, 1.0),
    "fig5": (dict(temperature=1e-4, kappa=-0.249999), 1.2, 0.0),
}


def figure_params(name, **over):
    kw, p, r_s = FIGURES[name]
    kw = {**kw, **over}
    return PhysicalParams(omega_c=40.0, gamma=1 / 128, **kw), p, r_s


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    prev = _accel.backend()
    _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(prev)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        status, title, detail = ACCEPTANCE_RESULTS[num]
        terminalreporter.write_line(f"[{status}] {num:2d}. {title}: {detail}")
