import pytest

from radfriction import toy_atom
from radfriction.experiments import SimSetup


@pytest.fixture(scope="session")
def atom():
    return toy_atom()


@pytest.fixture(scope="session")
def setup(atom):
    return SimSetup(atom)


@pytest.fixture(scope="session")
def small_setup(atom):
    """Coarse grid for fast structural tests."""
    return SimSetup(atom, n_omega=60, n_theta=4, n_phi=4, n_samples=3, t_final=2.0, stride=0.1)


@pytest.fixture(scope="session")
def default_run(setup):
    """Default grid, 7-sample pack, beta = 0.01, out to 10/Gamma0."""
    return setup.run(0.01, t_final=10.0)


@pytest.fixture(scope="session")
def stationary_run(setup):
    return setup.run(0.0, beta_max=0.01, t_final=10.0)


@pytest.fixture
def record(request):
    """Log one acceptance line: ``record(n, passed, detail)``."""
    log = request.config.__dict__.setdefault("_acceptance", {})

    def _record(n, passed, detail):
        log[n] = (bool(passed), detail)
        return passed

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.__dict__.get("_acceptance")
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(log):
        passed, detail = log[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
