import numpy as np
import pytest
from hypothesis import settings

from lindblad_thermo.lindblad_core import BathSpec, JumpChannel, LindbladModel

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = getattr(item, "criterion_detail", "")
    _CRITERIA[number] = ("PASS" if report.passed else "FAIL", title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        line = f"{status} criterion {number}: {title}"
        if detail:
            line += f" [{detail}]"
        terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def qubit_model(omega=1.3, down=0.7, beta=0.8, hbar=1.0, label="B"):
    """Two-level system with one decay channel and its thermal partner."""
    h = np.diag([0.0, hbar * omega]).astype(complex)
    lower = np.array([[0, 1], [0, 0]], dtype=complex)
    up = down * np.exp(-beta * hbar * omega)
    bath = BathSpec(label, beta, (JumpChannel(omega, down, lower), JumpChannel(-omega, up, lower.T)))
    return LindbladModel(h, (bath,), hbar=hbar)


def random_state(rng, d, mix=0.05):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real
    return (1 - mix) * rho + mix * np.eye(d) / d
