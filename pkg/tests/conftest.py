import pytest

from lchorizon.geometry import tanh_profile
from lchorizon.spectroscopy import ScatterRun, WavePacket, scatter_experiment

# tanh horizon with surface gravity 0.25 resolved on a fine lattice (dx = 0.1)
HEADLINE_PROFILE = dict(c_mid=1.0, delta_c=0.5, width=2.0, v=-1.0)
HEADLINE_KAPPA = 0.25
HEADLINE_PACKET = WavePacket(k0=0.875, sigma_k=0.3, x0=70.0)


def headline_run(**over):
    return scatter_experiment(tanh_profile(**HEADLINE_PROFILE), HEADLINE_PACKET, ScatterRun(**over))


@pytest.fixture(scope="session")
def headline():
    return headline_run()


# ---------------------------------------------------------------- acceptance summary

CRITERIA = {
    1: "dispersion oracle",
    2: "conservation suite",
    3: "horizon geometry",
    4: "Hawking thermality",
    5: "null test",
    6: "Bogoliubov normalization",
    7: "flux consistency",
    8: "switching model",
    9: "cross-module consistency",
}
_outcomes = {}
_seconds = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    num = int(name.split("_")[2])
    failed = report.failed or (report.when == "call" and report.skipped)
    prev = _outcomes.get(num, True)
    if report.when == "call" or failed:
        _outcomes[num] = prev and not failed
    _seconds[num] = _seconds.get(num, 0.0) + report.duration


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for num, title in CRITERIA.items():
        if num in _outcomes:
            verdict = "PASS" if _outcomes[num] else "FAIL"
            terminalreporter.write_line(f"criterion {num} ({title}): {verdict} ({_seconds[num]:.1f} s)")
        else:
            terminalreporter.write_line(f"criterion {num} ({title}): NOT RUN")
