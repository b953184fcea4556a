import pytest
from hypothesis import settings

from levy_ssk.experiments import ExperimentConfig, run_trials

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance and printed at the end of the session
ACCEPTANCE: dict[int, tuple[bool, str]] = {}

MAIN_RUN = ExperimentConfig(1.0, 0.5, (150, 300), 1000, 20240601, "PhaseProbability")


@pytest.fixture(scope="session")
def main_run():
    """Shared alpha=1, beta=1/2 run at N=150 and N=300 with 1000 trials each."""
    return MAIN_RUN, run_trials(MAIN_RUN)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
