import sys

import pytest

from rfthz.channel import AlphaMuParams, pointing_from_jitter
from rfthz.diversity import DiversityConfig
from rfthz.e2e import SystemModel


@pytest.fixture
def single_link():
    """Single-antenna outage configuration: RF alpha=2, mu=2.5; THz alpha=1.5, mu=0.8; 8 cm jitter."""

    def make(gbar=100.0, mu_thz=0.8, sigma=0.08, gbar_thz=None):
        rf = DiversityConfig.iid("SC", 1, AlphaMuParams(2.0, 2.5), gbar)
        return SystemModel(rf, AlphaMuParams(1.5, mu_thz), pointing_from_jitter(sigma), gbar if gbar_thz is None else gbar_thz)

    return make


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
