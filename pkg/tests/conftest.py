import sys

import numpy as np
import pytest

from structbandit.structure import StructureModel


def all_models(p=6):
    """One model of each kind with ambient dimension p (p must be 6)."""
    return {
        "l1": StructureModel("l1", p, s=2),
        "l2": StructureModel("l2", p),
        "group": StructureModel("group", p, s=1, groups=[[0, 1], [2, 3, 4], [5]]),
        "nuclear": StructureModel("nuclear", p, s=1, shape=(2, 3)),
    }


@pytest.fixture(params=["l1", "l2", "group", "nuclear"])
def model(request):
    return all_models()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
