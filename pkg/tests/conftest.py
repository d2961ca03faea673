import re
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from groundcast.encoders import CrossViewModel, toy_encoder_config


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion, bypassing capture."""
    lines = []
    for outcome, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid or getattr(rep, "when", "call") != "call":
                continue
            match = re.search(r"test_criterion_(\d+)_(\w+)", nodeid)
            if match:
                lines.append((int(match.group(1)), f"ACCEPTANCE {int(match.group(1)):2d} [{match.group(2)}]: {label}"))
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def toy_config():
    return toy_encoder_config()


@pytest.fixture(scope="session")
def toy_model(toy_config):
    model = CrossViewModel.create(toy_config, seed=7)
    model.eval()
    return model


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.PCG64(12345))


def unit_rows(rng, n, d):
    m = rng.standard_normal((n, d))
    return m / np.linalg.norm(m, axis=1, keepdims=True)
