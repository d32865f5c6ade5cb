"""Shared fixtures and the acceptance-criteria report."""
import json

import pytest

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_mode_config(tmp_path):
    cfg = {
        "target": {"kind": "two_mode", "a": 2.0, "phi_variance": 0.5},
        "subsets": {"component": 0, "a": 1.0, "b": 1.0},
        "proposal": {"sigma2": 3.25, "phi_variance": 0.5},
        "chain": {"n_iter": 20000, "seed": 11, "replicates": 3},
        "sweep": {"sigma_grid": [2.0, 3.25, 5.0]},
        "analysis": {"fit": True, "bounds": True, "bounds_k": 5, "variance_curve_k_max": 5},
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path, cfg
