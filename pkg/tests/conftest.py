import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from shapes import box_mesh, box_triangles, stl_binary_bytes  # noqa: E402

# Filled by tests/test_acceptance.py; printed after the run so each
# criterion gets its own pass/fail line.
ACCEPTANCE_RESULTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(line)


@pytest.fixture
def cube_mesh():
    return box_mesh(size=(10.0, 10.0, 10.0))


@pytest.fixture
def cube_stl(tmp_path):
    path = tmp_path / "cube.stl"
    path.write_bytes(stl_binary_bytes(box_triangles(size=(10.0, 10.0, 10.0))))
    return path
