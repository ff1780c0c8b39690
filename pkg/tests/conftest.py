import os
from pathlib import Path

import pytest

from lsemix.data import load_mnist

REPO = Path(__file__).resolve().parents[1]


def mnist_dir() -> Path | None:
    for cand in (os.environ.get("LSEMIX_DATA_DIR"), REPO / "data" / "mnist"):
        if cand is None:
            continue
        cand = Path(cand)
        if any(cand.glob("t10k-labels*idx1-ubyte*")):
            return cand
    return None


@pytest.fixture(scope="session")
def mnist():
    d = mnist_dir()
    if d is None:
        pytest.skip("MNIST IDX files not found (set LSEMIX_DATA_DIR)")
    return load_mnist(d, "train"), load_mnist(d, "test")


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
