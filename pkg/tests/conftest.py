import os
from pathlib import Path

import numpy as np
import pytest

from tslab.datasets import MNIST_FILES, encode_idx


_ACCEPTANCE_LINES: list[str] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running training (minutes)")
    config.addinivalue_line("markers", "acceptance: one numbered acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def acceptance(request):
    """``acceptance(criterion, ok, detail)`` prints one PASS/FAIL line now and in the summary."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def report(criterion: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return ok

    return report


def _mnist_dir_or_none():
    d = os.environ.get("TSLAB_DATA_DIR")
    if d and all((Path(d) / f).exists() or (Path(d) / (f + ".gz")).exists() for f in MNIST_FILES.values()):
        return Path(d)
    return None


@pytest.fixture(scope="session")
def full_mnist_dir():
    """Official MNIST files under $TSLAB_DATA_DIR, or None."""
    return _mnist_dir_or_none()


@pytest.fixture(scope="session")
def mnist5k_dir(tmp_path_factory):
    """The 5000-image MNIST sample bundled with mlxtend, written as IDX files.

    Train holds all 5000 images; test is every fifth image (100 per class),
    so the test split overlaps the training split.
    """
    from mlxtend.data import mnist_data

    X, y = mnist_data()
    images = X.astype(np.uint8).reshape(-1, 28, 28)
    labels = y.astype(np.uint8)
    test = np.arange(0, len(labels), 5)
    out = tmp_path_factory.mktemp("mnist5k")
    files = {
        "train_images": images,
        "train_labels": labels,
        "test_images": images[test],
        "test_labels": labels[test],
    }
    for key, arr in files.items():
        (out / MNIST_FILES[key]).write_bytes(encode_idx(arr))
    return out
