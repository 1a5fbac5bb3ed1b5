import subprocess
import sys

import pytest


@pytest.fixture(scope="session")
def lis_dataset_dir(tmp_path_factory):
    """Small full-trace dataset generated through the dataset CLI."""
    out = tmp_path_factory.mktemp("lis_data")
    result = subprocess.run(
        [sys.executable, "-m", "cotbench.cli", "generate", "--task", "lis",
         "--train", "4:120,8:120", "--eval", "6:60", "--cot", "1.0",
         "--seed", "11", "--out", str(out)],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    return out


@pytest.fixture(scope="session")
def qa_dataset_dir(tmp_path_factory):
    """Question/answer-only dataset (trace rate 0)."""
    out = tmp_path_factory.mktemp("qa_data")
    result = subprocess.run(
        [sys.executable, "-m", "cotbench.cli", "generate", "--task", "lis",
         "--train", "4:80,8:80", "--eval", "6:40", "--cot", "0.0",
         "--seed", "11", "--out", str(out)],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    return out
