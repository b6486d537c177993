"""Shared fixtures: small simulator-emitted datasets.

The trainer only ever touches the simulator through its CLI and the files
it writes, so fixtures shell out to `predexplore`.
"""

from __future__ import annotations

import shutil
import subprocess

import pytest


@pytest.fixture(scope="session")
def simulator_cli() -> str:
    path = shutil.which("predexplore")
    assert path, "simulator CLI not on PATH"
    return path


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory, simulator_cli) -> str:
    """~100 triplets from 9 tiny synthetic scenes; enough for unit tests."""
    out = tmp_path_factory.mktemp("tinyds")
    proc = subprocess.run(
        [simulator_cli, "make-dataset", "--synthetic", "9",
         "--samples-per-scene", "12", "--seed", "11", "--out", str(out)],
        capture_output=True, text=True, timeout=600,
    )
    assert proc.returncode == 0, proc.stderr
    return str(out)
