"""Global test fixtures for the steinloss test suite.

This autouse fixture isolates every test from ``STEINLOSS_*`` variables and
from a ``.env`` file in the working directory, and keeps default outputs
(written to ``.``) inside the test's temporary directory.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch: pytest.MonkeyPatch, tmp_path: Path) -> None:
    """Drop ``STEINLOSS_*`` variables and run inside ``tmp_path``."""
    for key in list(os.environ):
        if key.startswith("STEINLOSS_"):
            monkeypatch.delenv(key)
    monkeypatch.chdir(tmp_path)
