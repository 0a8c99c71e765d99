"""Shared fixtures: a session-scoped tiny trained checkpoint."""

from __future__ import annotations

import pytest

from _builders import tiny_run_config
from prefdrive.agent.training import train


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> str:
    """A real (briefly trained) checkpoint for CLI/serve/rollout tests."""
    out = tmp_path_factory.mktemp("tiny_train")
    final = train(tiny_run_config(), out)
    return str(final)
