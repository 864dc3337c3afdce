from __future__ import annotations

import pytest

from gradepipe import blackbox
from gradepipe.pipeline import GradingSession
from gradepipe.specfile import load_spec

from support import SPEC_PATH

# These are I/O test-harness classes, not pytest test classes.
blackbox.TestCase.__test__ = False
blackbox.TestResult.__test__ = False
blackbox.TestOutcome.__test__ = False


@pytest.fixture(scope="session")
def leap_spec():
    """The leap-year assignment spec used by the end-to-end tests."""
    return load_spec(SPEC_PATH)


@pytest.fixture
def session_factory(tmp_path):
    """Build grading sessions whose directories all live under tmp_path."""
    sessions = []

    def factory(spec, subdir="run", **overrides):
        root = tmp_path / subdir
        kwargs = dict(
            workspace_root=root / "workspace",
            reports_dir=root / "reports",
            quarantine_dir=root / "quarantine",
            log_path=root / "grading.log",
        )
        kwargs.update(overrides)
        session = GradingSession(spec, **kwargs)
        sessions.append(session)
        return session

    yield factory
    for session in sessions:
        session.close()
