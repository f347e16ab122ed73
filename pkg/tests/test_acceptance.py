"""Acceptance suite: one test per documented claim, each printing a
PASS/FAIL line with the measured value and its pinned tolerance.

Run with ``pytest tests/test_acceptance.py -v -s``.  The heavyweight shared
artifacts (parameter grid, adjacency searches) are computed once per
session.
"""

import pytest

from joslab import verify


@pytest.fixture(scope="session")
def state():
    return verify.VerificationState()


@pytest.mark.parametrize("check", verify.CHECKS, ids=lambda fn: fn.__name__)
def test_acceptance(check, state):
    result = check(state)
    print()
    print(result.line())
    assert result.passed is not False, result.line()
