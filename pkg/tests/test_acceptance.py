"""Acceptance criteria, one test each; every test prints a single PASS/FAIL line."""

import pytest

from nhskin.acceptance import CRITERIA


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = CRITERIA[number](seed=0, threads=1)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.detail
