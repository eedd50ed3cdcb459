"""One test per acceptance criterion; each prints its PASS/FAIL line."""

import pytest

from siegelbk import acceptance


def _check(crit, capsys):
    res = crit()
    with capsys.disabled():
        print("\n" + res.line())
        for row in res.table:
            print("      ", row)
    if not res.passed:
        pytest.fail(res.line(), pytrace=False)


@pytest.mark.parametrize("crit", acceptance.CRITERIA, ids=lambda c: f"c{c.number:02d}")
def test_criterion(crit, capsys):
    _check(crit, capsys)


@pytest.mark.slow
@pytest.mark.parametrize("crit", acceptance.SLOW_CRITERIA, ids=lambda c: f"c{c.number:02d}")
def test_slow_criterion(crit, capsys):
    _check(crit, capsys)
