"""One test per acceptance criterion, at the stated tolerances.

Each test prints a single pass/fail line; the lines are also collected into
an "acceptance criteria" section of the terminal summary.
"""

import pytest

from spmac import reproduce

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(reproduce.CRITERIA))
def test_criterion(number, request):
    result = reproduce.CRITERIA[number]()
    line = result.line()
    print(line)
    request.config.stash[ACCEPTANCE_LINES].append(line)
    failed = {k: v for k, v in result.checks.items() if not v["ok"]}
    assert result.passed, f"criterion {number} failed checks: {failed}"
