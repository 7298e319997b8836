"""The ten acceptance criteria, run at full size and tolerance with seed 42."""

import pytest

from crtool.suite import CHECKS, run_check

SEED = 42
RESULTS: dict[int, object] = {}


def result(index: int):
    if index not in RESULTS:
        RESULTS[index] = run_check(index, "paper", SEED)
    return RESULTS[index]


@pytest.mark.parametrize("index", range(1, len(CHECKS) + 1), ids=lambda i: f"criterion{i}")
def test_criterion(index):
    res = result(index)
    line = f"criterion {index}: {'PASS' if res.passed else 'FAIL'}  {res.name}"
    print(line)
    assert res.passed, f"{line}\n{res.values}"
