"""One line per acceptance criterion, collected into the terminal summary."""

import math

import pytest

from sieveifs.battery import CRITERIA, run_criterion

SEED = 1


def _fmt(v):
    if v is None:
        return "n/a"
    if isinstance(v, float) and math.isfinite(v):
        return f"{v:.4g}"
    return str(v)


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, acceptance_log):
    rep = run_criterion(number, seed=SEED)
    line = (f"criterion {number:2d}: {'PASS' if rep.passed else 'FAIL'} {rep.name} "
            f"(statistic {_fmt(rep.statistic)}, p {_fmt(rep.p_value)})")
    acceptance_log[number] = line
    print(line)
    assert rep.passed, rep.to_json()
