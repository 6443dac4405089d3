"""The sixteen acceptance criteria, one test each.

Each test prints a single ``criterion k: PASS|FAIL`` line; the lines are
also collected into the terminal summary by ``conftest.py``.  Running this
file directly prints the same lines without pytest.
"""

import sys

import pytest

from wricci.verify import CRITERIA

TITLES = {
    1: "M1 curvature constancy",
    2: "M2 curvature constancy",
    3: "sharp eigenvalue on M1(1,-2)",
    4: "Gaussian spectral gap",
    5: "spectral gap sweep",
    6: "eigenfunction shape",
    7: "hyperbolic half-plane example",
    8: "sphere spot check",
    9: "Bochner-Weitzenboeck identity",
    10: "Bochner inequality and equality case",
    11: "monotonicity in N",
    12: "L^2 dichotomy",
    13: "concentration bound",
    14: "log-Sobolev failure and Gaussian control",
    15: "warped product",
    16: "discrete Green identity",
}

RESULTS: dict[int, str] = {}


def evaluate(k: int) -> tuple[bool, str]:
    checks = CRITERIA[k](seed=0, jobs=None)
    ok = all(c.passed for c in checks)
    detail = "; ".join(f"{c.name}: {c.got}" for c in checks)
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {TITLES[k]}  [{detail}]"
    return ok, line


@pytest.mark.parametrize("k", sorted(CRITERIA), ids=lambda k: f"criterion_{k:02d}")
def test_criterion(k):
    ok, line = evaluate(k)
    RESULTS[k] = line
    print(line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for k in sorted(CRITERIA):
        ok, line = evaluate(k)
        failed += not ok
        print(line)
    sys.exit(1 if failed else 0)
