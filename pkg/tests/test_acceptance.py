"""Acceptance gate: one test per verification criterion.

Each test runs the corresponding check from ``fastslow.acceptance`` and
prints its one-line PASS/FAIL verdict (visible with ``pytest -s`` and in
captured output on failure).  The criteria are asserted exactly as stated.

Two of them fail, and the failures are genuine properties of the stated
setup rather than implementation bugs — the checks report the measured
values faithfully instead of loosening thresholds:

* ``optimality``: the exact decay exponent for the weight perturbation
  (alpha1, alpha2) = (1/10, 0) is -1/10 for both s = 1 and s = 2 (the
  multiplier on the equilibrium line is the single monomial -s * r1^beta,
  and the numeric fit matches that exponent to ~1e-15), so the required
  "beta > 0 for every pair" cannot hold.
* ``limit-cycle``: over eps in {0.02, 0.01, 0.005} the tolerance-converged
  amplitude slope is about -1.84; pairwise slopes approach -1 only below
  this eps range, so the required -1 +/- 0.15 cannot hold on this grid.
  The attracting-cycle conditions (|P'| < 1, closure < 1e-6) do hold.
"""

import pytest

from fastslow.acceptance import ALL_CHECKS

CHECKS = dict(ALL_CHECKS)


@pytest.mark.parametrize("name", [n for n, _ in ALL_CHECKS])
def test_criterion(name):
    result = CHECKS[name]()
    print(result.line())
    assert result.passed, result.detail


def test_every_criterion_is_covered():
    assert len(ALL_CHECKS) == 10
