import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpego.scanstat import ScanError, bernoulli_score, mle_q, score_at

from conftest import oracle_score


def grid_max(n, y, e, over, points=20001):
    qs = np.geomspace(1.0, 1e6, points) if over else np.geomspace(1e-6, 1.0, points)
    return max(score_at(float(q), n, y, e) for q in qs)


def test_mle_examples():
    assert mle_q(100, 50, 0.5) == 1.0
    assert mle_q(100, 80, 0.5) == pytest.approx(4.0)
    assert mle_q(10, 10, 0.5) == 1e6
    assert mle_q(10, 0, 0.5, "under") == 1e-6


def test_score_examples():
    assert bernoulli_score(100, 50, 0.5) == (0.0, 1.0)
    s, q = bernoulli_score(100, 80, 0.5)
    assert s == pytest.approx(80 * math.log(4) - 100 * math.log(2.5))
    assert s == pytest.approx(19.27, abs=0.01)
    assert abs(s - grid_max(100, 80, 0.5, True)) <= 1e-6
    assert bernoulli_score(100, 80, 0.5, "under") == (0.0, 1.0)


@pytest.mark.parametrize("args", [(10, 5, 0.0), (10, 5, 1.0), (0, 0, 0.5), (5, 6, 0.5)])
def test_invalid_inputs(args):
    with pytest.raises(ScanError):
        bernoulli_score(*args)
    with pytest.raises(ScanError):
        bernoulli_score(10, 5, 0.5, "sideways")


@settings(max_examples=300, deadline=None)
@given(st.integers(1, 5000), st.floats(0.01, 0.99), st.floats(0, 1), st.booleans())
def test_score_properties(n, e, frac, over):
    y = int(round(frac * n))
    s, q = bernoulli_score(n, y, e, "over" if over else "under")
    assert s >= 0.0
    assert (q >= 1.0) if over else (q <= 1.0)
    if q == 1.0:
        assert s == 0.0
    assert s == oracle_score(n, y, e, over)
