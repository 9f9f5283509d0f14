"""Refinement-trend model selection on synthetic data."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plab import trend

HS = [1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128]


def test_bounded_below_detected():
    v = [2.0 + 3.0 * h for h in HS]
    rec = trend.classify_trend(HS, v)
    assert rec.verdict == trend.BOUNDED
    assert rec.stable


def test_vanishing_log_detected():
    v = [5.0 / abs(np.log(h)) for h in HS]
    rec = trend.classify_trend(HS, v)
    assert rec.verdict == trend.VLOG


def test_vanishing_power_detected():
    v = [4.0 * h ** 0.7 for h in HS]
    rec = trend.classify_trend(HS, v)
    assert rec.verdict == trend.VPOWER
    assert rec.fits[trend.VPOWER].params["s"] == pytest.approx(0.7, rel=1e-6)


def test_non_monotone_is_inconclusive():
    rec = trend.classify_trend(HS, [1.0, 0.5, 1.0, 0.5, 0.4])
    assert rec.verdict == trend.INCONCLUSIVE
    assert "non-monotone" in rec.notes


def test_nonpositive_is_inconclusive():
    rec = trend.classify_trend(HS, [1.0, 0.5, 0.0, -0.1, -0.2])
    assert rec.verdict == trend.INCONCLUSIVE


def test_needs_three_spacings():
    with pytest.raises(ValueError):
        trend.classify_trend([0.5, 0.25], [1.0, 1.0])
    with pytest.raises(ValueError):
        trend.classify_trend([0.25, 0.5, 1.0], [1.0, 1.0, 1.0])


def test_vanishing_near_tie_still_vanishing():
    """Three points cannot separate the log from the power law, but the
    bounded model is screened out by the total drop; the verdict must land
    on one of the vanishing laws."""
    rec = trend.classify_trend([1 / 8, 1 / 16, 1 / 32], [2.48, 1.89, 1.54])
    assert rec.verdict in (trend.VLOG, trend.VPOWER)


def test_model_fit_predict_roundtrip():
    fits = trend.fit_models(HS, [4.0 * h for h in HS])
    f = fits[trend.VPOWER]
    assert np.allclose(f.predict(np.asarray(HS)), [4.0 * h for h in HS], rtol=1e-8)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(0.5, 5.0), b=st.floats(-0.5, 5.0))
def test_stable_plateau_never_reads_vanishing(a, b):
    v = [a + b * h ** 2 for h in HS]
    if min(v) <= 0:
        return
    rec = trend.classify_trend(HS, v)
    assert rec.verdict in (trend.BOUNDED, trend.INCONCLUSIVE)
