"""Refinement-trend fitting for capacity and influence studies.

Given positive values v(h) at a handful of decreasing spacings, decide
between three candidate laws:

    BoundedBelow    v ~ a + b h^s   (a > 0)
    VanishingLog    v ~ b / (|log h| + c)
    VanishingPower  v ~ b h^s

The log model carries the offset c because discrete obstacles are h/2
fattenings: a null set seen through the mesh behaves like a ball of radius
proportional to h, whose condenser value is b / (|log h| + const).  The
offset is capped so the decaying model cannot mimic a constant over a
finite spacing range.

Selection is by least-squares residual on log-transformed values with a
residual-halving rule, after a stability screen: if the two finest spacings
agree to 10% the value is treated as bounded below; a total drop above 10%
rules the bounded model out.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

__all__ = ["ModelFit", "TrendRecord", "fit_models", "classify_trend"]

BOUNDED = "BoundedBelow"
VLOG = "VanishingLog"
VPOWER = "VanishingPower"
INCONCLUSIVE = "Inconclusive"

_S_GRID = (0.5, 0.75, 1.0, 1.5, 2.0)
_C_GRID = (0.0, 0.35, 0.7, 1.05, 1.4, 2.0, 3.0)
STABILITY_REL = 0.10
NOISE_REL = 0.20
HALVING = 0.5
MAX_RESIDUAL = 0.25


@dataclass
class ModelFit:
    model: str
    params: Dict[str, float]
    residual: float              # RMS on log-transformed values

    def predict(self, h: np.ndarray) -> np.ndarray:
        h = np.asarray(h, dtype=float)
        p = self.params
        if self.model == BOUNDED:
            return p["a"] + p["b"] * h ** p["s"]
        if self.model == VLOG:
            return p["b"] / (np.abs(np.log(h)) + p["c"])
        if self.model == VPOWER:
            return p["b"] * h ** p["s"]
        raise ValueError(self.model)


@dataclass
class TrendRecord:
    hs: List[float]
    values: List[float]
    fits: Dict[str, ModelFit]
    verdict: str
    stable: bool
    notes: str = ""


def _rms_log(values: np.ndarray, pred: np.ndarray) -> float:
    pred = np.maximum(pred, 1e-300)
    return float(np.sqrt(np.mean((np.log(values) - np.log(pred)) ** 2)))


def _fit_bounded(h: np.ndarray, v: np.ndarray) -> Optional[ModelFit]:
    best = None
    for s in _S_GRID:
        A = np.stack([np.ones_like(h), h ** s], axis=1)
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        a, b = coef
        if a <= 0:
            # clamp to the pure-power edge of the family
            continue
        r = _rms_log(v, A @ coef)
        if best is None or r < best.residual:
            best = ModelFit(BOUNDED, {"a": float(a), "b": float(b), "s": s}, r)
    return best


def _fit_log(h: np.ndarray, v: np.ndarray) -> ModelFit:
    best = None
    L = np.abs(np.log(h))
    for c in _C_GRID:
        b = float(np.exp(np.mean(np.log(v) + np.log(L + c))))
        r = _rms_log(v, b / (L + c))
        if best is None or r < best.residual:
            best = ModelFit(VLOG, {"b": b, "c": c}, r)
    return best


def _fit_power(h: np.ndarray, v: np.ndarray) -> ModelFit:
    A = np.stack([np.ones_like(h), np.log(h)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(v), rcond=None)
    logb, s = coef
    s = max(float(s), 0.05)
    b = float(np.exp(np.mean(np.log(v) - s * np.log(h))))
    return ModelFit(VPOWER, {"b": b, "s": s}, _rms_log(v, b * h ** s))


def fit_models(hs: Sequence[float], values: Sequence[float]) -> Dict[str, ModelFit]:
    h = np.asarray(hs, dtype=float)
    v = np.asarray(values, dtype=float)
    fits: Dict[str, ModelFit] = {}
    fb = _fit_bounded(h, v)
    if fb is not None:
        fits[BOUNDED] = fb
    fits[VLOG] = _fit_log(h, v)
    fits[VPOWER] = _fit_power(h, v)
    return fits


def classify_trend(hs: Sequence[float], values: Sequence[float]) -> TrendRecord:
    """hs must be strictly decreasing; values positive."""
    h = np.asarray(hs, dtype=float)
    v = np.asarray(values, dtype=float)
    if h.size < 3:
        raise ValueError("need at least 3 spacings")
    if np.any(np.diff(h) >= 0):
        raise ValueError("spacings must be strictly decreasing")
    if np.any(v <= 0):
        return TrendRecord(list(h), list(v), {}, INCONCLUSIVE, False,
                           "nonpositive values")
    fits = fit_models(h, v)

    # non-monotone beyond the noise allowance -> no verdict
    up = np.diff(v) > NOISE_REL * v[:-1]
    if np.any(up):
        return TrendRecord(list(h), list(v), fits, INCONCLUSIVE, False,
                           "non-monotone beyond 20% noise")

    stable = abs(v[-1] - v[-2]) < STABILITY_REL * abs(v[-2])
    total_drop = 1.0 - v[-1] / v[0]

    if stable and BOUNDED in fits:
        return TrendRecord(list(h), list(v), fits, BOUNDED, True,
                           "two finest spacings agree to 10%")
    candidates = dict(fits)
    if total_drop > STABILITY_REL:
        candidates.pop(BOUNDED, None)
    ranked = sorted(candidates.values(), key=lambda f: f.residual)
    if ranked[0].residual > MAX_RESIDUAL:
        return TrendRecord(list(h), list(v), fits, INCONCLUSIVE, stable,
                           "no admissible model fits the data")
    if BOUNDED not in candidates:
        # only the two vanishing laws remain; the qualitative conclusion is
        # settled by the drop screen, so report the better-fitting law even
        # when the residuals are close
        tie = len(ranked) >= 2 and ranked[0].residual > HALVING * ranked[1].residual
        return TrendRecord(list(h), list(v), fits, ranked[0].model, stable,
                           "vanishing; law is a near-tie" if tie
                           else "residual-halving winner")
    if len(ranked) >= 2 and ranked[0].residual <= HALVING * ranked[1].residual:
        return TrendRecord(list(h), list(v), fits, ranked[0].model, stable,
                           "residual-halving winner")
    if len(ranked) == 1:
        return TrendRecord(list(h), list(v), fits, ranked[0].model, stable,
                           "single admissible model")
    return TrendRecord(list(h), list(v), fits, INCONCLUSIVE, stable,
                       "no model wins by residual halving")
