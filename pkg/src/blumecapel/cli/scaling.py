"""Least-squares scaling laws for mixing-time data."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..equilibrium import DomainError

MODELS = ("poly_nlogn", "exponential")


@dataclass
class ScalingFit:
    """Fitted scaling law.

    ``poly_nlogn``: ``value ~ coefficient * n log n`` (``exponent_or_rate`` is
    the fixed exponent 1, residuals are in value units).
    ``exponential``: ``log value ~ log coefficient + exponent_or_rate * n``
    (residuals in log units).
    """

    model: str
    coefficient: float
    exponent_or_rate: float
    r_squared: float
    residuals: list[float]
    n: list[float]
    values: list[float]

    def to_dict(self):
        return asdict(self)


def _r_squared(y, resid):
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if float(np.sum(resid**2)) == 0.0 else 0.0
    return min(1.0, max(0.0, 1.0 - float(np.sum(resid**2)) / ss_tot))


def fit_scaling(points, model):
    """Fit ``[(n, value), ...]`` (at least 4 points, ``n`` strictly increasing)."""
    if model not in MODELS:
        raise DomainError(f"unknown scaling model {model!r}; choose from {MODELS}")
    if len(points) < 4:
        raise DomainError("a scaling fit needs at least 4 points")
    n = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(np.diff(n) <= 0):
        raise DomainError("n must be strictly increasing")
    if model == "poly_nlogn":
        x = n * np.log(n)
        a = float(np.dot(x, y) / np.dot(x, x))
        resid = y - a * x
        return ScalingFit(model, a, 1.0, _r_squared(y, resid), resid.tolist(), n.tolist(), y.tolist())
    if np.any(y <= 0):
        raise DomainError("the exponential model needs positive values")
    logy = np.log(y)
    rate, intercept = np.polyfit(n, logy, 1)
    resid = logy - (intercept + rate * n)
    return ScalingFit(model, math.exp(intercept), float(rate), _r_squared(logy, resid), resid.tolist(), n.tolist(), y.tolist())
