"""Model parameters shared by the exact and Monte Carlo layers."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .equilibrium import DomainError


@dataclass(frozen=True)
class ModelParams:
    """System size ``n``, inverse temperature ``beta`` and interaction ``k``."""

    n: int
    beta: float
    k: float

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("beta", "k"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} must be finite and positive, got {value!r}")
            object.__setattr__(self, name, value)

    def to_dict(self):
        return {"n": self.n, "beta": self.beta, "k": self.k}
