"""Problem instances: paired training and validation regression data."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

#: Validation-loss scale per penalty family: the group objective carries no
#: 1/2 factor, the fused objective does, and the held-out score mirrors that.
_LOSS_FACTORS = {"group": 1.0, "fused": 0.5}


@dataclass(frozen=True)
class ProblemInstance:
    """One tuning instance: training pair (A, b) and held-out pair (A_val, b_val)."""

    A: np.ndarray
    b: np.ndarray
    A_val: np.ndarray
    b_val: np.ndarray

    def __post_init__(self):
        for name in ("A", "b", "A_val", "b_val"):
            object.__setattr__(
                self, name, np.array(getattr(self, name), dtype=float)
            )
        if self.A.ndim != 2:
            raise ValueError(f"A must be 2-D, got shape {self.A.shape}")
        m, d = self.A.shape
        if self.b.shape != (m,):
            raise ValueError(f"b must have shape ({m},), got {self.b.shape}")
        if self.A_val.ndim != 2 or self.A_val.shape[1] != d:
            raise ValueError(
                f"A_val must have {d} columns, got shape {self.A_val.shape}"
            )
        if self.b_val.shape != (self.A_val.shape[0],):
            raise ValueError(
                f"b_val must have length {self.A_val.shape[0]}, got {self.b_val.shape}"
            )
        for name in ("A", "b", "A_val", "b_val"):
            getattr(self, name).setflags(write=False)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def m_val(self) -> int:
        return self.A_val.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    def to_json(self) -> dict:
        return {
            "A": self.A.tolist(),
            "b": self.b.tolist(),
            "A_val": self.A_val.tolist(),
            "b_val": self.b_val.tolist(),
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "ProblemInstance":
        return cls(obj["A"], obj["b"], obj["A_val"], obj["b_val"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()) + "\n")

    @classmethod
    def load(cls, path) -> "ProblemInstance":
        return cls.from_json(json.loads(Path(path).read_text()))


def validation_loss(x: ProblemInstance, theta, kind: str) -> float:
    """Held-out squared error of theta, scaled to match the family's objective."""
    if kind not in _LOSS_FACTORS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {sorted(_LOSS_FACTORS)}")
    residual = x.A_val @ np.asarray(theta, dtype=float) - x.b_val
    return _LOSS_FACTORS[kind] * float(residual @ residual)


def smallest_singular_value(A) -> float:
    return float(np.linalg.svd(np.asarray(A, dtype=float), compute_uv=False)[-1])
