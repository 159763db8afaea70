import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

TraceStatus = Literal["Converged", "MaxIters", "LineSearchFailed", "DomainError"]

TRACE_COLUMNS = ("k", "f", "grad_norm", "decrement", "step", "sigma_floor", "elapsed_s")


@dataclass(slots=True)
class IterationRecord:
    """State at x_k and the step taken from it.

    `decrement`, `step` and `sigma_floor` describe the step computed at x_k;
    they stay NaN on the last row and for methods that do not define them.
    """

    k: int
    f: float
    grad_norm: float
    elapsed_s: float = 0.
    decrement: float = math.nan
    step: float = math.nan
    sigma_floor: float = math.nan

    def as_row(self) -> tuple:
        return tuple(getattr(self, name) for name in TRACE_COLUMNS)


@dataclass(slots=True, frozen=True)
class TraceSummary:
    final_f: float
    final_grad_norm: float
    iterations: int
    total_seconds: float
    status: TraceStatus


@dataclass(slots=True)
class IterationTrace:
    method: str
    records: list[IterationRecord] = field(default_factory=list)
    status: TraceStatus = "MaxIters"
    x_final: Optional[np.ndarray] = None
    message: str = ""
    iterates: list[np.ndarray] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        if name not in TRACE_COLUMNS:
            raise KeyError(f"unknown trace column '{name}'.")
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    def summary(self) -> TraceSummary:
        if not self.records:
            return TraceSummary(math.nan, math.nan, 0, 0., self.status)
        last = self.records[-1]
        return TraceSummary(
            final_f=last.f,
            final_grad_norm=last.grad_norm,
            iterations=len(self.records) - 1,
            total_seconds=last.elapsed_s,
            status=self.status,
        )

    def is_monotone(self, slack: float = 0.) -> bool:
        """True when f never increases by more than slack * max(1, |f|)."""

        f = self.column("f")
        bound = f[:-1] + slack * np.maximum(1.0, np.abs(f[:-1]))
        return bool(np.all(f[1:] <= bound))
