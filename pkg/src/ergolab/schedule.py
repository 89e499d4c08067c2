"""Checkpoint schedules for long-run averages.

All limit quantities in this package are reported through finite surrogates
evaluated at an increasing sequence of checkpoint lengths.  The surrogate for
a limsup is the maximum over the tail checkpoints, for a liminf the minimum;
the tail is the last max(2, ceil(m/3)) checkpoints of an m-point schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ArgumentError


@dataclass(frozen=True)
class CheckpointSchedule:
    """Strictly increasing positive lengths at which averages are recorded."""

    checkpoints: tuple[int, ...]

    def __post_init__(self) -> None:
        cps = tuple(int(n) for n in self.checkpoints)
        object.__setattr__(self, "checkpoints", cps)
        if len(cps) < 2:
            raise ArgumentError("schedule needs at least two checkpoints")
        if cps[0] <= 0:
            raise ArgumentError("checkpoints must be positive")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ArgumentError("checkpoints must be strictly increasing")

    @classmethod
    def geometric(cls, first: int, count: int, ratio: int = 2) -> "CheckpointSchedule":
        """n_i = first * ratio**i for i < count."""
        if first <= 0 or count < 2 or ratio < 2:
            raise ArgumentError("geometric schedule needs first>0, count>=2, ratio>=2")
        return cls(tuple(first * ratio**i for i in range(count)))

    @classmethod
    def up_to(cls, total: int, count: int = 4) -> "CheckpointSchedule":
        """Geometric schedule (ratio 2) ending exactly at ``total``."""
        if total < 2**(count - 1):
            raise ArgumentError(f"total={total} too small for {count} doubling checkpoints")
        return cls(tuple(total // 2**(count - 1 - i) for i in range(count)))

    def __len__(self) -> int:
        return len(self.checkpoints)

    @property
    def last(self) -> int:
        return self.checkpoints[-1]

    @property
    def tail_size(self) -> int:
        return max(2, math.ceil(len(self.checkpoints) / 3))

    def tail(self, values) -> list:
        values = list(values)
        if len(values) != len(self.checkpoints):
            raise ArgumentError("one value per checkpoint expected")
        return values[-self.tail_size:]

    def tail_max(self, values) -> float:
        return max(self.tail(values))

    def tail_min(self, values) -> float:
        return min(self.tail(values))

    def validate_length(self, available: int) -> None:
        if self.last > available:
            raise ArgumentError(
                f"schedule ends at {self.last} but only {available} samples are available"
            )

    def to_json(self) -> dict:
        return {"checkpoints": list(self.checkpoints)}

    @classmethod
    def from_json(cls, data: dict) -> "CheckpointSchedule":
        return cls(tuple(data["checkpoints"]))
