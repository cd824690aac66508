"""Partial word-line activation schedules."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Strategy(str, Enum):
    FULL = "Full"
    CONSECUTIVE = "ConsecutivePWA"
    STRIDED = "StridedDPWA"


@dataclass(frozen=True)
class ActivationSchedule:
    n_rows: int
    groups: tuple[tuple[int, ...], ...]
    strategy: Strategy

    def __post_init__(self):
        flat = sorted(r for g in self.groups for r in g)
        if flat != list(range(self.n_rows)):
            raise ValueError("groups must partition the rows")
        if self.strategy is Strategy.FULL and len(self.groups) != 1:
            raise ValueError("Full schedule has exactly one group")

    def __len__(self) -> int:
        return len(self.groups)

    @property
    def max_active(self) -> int:
        return max(len(g) for g in self.groups)


def make_groups(n_rows: int, n_groups: int, strategy: Strategy | str) -> ActivationSchedule:
    strategy = Strategy(strategy)
    if strategy is Strategy.FULL:
        n_groups = 1
    if n_groups < 1 or n_rows < 1 or n_rows % n_groups:
        raise ValueError(f"{n_groups} groups do not divide {n_rows} rows")
    size = n_rows // n_groups
    if strategy is Strategy.STRIDED:
        groups = tuple(tuple(range(g, n_rows, n_groups)) for g in range(n_groups))
    else:
        groups = tuple(tuple(range(g * size, (g + 1) * size)) for g in range(n_groups))
    return ActivationSchedule(n_rows, groups, strategy)


def masked_inputs(x, schedule: ActivationSchedule, group_index: int) -> np.ndarray:
    """Zero every input outside the active group (its WL stays at 0 V)."""
    x = np.asarray(x)
    mask = np.zeros(schedule.n_rows, dtype=bool)
    mask[list(schedule.groups[group_index])] = True
    return np.where(mask, x, 0)


def accumulate(cycle_outputs) -> np.ndarray:
    """Sum per-cycle ADC codes column by column."""
    arr = np.asarray(cycle_outputs, dtype=np.int64)
    if arr.ndim != 2:
        raise ValueError("expected a (cycles, columns) array of codes")
    return arr.sum(axis=0)


def group_row_sum_totals(sums, schedule: ActivationSchedule) -> np.ndarray:
    sums = np.asarray(sums)
    return np.array([sums[list(g)].sum() for g in schedule.groups])
