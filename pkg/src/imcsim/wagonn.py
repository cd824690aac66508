"""WAGONN row remapping: sort rows by row-sum so dense rows sit next to the ADC.

Row 0 is the top of the crossbar (driver end), row N-1 the bottom (ADC end).
A tracking vector ``dest`` stores, for every original row r, the physical row
it is deployed into.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrackingVector:
    dest: np.ndarray

    def __post_init__(self):
        dest = np.asarray(self.dest, dtype=np.int64)
        n = dest.shape[0]
        if dest.ndim != 1 or not np.array_equal(np.sort(dest), np.arange(n)):
            raise ValueError("tracking vector must be a permutation of 0..N-1")
        object.__setattr__(self, "dest", dest)

    def __len__(self) -> int:
        return self.dest.shape[0]

    @classmethod
    def identity(cls, n: int) -> "TrackingVector":
        return cls(np.arange(n))

    def inverse(self) -> "TrackingVector":
        inv = np.empty_like(self.dest)
        inv[self.dest] = np.arange(len(self))
        return TrackingVector(inv)

    def tolist(self) -> list[int]:
        return [int(d) for d in self.dest]


def row_sums(w: np.ndarray) -> np.ndarray:
    """Number of ones per row, summed over every column (all bit slices)."""
    return np.asarray(w).sum(axis=1).astype(np.int64)


def build_tracking_vector(sums) -> TrackingVector:
    """Stable ascending sort of row-sums; the largest row-sum lands on the bottom row."""
    sums = np.asarray(sums)
    order = np.argsort(sums, kind="stable")
    dest = np.empty(len(sums), dtype=np.int64)
    dest[order] = np.arange(len(sums))
    return TrackingVector(dest)


def remap_weights(w: np.ndarray, tv: TrackingVector) -> np.ndarray:
    w = np.asarray(w)
    if w.shape[0] != len(tv):
        raise ValueError(f"tracking vector has {len(tv)} entries for {w.shape[0]} rows")
    out = np.empty_like(w)
    out[tv.dest] = w
    return out


def remap_inputs(x, tv: TrackingVector) -> np.ndarray:
    """Permute an input vector so input r follows weight row r to ``dest[r]``."""
    return remap_weights(np.asarray(x), tv)


def wagonn_remap(w: np.ndarray) -> tuple[np.ndarray, TrackingVector]:
    tv = build_tracking_vector(row_sums(w))
    return remap_weights(w, tv), tv


@dataclass(frozen=True)
class IruCostModel:
    n_rows: int
    adcs_per_xbar: int
    adc_conversion_cycles: int
    cols: int

    def __post_init__(self):
        if min(self.n_rows, self.adcs_per_xbar, self.adc_conversion_cycles, self.cols) < 1:
            raise ValueError("IRU cost model fields must be positive")
        if self.adcs_per_xbar > self.cols:
            raise ValueError("more ADCs than columns")


@dataclass(frozen=True)
class IruLatency:
    remap_cycles: int
    baseline_mvm_cycles: int
    overhead_fraction: float


def iru_latency(m: IruCostModel) -> IruLatency:
    """Input remap costs one read+write cycle per row and is not overlapped with the MVM."""
    baseline = math.ceil(m.cols / m.adcs_per_xbar) * m.adc_conversion_cycles
    return IruLatency(m.n_rows, baseline, m.n_rows / baseline)
