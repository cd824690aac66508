"""Bit-sliced, bit-serial MVM through the non-ideal crossbar.

Weights are stored one bit per cell with the slices of one weight in
adjacent columns (column ``o * bits + k`` holds bit k of output o). Inputs
are streamed one bit per cycle; ADC codes are shift-added digitally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .cells import BiasConfig, CellState, CellTechnology, unit_current
from .interconnect import WireModel
from .schedule import ActivationSchedule, Strategy, make_groups, masked_inputs
from .solver import BatchSolution, solve_batch
from .wagonn import TrackingVector, build_tracking_vector, remap_inputs, remap_weights, row_sums


class Mapping(str, Enum):
    BASELINE = "Baseline"
    WAGONN = "Wagonn"


class WeightOverflow(ValueError):
    pass


def slice_significance(bits: int, signed: bool) -> np.ndarray:
    sig = 2 ** np.arange(bits, dtype=np.int64)
    if signed:
        sig[-1] = -sig[-1]
    return sig


def bit_slice(weights, bits_per_weight: int, signed: bool = False) -> list[np.ndarray]:
    """Split an integer matrix into bit planes, LSB first (2's complement if signed)."""
    w = np.asarray(weights, dtype=np.int64)
    if bits_per_weight < 1:
        raise ValueError("bits_per_weight must be >= 1")
    lo, hi = (-(1 << (bits_per_weight - 1)), (1 << (bits_per_weight - 1)) - 1) if signed \
        else (0, (1 << bits_per_weight) - 1)
    if w.size and (w.min() < lo or w.max() > hi):
        raise WeightOverflow(f"weights outside [{lo}, {hi}] for {bits_per_weight}-bit "
                             f"{'signed' if signed else 'unsigned'}")
    u = w & ((1 << bits_per_weight) - 1)
    return [((u >> k) & 1).astype(np.int8) for k in range(bits_per_weight)]


def recombine(slices: Sequence[np.ndarray], signed: bool = False) -> np.ndarray:
    sig = slice_significance(len(slices), signed)
    return sum(s.astype(np.int64) * int(g) for s, g in zip(slices, sig))


@dataclass(frozen=True)
class AdcConfig:
    bits: int
    full_scale: float

    def __post_init__(self):
        if self.bits < 1 or not self.full_scale > 0:
            raise ValueError("ADC needs bits >= 1 and full_scale > 0")

    @property
    def lsb(self) -> float:
        return self.full_scale / (2**self.bits - 1)


def default_adc(active_rows: int, unit: float) -> AdcConfig:
    """Exact-count ADC: one LSB per ON cell, range covering every active row."""
    bits = max(1, math.ceil(math.log2(active_rows + 1)))
    return AdcConfig(bits, (2**bits - 1) * unit)


def adc_quantize(i, cfg: AdcConfig):
    codes = np.clip(np.rint(np.asarray(i, dtype=float) / cfg.lsb), 0, 2**cfg.bits - 1).astype(np.int64)
    return int(codes) if codes.ndim == 0 else codes


@dataclass
class AdcPolicy:
    """How the per-cycle ADC is chosen; None fields fall back to the exact-count default."""

    bits: int | None = None
    full_scale: float | None = None
    scale_with_schedule: bool = True

    def for_cycle(self, active_rows: int, total_rows: int, unit: float) -> AdcConfig:
        rows = active_rows if self.scale_with_schedule else total_rows
        base = default_adc(rows, unit)
        bits = self.bits if self.bits is not None else base.bits
        fs = self.full_scale if self.full_scale is not None else (
            base.full_scale if self.bits is None else rows * unit)
        return AdcConfig(bits, fs)


@dataclass
class CrossbarInstance:
    """One physical N x P crossbar, weights already in physical row order."""

    weights: np.ndarray
    variation: np.ndarray
    wire: WireModel
    tech: CellTechnology
    bias: BiasConfig
    mapping: Mapping = Mapping.BASELINE
    tracking: TrackingVector | None = None
    column_scale: np.ndarray | None = None
    column_output: np.ndarray | None = None
    inputs: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.int8)
        n, p = self.weights.shape
        self.variation = np.broadcast_to(np.asarray(self.variation, float), (n, p))
        self.mapping = Mapping(self.mapping)
        if (self.mapping is Mapping.WAGONN) != (self.tracking is not None):
            raise ValueError("a tracking vector is required exactly when mapping is Wagonn")
        if self.column_scale is None:
            self.column_scale = np.ones(p, dtype=np.int64)
        if self.column_output is None:
            self.column_output = np.arange(p)
        if self.inputs is None:
            self.inputs = np.zeros(n, dtype=np.int8)

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    @property
    def n_outputs(self) -> int:
        return int(self.column_output.max()) + 1

    @property
    def r_segment(self) -> float:
        return self.wire.segment(self.tech.kind.value)

    def with_inputs(self, bits) -> "CrossbarInstance":
        return replace(self, inputs=np.asarray(bits, dtype=np.int8))

    def cell(self, r: int, c: int) -> CellState:
        return CellState(int(self.inputs[r]), int(self.weights[r, c]), float(self.variation[r, c]))

    def solve(self) -> BatchSolution:
        inp = self.inputs.astype(bool)[:, None]
        w = self.weights.astype(bool)
        on = inp & w
        g_leak = self.tech.leakage[inp.astype(int), self.weights.astype(int)]
        g_leak = np.where(on, 0.0, g_leak)
        v_g = np.where(inp, self.bias.v_wl, 0.0)
        return solve_batch(self.tech, on, g_leak, self.variation, v_g, r_segment=self.r_segment,
                           r_driver=self.wire.r_driver, r_sink=self.wire.r_sink, v_bl=self.bias.v_bl)

    def logical_weights(self) -> np.ndarray:
        """Signed integer weights in the original (logical) row order."""
        w = self.weights.astype(np.int64)
        if self.tracking is not None:
            w = w[self.tracking.dest]
        out = np.zeros((w.shape[0], self.n_outputs), dtype=np.int64)
        np.add.at(out.T, self.column_output, (w * self.column_scale).T)
        return out


def build_crossbar(weights, *, bits: int = 1, signed: bool = False, tech: CellTechnology,
                   bias: BiasConfig, wire: WireModel, mapping: Mapping | str = Mapping.BASELINE,
                   variation=1.0) -> CrossbarInstance:
    """Slice an integer weight matrix into one crossbar, remapping rows for Wagonn.

    ``variation`` is indexed by physical cell position, so paired Baseline and
    Wagonn instances see the same device at the same location.
    """
    w = np.asarray(weights, dtype=np.int64)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-D matrix")
    n, outs = w.shape
    planes = bit_slice(w, bits, signed)
    phys = np.stack(planes, axis=2).reshape(n, outs * bits)
    scale = np.tile(slice_significance(bits, signed), outs)
    col_out = np.repeat(np.arange(outs), bits)
    mapping = Mapping(mapping)
    tv = None
    if mapping is Mapping.WAGONN:
        tv = build_tracking_vector(row_sums(phys))
        phys = remap_weights(phys, tv)
    return CrossbarInstance(phys, variation, wire, tech, bias, mapping, tv, scale, col_out)


@dataclass
class MvmReport:
    ideal: np.ndarray
    measured: np.ndarray
    analog_currents: np.ndarray
    abs_err: np.ndarray
    rmse: float
    max_err: int
    newton_iters_mean: float = 0.0
    newton_iters_max: int = 0
    config_echo: dict = field(default_factory=dict)

    @property
    def mean_abs_err(self) -> float:
        return float(self.abs_err.mean())

    @property
    def total_current(self) -> float:
        return float(self.analog_currents.sum())


def make_report(ideal, measured, analog=None, config_echo=None, iters=None) -> MvmReport:
    ideal = np.asarray(ideal, dtype=np.int64)
    measured = np.asarray(measured, dtype=np.int64)
    err = np.abs(ideal - measured)
    iters = np.asarray(iters if iters is not None else [0])
    return MvmReport(
        ideal=ideal,
        measured=measured,
        analog_currents=np.zeros(len(ideal)) if analog is None else np.asarray(analog, float),
        abs_err=err,
        rmse=float(np.sqrt(np.mean(err.astype(float) ** 2))),
        max_err=int(err.max()) if err.size else 0,
        newton_iters_mean=float(iters.mean()),
        newton_iters_max=int(iters.max()),
        config_echo=dict(config_echo or {}),
    )


def mvm_execute(x, xbars: CrossbarInstance | Sequence[CrossbarInstance],
                schedule: ActivationSchedule | None = None, adc: AdcPolicy | None = None,
                input_bits: int = 1, config_echo: dict | None = None) -> MvmReport:
    """Run one MVM of unsigned integer inputs ``x`` through one or more row tiles.

    With several crossbars, ``x`` is split across them in order and their
    outputs are summed (a layer taller than one array).
    """
    tiles = [xbars] if isinstance(xbars, CrossbarInstance) else list(xbars)
    x = np.asarray(x, dtype=np.int64)
    if x.size and (x.min() < 0 or x.max() >= 2**input_bits):
        raise ValueError(f"inputs must be unsigned {input_bits}-bit integers")
    if sum(t.shape[0] for t in tiles) != x.shape[0]:
        raise ValueError("input length does not match crossbar rows")
    n_out = tiles[0].n_outputs
    adc = adc or AdcPolicy()

    ideal = np.zeros(n_out, dtype=np.int64)
    measured = np.zeros(n_out, dtype=np.int64)
    analog = []
    iters = []
    start = 0
    for xb in tiles:
        n, p = xb.shape
        xs = x[start:start + n]
        start += n
        ideal += xs @ xb.logical_weights()
        sched = schedule if schedule is not None else make_groups(n, 1, Strategy.FULL)
        if sched.n_rows != n:
            raise ValueError("schedule row count does not match crossbar")
        unit = unit_current(xb.tech, xb.bias)
        col_current = np.zeros(p)
        for j in range(input_bits):
            bits = (xs >> j) & 1
            if xb.tracking is not None:
                bits = remap_inputs(bits, xb.tracking)
            counts = np.zeros(p, dtype=np.int64)
            for g in range(len(sched)):
                active = masked_inputs(bits, sched, g)
                sol = xb.with_inputs(active).solve()
                cfg = adc.for_cycle(len(sched.groups[g]), n, unit)
                codes = adc_quantize(sol.i_out, cfg)
                # codes are in LSB units; convert back to ON-cell counts
                counts += np.rint(codes * (cfg.lsb / unit)).astype(np.int64)
                col_current += sol.i_out
                iters.append(sol.newton_iters)
            contrib = np.zeros(n_out, dtype=np.int64)
            np.add.at(contrib, xb.column_output, counts * xb.column_scale)
            measured += contrib << j
        analog.append(col_current)
    iters = np.concatenate(iters) if iters else np.zeros(1)
    analog_cols = np.concatenate(analog)
    return make_report(ideal, measured, analog_cols, config_echo, iters)


@dataclass
class ErrorStats:
    mean_abs_err: float
    rmse: float
    p95_err: float
    win_rate: float | None = None
    mean_diff: float | None = None
    n_pairs: int = 0


class PairingError(ValueError):
    pass


def error_stats(reports: Sequence[MvmReport], baseline: Sequence[MvmReport] | None = None) -> ErrorStats:
    """Pooled error statistics, optionally paired by seed against a baseline set.

    ``win_rate`` is the share of pairs where the report beats its baseline on
    mean absolute error; it is None when every pair is a tie.
    """
    if not reports:
        raise ValueError("no reports")
    errs = np.concatenate([r.abs_err.astype(float) for r in reports])
    stats = ErrorStats(
        mean_abs_err=float(errs.mean()),
        rmse=float(np.sqrt(np.mean(errs**2))),
        p95_err=float(np.percentile(errs, 95)),
    )
    if baseline is None:
        return stats
    by_seed = {}
    for b in baseline:
        seed = b.config_echo.get("seed")
        if seed in by_seed:
            raise PairingError(f"duplicate baseline seed {seed}")
        by_seed[seed] = b
    diffs = []
    for r in reports:
        seed = r.config_echo.get("seed")
        if seed not in by_seed:
            raise PairingError(f"no baseline report for seed {seed}")
        diffs.append(r.mean_abs_err - by_seed[seed].mean_abs_err)
    if len(diffs) != len(by_seed):
        raise PairingError("report and baseline seed sets differ")
    diffs = np.array(diffs)
    decided = diffs != 0
    stats.win_rate = float((diffs < 0).mean()) if decided.any() else None
    stats.mean_diff = float(diffs.mean())
    stats.n_pairs = len(diffs)
    return stats
