"""Bit-cell I-V models for G-input 8T-SRAM and FeFET crossbars.

The ON cell (input=1, weight=1) is a smoothed square-law transistor with tanh
saturation; every other input/weight combination is a linear leakage
conductance. Positive current flows from the BL node to the SL node.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.optimize import bisect


class CellKind(str, Enum):
    SRAM8T = "SRAM8T"
    FeFET = "FeFET"


# (In=1,w=1), (In=1,w=0), (In=0,w=1), (In=0,w=0) small-signal conductances in S
CONDUCTANCE_TABLE = {
    CellKind.SRAM8T: (1.6e-5, 4.7e-12, 6.6e-12, 2.2e-12),
    CellKind.FeFET: (1.6e-5, 2.5e-7, 4.3e-8, 2.0e-10),
}

DEFAULT_VT = 0.45  # high-Vt device: ON cell sits at the edge of saturation at V_BL
DEFAULT_SMOOTHING = 0.05
VARIATION_FLOOR = 1e-3


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class BiasConfig:
    v_wl: float = 0.7
    v_bl: float = 0.25

    def __post_init__(self):
        if self.v_wl <= 0 or self.v_bl <= 0:
            raise ValueError("bias voltages must be positive")


@dataclass(frozen=True)
class CellTechnology:
    kind: CellKind
    g_on: float
    g_in1_w0: float
    g_in0_w1: float
    g_in0_w0: float
    v_t: float = DEFAULT_VT
    beta: float = 0.0
    smoothing: float = DEFAULT_SMOOTHING

    @property
    def leakage(self) -> np.ndarray:
        """Conductances indexed by [input_bit, weight_bit]; the ON slot is unused."""
        return np.array([[self.g_in0_w0, self.g_in0_w1], [self.g_in1_w0, 0.0]])


@dataclass(frozen=True)
class CellState:
    input_bit: int
    weight_bit: int
    variation_mult: float = 1.0

    def __post_init__(self):
        if self.variation_mult <= 0:
            raise ValueError("variation_mult must be positive")


def _on_current(beta, v_t, smoothing, v_g, v_d, v_s):
    """ON-state current and its partials w.r.t. v_d and v_s (unit multiplier)."""
    z = (v_g - v_s - v_t) / smoothing
    v_eff = np.maximum(smoothing * np.logaddexp(0.0, z), 1e-30)
    sig = 0.5 * (1.0 + np.tanh(0.5 * z))  # d v_eff / d v_g
    v_ds = v_d - v_s
    t = np.tanh(v_ds / v_eff)
    sech2 = 1.0 - t * t
    i = beta * v_eff * v_eff * t
    di_dd = beta * v_eff * sech2
    di_dveff = beta * (2.0 * v_eff * t - v_ds * sech2)
    di_ds = -di_dd - di_dveff * sig
    return i, di_dd, di_ds


def cell_current(tech: CellTechnology, s: CellState, v_g: float, v_d: float, v_s: float) -> float:
    """Current through one cell from its BL (drain) node to its SL (source) node."""
    if s.input_bit == 1 and s.weight_bit == 1:
        i, _, _ = _on_current(tech.beta, tech.v_t, tech.smoothing, v_g, v_d, v_s)
        return float(s.variation_mult * i)
    g = tech.leakage[s.input_bit, s.weight_bit]
    return float(s.variation_mult * g * (v_d - v_s))


def cell_currents(
    tech: CellTechnology,
    on: np.ndarray,
    g_leak: np.ndarray,
    mult: np.ndarray,
    v_g: float,
    v_d: np.ndarray,
    v_s: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised currents and (dI/dv_d, dI/dv_s) for a batch of cells.

    ``on`` marks ON cells, ``g_leak`` holds the linear conductance of the
    others and ``mult`` the variation multipliers. All arrays broadcast.
    """
    i_on, dd_on, ds_on = _on_current(tech.beta, tech.v_t, tech.smoothing, v_g, v_d, v_s)
    v_ds = v_d - v_s
    i = mult * np.where(on, i_on, g_leak * v_ds)
    dd = mult * np.where(on, dd_on, g_leak)
    ds = mult * np.where(on, ds_on, -g_leak)
    return i, dd, ds


def calibrate(kind: CellKind | str, g_on_target: float, bias: BiasConfig = BiasConfig(),
              v_t: float = DEFAULT_VT, smoothing: float = DEFAULT_SMOOTHING,
              table: tuple[float, float, float, float] | None = None) -> CellTechnology:
    """Fit beta so the ON cell conducts g_on_target * v_bl at the reference bias."""
    kind = CellKind(kind)
    g_on, g10, g01, g00 = table if table is not None else CONDUCTANCE_TABLE[kind]
    tech = CellTechnology(kind, g_on_target, g10, g01, g00, v_t=v_t, beta=0.0, smoothing=smoothing)

    def excess(beta: float) -> float:
        i, _, _ = _on_current(beta, v_t, smoothing, bias.v_wl, bias.v_bl, 0.0)
        return float(i) / bias.v_bl - g_on_target

    lo, hi = 1e-15, 10.0
    if not np.isfinite(g_on_target) or excess(lo) * excess(hi) > 0:
        raise CalibrationError(f"cannot bracket beta for g_on_target={g_on_target!r}")
    beta = bisect(excess, lo, hi, xtol=1e-30, rtol=1e-14, maxiter=500)
    return replace(tech, beta=beta)


def default_technology(kind: CellKind | str = CellKind.SRAM8T, bias: BiasConfig = BiasConfig()) -> CellTechnology:
    kind = CellKind(kind)
    return calibrate(kind, CONDUCTANCE_TABLE[kind][0], bias)


def unit_current(tech: CellTechnology, bias: BiasConfig) -> float:
    """Ideal ON-cell current at the reference bias (one output count)."""
    i, _, _ = _on_current(tech.beta, tech.v_t, tech.smoothing, bias.v_wl, bias.v_bl, 0.0)
    return float(i)


def apply_variation(shape: tuple[int, ...], sigma: float, seed: int) -> np.ndarray:
    """Per-cell multipliers drawn from N(1, sigma), floored at 1e-3."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0:
        return np.ones(shape)
    rng = np.random.default_rng(seed)
    return np.maximum(rng.normal(1.0, sigma, size=shape), VARIATION_FLOOR)
