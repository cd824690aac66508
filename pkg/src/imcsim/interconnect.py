"""Wire resistance from Cu scattering models.

Sidewall scattering uses the additive Fuchs-Sondheimer thin-film approximation,
grain-boundary scattering uses Mayadas-Shatzkes. Both return a multiplicative
enhancement of the bulk resistivity.

Units: lengths in nm, resistivities in ohm*um, line resistance in ohm/um.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class WireGeometry:
    width: float = 18.0
    height: float = 20.0
    taper_angle: float = 87.0
    liner_thickness: float = 1.0
    barrier_thickness: float = 2.0
    pitch: float = 36.0

    def __post_init__(self):
        shell = self.liner_thickness + self.barrier_thickness
        if self.width <= 2 * shell:
            raise ValueError(f"width {self.width} nm leaves no Cu core inside {shell} nm of liner+barrier")
        if not 0 < self.taper_angle <= 90:
            raise ValueError(f"taper_angle must be in (0, 90], got {self.taper_angle}")
        if self.height <= shell:
            raise ValueError(f"height {self.height} nm leaves no Cu core")

    def scaled(self, factor: float) -> "WireGeometry":
        """Scale every linear dimension; the taper angle is kept."""
        return replace(
            self,
            width=self.width * factor,
            height=self.height * factor,
            liner_thickness=self.liner_thickness * factor,
            barrier_thickness=self.barrier_thickness * factor,
            pitch=self.pitch * factor,
        )


@dataclass(frozen=True)
class ScatteringParams:
    rho_bulk: float = 0.0172
    mean_free_path: float = 40.0
    gb_reflection: float = 0.135
    specularity: float = 0.95
    # None: use the mean Cu-core width of the wire being evaluated
    grain_size: float | None = None
    rho_liner: float = 2.0
    rho_barrier: float = 3.0

    def __post_init__(self):
        if self.rho_bulk <= 0:
            raise ValueError("rho_bulk must be positive")
        if self.mean_free_path < 0:
            raise ValueError("mean_free_path must be non-negative")
        if self.grain_size is not None and self.grain_size <= 0:
            raise ValueError("grain_size must be positive")
        if not 0 <= self.specularity <= 1:
            raise ValueError("specularity must be in [0, 1]")
        if not 0 <= self.gb_reflection <= 1:
            raise ValueError("gb_reflection must be in [0, 1)")


@dataclass(frozen=True)
class WireModel:
    r_per_length: float
    r_via: float
    r_segment_sram: float
    r_segment_fefet: float
    r_driver: float
    r_sink: float

    def segment(self, technology: str) -> float:
        return self.r_segment_fefet if technology == "FeFET" else self.r_segment_sram


def ms_factor(p: ScatteringParams, grain_size: float | None = None) -> float:
    """Mayadas-Shatzkes grain-boundary resistivity enhancement (>= 1)."""
    d = grain_size if grain_size is not None else p.grain_size
    if d is None or d <= 0:
        raise ValueError("grain size must be positive")
    r = p.gb_reflection
    if r >= 1:
        raise ValueError("gb_reflection = 1 makes the grain-boundary term diverge")
    if r == 0 or p.mean_free_path == 0:
        return 1.0
    a = (p.mean_free_path / d) * r / (1 - r)
    if a < 1e-8:
        bracket = 1 / 3 - a / 2 + a * a
    elif a > 20:
        # large-alpha series; the direct form cancels catastrophically
        bracket = sum((-1) ** k / (k * a ** (k - 3)) for k in range(4, 24))
    else:
        bracket = 1 / 3 - a / 2 + a**2 - a**3 * math.log1p(1 / a)
    return 1 / (3 * bracket)


def fs_factor(p: ScatteringParams, cu_width: float, cu_height: float) -> float:
    """Additive Fuchs-Sondheimer sidewall/surface enhancement (>= 1)."""
    if cu_width <= 0 or cu_height <= 0:
        raise ValueError("Cu core dimensions must be positive")
    return 1 + 0.375 * (1 - p.specularity) * p.mean_free_path * (1 / cu_width + 1 / cu_height)


def _cross_section(g: WireGeometry) -> tuple[float, float, float, float]:
    """Return (outer area, Cu core area, mean Cu width, Cu height) in nm units.

    The outer profile is a trapezoid narrowing toward the bottom. Liner and
    barrier line both sidewalls and the bottom; the top is open.
    """
    shell = g.liner_thickness + g.barrier_thickness
    cot = 1 / math.tan(math.radians(g.taper_angle))
    bottom = g.width - 2 * g.height * cot
    if bottom <= 0:
        raise ValueError("taper closes the trench before the bottom")
    outer = 0.5 * (g.width + bottom) * g.height
    cu_h = g.height - shell
    cu_top = g.width - 2 * shell
    cu_bottom = cu_top - 2 * cu_h * cot
    if cu_h <= 0 or cu_bottom <= 0:
        raise ValueError("Cu core area is not positive")
    cu_w = 0.5 * (cu_top + cu_bottom)
    return outer, cu_w * cu_h, cu_w, cu_h


def line_resistance(g: WireGeometry, p: ScatteringParams) -> float:
    """Resistance per unit length in ohm/um, Cu core in parallel with the shells."""
    outer, core, cu_w, cu_h = _cross_section(g)
    grain = p.grain_size if p.grain_size is not None else cu_w
    rho_cu = p.rho_bulk * ms_factor(p, grain) * fs_factor(p, cu_w, cu_h)

    # shell split between liner and barrier by thickness share
    shell_area = outer - core
    t_l, t_b = g.liner_thickness, g.barrier_thickness
    liner_area = shell_area * t_l / (t_l + t_b) if t_l + t_b > 0 else 0.0
    barrier_area = shell_area - liner_area

    nm2_to_um2 = 1e-6
    conductance = core * nm2_to_um2 / rho_cu
    if liner_area > 0:
        conductance += liner_area * nm2_to_um2 / p.rho_liner
    if barrier_area > 0:
        conductance += barrier_area * nm2_to_um2 / p.rho_barrier
    return 1 / conductance


DEFAULT_SRAM_CELL_HEIGHT = 0.110  # um; ~20 ohm per bit-cell at ~182 ohm/um
DEFAULT_R_DRIVER = 100.0
DEFAULT_R_SINK = 100.0
DEFAULT_R_VIA = 78.0


def build_wire_model(
    g: WireGeometry,
    p: ScatteringParams,
    sram_cell_height: float = DEFAULT_SRAM_CELL_HEIGHT,
    r_driver: float = DEFAULT_R_DRIVER,
    r_sink: float = DEFAULT_R_SINK,
    r_via: float = DEFAULT_R_VIA,
) -> WireModel:
    if sram_cell_height < 0:
        raise ValueError("sram_cell_height must be non-negative")
    if min(r_driver, r_sink, r_via) < 0:
        raise ValueError("resistances must be non-negative")
    r_len = line_resistance(g, p)
    return WireModel(
        r_per_length=r_len,
        r_via=r_via,
        r_segment_sram=r_len * sram_cell_height,
        # FeFET cell is half the SRAM cell height
        r_segment_fefet=r_len * sram_cell_height / 2,
        r_driver=r_driver,
        r_sink=r_sink,
    )


def ideal_wire_model() -> WireModel:
    """All parasitics zero; the crossbar behaves as an exact adder."""
    return WireModel(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
