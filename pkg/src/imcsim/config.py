"""Experiment configuration (JSON) with defaults for the 7 nm SRAM setup."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .cells import BiasConfig, CellKind, CONDUCTANCE_TABLE, calibrate
from .interconnect import ScatteringParams, WireGeometry, WireModel, build_wire_model, ideal_wire_model
from .mvm import AdcPolicy, Mapping
from .schedule import Strategy


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class WireConfig(_Strict):
    width_nm: float = 18.0
    height_nm: float = 20.0
    taper_deg: float = 87.0
    liner_nm: float = 1.0
    barrier_nm: float = 2.0
    pitch_nm: float = 36.0
    rho_bulk: float = 0.0172
    mean_free_path_nm: float = 40.0
    gb_reflection: float = 0.135
    specularity: float = 0.95
    grain_size_nm: float | None = None
    rho_liner: float = 2.0
    rho_barrier: float = 3.0
    sram_cell_height_um: float = Field(0.110, ge=0)
    r_driver: float = Field(100.0, ge=0)
    r_sink: float = Field(100.0, ge=0)
    r_via: float = Field(78.0, ge=0)
    ideal: bool = False

    def geometry(self) -> WireGeometry:
        return WireGeometry(self.width_nm, self.height_nm, self.taper_deg, self.liner_nm,
                            self.barrier_nm, self.pitch_nm)

    def scattering(self) -> ScatteringParams:
        return ScatteringParams(self.rho_bulk, self.mean_free_path_nm, self.gb_reflection,
                                self.specularity, self.grain_size_nm, self.rho_liner, self.rho_barrier)

    def model(self) -> WireModel:
        if self.ideal:
            return ideal_wire_model()
        return build_wire_model(self.geometry(), self.scattering(), self.sram_cell_height_um,
                                self.r_driver, self.r_sink, self.r_via)


class BiasModel(_Strict):
    v_wl: float = Field(0.7, gt=0)
    v_bl: float = Field(0.25, gt=0)

    def bias(self) -> BiasConfig:
        return BiasConfig(self.v_wl, self.v_bl)


class CellConfig(_Strict):
    # [In1W1, In1W0, In0W1, In0W0] in S; None -> built-in table for the technology
    conductances: tuple[float, float, float, float] | None = None
    v_t: float = 0.45
    smoothing: float = Field(0.05, gt=0)


class ScheduleSpec(_Strict):
    strategy: Strategy = Strategy.FULL
    groups: int = Field(1, ge=1)

    @property
    def label(self) -> str:
        return self.strategy.value if self.strategy is Strategy.FULL else f"{self.strategy.value}x{self.groups}"


class WeightSource(_Strict):
    source: Literal["random", "file"] = "random"
    density: float = Field(0.5, ge=0, le=1)
    bits: int = Field(1, ge=1, le=16)
    signed: bool = False
    path: str | None = None


class InputSource(_Strict):
    source: Literal["all_ones", "random", "file"] = "all_ones"
    bits: int = Field(1, ge=1, le=16)
    path: str | None = None


class AdcModel(_Strict):
    bits: int | None = Field(None, ge=1)
    full_scale: float | None = Field(None, gt=0)
    scale_with_schedule: bool = True

    def policy(self) -> AdcPolicy:
        return AdcPolicy(self.bits, self.full_scale, self.scale_with_schedule)


def _listify(v):
    return v if isinstance(v, list) else [v]


class ExperimentConfig(_Strict):
    technology: CellKind = CellKind.SRAM8T
    array_rows: int = Field(128, ge=1)
    array_cols: int = Field(128, ge=1)
    wire: WireConfig = WireConfig()
    bias: BiasModel = BiasModel()
    cells: CellConfig = CellConfig()
    mapping: list[Mapping] = Field(default_factory=lambda: [Mapping.BASELINE], min_length=1)
    schedule: list[ScheduleSpec] = Field(default_factory=lambda: [ScheduleSpec()], min_length=1)
    sigma: list[float] = Field(default_factory=lambda: [0.0], min_length=1)
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    weights: WeightSource = WeightSource()
    inputs: InputSource = InputSource()
    adc: AdcModel = AdcModel()

    _single = field_validator("mapping", "schedule", "sigma", "seeds", mode="before")(
        lambda v: _listify(v))

    @field_validator("sigma")
    @classmethod
    def _sigma_nonneg(cls, v):
        if any(s < 0 for s in v):
            raise ValueError("sigma values must be >= 0")
        return v

    def technology_model(self):
        table = self.cells.conductances or CONDUCTANCE_TABLE[self.technology]
        return calibrate(self.technology, table[0], self.bias.bias(), v_t=self.cells.v_t,
                         smoothing=self.cells.smoothing, table=tuple(table))


def parse_config(doc: dict, base_dir: Path | None = None) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    try:
        cfg = ExperimentConfig.model_validate(doc)
    except ValidationError as exc:
        msgs = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            msgs.append(f"{loc}: {err['msg']}")
        raise ConfigError("invalid config: " + "; ".join(msgs)) from None
    if base_dir is not None:
        cfg = _resolve_paths(cfg, base_dir)
    for spec in cfg.schedule:
        if spec.strategy is not Strategy.FULL and cfg.array_rows % spec.groups:
            raise ConfigError(f"schedule.groups: {spec.groups} does not divide array_rows {cfg.array_rows}")
    if cfg.weights.source == "file" and not cfg.weights.path:
        raise ConfigError("weights.path: required when weights.source is 'file'")
    if cfg.inputs.source == "file" and not cfg.inputs.path:
        raise ConfigError("inputs.path: required when inputs.source is 'file'")
    return cfg


def _resolve_paths(cfg: ExperimentConfig, base: Path) -> ExperimentConfig:
    upd = {}
    if cfg.weights.path and not Path(cfg.weights.path).is_absolute():
        upd["weights"] = cfg.weights.model_copy(update={"path": str(base / cfg.weights.path)})
    if cfg.inputs.path and not Path(cfg.inputs.path).is_absolute():
        upd["inputs"] = cfg.inputs.model_copy(update={"path": str(base / cfg.inputs.path)})
    return cfg.model_copy(update=upd) if upd else cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(doc, path.parent)
