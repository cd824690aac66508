"""Two-layer integer MLP classified through the non-ideal crossbar pipeline.

Fixture directory layout::

    layer1.xbw   (in_features + 1) x hidden, signed weights, last row = bias
    layer2.xbw   (hidden + 1) x classes, signed weights, last row = bias
    samples.txt  one sample per line: label followed by in_features integers
    meta.json    {"input_bits": 4, "hidden_shift": k}

The bias rows see a constant input of ``2**input_bits - 1``. Hidden
activations are ReLU'd, shifted right by ``hidden_shift`` and clipped to
``input_bits`` bits.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cells import BiasConfig, CellTechnology, default_technology
from .interconnect import WireModel, ideal_wire_model
from .mvm import AdcPolicy, CrossbarInstance, Mapping, build_crossbar, mvm_execute
from .weightfile import WeightFile, read_xbw


class FixtureError(ValueError):
    pass


@dataclass
class MlpFixture:
    layer1: WeightFile
    layer2: WeightFile
    labels: np.ndarray
    samples: np.ndarray
    input_bits: int
    hidden_shift: int

    @property
    def act_max(self) -> int:
        return 2**self.input_bits - 1


def load_fixture(fixture_dir: str | Path) -> MlpFixture:
    d = Path(fixture_dir)
    try:
        meta = json.loads((d / "meta.json").read_text())
        l1 = read_xbw(d / "layer1.xbw")
        l2 = read_xbw(d / "layer2.xbw")
        data = np.loadtxt(d / "samples.txt", dtype=np.int64, ndmin=2)
    except (OSError, ValueError, KeyError) as exc:
        raise FixtureError(f"{d}: unreadable fixture ({exc})") from exc
    in_bits = int(meta["input_bits"])
    labels, samples = data[:, 0], data[:, 1:]
    if samples.shape[1] + 1 != l1.rows:
        raise FixtureError(f"samples have {samples.shape[1]} features, layer1 expects {l1.rows - 1}")
    if l1.cols + 1 != l2.rows:
        raise FixtureError(f"layer1 has {l1.cols} outputs, layer2 expects {l2.rows - 1}")
    if max(l1.rows, l2.rows, l1.cols, l2.cols) > 128:
        raise FixtureError("layer dimensions must be <= 128")
    if samples.min() < 0 or samples.max() >= 2**in_bits:
        raise FixtureError("sample values exceed input_bits")
    return MlpFixture(l1, l2, labels, samples, in_bits, int(meta["hidden_shift"]))


def _augment(x: np.ndarray, value: int) -> np.ndarray:
    return np.concatenate([x, [value]])


def _hidden(acc: np.ndarray, fx: MlpFixture) -> np.ndarray:
    return np.clip(np.maximum(acc, 0) >> fx.hidden_shift, 0, fx.act_max)


def exact_predict(fx: MlpFixture, x: np.ndarray) -> int:
    h = _hidden(_augment(x, fx.act_max) @ fx.layer1.weights, fx)
    return int(np.argmax(_augment(h, fx.act_max) @ fx.layer2.weights))


def exact_accuracy(fx: MlpFixture) -> float:
    preds = [exact_predict(fx, x) for x in fx.samples]
    return float(np.mean(np.array(preds) == fx.labels))


def _crossbars(fx: MlpFixture, mapping: Mapping, tech: CellTechnology, bias: BiasConfig,
               wire: WireModel) -> tuple[CrossbarInstance, CrossbarInstance]:
    return tuple(
        build_crossbar(l.weights, bits=l.bits, signed=l.signed, tech=tech, bias=bias, wire=wire,
                       mapping=mapping)
        for l in (fx.layer1, fx.layer2)
    )


def crossbar_accuracy(fx: MlpFixture, mapping: Mapping | str, tech: CellTechnology | None = None,
                      bias: BiasConfig = BiasConfig(), wire: WireModel | None = None,
                      adc: AdcPolicy | None = None) -> float:
    tech = tech or default_technology("SRAM8T", bias)
    if wire is None:
        from .config import WireConfig
        wire = WireConfig().model()
    x1, x2 = _crossbars(fx, Mapping(mapping), tech, bias, wire)
    correct = 0
    for x, label in zip(fx.samples, fx.labels):
        acc1 = mvm_execute(_augment(x, fx.act_max), x1, adc=adc, input_bits=fx.input_bits).measured
        h = _hidden(acc1, fx)
        out = mvm_execute(_augment(h, fx.act_max), x2, adc=adc, input_bits=fx.input_bits).measured
        correct += int(np.argmax(out) == label)
    return correct / len(fx.labels)


def demo_mlp(fixture_dir: str | Path, wire: WireModel | None = None, tech: CellTechnology | None = None,
             bias: BiasConfig = BiasConfig()) -> dict:
    """Accuracy of the fixture network under Baseline and Wagonn mappings."""
    fx = load_fixture(fixture_dir)
    return {
        "exact_accuracy": exact_accuracy(fx),
        "baseline_accuracy": crossbar_accuracy(fx, Mapping.BASELINE, tech, bias, wire),
        "wagonn_accuracy": crossbar_accuracy(fx, Mapping.WAGONN, tech, bias, wire),
        "samples": int(len(fx.labels)),
    }


def demo_mlp_ideal(fixture_dir: str | Path) -> dict:
    return demo_mlp(fixture_dir, wire=ideal_wire_model())
