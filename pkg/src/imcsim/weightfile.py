"""XBW v1 weight files.

Header ``XBW v1 <rows> <cols> <bits> <signed:0|1>`` followed by ``rows`` lines
of ``cols`` whitespace-separated decimal integers. Blank lines and lines
starting with ``#`` are ignored.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class WeightFileError(ValueError):
    pass


@dataclass
class WeightFile:
    weights: np.ndarray
    bits: int
    signed: bool

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


def _range(bits: int, signed: bool) -> tuple[int, int]:
    return (-(1 << (bits - 1)), (1 << (bits - 1)) - 1) if signed else (0, (1 << bits) - 1)


def parse_xbw(text: str, name: str = "<string>") -> WeightFile:
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(i, ln) for i, ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise WeightFileError(f"{name}: empty file")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 6 or parts[:2] != ["XBW", "v1"]:
        raise WeightFileError(f"{name}:{lineno}: expected 'XBW v1 <rows> <cols> <bits> <signed>'")
    try:
        rows, cols, bits, signed = (int(p) for p in parts[2:])
    except ValueError as exc:
        raise WeightFileError(f"{name}:{lineno}: non-integer header field") from exc
    if rows < 1 or cols < 1 or bits < 1 or signed not in (0, 1):
        raise WeightFileError(f"{name}:{lineno}: invalid header values")
    body = lines[1:]
    if len(body) != rows:
        raise WeightFileError(f"{name}: header declares {rows} rows, found {len(body)}")
    lo, hi = _range(bits, bool(signed))
    w = np.empty((rows, cols), dtype=np.int64)
    for r, (lineno, ln) in enumerate(body):
        try:
            vals = [int(v) for v in ln.split()]
        except ValueError as exc:
            raise WeightFileError(f"{name}:{lineno}: non-integer value") from exc
        if len(vals) != cols:
            raise WeightFileError(f"{name}:{lineno}: expected {cols} values, found {len(vals)}")
        w[r] = vals
    if w.min() < lo or w.max() > hi:
        raise WeightFileError(f"{name}: values outside [{lo}, {hi}] for {bits}-bit weights")
    return WeightFile(w, bits, bool(signed))


def read_xbw(path: str | Path) -> WeightFile:
    path = Path(path)
    return parse_xbw(path.read_text(), str(path))


def format_xbw(wf: WeightFile) -> str:
    lines = [f"XBW v1 {wf.rows} {wf.cols} {wf.bits} {int(wf.signed)}"]
    lines += [" ".join(str(int(v)) for v in row) for row in wf.weights]
    return "\n".join(lines) + "\n"


def write_xbw(path: str | Path, wf: WeightFile) -> None:
    Path(path).write_text(format_xbw(wf))
