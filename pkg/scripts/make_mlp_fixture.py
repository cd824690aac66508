"""Train the tiny MLP fixture used by ``imcsim demo-mlp`` (run once, output is committed).

    python scripts/make_mlp_fixture.py tests/fixtures/mlp
"""
import json
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits
from sklearn.model_selection import train_test_split
from sklearn.neural_network import MLPClassifier

from imcsim.weightfile import WeightFile, write_xbw

IN_BITS = 4
HIDDEN = 127  # + bias row = 128 crossbar rows in layer 2
N_SAMPLES = 200


def quantize(w, b):
    full = np.vstack([w, b[None, :] / (2**IN_BITS - 1)])
    scale = np.abs(full).max() / 7
    return np.clip(np.rint(full / scale), -8, 7).astype(np.int64), scale


def main(out: Path):
    digits = load_digits()
    x = np.minimum(digits.data.astype(np.int64), 2**IN_BITS - 1)
    x_tr, x_te, y_tr, y_te = train_test_split(x, digits.target, test_size=0.3, random_state=0)
    clf = MLPClassifier(hidden_layer_sizes=(HIDDEN,), max_iter=600, random_state=0, alpha=1e-3)
    clf.fit(x_tr, y_tr)
    w1, _ = quantize(clf.coefs_[0], clf.intercepts_[0])
    w2, _ = quantize(clf.coefs_[1], clf.intercepts_[1])

    aug = np.hstack([x_tr, np.full((len(x_tr), 1), 2**IN_BITS - 1)])
    acc = np.maximum(aug @ w1, 0)
    p99 = np.percentile(acc[acc > 0], 99)
    shift = max(0, int(np.ceil(np.log2(p99 / (2**IN_BITS - 1)))))

    out.mkdir(parents=True, exist_ok=True)
    write_xbw(out / "layer1.xbw", WeightFile(w1, 4, True))
    write_xbw(out / "layer2.xbw", WeightFile(w2, 4, True))
    lines = [" ".join(map(str, [y, *row])) for y, row in zip(y_te[:N_SAMPLES], x_te[:N_SAMPLES])]
    (out / "samples.txt").write_text("\n".join(lines) + "\n")
    (out / "meta.json").write_text(json.dumps({"input_bits": IN_BITS, "hidden_shift": shift}, indent=2) + "\n")
    print(f"float test accuracy {clf.score(x_te, y_te):.4f}, hidden_shift {shift}")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else "tests/fixtures/mlp"))
