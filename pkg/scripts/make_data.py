"""Regenerate the bundled datasets under data/.

Iris comes from scikit-learn's packaged copy, rewritten in the UCI
``iris.data`` layout. The MNIST subset (digits 3 and 6) is converted to
IDX from the 10k-digit JSON dump shipped in the ``mnist`` npm package:

    npm pack mnist && tar xzf mnist-*.tgz
    python scripts/make_data.py package/src/digits
"""
import gzip
import json
import struct
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_iris

OUT = Path(__file__).resolve().parents[1] / "data"
IRIS_NAMES = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]


def write_iris():
    iris = load_iris()
    lines = [
        ",".join(f"{v:.1f}" for v in row) + "," + IRIS_NAMES[label]
        for row, label in zip(iris.data, iris.target)
    ]
    (OUT / "iris.data").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_mnist(digits_dir, keep=(3, 6)):
    images, labels = [], []
    for digit in keep:
        flat = np.array(json.loads((Path(digits_dir) / f"{digit}.json").read_text())["data"])
        block = np.round(flat.reshape(-1, 784) * 255).astype(np.uint8)
        images.append(block)
        labels.append(np.full(len(block), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.default_rng(0).permutation(len(labels))
    images, labels = images[order], labels[order]
    with gzip.open(OUT / "mnist36-images-idx3-ubyte.gz", "wb") as fh:
        fh.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        fh.write(images.tobytes())
    with gzip.open(OUT / "mnist36-labels-idx1-ubyte.gz", "wb") as fh:
        fh.write(struct.pack(">II", 2049, len(labels)))
        fh.write(labels.tobytes())


if __name__ == "__main__":
    OUT.mkdir(exist_ok=True)
    write_iris()
    if len(sys.argv) > 1:
        write_mnist(sys.argv[1])
