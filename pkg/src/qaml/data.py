"""Dataset ingestion, PCA, angle scaling and triplet mining."""
from __future__ import annotations

import gzip
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConsistencyError,
    DatasetTooSmallError,
    DegenerateDataError,
    FormatError,
    MiningError,
    ParseError,
    ShapeError,
)

IRIS_CLASSES = {"setosa": 0, "versicolor": 1, "virginica": 2}
IDX_IMAGES_MAGIC = 2051
IDX_LABELS_MAGIC = 2049


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int).ravel()
        if self.features.ndim != 2:
            raise ShapeError("features must be an N x d matrix")
        if self.features.shape[0] != self.labels.shape[0]:
            raise ConsistencyError(
                f"{self.features.shape[0]} feature rows but {self.labels.shape[0]} labels")
        if self.features.shape[0] < 2:
            raise DatasetTooSmallError(f"dataset {self.name!r} has fewer than 2 samples")
        if np.isnan(self.features).any():
            raise DegenerateDataError(f"dataset {self.name!r} contains NaN")

    def __len__(self):
        return self.labels.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def subset(self, rows, name=None):
        rows = np.asarray(rows)
        return Dataset(self.features[rows], self.labels[rows], name or self.name)

    def with_labels(self, keep):
        """Rows whose label is in ``keep``."""
        mask = np.isin(self.labels, list(keep))
        return self.subset(np.flatnonzero(mask))


@dataclass(frozen=True)
class TripletSet:
    anchor: np.ndarray
    positive: np.ndarray
    negative: np.ndarray
    anchor_label: int
    negative_label: int
    rows: tuple = None  # (anchor, positive, negative) dataset row indices

    def replace_anchor(self, anchor):
        return TripletSet(np.asarray(anchor, dtype=float), self.positive, self.negative,
                          self.anchor_label, self.negative_label, self.rows)


# --- loaders ---------------------------------------------------------------

def load_iris_csv(path):
    """Parse the UCI ``iris.data`` layout: four decimals and a class name."""
    features, labels = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != 5:
                raise ParseError(f"expected 5 fields, found {len(fields)}", lineno)
            try:
                row = [float(f) for f in fields[:4]]
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            name = fields[4].lower()
            name = name[5:] if name.startswith("iris-") else name
            if name not in IRIS_CLASSES:
                raise ParseError(f"unknown class {fields[4]!r}", lineno)
            features.append(row)
            labels.append(IRIS_CLASSES[name])
    if len(features) < 2:
        raise DatasetTooSmallError(f"{path}: fewer than 2 rows")
    return Dataset(np.array(features), np.array(labels), "iris")


def _read_bytes(path):
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _idx_header(raw, magic, ndim, path):
    size = 4 * (1 + ndim)
    if len(raw) < size:
        raise FormatError(f"{path}: truncated IDX header")
    found, *dims = struct.unpack(">" + "I" * (1 + ndim), raw[:size])
    if found != magic:
        raise FormatError(f"{path}: magic {found} does not match expected {magic}")
    if len(raw) - size != int(np.prod(dims)):
        raise FormatError(f"{path}: payload has {len(raw) - size} bytes, header "
                          f"promises {int(np.prod(dims))}")
    return dims, size


def load_mnist_idx(images_path, labels_path):
    """Read an IDX image/label pair (optionally gzipped); pixels scaled to [0, 1]."""
    img = _read_bytes(images_path)
    lab = _read_bytes(labels_path)
    (count, rows, cols), off = _idx_header(img, IDX_IMAGES_MAGIC, 3, images_path)
    (nlab,), loff = _idx_header(lab, IDX_LABELS_MAGIC, 1, labels_path)
    if count != nlab:
        raise ConsistencyError(f"{count} images but {nlab} labels")
    pixels = np.frombuffer(img, dtype=np.uint8, offset=off).reshape(count, rows * cols)
    labels = np.frombuffer(lab, dtype=np.uint8, offset=loff).astype(int)
    return Dataset(pixels / 255.0, labels, "mnist")


# --- PCA -------------------------------------------------------------------

@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray  # k x d0, orthonormal rows
    explained_variance: np.ndarray

    @property
    def k(self):
        return self.components.shape[0]


def fit_pca(X, k):
    X = np.asarray(X, dtype=float)
    n, d0 = X.shape
    if not 1 <= k <= min(n - 1, d0):
        raise ShapeError(f"k={k} must lie in [1, min(N-1, d)] = [1, {min(n - 1, d0)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = Xc.T @ Xc / (n - 1)
    if np.trace(cov) <= 0:
        raise DegenerateDataError("data has zero variance")
    vals, vecs = np.linalg.eigh(cov)
    order = np.argsort(vals)[::-1][:k]
    comps = vecs[:, order].T
    # sign convention: largest-magnitude entry positive
    pivots = comps[np.arange(k), np.argmax(np.abs(comps), axis=1)]
    comps *= np.where(pivots < 0, -1.0, 1.0)[:, None]
    return PcaModel(mean, comps, np.clip(vals[order], 0.0, None))


def pca_transform(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.mean.shape[0]:
        raise ShapeError(f"expected {model.mean.shape[0]} columns, got {X.shape[1]}")
    return (X - model.mean) @ model.components.T


def pca_inverse(model, Z):
    return np.atleast_2d(Z) @ model.components + model.mean


# --- angle scaling ---------------------------------------------------------

@dataclass
class ScalingModel:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        self.min = np.asarray(self.min, dtype=float)
        self.max = np.asarray(self.max, dtype=float)
        if np.any(self.min >= self.max):
            raise DegenerateDataError("every column needs min < max")


def fit_scaling(X_train):
    X = np.atleast_2d(np.asarray(X_train, dtype=float))
    lo, hi = X.min(axis=0), X.max(axis=0)
    flat = np.flatnonzero(lo >= hi)
    if flat.size:
        raise DegenerateDataError(f"constant column(s) {flat.tolist()}")
    return ScalingModel(lo, hi)


def scale_to_angles(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.min.shape[0]:
        raise ShapeError(f"expected {model.min.shape[0]} columns, got {X.shape[1]}")
    return np.clip(np.pi * (X - model.min) / (model.max - model.min), 0.0, np.pi)


@dataclass
class Preprocessor:
    pca: PcaModel
    scaling: ScalingModel

    @classmethod
    def fit(cls, X_train, k, identity=False):
        """PCA to ``k`` dimensions, then min-max to angles.

        ``identity=True`` keeps the original axes (no rotation, no
        reordering); the stored "variances" are then the raw column
        variances and need not be sorted.
        """
        X = np.asarray(X_train, dtype=float)
        if identity:
            pca = PcaModel(np.zeros(X.shape[1]), np.eye(X.shape[1]), X.var(axis=0, ddof=1))
        else:
            pca = fit_pca(X, k)
        return cls(pca, fit_scaling(pca_transform(pca, X)))

    def transform(self, X):
        return scale_to_angles(self.scaling, pca_transform(self.pca, X))

    def apply(self, ds):
        return Dataset(self.transform(ds.features), ds.labels, ds.name)


def train_test_split(ds, n_train, n_test, rng):
    if n_train + n_test > len(ds):
        raise DatasetTooSmallError(f"asked for {n_train + n_test} rows, have {len(ds)}")
    order = rng.permutation(len(ds))
    return ds.subset(order[:n_train]), ds.subset(order[n_train:n_train + n_test])


# --- triplets --------------------------------------------------------------

def mine_triplets(ds, count, rng):
    """Uniformly mined triplets.

    Anchors are drawn uniformly over rows whose class has at least one other
    member; the positive is uniform over the rest of that class and the
    negative uniform over all other-class rows.
    """
    if count == 0:
        return []
    labels = ds.labels
    classes, sizes = np.unique(labels, return_counts=True)
    if classes.size < 2:
        raise MiningError("triplet mining needs at least two classes")
    members = {c: np.flatnonzero(labels == c) for c in classes}
    others = {c: np.flatnonzero(labels != c) for c in classes}
    eligible = np.flatnonzero(np.isin(labels, classes[sizes >= 2]))
    if eligible.size == 0:
        raise MiningError("no class has two samples, so no positive exists")
    out = []
    for _ in range(count):
        ia = int(eligible[rng.integers(eligible.size)])
        c = labels[ia]
        same = members[c]
        ip = int(same[same != ia][rng.integers(same.size - 1)])
        ineg = int(others[c][rng.integers(others[c].size)])
        out.append(TripletSet(ds.features[ia], ds.features[ip], ds.features[ineg],
                              int(c), int(labels[ineg]), (ia, ip, ineg)))
    return out


def check_triplet(t):
    """Raise if a triplet violates its label invariants."""
    if t.anchor_label == t.negative_label:
        raise MiningError("negative shares the anchor's class")
    if t.rows is not None and t.rows[0] == t.rows[1]:
        raise MiningError("anchor and positive are the same row")


# --- processed-dataset cache -----------------------------------------------

def save_processed(path, ds, prep):
    doc = {
        "name": ds.name,
        "k": int(prep.pca.k),
        "pca": {"mean": prep.pca.mean.tolist(),
                "components": prep.pca.components.tolist(),
                "variance": prep.pca.explained_variance.tolist()},
        "scaling": {"min": prep.scaling.min.tolist(), "max": prep.scaling.max.tolist()},
        "features": ds.features.tolist(),
        "labels": ds.labels.tolist(),
    }
    Path(path).write_text(json.dumps(doc))


def load_processed(path):
    try:
        doc = json.loads(Path(path).read_text())
        pca = PcaModel(np.array(doc["pca"]["mean"], float),
                       np.array(doc["pca"]["components"], float),
                       np.array(doc["pca"]["variance"], float))
        scaling = ScalingModel(doc["scaling"]["min"], doc["scaling"]["max"])
        ds = Dataset(np.array(doc["features"], float), np.array(doc["labels"], int), doc["name"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed processed dataset ({exc})") from exc
    if ds.dim != doc["k"]:
        raise ConsistencyError(f"{path}: k={doc['k']} but features have {ds.dim} columns")
    return ds, Preprocessor(pca, scaling)


# --- standard preparations -------------------------------------------------

def prepare_split(ds, classes, n_train, n_test, k, split_seed=7, identity=False):
    """Binary subset -> seeded train/test split -> preprocessing fitted on train."""
    ds = ds.with_labels(classes)
    tr, te = train_test_split(ds, n_train, n_test, np.random.default_rng(split_seed))
    prep = Preprocessor.fit(tr.features, k, identity=identity)
    return prep.apply(tr), prep.apply(te), prep


def prepare_iris(path, classes=(0, 1), n_train=70, n_test=30, split_seed=7, identity=True):
    return prepare_split(load_iris_csv(path), classes, n_train, n_test, 4, split_seed, identity)


def prepare_mnist(images_path, labels_path, classes=(3, 6), n_train=500, n_test=200, k=8,
                  split_seed=7):
    ds = load_mnist_idx(images_path, labels_path)
    return prepare_split(ds, classes, n_train, n_test, k, split_seed)
