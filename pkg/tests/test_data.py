import gzip
import json
import struct
from math import pi

import numpy as np
import pytest

from qaml.data import (
    Dataset,
    PcaModel,
    Preprocessor,
    check_triplet,
    fit_pca,
    fit_scaling,
    load_iris_csv,
    load_mnist_idx,
    load_processed,
    mine_triplets,
    pca_inverse,
    pca_transform,
    prepare_mnist,
    save_processed,
    scale_to_angles,
)
from qaml.errors import (
    ConsistencyError,
    DatasetTooSmallError,
    DegenerateDataError,
    FormatError,
    MiningError,
    ParseError,
    ShapeError,
)

from conftest import IRIS, MNIST_IMAGES, MNIST_LABELS


def write_idx(tmp_path, images, labels, img_magic=2051, lab_magic=2049, gz=False):
    images = np.asarray(images, dtype=np.uint8)
    img = struct.pack(">IIII", img_magic, *images.shape) + images.tobytes()
    lab = struct.pack(">II", lab_magic, len(labels)) + bytes(labels)
    opener = gzip.compress if gz else (lambda b: b)
    ip, lp = tmp_path / "img", tmp_path / "lab"
    ip.write_bytes(opener(img))
    lp.write_bytes(opener(lab))
    return ip, lp


# --- iris ------------------------------------------------------------------

def test_iris_row(tmp_path):
    path = tmp_path / "iris.data"
    path.write_text("5.1,3.5,1.4,0.2,Iris-setosa\n\n6.3,3.3,6.0,2.5,Iris-virginica\n")
    ds = load_iris_csv(path)
    np.testing.assert_array_equal(ds.features[0], [5.1, 3.5, 1.4, 0.2])
    assert ds.labels.tolist() == [0, 2]


def test_iris_bundled_file():
    ds = load_iris_csv(IRIS)
    assert ds.features.shape == (150, 4)
    assert np.bincount(ds.labels).tolist() == [50, 50, 50]


def test_iris_errors(tmp_path):
    bad = tmp_path / "bad"
    bad.write_text("5.1,3.5,1.4,0.2,Iris-setosa\n5.1,3.5,1.4,Iris-setosa\n")
    with pytest.raises(ParseError, match="line 2"):
        load_iris_csv(bad)
    bad.write_text("5.1,3.5,1.4,0.2,Iris-setosa\n5.1,3.5,1.4,0.2,Iris-germanica\n")
    with pytest.raises(ParseError, match="line 2"):
        load_iris_csv(bad)
    empty = tmp_path / "empty"
    empty.write_text("")
    with pytest.raises(DatasetTooSmallError):
        load_iris_csv(empty)


# --- mnist -----------------------------------------------------------------

def test_mnist_round_trip(tmp_path):
    images = np.zeros((2, 28, 28), dtype=np.uint8)
    images[0, 0, 0] = 255
    images[1, 27, 27] = 51
    for gz in (False, True):
        ds = load_mnist_idx(*write_idx(tmp_path, images, [3, 6], gz=gz))
        assert ds.features.shape == (2, 784)
        assert ds.features[0, 0] == 1.0
        assert ds.features[1, 783] == pytest.approx(0.2)
        assert ds.labels.tolist() == [3, 6]


def test_mnist_magic_bytes(tmp_path):
    ip, lp = write_idx(tmp_path, np.zeros((2, 28, 28)), [1, 2])
    assert ip.read_bytes()[:4] == b"\x00\x00\x08\x03"
    with pytest.raises(FormatError):
        load_mnist_idx(*write_idx(tmp_path, np.zeros((2, 28, 28)), [1, 2], img_magic=2049))
    with pytest.raises(FormatError):
        load_mnist_idx(lp, lp)


def test_mnist_count_mismatch(tmp_path):
    with pytest.raises(ConsistencyError):
        load_mnist_idx(*write_idx(tmp_path, np.zeros((3, 28, 28)), [1, 2]))


def test_mnist_bundled_subset():
    ds = load_mnist_idx(MNIST_IMAGES, MNIST_LABELS)
    assert ds.dim == 784
    assert set(np.unique(ds.labels)) == {3, 6}
    assert len(ds) >= 700
    again = load_mnist_idx(MNIST_IMAGES, MNIST_LABELS)
    assert ds.features.tobytes() == again.features.tobytes()


# --- pca -------------------------------------------------------------------

def test_pca_symmetric_example():
    m = fit_pca(np.array([[1.0, 0.0], [-1.0, 0.0]]), 1)
    np.testing.assert_allclose(m.mean, [0, 0])
    np.testing.assert_allclose(m.components, [[1, 0]], atol=1e-12)
    np.testing.assert_allclose(m.explained_variance, [2.0])
    np.testing.assert_allclose(pca_transform(m, [[1, 0]]), [[1]])
    np.testing.assert_allclose(pca_transform(m, [m.mean]), [[0]])


def test_pca_errors():
    with pytest.raises(DegenerateDataError):
        fit_pca(np.ones((5, 3)), 1)
    with pytest.raises(ShapeError):
        fit_pca(np.random.default_rng(0).normal(size=(3, 5)), 3)
    with pytest.raises(ShapeError):
        pca_transform(fit_pca(np.eye(3), 1), np.ones((1, 2)))


def test_pca_model_invariants(rng):
    X = rng.normal(size=(40, 6)) @ rng.normal(size=(6, 6))
    m = fit_pca(X, 4)
    np.testing.assert_allclose(m.components @ m.components.T, np.eye(4), atol=1e-8)
    assert np.all(np.diff(m.explained_variance) <= 0)
    pivots = m.components[np.arange(4), np.argmax(np.abs(m.components), axis=1)]
    assert np.all(pivots > 0)
    cov = np.cov(X, rowvar=False)
    for v, lam in zip(m.components, m.explained_variance):
        assert np.linalg.norm(cov @ v - lam * v) < 1e-8
    Z = pca_transform(m, X)
    np.testing.assert_allclose(Z.var(axis=0, ddof=1), m.explained_variance, atol=1e-6)


def test_pca_beats_random_projectors():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 5)) * [3, 2, 1, 0.5, 0.2]
    Xc = X - X.mean(axis=0)
    m = fit_pca(X, 3)
    P = m.components
    best = np.linalg.norm(Xc - Xc @ P.T @ P)
    for _ in range(50):
        Q, _ = np.linalg.qr(rng.normal(size=(5, 3)))
        R = Q.T
        assert best <= np.linalg.norm(Xc - Xc @ R.T @ R) + 1e-12


def test_pca_full_rank_round_trip(rng):
    X = rng.normal(size=(10, 4))
    m = fit_pca(X, 4)
    np.testing.assert_allclose(pca_inverse(m, pca_transform(m, X)), X, atol=1e-8)


# --- scaling ---------------------------------------------------------------

def test_scaling_examples():
    s = fit_scaling(np.array([[0.0], [5.0], [10.0]]))
    np.testing.assert_allclose(scale_to_angles(s, [[0], [5], [10]]).ravel(), [0, pi / 2, pi])
    assert scale_to_angles(s, [[12.0]])[0, 0] == pi
    assert scale_to_angles(s, [[-3.0]])[0, 0] == 0
    with pytest.raises(DegenerateDataError):
        fit_scaling(np.array([[1.0, 2.0], [1.0, 3.0]]))


def test_scaling_idempotent_only_on_canonical_range():
    X = np.array([[0.0], [1.0], [pi]])
    s = fit_scaling(X)
    np.testing.assert_allclose(scale_to_angles(s, X), X)
    Y = np.array([[0.5], [1.0], [2.0]])
    assert not np.allclose(scale_to_angles(fit_scaling(Y), Y), Y)


# --- mining ----------------------------------------------------------------

def test_mining_forced_choice():
    ds = Dataset([[1.0], [2.0], [3.0]], [0, 0, 1])
    for t in mine_triplets(ds, 30, np.random.default_rng(0)):
        assert t.rows[0] in (0, 1)
        assert t.rows[1] == 1 - t.rows[0]
        assert t.rows[2] == 2
    assert mine_triplets(ds, 0, np.random.default_rng(0)) == []


def test_mining_errors():
    with pytest.raises(MiningError):
        mine_triplets(Dataset([[1.0], [2.0]], [0, 0]), 1, np.random.default_rng(0))
    with pytest.raises(MiningError):
        mine_triplets(Dataset([[1.0], [2.0]], [0, 1]), 1, np.random.default_rng(0))


def test_mining_is_balanced_and_valid():
    ds = Dataset(np.arange(40.0)[:, None], [0] * 20 + [1] * 20)
    triplets = mine_triplets(ds, 10_000, np.random.default_rng(3))
    for t in triplets:
        check_triplet(t)
        assert ds.labels[t.rows[1]] == t.anchor_label
    frac = np.mean([t.anchor_label for t in triplets])
    assert 0.47 <= frac <= 0.53


def test_mining_deterministic():
    ds = load_iris_csv(IRIS)
    a = mine_triplets(ds, 50, np.random.default_rng(4))
    b = mine_triplets(ds, 50, np.random.default_rng(4))
    assert [t.rows for t in a] == [t.rows for t in b]


# --- cache -----------------------------------------------------------------

def test_processed_cache_round_trip(tmp_path, rng):
    X = rng.normal(size=(30, 6))
    prep = Preprocessor.fit(X, 3)
    ds = prep.apply(Dataset(X, rng.integers(0, 2, 30), "toy"))
    save_processed(tmp_path / "c.json", ds, prep)
    doc = json.loads((tmp_path / "c.json").read_text())
    assert set(doc) == {"name", "k", "pca", "scaling", "features", "labels"}
    back, prep2 = load_processed(tmp_path / "c.json")
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(prep2.transform(X), prep.transform(X))


def test_identity_preprocessing_keeps_axes(rng):
    X = rng.normal(size=(20, 3))
    prep = Preprocessor.fit(X, 3, identity=True)
    np.testing.assert_allclose(prep.transform(X), scale_to_angles(fit_scaling(X), X))


def test_prepare_mnist_shapes():
    tr, te, prep = prepare_mnist(MNIST_IMAGES, MNIST_LABELS, n_train=100, n_test=40, k=8)
    assert tr.features.shape == (100, 8) and te.features.shape == (40, 8)
    assert tr.features.min() >= 0 and tr.features.max() <= pi
    assert tr.features.min(axis=0).tolist() == [0.0] * 8
