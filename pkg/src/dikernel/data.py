"""Dataset containers, loaders, scaling, target encoding and mini-batching."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .exceptions import ContractError, DataFormatError
from .objectives import Targets


@dataclass(frozen=True, eq=False)
class Dataset:
    """Samples ``X`` (``d x N``, one column per sample) and targets.

    ``labels`` holds 0-based class ids for classification data and is
    ``None`` for regression; ``label_names`` maps ids back to the labels
    found in the source file. ``feature_min``/``feature_max`` record the
    scaling fitted by :func:`minmax_scale`.
    """

    X: np.ndarray
    targets: Targets
    labels: np.ndarray | None = None
    class_count: int | None = None
    label_names: tuple = ()
    feature_min: np.ndarray | None = None
    feature_max: np.ndarray | None = None

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64)
        if X.ndim != 2:
            raise ContractError(f"X must be d x N, got shape {X.shape}")
        if X.shape[1] != len(self.targets):
            raise ContractError(f"{X.shape[1]} samples but {len(self.targets)} target rows")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)

    @property
    def Y(self) -> np.ndarray:
        return self.targets.Y

    @property
    def d(self) -> int:
        return self.X.shape[0]

    @property
    def N(self) -> int:
        return self.X.shape[1]

    @property
    def is_classification(self) -> bool:
        return self.labels is not None

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        labels = None if self.labels is None else self.labels[idx]
        if labels is not None and self.targets.encoding != "raw":
            targets = one_hot(labels, self.class_count, _MODE[self.targets.encoding])
        else:
            targets = Targets(self.Y[idx], self.targets.encoding)
        return replace(self, X=self.X[:, idx], targets=targets, labels=labels)

    def with_encoding(self, encoding: str) -> "Dataset":
        if self.labels is None:
            raise ContractError("only classification data can be re-encoded")
        return replace(self, targets=one_hot(self.labels, self.class_count, _MODE[encoding]))


_MODE = {"one_hot": "raw", "one_hot_unit_norm": "unit_norm", "raw": "raw", "unit_norm": "unit_norm"}


def one_hot(labels, L: int, mode: str = "raw") -> Targets:
    """Class indicator matrix; ``unit_norm`` scales each column to unit norm.

    Columns of classes absent from ``labels`` stay zero.
    """
    labels = np.asarray(labels, dtype=np.int64).reshape(-1)
    if labels.size and (labels.min() < 0 or labels.max() >= L):
        raise ContractError(f"labels must lie in [0, {L})")
    Y = np.zeros((labels.size, L))
    Y[np.arange(labels.size), labels] = 1.0
    if mode == "raw":
        return Targets(Y, "one_hot")
    if mode != "unit_norm":
        raise ContractError(f"unknown one-hot mode {mode!r}")
    counts = Y.sum(axis=0)
    Y /= np.sqrt(np.where(counts > 0, counts, 1.0))
    return Targets(Y, "one_hot_unit_norm")


def _encode_labels(raw, regression: bool, encoding: str):
    if regression:
        return Targets(np.asarray(raw, dtype=np.float64), "raw"), None, None, ()
    ids: dict = {}
    labels = np.array([ids.setdefault(v, len(ids)) for v in raw], dtype=np.int64)
    L = len(ids)
    return one_hot(labels, L, _MODE[encoding]), labels, L, tuple(ids)


def _label_value(token: str):
    try:
        v = float(token)
    except ValueError:
        return token
    return int(v) if v.is_integer() else v


def load_libsvm(path, n_features: int | None = None, regression: bool = False,
                encoding: str = "one_hot") -> Dataset:
    """Read a LIBSVM/SVMlight text file (1-based feature indices) into a dense dataset."""
    path = Path(path)
    rows, raw = [], []
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            head, *pairs = line.split()
            feats = {}
            try:
                label = float(head) if regression else _label_value(head)
                for p in pairs:
                    k, v = p.split(":")
                    k = int(k)
                    if k < 1:
                        raise ValueError(f"feature index {k} < 1")
                    feats[k] = float(v)
            except ValueError as e:
                raise DataFormatError(f"{path}:{lineno}: malformed line ({e})") from None
            rows.append(feats)
            raw.append(label)
    if not rows:
        raise DataFormatError(f"{path}: empty dataset")
    d = max((max(r) for r in rows if r), default=0)
    if n_features is not None:
        if n_features < d:
            raise DataFormatError(f"{path}: feature index {d} exceeds n_features={n_features}")
        d = n_features
    X = np.zeros((d, len(rows)))
    for j, feats in enumerate(rows):
        for k, v in feats.items():
            X[k - 1, j] = v
    targets, labels, L, names = _encode_labels(raw, regression, encoding)
    return Dataset(X, targets, labels, L, names)


def load_csv(path, label_column: int = -1, header: bool = False, regression: bool = False,
             encoding: str = "one_hot", delimiter: str = ",") -> Dataset:
    """Read a delimited text file with one sample per row."""
    path = Path(path)
    cols, raw = [], []
    width = None
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, rec in enumerate(reader, 1):
            if header and lineno == 1:
                continue
            if not rec or all(not c.strip() for c in rec):
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise DataFormatError(f"{path}:{lineno}: expected {width} fields, got {len(rec)}")
            rec = [c.strip() for c in rec]
            lab = rec.pop(label_column)
            try:
                cols.append([float(c) for c in rec])
                raw.append(float(lab) if regression else _label_value(lab))
            except ValueError as e:
                raise DataFormatError(f"{path}:{lineno}: malformed value ({e})") from None
    if not cols:
        raise DataFormatError(f"{path}: empty dataset")
    targets, labels, L, names = _encode_labels(raw, regression, encoding)
    return Dataset(np.array(cols).T, targets, labels, L, names)


def _raw_labels(data: Dataset):
    if data.labels is None:
        return [repr(float(v)) for v in data.Y[:, 0]]
    names = data.label_names or tuple(range(data.class_count))
    return [str(names[i]) for i in data.labels]


def save_libsvm(data: Dataset, path) -> None:
    """Write ``data`` in LIBSVM format; zero entries are omitted."""
    with Path(path).open("w") as fh:
        for j, lab in enumerate(_raw_labels(data)):
            x = data.X[:, j]
            nz = np.flatnonzero(x)
            fh.write(" ".join([lab] + [f"{k + 1}:{float(x[k])!r}" for k in nz]) + "\n")


def save_csv(data: Dataset, path, header: bool = False) -> None:
    """Write ``data`` as CSV with the label in the last column."""
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow([f"x{i}" for i in range(data.d)] + ["label"])
        for j, lab in enumerate(_raw_labels(data)):
            w.writerow([repr(float(v)) for v in data.X[:, j]] + [lab])


def minmax_scale(train: Dataset, others=()):
    """Fit a per-feature map onto [0, 1] on ``train`` and apply it to every dataset.

    Constant features map to 0. Values of other datasets are not clipped.
    Returns ``(train_scaled, [other_scaled, ...])``.
    """
    if train.N == 0:
        raise ContractError("cannot fit scaling on an empty dataset")
    lo = train.X.min(axis=1)
    hi = train.X.max(axis=1)
    span = hi - lo
    const = span == 0

    def apply(ds: Dataset) -> Dataset:
        Z = (ds.X - lo[:, None]) / np.where(const, 1.0, span)[:, None]
        Z[const] = 0.0
        return replace(ds, X=Z, feature_min=lo.copy(), feature_max=hi.copy())

    return apply(train), [apply(o) for o in others]


def batch_iter(data: Dataset, batch_size: int, seed, epoch: int):
    """Yield the ``floor(N / batch_size)`` disjoint full batches of one epoch.

    The permutation depends only on ``(seed, epoch)``. For unit-norm one-hot
    targets each batch is re-normalized with its own class counts.
    """
    N = data.N
    if not 1 <= batch_size <= N:
        raise ContractError(f"batch size {batch_size} must be in [1, {N}]")
    perm = np.random.default_rng([int(seed), int(epoch)]).permutation(N)
    unit = data.targets.encoding == "one_hot_unit_norm" and data.labels is not None
    for b in range(N // batch_size):
        idx = perm[b * batch_size:(b + 1) * batch_size]
        Yb = one_hot(data.labels[idx], data.class_count, "unit_norm").Y if unit else data.Y[idx]
        yield data.X[:, idx], Yb


def make_blobs(n_samples: int = 1000, n_features: int = 2, n_classes: int = 2,
               clusters_per_class: int = 1, separation: float = 3.0, noise: float = 1.0,
               seed=0, encoding: str = "one_hot") -> Dataset:
    """Gaussian class blobs.

    Cluster centres are drawn from ``N(0, separation^2 I)``; samples add
    isotropic noise with standard deviation ``noise``. Each class owns
    ``clusters_per_class`` centres, which makes classes multimodal when
    greater than one. Labels are assigned uniformly at random.
    """
    rng = np.random.default_rng(seed)
    centres = rng.normal(0.0, separation, size=(n_classes * clusters_per_class, n_features))
    labels = rng.integers(0, n_classes, size=n_samples)
    which = labels * clusters_per_class + rng.integers(0, clusters_per_class, size=n_samples)
    X = centres[which] + rng.normal(0.0, noise, size=(n_samples, n_features))
    return Dataset(X.T, one_hot(labels, n_classes, _MODE[encoding]), labels, n_classes,
                   tuple(range(n_classes)))


def train_test_split(data: Dataset, n_test: int, seed=0):
    """Random split into ``(train, test)`` with ``n_test`` test samples."""
    if not 0 < n_test < data.N:
        raise ContractError(f"n_test must be in (0, {data.N})")
    perm = np.random.default_rng(seed).permutation(data.N)
    return data.subset(np.sort(perm[n_test:])), data.subset(np.sort(perm[:n_test]))
