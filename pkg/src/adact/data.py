"""Synthetic datasets, CSV ingestion, standardisation and k-fold cross-validation."""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .network import forward, mse, pe, worker_count


class ParseError(ValueError):
    def __init__(self, line, msg):
        self.line = line
        super().__init__(f"line {line}: {msg}")


@dataclass
class Dataset:
    X: np.ndarray
    T: np.ndarray
    kind: str = "approximation"
    names: list | None = None
    classes: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.T = np.asarray(self.T, dtype=np.float64)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        if self.T.ndim == 1:
            self.T = self.T[:, None]
        if self.X.shape[0] != self.T.shape[0]:
            raise ValueError(f"{self.X.shape[0]} pattern rows but {self.T.shape[0]} target rows")
        if self.kind not in ("approximation", "classification"):
            raise ValueError(f"unknown dataset kind {self.kind!r}")

    def __len__(self):
        return self.X.shape[0]

    def subset(self, idx):
        return replace(self, X=self.X[idx], T=self.T[idx])

    def to_csv(self, path):
        header = self.names or (
            [f"x{j + 1}" for j in range(self.X.shape[1])] + [f"t{i + 1}" for i in range(self.T.shape[1])]
        )
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for x, t in zip(self.X, self.T):
                w.writerow([repr(float(v)) for v in x] + [repr(float(v)) for v in t])


def gen_sine(n_train=5000, n_test=100, seed=0):
    """Train on ``sin(x)`` for x uniform on [0, 4pi]; test on x uniform on [0, 2pi]."""
    if n_train < 1 or n_test < 1:
        raise ValueError("n_train and n_test must be at least 1")
    rng = np.random.default_rng(seed)
    x_tr = rng.uniform(0.0, 4 * math.pi, n_train)
    x_te = rng.uniform(0.0, 2 * math.pi, n_test)
    return (
        Dataset(x_tr[:, None], np.sin(x_tr)[:, None], names=["x", "t"]),
        Dataset(x_te[:, None], np.sin(x_te)[:, None], names=["x", "t"]),
    )


def rosenbrock(X):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    x1, x2 = X[:, 0], X[:, 1]
    return (1 - x1) ** 2 + 100 * (x2 - x1**2) ** 2


def gen_rosenbrock(n=1000, seed=0, low=-2.0, high=2.0):
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(low, high, (n, 2))
    return Dataset(X, rosenbrock(X)[:, None], names=["x1", "x2", "t"])


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_csv(path, n_inputs, n_outputs=1, kind="approximation"):
    """Read a comma-delimited pattern file.

    A first row with any non-numeric field is taken as a header. For
    classification the single output field is an integer class label and is
    expanded to one-hot targets over the distinct labels present.
    """
    if kind == "classification" and n_outputs != 1:
        raise ValueError("classification files carry exactly one label column")
    width = n_inputs + n_outputs
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row and any(c.strip() for c in row)]
    if not rows:
        raise ParseError(1, "empty file")
    names = None
    if not all(_is_number(c) for c in rows[0][1]):
        names = [c.strip() for c in rows[0][1]]
        rows = rows[1:]
        if not rows:
            raise ParseError(2, "header but no data rows")
    values = np.empty((len(rows), width))
    for r, (line, row) in enumerate(rows):
        if len(row) != width:
            raise ParseError(line, f"expected {width} fields, found {len(row)}")
        for c, field_ in enumerate(row):
            try:
                values[r, c] = float(field_)
            except ValueError:
                raise ParseError(line, f"non-numeric field {field_.strip()!r} in column {c + 1}") from None
        if not np.all(np.isfinite(values[r])):
            raise ParseError(line, "non-finite value")
    X = values[:, :n_inputs]
    if kind == "classification":
        labels = values[:, n_inputs]
        if np.any(labels != np.round(labels)):
            bad = int(np.flatnonzero(labels != np.round(labels))[0])
            raise ParseError(rows[bad][0], f"class label {labels[bad]!r} is not an integer")
        classes, inv = np.unique(labels.astype(np.int64), return_inverse=True)
        T = np.eye(classes.size)[inv]
        return Dataset(X, T, kind, names, classes)
    return Dataset(X, values[:, n_inputs:], kind, names)


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X):
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale


def fit_standardizer(X):
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        raise ValueError("cannot standardise an empty training set")
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    const = ~(sd > 0)
    if const.any():
        warnings.warn(
            f"constant input column(s) {np.flatnonzero(const).tolist()} left unscaled",
            RuntimeWarning,
            stacklevel=2,
        )
        mean = np.where(const, 0.0, mean)
        sd = np.where(const, 1.0, sd)
    return Standardizer(mean, sd)


def standardize(train: Dataset, test: Dataset | None = None):
    """Z-score inputs with statistics from ``train`` only; targets are untouched."""
    stats = fit_standardizer(train.X)
    tr = replace(train, X=stats.transform(train.X))
    te = None if test is None else replace(test, X=stats.transform(test.X))
    return tr, te, stats


@dataclass
class FoldPlan:
    k: int
    assignments: np.ndarray

    def split(self, fold):
        test = np.flatnonzero(self.assignments == fold)
        train = np.flatnonzero(self.assignments != fold)
        return train, test


def make_folds(n, k, seed=0):
    """Seeded shuffle, then deal patterns round-robin into ``k`` folds."""
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    if n < k:
        raise ValueError(f"{n} patterns cannot fill {k} folds")
    order = np.random.default_rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.intp)
    assignments[order] = np.arange(n) % k
    return FoldPlan(k, assignments)


@dataclass
class CrossValReport:
    trainer: str
    k: int
    fold_mse: np.ndarray
    fold_pe: np.ndarray | None = None

    @property
    def mean_mse(self):
        return float(np.mean(self.fold_mse))

    @property
    def std_mse(self):
        return float(np.std(self.fold_mse))

    @property
    def mean_pe(self):
        return None if self.fold_pe is None else float(np.mean(self.fold_pe))

    @property
    def std_pe(self):
        return None if self.fold_pe is None else float(np.std(self.fold_pe))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "test_mse", "test_pe"])
        for i, m in enumerate(self.fold_mse):
            p = "" if self.fold_pe is None else repr(float(self.fold_pe[i]))
            w.writerow([i + 1, repr(float(m)), p])
        w.writerow(["mean", repr(self.mean_mse), "" if self.fold_pe is None else repr(self.mean_pe)])
        w.writerow(["std", repr(self.std_mse), "" if self.fold_pe is None else repr(self.std_pe)])
        return buf.getvalue()

    def table(self):
        lines = [f"{self.k}-fold cross-validation ({self.trainer})", f"{'fold':>6} {'test MSE':>14} {'test PE':>9}"]
        for i, m in enumerate(self.fold_mse):
            p = "" if self.fold_pe is None else f"{self.fold_pe[i]:9.3f}"
            lines.append(f"{i + 1:>6} {m:14.6g} {p}")
        p = "" if self.fold_pe is None else f"{self.mean_pe:9.3f}"
        lines.append(f"{'mean':>6} {self.mean_mse:14.6g} {p}")
        p = "" if self.fold_pe is None else f"{self.std_pe:9.3f}"
        lines.append(f"{'std':>6} {self.std_mse:14.6g} {p}")
        return "\n".join(lines)


def crossval(config, dataset: Dataset, k=10, seed=0, workers=None) -> CrossValReport:
    """Train one network per fold and score it on the held-out patterns."""
    from .trainers import train

    plan = make_folds(len(dataset), k, seed)

    def run_fold(f):
        tr_idx, te_idx = plan.split(f)
        if te_idx.size < 1:
            raise ValueError(f"fold {f} is empty")
        tr, te, _ = standardize(dataset.subset(tr_idx), dataset.subset(te_idx))
        run = train(config, tr.X, tr.T)
        Y = forward(run.network, te.X).Y
        return mse(Y, te.T), (pe(Y, te.T) if dataset.kind == "classification" else None)

    workers = workers or worker_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_fold, range(k)))
    else:
        results = [run_fold(f) for f in range(k)]
    fold_mse = np.array([r[0] for r in results])
    fold_pe = None if dataset.kind != "classification" else np.array([r[1] for r in results])
    return CrossValReport(config.trainer, k, fold_mse, fold_pe)
