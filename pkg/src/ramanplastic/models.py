"""Decision tree, random forest and k-nearest-neighbour classifiers.

Classes are always kept in sorted order, so "lowest class index" and
"lexicographically smallest class name" are the same tie-break.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .preprocess import FeatureMatrix

CRITERIA = {"entropy": kernels.ENTROPY, "gini": kernels.GINI}
FORMAT_NAME = "ramanplastic-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def impurity(counts, criterion: str = "entropy") -> float:
    """Entropy (bits) or gini impurity of a class-count vector."""
    counts = np.asarray(counts, dtype=np.float64)
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    n = counts.sum()
    if n == 0:
        raise ValueError("counts are all zero")
    p = counts[counts > 0] / n
    if criterion == "entropy":
        return float(max(0.0, -np.sum(p * np.log2(p))))
    if criterion == "gini":
        return float(1.0 - np.sum(p * p))
    raise ValueError(f"unknown criterion {criterion!r}")


@dataclass
class DecisionTree:
    """Flat binary tree; node 0 is the root and leaves have ``feature == -1``.

    ``value[i]`` holds the training-sample class counts that reached node i.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    classes: tuple[str, ...]
    criterion: str = "entropy"
    n_features: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.intp)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def leaf_indices(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return kernels.apply_tree(X, self.feature, self.threshold, self.left, self.right)

    def predict_index(self, X) -> np.ndarray:
        return np.argmax(self.value[self.leaf_indices(X)], axis=1)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "n_features": self.n_features,
        }

    @classmethod
    def from_dict(cls, d, classes, criterion) -> "DecisionTree":
        return cls(
            np.array(d["feature"], dtype=np.intp),
            np.array(d["threshold"], dtype=np.float64),
            np.array(d["left"], dtype=np.intp),
            np.array(d["right"], dtype=np.intp),
            np.array(d["value"], dtype=np.int64).reshape(len(d["feature"]), len(classes)),
            tuple(classes),
            criterion,
            int(d.get("n_features", 0)),
        )


@dataclass
class RandomForestModel:
    trees: list[DecisionTree]
    classes: tuple[str, ...]
    criterion: str = "entropy"
    seed: int = 0
    n_features: int = 0

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    def votes(self, X) -> np.ndarray:
        """``(n_rows, n_classes)`` count of trees voting for each class."""
        X = np.atleast_2d(X)
        out = np.zeros((X.shape[0], len(self.classes)), dtype=np.int64)
        rows = np.arange(X.shape[0])
        for t in self.trees:
            np.add.at(out, (rows, t.predict_index(X)), 1)
        return out

    def predict_index(self, X) -> np.ndarray:
        return np.argmax(self.votes(X), axis=1)


@dataclass
class KnnModel:
    k: int
    X: np.ndarray
    labels: list[str]
    classes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        if not self.classes:
            self.classes = tuple(sorted(set(self.labels)))
        if not 1 <= self.k <= len(self.X):
            raise ValueError(f"k must be in [1, {len(self.X)}], got {self.k}")
        lookup = {c: i for i, c in enumerate(self.classes)}
        self._y = np.array([lookup[label] for label in self.labels], dtype=np.intp)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def neighbours(self, x) -> np.ndarray:
        d = np.sqrt(((self.X - x) ** 2).sum(axis=1))
        return np.argsort(d, kind="stable")[: self.k]

    def votes(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.zeros((X.shape[0], len(self.classes)), dtype=np.int64)
        for i, x in enumerate(X):
            np.add.at(out[i], self._y[self.neighbours(x)], 1)
        return out

    def predict_index(self, X) -> np.ndarray:
        return np.argmax(self.votes(X), axis=1)


def _encode(labels, classes=None):
    classes = tuple(sorted(set(labels))) if classes is None else tuple(classes)
    lookup = {c: i for i, c in enumerate(classes)}
    return np.array([lookup[label] for label in labels], dtype=np.intp), classes


def _check_matrix(m: FeatureMatrix):
    X = np.asarray(m.X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("training matrix is empty")
    if X.shape[0] != len(m.labels):
        raise ValueError("row count and label count differ")
    return np.ascontiguousarray(X)


def _max_features(spec, d: int) -> int | None:
    if spec is None:
        return None
    if spec == "sqrt":
        return max(1, int(math.floor(math.sqrt(d))))
    return max(1, min(int(spec), d))


def grow_tree(
    X,
    y,
    classes,
    criterion: str = "entropy",
    samples=None,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Greedy CART growth on encoded labels ``y`` over the rows ``samples``."""
    code = CRITERIA[criterion]
    n_classes = len(classes)
    d = X.shape[1]
    if samples is None:
        samples = np.arange(X.shape[0], dtype=np.intp)
    if max_features is not None and max_features < d and rng is None:
        raise ValueError("feature subsampling needs a random generator")

    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    stack = [(new_node(samples), samples, 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = value[node]
        if (
            len(idx) < min_samples_split
            or (max_depth is not None and depth >= max_depth)
            or np.count_nonzero(counts) <= 1
        ):
            continue
        if max_features is None or max_features >= d:
            f, t, _ = kernels.best_split(X, y, idx, np.arange(d, dtype=np.intp), n_classes, code)
        else:
            perm = rng.permutation(d)
            f, t, _ = kernels.best_split(X, y, idx, np.sort(perm[:max_features]), n_classes, code)
            if f < 0:
                f, t, _ = kernels.best_split(X, y, idx, np.sort(perm[max_features:]), n_classes, code)
        if f < 0:
            continue
        go_left = X[idx, f] <= t
        feature[node], threshold[node] = f, t
        li, ri = idx[go_left], idx[~go_left]
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.intp),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(value, dtype=np.int64).reshape(len(feature), n_classes),
        tuple(classes),
        criterion,
        d,
    )


def train_tree(
    m: FeatureMatrix,
    criterion: str = "entropy",
    max_depth: int | None = None,
    min_samples_split: int = 2,
    rng: np.random.Generator | None = None,
    feature_subsample: int | None = None,
    classes=None,
) -> DecisionTree:
    X = _check_matrix(m)
    y, classes = _encode(m.labels, classes)
    return grow_tree(X, y, classes, criterion, None, max_depth, min_samples_split, feature_subsample, rng)


def tree_rngs(seed: int, n_trees: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n_trees)]


def _forest_member(args):
    X, y, classes, criterion, rng, bootstrap, max_depth, min_samples_split, k = args
    n = X.shape[0]
    samples = rng.integers(0, n, size=n).astype(np.intp) if bootstrap else np.arange(n, dtype=np.intp)
    return grow_tree(X, y, classes, criterion, samples, max_depth, min_samples_split, k, rng)


def train_forest(
    m: FeatureMatrix,
    criterion: str = "entropy",
    n_trees: int = 100,
    seed: int = 0,
    bootstrap: bool = True,
    max_features="sqrt",
    max_depth: int | None = None,
    min_samples_split: int = 2,
    jobs: int = 1,
) -> RandomForestModel:
    """Bagged trees with per-node feature subsampling (``sqrt(d)`` by default).

    Tree ``t`` draws its bootstrap sample and feature subsets from the
    ``t``-th child of ``SeedSequence(seed)``, so results do not depend on
    ``jobs``.
    """
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    X = _check_matrix(m)
    y, classes = _encode(m.labels)
    k = _max_features(max_features, X.shape[1])
    tasks = [
        (X, y, classes, criterion, rng, bootstrap, max_depth, min_samples_split, k)
        for rng in tree_rngs(seed, n_trees)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trees = list(pool.map(_forest_member, tasks, chunksize=max(1, n_trees // (4 * jobs))))
    else:
        trees = [_forest_member(t) for t in tasks]
    return RandomForestModel(trees, classes, criterion, seed, X.shape[1])


def train_knn(m: FeatureMatrix, k: int = 3) -> KnnModel:
    X = _check_matrix(m)
    return KnnModel(k, X, list(m.labels))


def predict_many(model, X) -> list[str]:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ValueError(f"feature width {X.shape[1]} does not match the model's {model.n_features}")
    return [model.classes[i] for i in model.predict_index(X)]


def predict(model, x) -> str:
    """Predicted class for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector")
    return predict_many(model, x[None, :])[0]


def vote_distribution(model, x) -> dict[str, float]:
    """Fraction of votes per class (leaf class fractions for a single tree)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    predict_many(model, x)  # width check
    if isinstance(model, DecisionTree):
        v = model.value[model.leaf_indices(x)[0]].astype(np.float64)
    else:
        v = model.votes(x)[0].astype(np.float64)
    return {c: float(f) for c, f in zip(model.classes, v / v.sum())}


def model_to_dict(model, pipeline: dict | None = None) -> dict:
    d = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "pipeline": pipeline, "classes": list(model.classes)}
    if isinstance(model, RandomForestModel):
        d.update(
            kind="rf",
            criterion=model.criterion,
            seed=model.seed,
            n_features=model.n_features,
            trees=[t.to_dict() for t in model.trees],
        )
    elif isinstance(model, DecisionTree):
        d.update(kind="dt", criterion=model.criterion, tree=model.to_dict())
    elif isinstance(model, KnnModel):
        d.update(kind="knn", k=model.k, X=model.X.tolist(), labels=list(model.labels))
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return d


def model_from_dict(d: dict):
    if d.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a ramanplastic model file")
    if d.get("version") != FORMAT_VERSION:
        raise ModelFormatError(
            f"model file format version {d.get('version')!r} is not supported (expected {FORMAT_VERSION})"
        )
    classes = tuple(d["classes"])
    kind = d.get("kind")
    if kind == "rf":
        trees = [DecisionTree.from_dict(t, classes, d["criterion"]) for t in d["trees"]]
        return RandomForestModel(trees, classes, d["criterion"], d["seed"], d["n_features"])
    if kind == "dt":
        return DecisionTree.from_dict(d["tree"], classes, d["criterion"])
    if kind == "knn":
        return KnnModel(d["k"], np.array(d["X"], dtype=np.float64), d["labels"], classes)
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(path, model, pipeline: dict | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, pipeline)), encoding="utf-8")


def load_model(path):
    """Return ``(model, pipeline_dict)``."""
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from None
    return model_from_dict(d), d.get("pipeline")
