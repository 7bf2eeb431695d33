"""Metrics, experiment reports and the experiment grid (preprocessing
ablation, bin-width sweep, noise sweep, final model, model comparison)."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .augment import AugmentParams, generate_augmented
from .dataset import LabeledDataset
from .models import predict_many, train_forest, train_knn, train_tree
from .preprocess import PipelineConfig, build_features, scale_dataset

log = logging.getLogger(__name__)

AUGMENT_15 = {
    "cellulose acetate": 15,
    "polyamide": 15,
    "polymethyl methacrylate": 15,
    "polyurethane": 15,
}
AUGMENT_FINAL = {
    "cellulose acetate": 30,
    "polyamide": 30,
    "polyurethane": 30,
    "polyester": 40,
    "polymethyl methacrylate": 10,
    "polystyrene": 20,
}
FINAL_PIPELINE = PipelineConfig(min_range=0, max_range=3500, scale=True, transform="roc", bin_width=12)

ABLATION_ROWS = (
    ("scaling (x-axis), ROC", True, "roc"),
    ("scaling (x-axis), no ROC", True, "none"),
    ("no scaling (x-axis), ROC", False, "roc"),
    ("no scaling (x-axis), no ROC", False, "none"),
)


def accuracy(preds: Sequence[str], actual: Sequence[str]) -> float:
    if len(preds) != len(actual):
        raise ValueError(f"length mismatch: {len(preds)} predictions, {len(actual)} labels")
    if not preds:
        raise ValueError("no predictions")
    return sum(p == a for p, a in zip(preds, actual)) / len(preds)


@dataclass
class ConfusionMatrix:
    """Rows are actual classes, columns predicted classes."""

    classes: list[str]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts)) / self.total

    def recall(self) -> dict[str, float]:
        rows = self.counts.sum(axis=1)
        return {
            c: float(self.counts[i, i] / rows[i]) for i, c in enumerate(self.classes) if rows[i] > 0
        }

    def support(self) -> dict[str, int]:
        rows = self.counts.sum(axis=1)
        return {c: int(rows[i]) for i, c in enumerate(self.classes) if rows[i] > 0}

    def to_csv(self, stream) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["actual\\predicted"] + self.classes)
        for c, row in zip(self.classes, self.counts.tolist()):
            w.writerow([c] + row)


def confusion(preds, actual, classes) -> ConfusionMatrix:
    classes = list(classes)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for p, a in zip(preds, actual, strict=True):
        if p not in index or a not in index:
            raise ValueError(f"label {(p if p not in index else a)!r} not in classes")
        counts[index[a], index[p]] += 1
    return ConfusionMatrix(classes, counts)


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "rf"
    criterion: str = "entropy"
    n_trees: int = 100
    k: int = 3
    max_depth: int | None = None
    min_samples_split: int = 2
    bootstrap: bool = True
    max_features: str | int | None = "sqrt"

    def __post_init__(self):
        if self.kind not in ("rf", "dt", "knn"):
            raise ValueError(f"model kind must be rf, dt or knn, got {self.kind!r}")
        if self.criterion not in ("entropy", "gini"):
            raise ValueError(f"criterion must be entropy or gini, got {self.criterion!r}")
        if self.n_trees < 1 or self.k < 1:
            raise ValueError("n_trees and k must be >= 1")


@dataclass(frozen=True)
class AugmentConfig:
    targets: dict = field(default_factory=dict)
    random_change: float = 0.05
    shift: float = 0.0
    max_pct_change: float = 99.0

    @property
    def params(self) -> AugmentParams:
        return AugmentParams(self.random_change, self.shift, self.max_pct_change)

    def __bool__(self):
        return bool(self.targets)


@dataclass
class ExperimentReport:
    name: str
    config: dict
    seed: int
    accuracy: float
    train_accuracy: float
    per_class_recall: dict[str, float]
    confusion: ConfusionMatrix
    misclassified: list[dict]
    n_train: int
    n_test: int
    n_features: int
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        """Serializable form; wall time is left out so reruns compare equal."""
        return {
            "name": self.name,
            "config": self.config,
            "seed": self.seed,
            "accuracy": self.accuracy,
            "train_accuracy": self.train_accuracy,
            "per_class_recall": self.per_class_recall,
            "confusion": {"classes": self.confusion.classes, "counts": self.confusion.counts.tolist()},
            "misclassified": self.misclassified,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "n_features": self.n_features,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def fit_model(fm, model: ModelConfig, seed: int, jobs: int = 1):
    if model.kind == "rf":
        return train_forest(
            fm,
            model.criterion,
            model.n_trees,
            seed,
            bootstrap=model.bootstrap,
            max_features=model.max_features,
            max_depth=model.max_depth,
            min_samples_split=model.min_samples_split,
            jobs=jobs,
        )
    if model.kind == "dt":
        return train_tree(fm, model.criterion, model.max_depth, model.min_samples_split)
    return train_knn(fm, model.k)


def common_length(*datasets: LabeledDataset) -> int:
    """Shortest raw spectrum length across datasets (unscaled pipelines)."""
    return min(len(s) for ds in datasets for _, s in ds.items())


def prepare_training_set(train: LabeledDataset, pipeline: PipelineConfig, augment: AugmentConfig | None, seed: int):
    if not augment:
        return train
    base = scale_dataset(train, pipeline.min_range, pipeline.max_range) if pipeline.scale else train
    return generate_augmented(base, augment.targets, augment.params, seed)


def run_experiment(
    train: LabeledDataset,
    test: LabeledDataset,
    pipeline: PipelineConfig,
    model: ModelConfig = ModelConfig(),
    augment: AugmentConfig | None = None,
    seed: int = 0,
    name: str = "custom",
    jobs: int = 1,
) -> ExperimentReport:
    """Train on ``train`` (optionally augmented, optionally noised) and
    evaluate on ``test``.  Noise only ever touches the training rows."""
    t0 = time.perf_counter()
    train_ds = prepare_training_set(train, pipeline, augment, seed)
    if not pipeline.scale and pipeline.truncate_to is None:
        pipeline = replace(pipeline, truncate_to=common_length(train_ds, test))
    fm_train = build_features(train_ds, pipeline, seed)
    fm_test = build_features(test, replace(pipeline, noise_amplitude=0.0), seed)
    clf = fit_model(fm_train, model, seed, jobs)
    preds = predict_many(clf, fm_test.X)
    train_preds = predict_many(clf, fm_train.X)
    classes = sorted(set(clf.classes) | set(fm_test.labels))
    cm = confusion(preds, fm_test.labels, classes)
    return ExperimentReport(
        name=name,
        config={
            "pipeline": pipeline.to_dict(),
            "model": asdict(model),
            "augmentation": asdict(augment) if augment else None,
        },
        seed=seed,
        accuracy=accuracy(preds, fm_test.labels),
        train_accuracy=accuracy(train_preds, fm_train.labels),
        per_class_recall=cm.recall(),
        confusion=cm,
        misclassified=[
            {"index": i, "id": sid, "actual": a, "predicted": p}
            for i, (sid, a, p) in enumerate(zip(fm_test.ids, fm_test.labels, preds))
            if a != p
        ],
        n_train=len(fm_train),
        n_test=len(fm_test),
        n_features=fm_train.n_features,
        wall_time=time.perf_counter() - t0,
    )


@dataclass
class SweepPoint:
    """One grid point evaluated over several seeds."""

    label: str
    value: object
    reports: list[ExperimentReport]

    @property
    def accuracies(self) -> list[float]:
        return [r.accuracy for r in self.reports]

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))

    def row(self) -> dict:
        return {
            "label": self.label,
            "value": self.value,
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "min_accuracy": min(self.accuracies),
            "max_accuracy": max(self.accuracies),
            "accuracies": self.accuracies,
            "seeds": [r.seed for r in self.reports],
        }


def _over_seeds(run: Callable[[int], ExperimentReport], seeds: Sequence[int]) -> list[ExperimentReport]:
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    return [run(s) for s in seeds]


def run_ablation(
    train, test, base: PipelineConfig = FINAL_PIPELINE, model: ModelConfig = ModelConfig(), seeds=(0,), jobs=1
) -> list[SweepPoint]:
    """Scaling on/off crossed with ROC on/off; no binning, no augmentation.

    Unscaled rows are truncated to the shortest spectrum so every row has
    the same width; the chosen length is recorded in each report's config.
    """
    out = []
    for i, (label, scale, transform) in enumerate(ABLATION_ROWS, start=1):
        cfg = replace(base, scale=scale, transform=transform, bin_width=1, noise_amplitude=0.0, truncate_to=None)
        reports = _over_seeds(
            lambda s: run_experiment(train, test, cfg, model, None, s, f"ablation-{i}", jobs), seeds
        )
        out.append(SweepPoint(label, i, reports))
    return out


def sweep_bins(
    train,
    test,
    pipeline: PipelineConfig = FINAL_PIPELINE,
    model: ModelConfig = ModelConfig(),
    widths=range(2, 51),
    augment: AugmentConfig | None = None,
    seeds=(0,),
    jobs=1,
) -> list[SweepPoint]:
    out = []
    for w in widths:
        cfg = replace(pipeline, bin_width=int(w))
        reports = _over_seeds(
            lambda s: run_experiment(train, test, cfg, model, augment, s, f"bins-{w}", jobs), seeds
        )
        out.append(SweepPoint(f"width={w}", int(w), reports))
    return out


def sweep_noise(
    train,
    test,
    pipeline: PipelineConfig = FINAL_PIPELINE,
    model: ModelConfig = ModelConfig(),
    amplitudes=(0.0, 0.5, 1.0, 2.0, 5.0),
    augment: AugmentConfig | None = None,
    seeds=(0,),
    jobs=1,
) -> list[SweepPoint]:
    amplitudes = [float(a) for a in amplitudes]
    if any(a < 0 for a in amplitudes):
        raise ValueError("noise amplitudes must be >= 0")
    out = []
    for a in amplitudes:
        cfg = replace(pipeline, noise_amplitude=a)
        reports = _over_seeds(
            lambda s: run_experiment(train, test, cfg, model, augment, s, f"noise-{a:g}", jobs), seeds
        )
        out.append(SweepPoint(f"amplitude={a:g}", a, reports))
    return out


def run_final(train, test, seeds=(0,), model: ModelConfig = ModelConfig(), jobs=1) -> SweepPoint:
    """Final recipe: scaled 0-3500, ROC, width 12, no y rescaling, the final
    augmentation targets and an entropy random forest."""
    aug = AugmentConfig(dict(AUGMENT_FINAL))
    reports = _over_seeds(lambda s: run_experiment(train, test, FINAL_PIPELINE, model, aug, s, "final", jobs), seeds)
    return SweepPoint("final", "final", reports)


def compare_models(
    train,
    test,
    pipeline: PipelineConfig = FINAL_PIPELINE,
    augment: AugmentConfig | None = None,
    models: Sequence[ModelConfig] = (ModelConfig("rf"), ModelConfig("dt"), ModelConfig("knn", k=3)),
    seeds=(0,),
    jobs=1,
) -> list[SweepPoint]:
    if augment is None:
        augment = AugmentConfig(dict(AUGMENT_FINAL))
    out = []
    for m in models:
        reports = _over_seeds(
            lambda s: run_experiment(train, test, pipeline, m, augment, s, f"model-{m.kind}", jobs), seeds
        )
        out.append(SweepPoint(m.kind, m.kind, reports))
    return out


def write_sweep_csv(points: Sequence[SweepPoint], stream, value_name: str = "value") -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow([value_name, "mean_accuracy", "std_accuracy", "min_accuracy", "max_accuracy", "n_seeds", "label"])
    for p in points:
        r = p.row()
        w.writerow(
            [p.value, repr(r["mean_accuracy"]), repr(r["std_accuracy"]), repr(r["min_accuracy"]),
             repr(r["max_accuracy"]), len(p.reports), p.label]
        )
