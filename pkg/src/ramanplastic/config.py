"""Experiment configuration files (YAML or JSON).

Schema, version 1::

    version: 1
    experiment: final          # ablation | bin-sweep | noise-sweep | final | custom | model-comparison
    seed: 0                    # required
    n_seeds: 10                # seeds used: seed, seed+1, ..., seed+n_seeds-1
    data:
      slopp: data/slopp
      sloppe: data/sloppe
      mendeley: data/mendeley
      synonyms: {}             # extra raw-label -> polymer type (null rejects)
    pipeline: {min_range, max_range, scale, transform, pc_window, bin_width,
               noise_amplitude, shift, truncate_to}
    augmentation: {targets: {type: min_num_examples}, random_change, shift, max_pct_change}
    model: {kind, criterion, n_trees, k, max_depth, min_samples_split, bootstrap, max_features}
    sweep: {widths: [2, 50] | [w1, w2, ...], amplitudes: [a1, a2, ...]}
    models: [{kind: rf}, {kind: dt}, {kind: knn, k: 3}]     # model-comparison only
    out: runs/final

Relative data paths resolve against ``data_root`` when one is given, else
against the current directory.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

from .evaluation import AugmentConfig, ModelConfig
from .preprocess import PipelineConfig

CONFIG_VERSION = 1
EXPERIMENTS = ("ablation", "bin-sweep", "noise-sweep", "final", "custom", "model-comparison")
BUNDLED = ("ablation", "bins-unaugmented", "bins-augmented-entropy", "bins-augmented-gini", "noise", "final",
           "model-comparison")


class ConfigError(ValueError):
    pass


def _section(raw, name, cls):
    data = raw.get(name) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{name}: expected a mapping")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{name}.{key}: unknown field")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _widths(spec):
    if spec is None:
        return list(range(2, 51))
    if isinstance(spec, dict):
        return list(range(int(spec["start"]), int(spec["stop"]) + 1, int(spec.get("step", 1))))
    if not isinstance(spec, list) or not all(isinstance(w, int) and w >= 1 for w in spec):
        raise ConfigError("sweep.widths: expected a list of positive integers or {start, stop, step}")
    return spec


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    n_seeds: int = 1
    data: dict = field(default_factory=dict)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    augmentation: AugmentConfig = field(default_factory=AugmentConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    widths: list[int] = field(default_factory=lambda: list(range(2, 51)))
    amplitudes: list[float] = field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 5.0])
    models: list[ModelConfig] = field(default_factory=list)
    out: str = "runs"

    @property
    def seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.n_seeds)]

    def data_paths(self, data_root=None) -> dict[str, Path]:
        base = Path(data_root) if data_root else Path.cwd()
        paths = {}
        for key in ("slopp", "sloppe", "mendeley"):
            value = self.data.get(key)
            if not value:
                raise ConfigError(f"data.{key}: missing")
            p = Path(value)
            paths[key] = p if p.is_absolute() else base / p
        return paths

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "experiment": self.experiment,
            "seed": self.seed,
            "n_seeds": self.n_seeds,
            "data": self.data,
            "pipeline": self.pipeline.to_dict(),
            "augmentation": asdict(self.augmentation),
            "model": asdict(self.model),
            "sweep": {"widths": self.widths, "amplitudes": self.amplitudes},
            "models": [asdict(m) for m in self.models],
            "out": self.out,
        }


def parse_config(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    known = {"version", "experiment", "seed", "n_seeds", "data", "pipeline", "augmentation", "model", "sweep",
             "models", "out"}
    for key in raw:
        if key not in known:
            raise ConfigError(f"{key}: unknown top-level field")
    if raw.get("version") != CONFIG_VERSION:
        raise ConfigError(f"version: expected {CONFIG_VERSION}, got {raw.get('version')!r}")
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {', '.join(EXPERIMENTS)}, got {experiment!r}")
    if "seed" not in raw or not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool):
        raise ConfigError("seed: an explicit integer seed is required")
    n_seeds = raw.get("n_seeds", 1)
    if not isinstance(n_seeds, int) or n_seeds < 1:
        raise ConfigError("n_seeds: must be a positive integer")
    data = raw.get("data") or {}
    if not isinstance(data, dict):
        raise ConfigError("data: expected a mapping")
    sweep = raw.get("sweep") or {}
    amplitudes = sweep.get("amplitudes", [0.0, 0.5, 1.0, 2.0, 5.0])
    if not isinstance(amplitudes, list) or any(not isinstance(a, (int, float)) or a < 0 for a in amplitudes):
        raise ConfigError("sweep.amplitudes: expected a list of non-negative numbers")
    models = []
    for i, m in enumerate(raw.get("models") or []):
        models.append(_section({f"models[{i}]": m}, f"models[{i}]", ModelConfig))
    return ExperimentConfig(
        experiment=experiment,
        seed=raw["seed"],
        n_seeds=n_seeds,
        data=data,
        pipeline=_section(raw, "pipeline", PipelineConfig),
        augmentation=_section(raw, "augmentation", AugmentConfig),
        model=_section(raw, "model", ModelConfig),
        widths=_widths(sweep.get("widths")),
        amplitudes=[float(a) for a in amplitudes],
        models=models,
        out=str(raw.get("out", "runs")),
    )


def load_config(path_or_name) -> ExperimentConfig:
    """Load a config file, or one of the bundled configs by name."""
    path = Path(path_or_name)
    if not path.exists() and str(path_or_name) in BUNDLED:
        text = resources.files("ramanplastic").joinpath("configs", f"{path_or_name}.yaml").read_text()
    elif not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    else:
        text = path.read_text(encoding="utf-8")
    try:
        raw = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return parse_config(raw)


def dump_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
