"""Training-set augmentation by perturbing consecutive-intensity ratios.

A source spectrum is turned into ratios ``y[i+1] / y[i]``, each ratio is
nudged by a uniform random offset, and the spectrum is rebuilt by chaining
the nudged ratios.  Every rebuilt value is clamped to within
``max_pct_change`` percent of the source so peaks stay where they were.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from . import kernels
from .dataset import POLYMER_TYPES, LabeledDataset, Spectrum, normalize_label
from .preprocess import shift_positive


class AugmentError(ValueError):
    pass


@dataclass(frozen=True)
class AugmentParams:
    random_change: float = 0.05
    shift: float = 0.0
    max_pct_change: float = 99.0

    def __post_init__(self):
        if self.random_change < 0:
            raise ValueError("random_change must be >= 0")
        if not 0 <= self.max_pct_change < 100:
            raise ValueError("max_pct_change must lie in [0, 100)")


def ratio_series(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if len(y) < 2:
        raise ValueError("need at least 2 intensities")
    y = shift_positive(y)
    # subnormal intensities can overflow a ratio; the clamp in reconstruct
    # brings the rebuilt value back inside the envelope
    with np.errstate(over="ignore"):
        return y[1:] / y[:-1]


def perturb_ratios(r, random_change: float, rng: np.random.Generator) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    out = r + rng.uniform(-random_change, random_change, size=len(r))
    bad = out <= 0
    out[bad] = r[bad]
    return out


def reconstruct(original, r, init: float, shift: float = 0.0, max_pct_change: float = 99.0) -> np.ndarray:
    """Rebuild a spectrum from ratios ``r`` starting at ``init + shift``.

    Values are clamped step by step against the positivity-shifted
    ``original``; the first value is never clamped.
    """
    ref = shift_positive(original)
    r = np.asarray(r, dtype=np.float64)
    if len(r) != len(ref) - 1:
        raise ValueError(f"expected {len(ref) - 1} ratios, got {len(r)}")
    return kernels.reconstruct(ref, r, float(init) + float(shift), float(max_pct_change))


def augment_one(y, params: AugmentParams, rng: np.random.Generator) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    ratios = perturb_ratios(ratio_series(y), params.random_change, rng)
    # start from the shifted first value itself so no extra rounding creeps in
    init = shift_positive(y)[0]
    return reconstruct(y, ratios, init, params.shift, params.max_pct_change)


def _targets(targets) -> list[tuple[str, int]]:
    items = targets.items() if isinstance(targets, Mapping) else targets
    out = []
    for raw, n in items:
        name = normalize_label(raw)
        if name is None:
            raise AugmentError(f"unknown polymer type {raw!r}")
        if int(n) < 1:
            raise AugmentError(f"min_num_examples for {raw!r} must be >= 1")
        out.append((name, int(n)))
    return out


def generate_augmented(
    train: LabeledDataset,
    targets: Mapping[str, int] | Iterable[tuple[str, int]],
    params: AugmentParams = AugmentParams(),
    seed: int = 0,
) -> LabeledDataset:
    """Top up each target class to ``min_num_examples`` samples.

    Sources are cycled in order (0, 1, ..., 0, 1, ...).  Originals are kept
    as they are; augmented copies share the source's x-grid and carry
    ``provenance = {"source": id, "source_index": i, "seed": seed}``.
    Each class draws from its own generator so classes are independent.
    """
    wanted = dict(_targets(targets))
    entries = {k: list(v) for k, v in train.entries.items()}
    for name, minimum in wanted.items():
        sources = train.entries.get(name, ())
        if not sources:
            raise AugmentError(f"no training samples of type {name!r} to augment")
        rng = np.random.default_rng(np.random.SeedSequence([seed, POLYMER_TYPES.index(name)]))
        bucket = entries[name]
        iterate = 0
        while len(bucket) < minimum:
            cur = iterate % len(sources)
            src = sources[cur]
            y = augment_one(src.y, params, rng)
            bucket.append(
                Spectrum(
                    src.x,
                    y,
                    id=f"{src.id}~aug{iterate}",
                    provenance={"source": src.id, "source_index": cur, "seed": seed},
                )
            )
            iterate += 1
    return LabeledDataset(entries, train.source)
