"""Feature engineering: x-axis scaling, positivity shift, rate of change,
percentage change, bin means and noise injection."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import kernels
from .dataset import LabeledDataset, Spectrum

log = logging.getLogger(__name__)

TRANSFORMS = ("roc", "pc", "none")


@dataclass(frozen=True)
class ScaledSpectrum:
    """Intensities on the integer grid ``min_range..max_range`` (cm^-1)."""

    values: np.ndarray
    min_range: int
    max_range: int

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.min_range, self.max_range + 1, dtype=np.float64)

    def __len__(self):
        return len(self.values)


def scale_x(s: Spectrum, min_range: int = 0, max_range: int = 3500) -> ScaledSpectrum:
    """Resample a spectrum onto the integer wavenumber grid.

    Each point lands at ``floor(x)``.  Points past ``max_range`` end the scan,
    points below ``min_range`` are dropped.  Slots before the first written
    one take the first point's intensity, gaps take the intensity at their
    left edge and the tail repeats the last written intensity.
    """
    if min_range >= max_range:
        raise ValueError(f"min_range ({min_range}) must be below max_range ({max_range})")
    if not np.all(np.isfinite(s.y)):
        raise ValueError(f"{s.id or 'spectrum'}: non-finite intensity")
    idx = np.floor(s.x).astype(np.int64)
    stop = int(np.searchsorted(idx, max_range, side="right"))
    idx, y = idx[:stop], s.y[:stop]
    below = idx < min_range
    if below.any():
        log.warning("%s: dropping %d points below %d cm^-1", s.id or "spectrum", int(below.sum()), min_range)
        idx, y = idx[~below], y[~below]
    if len(idx) == 0:
        raise ValueError(f"{s.id or 'spectrum'}: no points inside {min_range}..{max_range}")
    values = kernels.scale_fill(idx - min_range, y, max_range - min_range + 1)
    return ScaledSpectrum(values, int(min_range), int(max_range))


def shift_positive(values) -> np.ndarray:
    """Lift ``values`` so the minimum becomes 1 when it is not already positive."""
    values = np.asarray(values, dtype=np.float64)
    lo = values.min()
    if lo <= 0:
        # left to right, (v + |lo|) + 1, so results round like a scalar loop would
        return values + abs(lo) + 1.0
    return values.copy()


def _values(s) -> np.ndarray:
    if isinstance(s, ScaledSpectrum):
        return s.values
    return np.asarray(s, dtype=np.float64)


def roc_transform(s) -> np.ndarray:
    """First difference on the unit-spaced grid (one value per adjacent pair)."""
    y = _values(s)
    if len(y) < 2:
        raise ValueError("rate of change needs at least 2 values")
    return y[1:] - y[:-1]


def pc_transform(s, n: int = 5) -> np.ndarray:
    """Each value divided by the mean of the ``n`` values preceding it."""
    y = _values(s)
    if n < 1:
        raise ValueError("window must be >= 1")
    if n >= len(y):
        raise ValueError(f"window {n} needs more than {n} values, got {len(y)}")
    window = np.lib.stride_tricks.sliding_window_view(y[:-1], n).mean(axis=1)
    if np.any(window == 0):
        raise ValueError("zero-mean window; shift the spectrum positive first")
    return y[n:] / window


def bin_means(series, width: int) -> np.ndarray:
    """Equal-width bins, each replaced by its mean; the last bin may be short."""
    if int(width) != width or width < 1:
        raise ValueError(f"bin width must be a positive integer, got {width}")
    series = np.asarray(series, dtype=np.float64)
    if len(series) == 0:
        return series.copy()
    return kernels.bin_means(series, int(width))


def add_noise(s, amplitude: float, rng: np.random.Generator):
    """Perturb every value by an independent draw from U[-amplitude, amplitude]."""
    if amplitude < 0:
        raise ValueError("noise amplitude must be >= 0")
    y = _values(s)
    out = y.copy() if amplitude == 0 else y + rng.uniform(-amplitude, amplitude, size=len(y))
    if isinstance(s, ScaledSpectrum):
        return replace(s, values=out)
    return out


@dataclass(frozen=True)
class PipelineConfig:
    min_range: int = 0
    max_range: int = 3500
    scale: bool = True
    transform: str = "roc"
    pc_window: int = 5
    bin_width: int = 12
    noise_amplitude: float = 0.0
    shift: bool = False
    # only used when scale is False: rows are cut to this many points
    truncate_to: int | None = None

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}, got {self.transform!r}")
        if self.bin_width < 1:
            raise ValueError("bin_width must be >= 1")
        if self.noise_amplitude < 0:
            raise ValueError("noise_amplitude must be >= 0")
        if self.min_range >= self.max_range:
            raise ValueError("min_range must be below max_range")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown pipeline field(s): {sorted(unknown)}")
        return cls(**d)

    def n_features(self, raw_length: int | None = None) -> int:
        n = self.max_range - self.min_range + 1 if self.scale else (self.truncate_to or raw_length)
        if n is None:
            raise ValueError("raw_length needed for unscaled pipelines")
        if self.transform == "roc":
            n -= 1
        elif self.transform == "pc":
            n -= self.pc_window
        return math.ceil(n / self.bin_width)


@dataclass
class FeatureMatrix:
    X: np.ndarray
    labels: list[str]
    ids: list[str] = field(default_factory=list)

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def to_csv(self, stream) -> None:
        w = csv.writer(stream, lineterminator="\n")
        w.writerow([f"f{j}" for j in range(self.X.shape[1])] + ["label"])
        for row, label in zip(self.X.tolist(), self.labels):
            w.writerow([repr(v) for v in row] + [label])


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Per-sample generator, independent of processing order."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def spectrum_features(s: Spectrum, cfg: PipelineConfig, rng=None) -> np.ndarray:
    if cfg.scale:
        y = scale_x(s, cfg.min_range, cfg.max_range).values
    else:
        y = np.asarray(s.y, dtype=np.float64)
        if cfg.truncate_to is not None:
            if len(y) < cfg.truncate_to:
                raise ValueError(f"{s.id}: {len(y)} points, need {cfg.truncate_to}")
            y = y[: cfg.truncate_to]
    if not np.all(np.isfinite(y)):
        raise ValueError(f"{s.id or 'spectrum'}: non-finite intensity")
    if cfg.noise_amplitude > 0:
        if rng is None:
            raise ValueError("noise requested without a random generator")
        y = add_noise(y, cfg.noise_amplitude, rng)
    if cfg.shift:
        y = shift_positive(y)
    if cfg.transform == "roc":
        y = roc_transform(y)
    elif cfg.transform == "pc":
        y = pc_transform(shift_positive(y), cfg.pc_window)
    return bin_means(y, cfg.bin_width)


def build_features(ds: LabeledDataset, cfg: PipelineConfig, seed: int = 0) -> FeatureMatrix:
    """Run every sample of ``ds`` through the pipeline, one row per sample."""
    rows, labels, ids = [], [], []
    for i, (label, s) in enumerate(ds.items()):
        rng = sample_rng(seed, i) if cfg.noise_amplitude > 0 else None
        rows.append(spectrum_features(s, cfg, rng))
        labels.append(label)
        ids.append(s.id)
    if not rows:
        return FeatureMatrix(np.empty((0, 0)), [], [])
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"ragged feature rows {sorted(widths)}; set truncate_to for unscaled data")
    return FeatureMatrix(np.vstack(rows), labels, ids)


def scale_dataset(ds: LabeledDataset, min_range: int, max_range: int) -> LabeledDataset:
    """Replace every spectrum by its scaled version on the integer grid."""

    def one(s: Spectrum) -> Spectrum:
        sc = scale_x(s, min_range, max_range)
        return Spectrum(sc.grid, sc.values, id=s.id, provenance=s.provenance)

    return ds.map_spectra(one)
