"""Spectral library ingestion and the train/test assembly.

Library layout on disk::

    <root>/manifest.csv      columns: file,label
    <root>/<file>            one two-column CSV (wavenumber,intensity) per sample

Without a manifest, samples are read from ``<root>/<label>/*.csv`` and the
sub-directory name is the raw label.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

log = logging.getLogger(__name__)

POLYMER_TYPES: tuple[str, ...] = (
    "acrylic",
    "acrylonitrile butadiene styrene",
    "cellulose acetate",
    "cotton",
    "polyamide",
    "polycarbonate",
    "polyester",
    "polyethylene",
    "polyethylene terephthalate",
    "polyethylene vinyl acetate",
    "polymethyl methacrylate",
    "polypropylene",
    "polystyrene",
    "polyurethane",
    "polyvinyl chloride",
)

#: Returned by :func:`normalize_label` for labels outside the vocabulary.
REJECTED = None

# value None = explicitly rejected even if it would otherwise look close
SYNONYMS: dict[str, str | None] = {
    "polystyrene (maybe)": "polystyrene",
    "polyamine (nylon)": None,
    "not detected": None,
    "abs": "acrylonitrile butadiene styrene",
    "ca": "cellulose acetate",
    "pa": "polyamide",
    "nylon": "polyamide",
    "pc": "polycarbonate",
    "pe": "polyethylene",
    "pet": "polyethylene terephthalate",
    "eva": "polyethylene vinyl acetate",
    "pmma": "polymethyl methacrylate",
    "pp": "polypropylene",
    "ps": "polystyrene",
    "pu": "polyurethane",
    "pur": "polyurethane",
    "pvc": "polyvinyl chloride",
}

MANIFEST_NAME = "manifest.csv"


class Source(str, enum.Enum):
    SLOPP = "slopp"
    SLOPPE = "sloppe"
    MENDELEY = "mendeley"
    COMBINED = "combined"


class DataFormatError(ValueError):
    """Malformed spectrum file; ``line`` is 1-based (0 when not line-specific)."""

    def __init__(self, message, line=0, path=None):
        where = f"{path}:" if path else ""
        where += f"line {line}: " if line else ""
        super().__init__(where + message)
        self.line = line
        self.path = path


class DatasetError(ValueError):
    """A library or split cannot be assembled."""


@dataclass(frozen=True, eq=False)
class Spectrum:
    """One sample: strictly increasing wavenumbers (cm^-1) and intensities."""

    x: np.ndarray
    y: np.ndarray
    id: str = ""
    provenance: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64)
        y = np.array(self.y, dtype=np.float64)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        if len(x) == 0:
            raise ValueError("spectrum has no points")
        if np.any(np.diff(x) <= 0):
            raise ValueError("wavenumbers must be strictly increasing")
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return len(self.x)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    @property
    def is_augmented(self) -> bool:
        return "source" in self.provenance


def _cell(text: str, lineno: int, path) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataFormatError(f"non-numeric cell {text.strip()!r}", lineno, path) from None
    return value


def parse_spectrum_csv(raw, sample_id: str = "", path=None) -> Spectrum:
    """Parse a two-column ``wavenumber,intensity`` CSV.

    ``raw`` is a text stream or a string.  A single non-numeric first line is
    treated as a header.  Points come back sorted by wavenumber; for repeated
    wavenumbers the last occurrence wins.
    """
    if isinstance(raw, str):
        raw = io.StringIO(raw)
    by_x: dict[float, float] = {}
    seen_data = False
    for lineno, row in enumerate(csv.reader(raw), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 2:
            raise DataFormatError(f"expected 2 columns, got {len(row)}", lineno, path)
        try:
            xv = float(row[0])
        except ValueError:
            if not seen_data and lineno == 1:
                continue  # header
            raise DataFormatError(f"non-numeric cell {row[0].strip()!r}", lineno, path) from None
        yv = _cell(row[1], lineno, path)
        if not (math.isfinite(xv) and math.isfinite(yv)):
            raise DataFormatError("non-finite value", lineno, path)
        seen_data = True
        by_x.pop(xv, None)
        by_x[xv] = yv
    if not seen_data:
        raise DataFormatError("empty file", 0, path)
    if len(by_x) < 2:
        raise DataFormatError("fewer than 2 points", 0, path)
    xs = sorted(by_x)
    return Spectrum(np.array(xs), np.array([by_x[v] for v in xs]), id=sample_id)


def write_spectrum_csv(spectrum: Spectrum, stream, header: bool = True) -> None:
    w = csv.writer(stream, lineterminator="\n")
    if header:
        w.writerow(["wavenumber", "intensity"])
    for xv, yv in spectrum.points:
        w.writerow([repr(xv), repr(yv)])


def normalize_label(raw: str, synonyms: Mapping[str, str | None] | None = None) -> str | None:
    """Map a library label onto the 15-class vocabulary, or ``REJECTED``."""
    key = " ".join(raw.strip().lower().replace("_", " ").split())
    table = dict(SYNONYMS)
    if synonyms:
        table.update({" ".join(k.lower().split()): v for k, v in synonyms.items()})
    if key in table:
        return table[key]
    if key in POLYMER_TYPES:
        return key
    return REJECTED


@dataclass(frozen=True)
class LabeledDataset:
    entries: Mapping[str, tuple[Spectrum, ...]]
    source: Source

    def __post_init__(self):
        bad = [k for k in self.entries if k not in POLYMER_TYPES]
        if bad:
            raise DatasetError(f"unknown polymer types: {bad}")
        frozen = {k: tuple(v) for k, v in sorted(self.entries.items())}
        object.__setattr__(self, "entries", frozen)

    def __len__(self):
        return sum(len(v) for v in self.entries.values())

    @property
    def types(self) -> list[str]:
        return [k for k, v in self.entries.items() if v]

    def counts(self) -> dict[str, int]:
        return {k: len(v) for k, v in self.entries.items() if v}

    def items(self):
        """``(polymer_type, spectrum)`` pairs in a fixed order."""
        for k, specs in self.entries.items():
            for s in specs:
                yield k, s

    def restrict(self, types: Iterable[str], source: Source | None = None) -> "LabeledDataset":
        keep = set(types)
        return LabeledDataset(
            {k: v for k, v in self.entries.items() if k in keep},
            source or self.source,
        )

    def map_spectra(self, fn) -> "LabeledDataset":
        return LabeledDataset(
            {k: tuple(fn(s) for s in v) for k, v in self.entries.items()}, self.source
        )


@dataclass
class LoadReport:
    source: Source
    root: str
    accepted: int = 0
    raw_counts: dict[str, int] = field(default_factory=dict)
    rejected: list[dict] = field(default_factory=list)

    def write_jsonl(self, stream) -> None:
        for rec in self.rejected:
            stream.write(json.dumps(rec, sort_keys=True) + "\n")


def _manifest_rows(root: Path):
    manifest = root / MANIFEST_NAME
    if manifest.is_file():
        with manifest.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"file", "label"} <= set(reader.fieldnames):
                raise DatasetError(f"{manifest}: manifest needs 'file' and 'label' columns")
            for row in reader:
                yield row["file"], row["label"]
        return
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(sub.glob("*.csv")):
            yield str(f.relative_to(root)), sub.name


def load_library(
    root, kind: Source | str, synonyms: Mapping[str, str | None] | None = None
) -> tuple[LabeledDataset, LoadReport]:
    """Load every parseable sample with an accepted label from ``root``."""
    root = Path(root)
    kind = Source(kind)
    if not root.is_dir():
        raise DatasetError(f"library directory not found: {root}")
    report = LoadReport(kind, str(root))
    entries: dict[str, list[Spectrum]] = {}
    for rel, raw_label in _manifest_rows(root):
        report.raw_counts[raw_label] = report.raw_counts.get(raw_label, 0) + 1
        label = normalize_label(raw_label, synonyms)
        if label is REJECTED:
            report.rejected.append({"file": rel, "label": raw_label, "reason": "label not in vocabulary"})
            continue
        path = root / rel
        try:
            with path.open(newline="", encoding="utf-8") as fh:
                spec = parse_spectrum_csv(fh, sample_id=f"{kind.value}/{rel}", path=rel)
        except OSError as exc:
            report.rejected.append({"file": rel, "label": raw_label, "reason": f"unreadable: {exc.strerror}"})
            continue
        except (DataFormatError, ValueError) as exc:
            report.rejected.append({"file": rel, "label": raw_label, "reason": str(exc)})
            continue
        entries.setdefault(label, []).append(spec)
        report.accepted += 1
    if report.accepted == 0:
        raise DatasetError(f"no accepted samples under {root}")
    for rec in report.rejected:
        log.info("rejected %s (%s): %s", rec["file"], rec["label"], rec["reason"])
    return LabeledDataset(entries, kind), report


def assemble_train_test(
    slopp: LabeledDataset, mendeley: LabeledDataset, sloppe: LabeledDataset
) -> tuple[LabeledDataset, LabeledDataset]:
    """Training set = SLoPP plus Mendeley restricted to SLoPP's types;
    test set = SLoPP-E restricted to the same types."""
    vocab = set(slopp.types)
    if not vocab or not vocab & set(sloppe.types):
        raise DatasetError("SLoPP and SLoPP-E share no polymer types")
    train: dict[str, list[Spectrum]] = {}
    for ds in (slopp, mendeley.restrict(vocab)):
        for k, s in ds.items():
            train.setdefault(k, []).append(s)
    test = sloppe.restrict(vocab, Source.SLOPPE)
    train_ids = {s.id for _, s in LabeledDataset(train, Source.COMBINED).items()}
    if any(s.id in train_ids for _, s in test.items()):
        raise DatasetError("a sample id appears in both train and test")
    return LabeledDataset(train, Source.COMBINED), test


def load_public(slopp_root, sloppe_root, mendeley_root, synonyms=None):
    """Load the three libraries and return ``(train, test, reports)``."""
    slopp, r1 = load_library(slopp_root, Source.SLOPP, synonyms)
    sloppe, r2 = load_library(sloppe_root, Source.SLOPPE, synonyms)
    mendeley, r3 = load_library(mendeley_root, Source.MENDELEY, synonyms)
    train, test = assemble_train_test(slopp, mendeley, sloppe)
    return train, test, [r1, r2, r3]


def write_library(ds: LabeledDataset, root) -> None:
    """Write ``ds`` in the manifest layout; augmented samples also get
    ``source`` and ``seed`` columns in the manifest."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    with (root / MANIFEST_NAME).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "label", "source", "seed"])
        for i, (label, spec) in enumerate(ds.items()):
            name = f"{i:05d}.csv"
            with (root / name).open("w", newline="", encoding="utf-8") as out:
                write_spectrum_csv(spec, out)
            w.writerow([name, label, spec.provenance.get("source", ""), spec.provenance.get("seed", "")])
