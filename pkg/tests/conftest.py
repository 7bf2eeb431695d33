import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ramanplastic.dataset import POLYMER_TYPES, LabeledDataset, Source, Spectrum  # noqa: E402

# Raw per-library label counts of the three public libraries.
SLOPP_RAW = {
    "Acrylic": 10,
    "Acrylonitrile Butadiene Styrene": 10,
    "Cellulose Acetate": 4,
    "Cotton": 16,
    "Polyamide": 7,
    "Polycarbonate": 7,
    "Polyester": 10,
    "Polyethylene": 24,
    "Polyethylene Terephthalate": 9,
    "Polyethylene Vinyl Acetate": 5,
    "Polymethyl Methacrylate": 1,
    "Polypropylene": 17,
    "Polystyrene": 11,
    "Polyurethane": 6,
    "Polyvinyl Chloride": 11,
}
SLOPPE_RAW = {
    "Acrylic": 3,
    "Acrylonitrile Butadiene Styrene": 1,
    "Cellulose Acetate": 3,
    "Polyamide": 7,
    "Polycarbonate": 2,
    "Polyester": 12,
    "Polyethylene": 26,
    "Polyethylene Terephthalate": 1,
    "Polymethyl Methacrylate": 3,
    "Polypropylene": 21,
    "Polystyrene": 9,
    "Polyurethane": 6,
    "Polyvinyl Chloride": 3,
    "Dyed Cellulose": 5,
    "Polybutylene Terephthalate": 1,
    "Polyethylene Terephthalate-co-Polycarbonate": 1,
    "Polyethylene-co-Polypropylene": 3,
    "Polystyrene-co-Polyvinyl Chloride": 1,
    "Polysulfone": 1,
    "Rubber": 4,
}
MENDELEY_RAW = {
    "Not detected": 8,
    "Acrylonitrile Butadiene Styrene": 1,
    "Nitrocellulose": 1,
    "Polyamine (nylon)": 6,
    "Polycarbonate": 2,
    "Polyethylene": 74,
    "Polyester": 16,
    "Polypropylene": 54,
    "Polystyrene (maybe)": 2,
    "Polyvinyl chloride": 9,
}
# Final per-type counts (SLoPP, SLoPP-E, Mendeley); None = no samples.
TYPE_COUNTS = {
    "acrylic": (10, 3, None),
    "acrylonitrile butadiene styrene": (10, 1, 1),
    "cellulose acetate": (4, 3, None),
    "cotton": (16, None, None),
    "polyamide": (7, 7, None),
    "polycarbonate": (7, 2, 2),
    "polyester": (10, 12, 16),
    "polyethylene": (24, 26, 74),
    "polyethylene terephthalate": (9, 1, None),
    "polyethylene vinyl acetate": (5, None, None),
    "polymethyl methacrylate": (1, 3, None),
    "polypropylene": (17, 21, 54),
    "polystyrene": (11, 9, 2),
    "polyurethane": (6, 6, None),
    "polyvinyl chloride": (11, 3, 9),
}


def _peaks(label: str):
    """Three class-specific peak positions, fixed per label."""
    h = sum(ord(c) * (i + 1) for i, c in enumerate(label.lower()))
    rng = np.random.default_rng(h)
    return np.sort(rng.uniform(300, 3200, size=3)), rng.uniform(200, 1000, size=3)


def synthetic_spectrum(label, rng, weathered=False, sample_id=""):
    centres, heights = _peaks(label)
    start = rng.uniform(100, 250)
    step = rng.uniform(1.0, 3.0)
    stop = rng.uniform(3100, 3600)
    x = np.arange(start, stop, step)
    y = 50 + 0.02 * x + rng.normal(0, 8 if weathered else 3, size=len(x))
    for c, h in zip(centres, heights):
        c = c + rng.normal(0, 3)
        y += h * (0.5 if weathered else 1.0) / (1 + ((x - c) / 12.0) ** 2)
    if weathered:
        y -= 120  # some weathered spectra dip below zero
    return Spectrum(x, y, id=sample_id)


def write_synthetic_library(root: Path, raw_counts: dict, seed: int, weathered=False, step_decimals=4):
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    lines = ["file,label"]
    for label, n in raw_counts.items():
        for i in range(n):
            s = synthetic_spectrum(label, rng, weathered)
            name = f"{label.replace(' ', '_').replace('(', '').replace(')', '')}_{i:03d}.csv"
            with (root / name).open("w") as fh:
                fh.write("wavenumber,intensity\n")
                for xv, yv in zip(s.x, s.y):
                    fh.write(f"{xv:.{step_decimals}f},{yv:.6f}\n")
            lines.append(f'{name},"{label}"')
    (root / "manifest.csv").write_text("\n".join(lines) + "\n")
    return root


@pytest.fixture(scope="session")
def synthetic_libraries(tmp_path_factory):
    """Synthetic SLoPP / SLoPP-E / Mendeley folders with the real raw
    label counts (spectra are synthetic)."""
    base = tmp_path_factory.mktemp("libraries")
    write_synthetic_library(base / "slopp", SLOPP_RAW, 1)
    write_synthetic_library(base / "sloppe", SLOPPE_RAW, 2, weathered=True)
    write_synthetic_library(base / "mendeley", MENDELEY_RAW, 3)
    return base


@pytest.fixture(scope="session")
def small_split():
    """A small in-memory train/test split: 4 classes, well separated."""
    rng = np.random.default_rng(7)
    labels = ["polyethylene", "polypropylene", "polystyrene", "polyamide"]
    train = {lbl: [synthetic_spectrum(lbl, rng, sample_id=f"tr-{lbl}-{i}") for i in range(6)] for lbl in labels}
    train["polyamide"] = train["polyamide"][:2]
    test = {lbl: [synthetic_spectrum(lbl, rng, True, sample_id=f"te-{lbl}-{i}") for i in range(3)] for lbl in labels}
    return LabeledDataset(train, Source.COMBINED), LabeledDataset(test, Source.SLOPPE)


def public_data_root():
    root = os.environ.get("RAMAN_DATA_ROOT")
    if not root:
        return None
    root = Path(root)
    if all((root / k).is_dir() for k in ("slopp", "sloppe", "mendeley")):
        return root
    return None


assert set(TYPE_COUNTS) == set(POLYMER_TYPES)


# Acceptance criteria report their verdicts here; printed after the run.
ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


@pytest.fixture
def verdicts(request):
    return request.config.stash[ACCEPTANCE_KEY]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
