import io
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MENDELEY_RAW, SLOPP_RAW, SLOPPE_RAW, TYPE_COUNTS
from ramanplastic.dataset import (
    POLYMER_TYPES,
    REJECTED,
    DataFormatError,
    DatasetError,
    LabeledDataset,
    Source,
    Spectrum,
    assemble_train_test,
    load_library,
    normalize_label,
    parse_spectrum_csv,
    write_library,
    write_spectrum_csv,
)


class TestParse:
    def test_plain(self):
        s = parse_spectrum_csv("100,5.0\n101,6.0")
        assert s.points == [(100.0, 5.0), (101.0, 6.0)]

    def test_header_and_sort(self):
        s = parse_spectrum_csv("x,y\n300,1.5\n200,2.5")
        assert s.points == [(200.0, 2.5), (300.0, 1.5)]

    def test_non_numeric_names_line(self):
        with pytest.raises(DataFormatError) as exc:
            parse_spectrum_csv("100,abc")
        assert exc.value.line == 1
        assert "line 1" in str(exc.value)

    def test_non_numeric_after_header(self):
        with pytest.raises(DataFormatError) as exc:
            parse_spectrum_csv("x,y\n1,2\n3,4\nfoo,5")
        assert exc.value.line == 4

    @pytest.mark.parametrize("text", ["", "x,y\n", "\n\n"])
    def test_empty(self, text):
        with pytest.raises(DataFormatError, match="empty"):
            parse_spectrum_csv(text)

    def test_too_few_points(self):
        with pytest.raises(DataFormatError, match="fewer than 2"):
            parse_spectrum_csv("1,2")

    def test_duplicate_keeps_last(self):
        s = parse_spectrum_csv("5,1\n3,7\n5,9")
        assert s.points == [(3.0, 7.0), (5.0, 9.0)]

    def test_single_column(self):
        with pytest.raises(DataFormatError, match="2 columns"):
            parse_spectrum_csv("1\n2")

    def test_non_finite(self):
        with pytest.raises(DataFormatError, match="non-finite"):
            parse_spectrum_csv("1,2\n2,nan")

    @settings(max_examples=200)
    @given(
        st.dictionaries(
            st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False),
            st.floats(-1e9, 1e9, allow_nan=False, allow_infinity=False),
            min_size=2,
            max_size=50,
        )
    )
    def test_round_trip(self, pts):
        pts = {x + 0.0: y for x, y in pts.items()}  # fold -0.0
        if len(pts) < 2:
            return
        xs = sorted(pts)
        s = Spectrum(np.array(xs), np.array([pts[x] for x in xs]))
        buf = io.StringIO()
        write_spectrum_csv(s, buf)
        again = parse_spectrum_csv(buf.getvalue())
        assert again.points == s.points


def test_spectrum_invariants():
    with pytest.raises(ValueError):
        Spectrum(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        Spectrum(np.array([2.0, 1.0]), np.array([1.0, 1.0]))
    s = Spectrum([1, 2], [3, 4])
    with pytest.raises(ValueError):
        s.y[0] = 5


class TestNormalizeLabel:
    @pytest.mark.parametrize(
        "raw, expected",
        [
            ("Polypropylene", "polypropylene"),
            ("  Polyvinyl chloride ", "polyvinyl chloride"),
            ("Polystyrene (maybe)", "polystyrene"),
            ("Not detected", REJECTED),
            ("Rubber", REJECTED),
            ("Polyamine (nylon)", REJECTED),
            ("Nitrocellulose", REJECTED),
            ("Polyethylene-co-Polypropylene", REJECTED),
            ("Dyed Cellulose", REJECTED),
        ],
    )
    def test_table(self, raw, expected):
        assert normalize_label(raw) == expected

    def test_every_vocabulary_name_maps_to_itself(self):
        for name in POLYMER_TYPES:
            assert normalize_label(name.title()) == name

    def test_extra_synonyms(self):
        assert normalize_label("Polyamine (nylon)", {"polyamine (nylon)": "polyamide"}) == "polyamide"
        assert normalize_label("Weird", {"weird": None}) is REJECTED


def test_labeled_dataset_rejects_unknown_types():
    with pytest.raises(DatasetError):
        LabeledDataset({"rubber": ()}, Source.SLOPP)


class TestLibraries:
    def test_counts_match_library_distribution(self, synthetic_libraries):
        slopp, r1 = load_library(synthetic_libraries / "slopp", "slopp")
        sloppe, r2 = load_library(synthetic_libraries / "sloppe", "sloppe")
        mendeley, r3 = load_library(synthetic_libraries / "mendeley", "mendeley")
        assert len(slopp) == 148 and len(slopp.types) == 15
        assert len(sloppe) == 97 and len(sloppe.types) == 13
        assert len(mendeley) == 158
        for name, (a, b, c) in TYPE_COUNTS.items():
            assert slopp.counts().get(name) == a, name
            assert sloppe.counts().get(name) == b, name
            assert mendeley.counts().get(name) == c, name
        assert sum(r3.raw_counts.values()) == sum(MENDELEY_RAW.values()) == 173
        assert len(r2.rejected) == 16
        assert r1.raw_counts == SLOPP_RAW
        assert sum(r2.raw_counts.values()) == sum(SLOPPE_RAW.values())

    def test_assembly(self, synthetic_libraries):
        slopp, _ = load_library(synthetic_libraries / "slopp", "slopp")
        sloppe, _ = load_library(synthetic_libraries / "sloppe", "sloppe")
        mendeley, _ = load_library(synthetic_libraries / "mendeley", "mendeley")
        train, test = assemble_train_test(slopp, mendeley, sloppe)
        assert (len(train), len(test)) == (306, 97)
        assert train.counts()["polyethylene"] == 24 + 74
        assert set(train.types) == set(POLYMER_TYPES)
        assert set(test.types) <= set(train.types)
        train_ids = {s.id for _, s in train.items()}
        assert not train_ids & {s.id for _, s in test.items()}

    def test_load_report_jsonl(self, synthetic_libraries):
        _, report = load_library(synthetic_libraries / "mendeley", "mendeley")
        buf = io.StringIO()
        report.write_jsonl(buf)
        recs = [json.loads(line) for line in buf.getvalue().splitlines()]
        assert len(recs) == 15
        assert {r["label"] for r in recs} == {"Not detected", "Nitrocellulose", "Polyamine (nylon)"}

    def test_missing_directory(self, tmp_path):
        with pytest.raises(DatasetError, match="not found"):
            load_library(tmp_path / "nope", Source.SLOPP)

    def test_empty_directory(self, tmp_path):
        with pytest.raises(DatasetError, match="no accepted"):
            load_library(tmp_path, Source.SLOPP)

    def test_bad_files_are_reported(self, tmp_path):
        (tmp_path / "a.csv").write_text("1,2\n2,3\n")
        (tmp_path / "b.csv").write_text("1,x\n")
        (tmp_path / "manifest.csv").write_text("file,label\na.csv,PE\nb.csv,PE\nc.csv,PE\n")
        ds, report = load_library(tmp_path, Source.SLOPP)
        assert ds.counts() == {"polyethylene": 1}
        reasons = {r["file"]: r["reason"] for r in report.rejected}
        assert "line 1" in reasons["b.csv"]
        assert "unreadable" in reasons["c.csv"]

    def test_directory_layout_without_manifest(self, tmp_path):
        (tmp_path / "Polystyrene").mkdir()
        (tmp_path / "Polystyrene" / "s1.csv").write_text("1,2\n2,3\n")
        (tmp_path / "Rubber").mkdir()
        (tmp_path / "Rubber" / "s1.csv").write_text("1,2\n2,3\n")
        ds, report = load_library(tmp_path, Source.SLOPPE)
        assert ds.counts() == {"polystyrene": 1}
        assert len(report.rejected) == 1

    def test_write_library_round_trip(self, tmp_path):
        ds = LabeledDataset(
            {"polystyrene": (Spectrum([1.0, 2.5], [3.0, 4.0], id="a"),
                             Spectrum([1.0, 2.5], [3.5, 4.5], id="a~aug0", provenance={"source": "a", "seed": 3}))},
            Source.COMBINED,
        )
        write_library(ds, tmp_path)
        again, _ = load_library(tmp_path, Source.COMBINED)
        assert [s.points for _, s in again.items()] == [s.points for _, s in ds.items()]
        assert "a~aug0" not in (tmp_path / "manifest.csv").read_text()
        assert ",a,3" in (tmp_path / "manifest.csv").read_text()


def test_assembly_degenerate():
    m = LabeledDataset({"polyethylene": (Spectrum([1, 2], [1, 1], id="m1"),)}, Source.MENDELEY)
    empty = LabeledDataset({}, Source.SLOPP)
    with pytest.raises(DatasetError, match="share no"):
        assemble_train_test(empty, m, m)
