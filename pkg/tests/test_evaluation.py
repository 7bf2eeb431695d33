import io
import json
from dataclasses import replace

import numpy as np
import pytest

from ramanplastic.evaluation import (
    ABLATION_ROWS,
    FINAL_PIPELINE,
    AugmentConfig,
    ModelConfig,
    accuracy,
    compare_models,
    confusion,
    run_ablation,
    run_experiment,
    sweep_bins,
    sweep_noise,
    write_sweep_csv,
)

FAST = ModelConfig(n_trees=10)


class TestAccuracy:
    def test_examples(self):
        assert accuracy(["A", "B"], ["A", "B"]) == 1.0
        assert accuracy(["A", "B"], ["A", "A"]) == 0.5
        assert round(accuracy(["A"] * 91 + ["B"] * 6, ["A"] * 97), 4) == 0.9381

    def test_errors(self):
        with pytest.raises(ValueError):
            accuracy([], [])
        with pytest.raises(ValueError):
            accuracy(["A"], ["A", "B"])


class TestConfusion:
    def test_perfect_is_diagonal(self):
        cm = confusion(list("ABCA"), list("ABCA"), "ABC")
        assert cm.counts.tolist() == [[2, 0, 0], [0, 1, 0], [0, 0, 1]]
        assert cm.accuracy == 1.0

    def test_off_diagonal(self):
        cm = confusion(["B"], ["A"], ["A", "B"])
        assert cm.counts.tolist() == [[0, 1], [0, 0]]
        assert cm.recall() == {"A": 0.0}

    def test_row_sums_are_support(self):
        rng = np.random.default_rng(0)
        actual = list(rng.choice(list("ABCD"), 200))
        preds = list(rng.choice(list("ABCD"), 200))
        cm = confusion(preds, actual, "ABCD")
        assert cm.support() == {c: actual.count(c) for c in "ABCD"}
        assert cm.total == 200
        assert cm.accuracy == accuracy(preds, actual)

    def test_unknown_label(self):
        with pytest.raises(ValueError, match="'Z'"):
            confusion(["Z"], ["A"], ["A"])

    def test_csv(self):
        buf = io.StringIO()
        confusion(["B"], ["A"], ["A", "B"]).to_csv(buf)
        assert buf.getvalue() == "actual\\predicted,A,B\nA,0,1\nB,0,0\n"


class TestRunExperiment:
    def test_report_consistency(self, small_split):
        train, test = small_split
        r = run_experiment(train, test, FINAL_PIPELINE, FAST, seed=1)
        assert 0.0 <= r.accuracy <= 1.0
        assert r.confusion.accuracy == r.accuracy
        assert r.confusion.support() == test.counts()
        assert all(0.0 <= v <= 1.0 for v in r.per_class_recall.values())
        assert len(r.misclassified) == round((1 - r.accuracy) * r.n_test)
        assert r.n_features == 292 and r.n_test == 12
        assert r.train_accuracy == 1.0
        assert "wall_time" not in r.to_dict() and r.wall_time > 0

    def test_separable_data_is_learned(self, small_split):
        train, test = small_split
        assert run_experiment(train, test, FINAL_PIPELINE, FAST).accuracy >= 0.75

    def test_bitwise_reproducible(self, small_split):
        train, test = small_split
        aug = AugmentConfig({"polyamide": 6})
        cfg = replace(FINAL_PIPELINE, noise_amplitude=1.0)
        a = run_experiment(train, test, cfg, FAST, aug, seed=3)
        b = run_experiment(train, test, cfg, FAST, aug, seed=3)
        assert a.to_json() == b.to_json()

    def test_augmentation_counts(self, small_split):
        train, test = small_split
        r = run_experiment(train, test, FINAL_PIPELINE, FAST, AugmentConfig({"polyamide": 6}))
        assert r.n_train == len(train) + 4
        assert r.config["augmentation"]["targets"] == {"polyamide": 6}

    def test_unscaled_truncates_and_records(self, small_split):
        train, test = small_split
        r = run_experiment(train, test, replace(FINAL_PIPELINE, scale=False, bin_width=1), FAST)
        shortest = min(len(s) for ds in (train, test) for _, s in ds.items())
        assert r.config["pipeline"]["truncate_to"] == shortest
        assert r.n_features == shortest - 1

    @pytest.mark.parametrize("kind", ["dt", "knn"])
    def test_other_models(self, small_split, kind):
        train, test = small_split
        r = run_experiment(train, test, FINAL_PIPELINE, ModelConfig(kind))
        assert r.config["model"]["kind"] == kind

    def test_json_round_trip(self, small_split):
        train, test = small_split
        r = run_experiment(train, test, FINAL_PIPELINE, FAST)
        d = json.loads(r.to_json())
        assert d["accuracy"] == r.accuracy
        assert sum(map(sum, d["confusion"]["counts"])) == r.n_test


class TestGrid:
    def test_ablation_rows(self, small_split):
        train, test = small_split
        rows = run_ablation(train, test, model=FAST, seeds=(0,))
        assert [p.label for p in rows] == [r[0] for r in ABLATION_ROWS]
        for p, (_, scale, transform) in zip(rows, ABLATION_ROWS):
            cfg = p.reports[0].config["pipeline"]
            assert (cfg["scale"], cfg["transform"], cfg["bin_width"]) == (scale, transform, 1)

    def test_single_width_sweep(self, small_split):
        train, test = small_split
        pts = sweep_bins(train, test, model=FAST, widths=[12], seeds=(0, 1))
        assert len(pts) == 1 and pts[0].value == 12
        assert [r.seed for r in pts[0].reports] == [0, 1]
        buf = io.StringIO()
        write_sweep_csv(pts, buf, "width")
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("width,mean_accuracy") and len(lines) == 2

    def test_noise_zero_equals_no_noise(self, small_split):
        train, test = small_split
        pts = sweep_noise(train, test, model=FAST, amplitudes=[0.0, 2.0])
        plain = run_experiment(train, test, FINAL_PIPELINE, FAST, name="noise-0")
        assert pts[0].reports[0].accuracy == plain.accuracy
        assert pts[0].reports[0].confusion.counts.tolist() == plain.confusion.counts.tolist()

    def test_negative_noise(self, small_split):
        train, test = small_split
        with pytest.raises(ValueError):
            sweep_noise(train, test, amplitudes=[-1.0])

    def test_compare_models(self, small_split):
        train, test = small_split
        pts = compare_models(
            train, test, augment=AugmentConfig({"polyamide": 4}),
            models=(FAST, ModelConfig("dt"), ModelConfig("knn", k=3)),
        )
        assert [p.label for p in pts] == ["rf", "dt", "knn"]

    def test_no_seeds(self, small_split):
        with pytest.raises(ValueError):
            sweep_bins(*small_split, widths=[4], seeds=())


def test_model_config_validation():
    with pytest.raises(ValueError):
        ModelConfig("svm")
    with pytest.raises(ValueError):
        ModelConfig(criterion="mse")
    with pytest.raises(ValueError):
        ModelConfig(n_trees=0)
