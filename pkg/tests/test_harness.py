import json

import numpy as np
import pytest

from protoclass import Dataset, accuracy, evaluate, train_pipeline, write_features
from protoclass.cli import cli_main
from protoclass.errors import DataError, StateError
from protoclass.harness import confusion_matrix, stratified_split
from protoclass.megaclouds import parse_rule

from conftest import make_blob_dataset


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0

    def test_three_of_four(self):
        assert accuracy([0, 1, 1, 0], [0, 1, 0, 0]) == 0.75

    def test_binary_case_agrees_with_confusion_form(self):
        rng = np.random.default_rng(60)
        pred = rng.integers(0, 2, size=200)
        true = rng.integers(0, 2, size=200)
        cm = confusion_matrix(pred, true, 2)
        tp, tn = cm[1, 1], cm[0, 0]
        fp, fn = cm[0, 1], cm[1, 0]
        assert accuracy(pred, true) == pytest.approx(
            (tp + tn) / (tp + fp + tn + fn), rel=1e-15)

    def test_length_mismatch_raises(self):
        with pytest.raises(StateError):
            accuracy([0, 1], [0])

    def test_empty_raises(self):
        with pytest.raises(StateError):
            accuracy([], [])


class TestStratifiedSplit:
    def test_proportions_within_one_sample(self):
        rng = np.random.default_rng(61)
        class_ids = np.repeat([0, 1, 2], [37, 18, 9])
        train_idx, test_idx = stratified_split(class_ids, 0.8, rng)
        assert len(train_idx) + len(test_idx) == 64
        assert set(train_idx) & set(test_idx) == set()
        for cid, n in ((0, 37), (1, 18), (2, 9)):
            k = int(np.sum(class_ids[train_idx] == cid))
            assert abs(k - 0.8 * n) <= 1.0

    def test_deterministic_given_seed(self):
        class_ids = np.repeat([0, 1], [20, 20])
        a = stratified_split(class_ids, 0.8, np.random.default_rng(7))
        b = stratified_split(class_ids, 0.8, np.random.default_rng(7))
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def test_every_class_keeps_a_test_sample(self):
        rng = np.random.default_rng(62)
        class_ids = np.repeat([0, 1], [2, 50])
        train_idx, test_idx = stratified_split(class_ids, 0.9, rng)
        assert np.sum(class_ids[test_idx] == 0) == 1
        assert np.sum(class_ids[train_idx] == 0) == 1


class TestEvaluate:
    def test_same_seed_gives_identical_report(self, blob_dataset):
        a = evaluate(blob_dataset, repeats=3, seed=42)
        b = evaluate(blob_dataset, repeats=3, seed=42)
        assert a.split_accuracies == b.split_accuracies
        assert np.array_equal(a.confusion, b.confusion)
        assert a.prototype_counts == b.prototype_counts
        assert a.megacloud_counts == b.megacloud_counts

    def test_single_repeat_has_zero_std(self, blob_dataset):
        report = evaluate(blob_dataset, repeats=1, seed=1)
        assert len(report.split_accuracies) == 1
        assert report.accuracy_std == 0.0

    def test_blobs_are_easy(self, blob_dataset):
        report = evaluate(blob_dataset, repeats=3, seed=42)
        assert report.accuracy_mean >= 0.95

    def test_mean_lies_between_split_extremes(self, blob_dataset):
        report = evaluate(blob_dataset, repeats=4, seed=3)
        assert min(report.split_accuracies) <= report.accuracy_mean
        assert report.accuracy_mean <= max(report.split_accuracies)

    def test_confusion_rows_match_test_counts(self, blob_dataset):
        repeats = 3
        report = evaluate(blob_dataset, repeats=repeats, seed=5)
        # 100 per class, 80/20 split: 20 test samples per class per repeat
        np.testing.assert_array_equal(report.confusion.sum(axis=1),
                                      [20 * repeats] * 3)

    def test_class_with_one_sample_is_named(self):
        ds = Dataset(
            features=np.array([[0.0], [1.0], [2.0]], dtype=np.float32),
            class_ids=np.array([0, 0, 1]),
            source_refs=["a", "b", "c"],
            label_names=["plentiful", "rare"],
        )
        with pytest.raises(DataError, match="rare"):
            evaluate(ds, repeats=1)

    def test_needs_two_classes(self):
        ds = Dataset(
            features=np.array([[0.0], [1.0]], dtype=np.float32),
            class_ids=np.array([0, 0]),
            source_refs=["a", "b"],
            label_names=["only"],
        )
        with pytest.raises(DataError):
            evaluate(ds, repeats=1)

    def test_report_render_and_dict(self, blob_dataset):
        report = evaluate(blob_dataset, repeats=2, seed=9)
        text = report.render_text()
        assert "mean accuracy" in text
        d = report.to_dict()
        assert d["repeats"] == 2
        assert len(d["confusion"]) == 3
        json.dumps(d)  # must be serializable as-is


class TestTrainPipeline:
    def test_pipeline_attaches_everything(self, blob_dataset):
        model = train_pipeline(blob_dataset)
        assert model.params is not None
        assert model.label_names == ["blob0", "blob1", "blob2"]
        assert model.megaclouds is not None
        assert model.total_clouds >= 3


class TestCli:
    @pytest.fixture
    def features_file(self, tmp_path):
        ds = make_blob_dataset(n_per_class=20, seed=63)
        path = tmp_path / "blobs.xdnf"
        write_features(ds, path)
        return path

    def test_train_writes_model(self, tmp_path, features_file, capsys):
        out = tmp_path / "m.json"
        assert cli_main(["train", "--features", str(features_file),
                         "--out", str(out)]) == 0
        assert out.exists()
        assert "trained" in capsys.readouterr().out

    def test_predict_writes_table(self, tmp_path, features_file):
        model_path = tmp_path / "m.json"
        cli_main(["train", "--features", str(features_file), "--out", str(model_path)])
        table = tmp_path / "pred.tsv"
        assert cli_main(["predict", "--model", str(model_path),
                         "--features", str(features_file),
                         "--out", str(table)]) == 0
        lines = table.read_text().strip().split("\n")
        assert lines[0].split("\t")[:2] == ["sample_id", "predicted_class"]
        assert len(lines) == 1 + 60

    def test_evaluate_prints_report(self, tmp_path, features_file, capsys):
        report_path = tmp_path / "report.json"
        code = cli_main(["evaluate", "--features", str(features_file),
                         "--seed", "42", "--repeats", "2",
                         "--out", str(report_path)])
        assert code == 0
        assert "mean accuracy" in capsys.readouterr().out
        report = json.loads(report_path.read_text())
        assert report["seed"] == 42
        assert len(report["split_accuracies"]) == 2

    def test_rules_are_grammar_conformant(self, tmp_path, features_file):
        model_path = tmp_path / "m.json"
        cli_main(["train", "--features", str(features_file), "--out", str(model_path)])
        rules_path = tmp_path / "rules.txt"
        assert cli_main(["rules", "--model", str(model_path),
                         "--out", str(rules_path)]) == 0
        lines = rules_path.read_text(encoding="utf-8").strip().split("\n")
        assert len(lines) == 3
        for line in lines:
            parse_rule(line)

    def test_inspect_summary_and_exports(self, tmp_path, features_file, capsys):
        model_path = tmp_path / "m.json"
        cli_main(["train", "--features", str(features_file), "--out", str(model_path)])
        viz = tmp_path / "viz.tsv"
        typ = tmp_path / "typ.tsv"
        code = cli_main(["inspect", "--model", str(model_path),
                         "--viz-out", str(viz),
                         "--typicality-out", str(typ), "--grid-res", "4"])
        assert code == 0
        out = capsys.readouterr().out
        assert "megaclouds" in out and "radii histogram" in out
        assert viz.read_text().startswith("cloud_id")
        assert typ.read_text().startswith("class_id")

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert cli_main(["frobnicate"]) == 2
        capsys.readouterr()

    def test_unknown_flag_is_usage_error(self, features_file, capsys):
        assert cli_main(["train", "--features", str(features_file),
                         "--out", "x", "--bogus"]) == 2
        capsys.readouterr()

    def test_missing_file_is_runtime_error(self, tmp_path, capsys):
        code = cli_main(["train", "--features", str(tmp_path / "nope.xdnf"),
                         "--out", str(tmp_path / "m.json")])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_bad_magic_is_typed_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.xdnf"
        bad.write_bytes(b"JUNKJUNKJUNK")
        code = cli_main(["train", "--features", str(bad),
                         "--out", str(tmp_path / "m.json")])
        assert code == 1
        assert "FormatError" in capsys.readouterr().err
