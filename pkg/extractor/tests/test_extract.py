import json

import numpy as np
import pytest

from featex import DataError, extract, get_backbone
from featex.cli import cli_main

from conftest import write_image_tree

# the classifier package reads the produced files back (contract check)
from protoclass import read_features


class TestPixelExtraction:
    def test_counts_and_header_fields(self, tmp_path, image_tree):
        out = tmp_path / "feat.xdnf"
        manifest = extract(image_tree, backbone="pixel64", out_path=out)
        ds = read_features(out)
        assert ds.n_samples == 6
        assert ds.n_dims == 4096
        assert ds.label_names == ["daylight", "night"]
        assert manifest.images_per_class == {"daylight": 3, "night": 3}

    def test_refs_are_relative_posix_paths(self, tmp_path, image_tree):
        out = tmp_path / "feat.xdnf"
        extract(image_tree, backbone="pixel64", out_path=out)
        ds = read_features(out)
        assert ds.source_refs[0] == "daylight/img_000.png"
        assert not any(r.startswith("/") for r in ds.source_refs)

    def test_repeat_run_is_byte_identical(self, tmp_path, image_tree):
        out_a, out_b = tmp_path / "a.xdnf", tmp_path / "b.xdnf"
        extract(image_tree, backbone="pixel64", out_path=out_a)
        extract(image_tree, backbone="pixel64", out_path=out_b)
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_values_are_finite_and_in_range(self, tmp_path, image_tree):
        out = tmp_path / "feat.xdnf"
        extract(image_tree, backbone="pixel64", out_path=out)
        ds = read_features(out)
        assert np.isfinite(ds.features).all()
        assert ds.features.min() >= 0.0 and ds.features.max() <= 1.0

    def test_manifest_is_written(self, tmp_path, image_tree):
        out = tmp_path / "feat.xdnf"
        extract(image_tree, backbone="pixel64", out_path=out)
        doc = json.loads((tmp_path / "feat.xdnf.manifest.json").read_text())
        assert doc["backbone"] == "pixel64"
        assert doc["dim"] == 4096
        assert doc["class_names"] == ["daylight", "night"]
        assert doc["skipped"] == []


class TestSkipsAndErrors:
    def test_undecodable_image_is_skipped_with_sidecar(self, tmp_path, image_tree):
        (image_tree / "night" / "broken.png").write_text("this is not a png")
        out = tmp_path / "feat.xdnf"
        manifest = extract(image_tree, backbone="pixel64", out_path=out)
        assert manifest.skipped == ["night/broken.png"]
        ds = read_features(out)
        assert ds.n_samples == 6  # the broken file contributes nothing
        sidecar = (tmp_path / "feat.xdnf.skipped.txt").read_text()
        assert sidecar == "night/broken.png\n"

    def test_class_with_only_undecodable_images_raises(self, tmp_path, image_tree):
        empty = image_tree / "tunnel"
        empty.mkdir()
        (empty / "junk.jpg").write_text("junk")
        with pytest.raises(DataError, match="tunnel"):
            extract(image_tree, backbone="pixel64", out_path=tmp_path / "f.xdnf")

    def test_empty_class_directory_raises(self, tmp_path, image_tree):
        (image_tree / "tunnel").mkdir()
        with pytest.raises(DataError, match="no files"):
            extract(image_tree, backbone="pixel64", out_path=tmp_path / "f.xdnf")

    def test_root_without_class_dirs_raises(self, tmp_path):
        root = tmp_path / "flat"
        root.mkdir()
        with pytest.raises(DataError):
            extract(root, backbone="pixel64", out_path=tmp_path / "f.xdnf")

    def test_unknown_backbone_raises(self, tmp_path, image_tree):
        with pytest.raises(DataError, match="unknown backbone"):
            extract(image_tree, backbone="resnet9000", out_path=tmp_path / "f.xdnf")

    def test_unknown_layer_raises(self, tmp_path, image_tree):
        with pytest.raises(DataError, match="layer"):
            extract(image_tree, backbone="pixel64", layer="fc7",
                    out_path=tmp_path / "f.xdnf")


class TestVgg16Backbone:
    def test_random_weights_give_4096_dims_deterministically(self, tmp_path):
        pytest.importorskip("torchvision")
        tree = write_image_tree(tmp_path / "ds", classes=("a",), per_class=2,
                                size=(32, 32))
        bb = get_backbone("vgg16", weights="random")
        assert bb.dim == 4096
        out_a, out_b = tmp_path / "a.xdnf", tmp_path / "b.xdnf"
        extract(tree, backbone="vgg16", weights="random", out_path=out_a)
        extract(tree, backbone="vgg16", weights="random", out_path=out_b)
        assert out_a.read_bytes() == out_b.read_bytes()
        ds = read_features(out_a)
        assert ds.n_dims == 4096
        assert np.isfinite(ds.features).all()


class TestCli:
    def test_extract_happy_path(self, tmp_path, image_tree, capsys):
        out = tmp_path / "cli.xdnf"
        code = cli_main(["extract", "--root", str(image_tree),
                         "--backbone", "pixel64", "--out", str(out)])
        assert code == 0
        assert "embedded 6 images" in capsys.readouterr().out
        assert read_features(out).n_samples == 6

    def test_missing_root_is_error(self, tmp_path, capsys):
        code = cli_main(["extract", "--root", str(tmp_path / "nope"),
                         "--backbone", "pixel64", "--out", str(tmp_path / "f.xdnf")])
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_usage_error(self):
        assert cli_main(["extract"]) == 2
