import numpy as np
import pytest
from PIL import Image


def write_image_tree(root, classes=("daylight", "night"), per_class=3, size=(24, 16),
                     seed=99):
    """Small deterministic PNG tree: one subdirectory per class."""
    rng = np.random.default_rng(seed)
    for cname in classes:
        d = root / cname
        d.mkdir(parents=True)
        for i in range(per_class):
            pixels = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
            Image.fromarray(pixels, mode="RGB").save(d / f"img_{i:03d}.png")
    return root


@pytest.fixture
def image_tree(tmp_path):
    return write_image_tree(tmp_path / "dataset")
