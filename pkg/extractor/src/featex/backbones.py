"""Embedding backbones: batches of PIL images to fixed-width float32 vectors.

Two backbones are registered:

- ``vgg16``: the 4096-wide first fully connected layer of torchvision's
  VGG16 (layer name ``fc1``).  Weights default to the published ImageNet
  checkpoint; ``weights="random"`` gives a seeded random initialization so
  pipelines stay testable offline (the embedding is then deterministic but
  not semantically meaningful).
- ``pixel64``: 64x64 grayscale pixels flattened to 4096 values.  No deep
  learning dependency; useful for smoke tests and format plumbing.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import DataError


class PixelBackbone:
    """Downsampled grayscale pixels as a 4096-dim embedding."""

    name = "pixel64"
    default_layer = "pixels"
    dim = 4096
    preprocessing = ("convert to 8-bit grayscale, bilinear resize to 64x64, "
                     "scale to [0,1], row-major flatten")

    def __init__(self, layer: str | None = None, weights: str = "pretrained"):
        layer = layer or self.default_layer
        if layer != "pixels":
            raise DataError(f"backbone pixel64 has no layer {layer!r} (only 'pixels')")
        self.layer = layer
        self.weights = "none"

    def embed_batch(self, images) -> np.ndarray:
        out = np.empty((len(images), self.dim), dtype=np.float32)
        for i, img in enumerate(images):
            small = img.convert("L").resize((64, 64), Image.BILINEAR)
            out[i] = (np.asarray(small, dtype=np.float32) / 255.0).ravel()
        return out


class Vgg16Backbone:
    """First fully connected layer of torchvision's VGG16 (1 x 4096)."""

    name = "vgg16"
    default_layer = "fc1"
    dim = 4096
    preprocessing = ("convert to RGB, resize shorter side to 256, center-crop 224, "
                     "scale to [0,1], normalize with ImageNet mean/std")

    def __init__(self, layer: str | None = None, weights: str = "pretrained"):
        import torch
        from torchvision import models, transforms

        layer = layer or self.default_layer
        if layer != "fc1":
            raise DataError(f"backbone vgg16 has no layer {layer!r} (only 'fc1')")
        self.layer = layer
        self.weights = weights
        self._torch = torch

        if weights == "pretrained":
            tv_weights = models.VGG16_Weights.IMAGENET1K_V1
        elif weights == "random":
            torch.manual_seed(0)  # deterministic initialization per construction
            tv_weights = None
        else:
            raise DataError(f"unknown weights option {weights!r} (pretrained|random)")
        net = models.vgg16(weights=tv_weights)
        net.eval()
        self._features = net.features
        self._avgpool = net.avgpool
        self._fc1 = net.classifier[0]
        self._transform = transforms.Compose([
            transforms.Resize(256),
            transforms.CenterCrop(224),
            transforms.ToTensor(),
            transforms.Normalize(mean=[0.485, 0.456, 0.406],
                                 std=[0.229, 0.224, 0.225]),
        ])

    def embed_batch(self, images) -> np.ndarray:
        torch = self._torch
        batch = torch.stack([self._transform(img.convert("RGB")) for img in images])
        with torch.no_grad():
            h = self._avgpool(self._features(batch))
            out = self._fc1(torch.flatten(h, 1))
        return out.numpy().astype(np.float32)


BACKBONES = {
    PixelBackbone.name: PixelBackbone,
    Vgg16Backbone.name: Vgg16Backbone,
}


def get_backbone(name: str, layer: str | None = None, weights: str = "pretrained"):
    if name not in BACKBONES:
        raise DataError(f"unknown backbone {name!r}; available: {sorted(BACKBONES)}")
    return BACKBONES[name](layer=layer, weights=weights)
