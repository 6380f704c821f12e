"""Image-folder feature extraction into binary feature files."""

from .backbones import BACKBONES, get_backbone
from .errors import DataError, FeatexError
from .extract import ExtractionManifest, extract, write_feature_file

__version__ = "0.1.0"

__all__ = [
    "BACKBONES",
    "DataError",
    "ExtractionManifest",
    "FeatexError",
    "extract",
    "get_backbone",
    "write_feature_file",
]
