"""Model adapters that produce t2ieval artifact files from images and captions."""

__version__ = "0.1.0"

from .formats import write_matrix, write_records
from .jobs import (count_objects, detect_and_crop, extract_features, extract_logits,
                   score_retrieval, score_triplets)
from .manifests import (ManifestError, load_image_manifest, load_retrieval_manifest,
                        load_triplet_manifest)
from .models import (ClipEncoderPair, DetectionCounter, HashEncoderPair, HashingClassifier,
                     HashingImageEncoder, HashingTextEncoder, ModelError, StubDetector,
                     TorchClassifier, TorchDetector, TorchFeatureExtractor)

__all__ = [
    "__version__", "ClipEncoderPair", "DetectionCounter", "HashEncoderPair",
    "HashingClassifier", "HashingImageEncoder", "HashingTextEncoder", "ManifestError",
    "ModelError", "StubDetector", "TorchClassifier", "TorchDetector",
    "TorchFeatureExtractor", "count_objects", "detect_and_crop", "extract_features",
    "extract_logits", "load_image_manifest", "load_retrieval_manifest",
    "load_triplet_manifest", "score_retrieval", "score_triplets", "write_matrix",
    "write_records",
]
