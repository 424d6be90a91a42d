"""Model adapters behind a small registry.

Two families are provided. The ``hash`` family is a dependency-free,
fully deterministic baseline (feature hashing for text, fixed random
projections for pixels, intensity-bucket detections) used for smoke
testing the artifact pipeline; it needs no weights. The ``torchvision``
and ``clip`` families wrap pretrained networks and expect weights
available locally — nothing is downloaded.

Every adapter is deterministic for a fixed input, and batch order always
matches manifest order.
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image

DEFAULT_DIM = 256
DEFAULT_CLASSES = 10

# Intensity buckets the stub detector maps image regions onto.
STUB_CLASSES = ("dark", "dusk", "mid", "bright")


class ModelError(Exception):
    pass


def _load_pixels(path: str, size: int = 16) -> np.ndarray:
    try:
        with Image.open(path) as img:
            gray = img.convert("L").resize((size, size), Image.BILINEAR)
    except OSError as exc:
        raise ModelError(f"cannot read image {path!r}: {exc}") from exc
    return np.asarray(gray, dtype=np.float64).reshape(-1) / 255.0


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        out = np.zeros_like(vec)
        out[0] = 1.0
        return out
    return vec / norm


class HashingTextEncoder:
    """Character trigram feature hashing; identical strings embed identically."""

    def __init__(self, dim: int = DEFAULT_DIM, ngram: int = 3):
        self.dim = dim
        self.ngram = ngram

    def encode(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim)
        padded = f"  {text.lower().strip()}  "
        for i in range(len(padded) - self.ngram + 1):
            gram = padded[i:i + self.ngram]
            digest = int.from_bytes(
                hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest(), "big")
            sign = 1.0 if digest & 1 else -1.0
            vec[(digest >> 1) % self.dim] += sign
        return _unit(vec)


class HashingImageEncoder:
    """Grayscale thumbnail pixels through a fixed random projection."""

    def __init__(self, dim: int = DEFAULT_DIM, seed: int = 1234):
        rng = np.random.default_rng(seed)
        self.projection = rng.normal(size=(dim, 256)) / np.sqrt(256)

    def encode(self, image_path: str) -> np.ndarray:
        return _unit(self.projection @ _load_pixels(image_path))


class HashingClassifier:
    """Fixed random linear map from thumbnail pixels to class logits."""

    def __init__(self, n_classes: int = DEFAULT_CLASSES, seed: int = 4321):
        rng = np.random.default_rng(seed)
        self.weight = rng.normal(size=(n_classes, 256))
        self.bias = rng.normal(size=n_classes) * 0.1
        self.n_classes = n_classes

    def logits_batch(self, paths: list[str]) -> np.ndarray:
        return np.stack([self.weight @ _load_pixels(p) + self.bias for p in paths])


class StubDetector:
    """Deterministic quadrant detections bucketed by mean intensity.

    Every image yields up to four detections with scores in [0.6, 1.0], so
    crop sets are never empty at the default 0.5 threshold.
    """

    def detect(self, image_path: str) -> list[dict]:
        try:
            with Image.open(image_path) as img:
                gray = img.convert("L")
                w, h = gray.size
                pixels = np.asarray(gray, dtype=np.float64) / 255.0
        except OSError as exc:
            raise ModelError(f"cannot read image {image_path!r}: {exc}") from exc
        boxes = [
            (0, 0, w // 2, h // 2),
            (w // 2, 0, w, h // 2),
            (0, h // 2, w // 2, h),
            (w // 2, h // 2, w, h),
        ]
        detections = []
        for x0, y0, x1, y1 in boxes:
            if x1 <= x0 or y1 <= y0:
                continue
            mean = float(pixels[y0:y1, x0:x1].mean())
            label = STUB_CLASSES[min(int(mean * len(STUB_CLASSES)), len(STUB_CLASSES) - 1)]
            detections.append({"class": label,
                               "score": round(0.6 + 0.4 * mean, 6),
                               "box": [x0, y0, x1, y1]})
        return detections


class DetectionCounter:
    """Counts detections per class at a score threshold."""

    def __init__(self, detector, threshold: float = 0.5):
        self.detector = detector
        self.threshold = threshold

    def count(self, image_path: str) -> dict[str, float]:
        counts: dict[str, float] = {}
        for det in self.detector.detect(image_path):
            if det["score"] >= self.threshold:
                counts[det["class"]] = counts.get(det["class"], 0.0) + 1.0
        return counts


class HashEncoderPair:
    """Deterministic image/text embedding pair sharing one vector space."""

    def __init__(self, dim: int = DEFAULT_DIM):
        self.images = HashingImageEncoder(dim=dim)
        self.texts = HashingTextEncoder(dim=dim)

    def encode_images(self, paths: list[str]) -> np.ndarray:
        return np.stack([self.images.encode(p) for p in paths])

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        return np.stack([self.texts.encode(t) for t in texts])


def _import_torch():
    try:
        import torch
        import torchvision
    except ImportError as exc:
        raise ModelError(
            "torch/torchvision are not installed; install the [torch] extra "
            "or use the hash model family") from exc
    return torch, torchvision


class TorchClassifier:
    """torchvision classifier adapter; random init unless weights are given."""

    def __init__(self, arch: str = "resnet18", weights_path: str | None = None,
                 device: str = "cpu", seed: int = 0, input_size: int = 224):
        torch, torchvision = _import_torch()
        torch.manual_seed(seed)
        factory = getattr(torchvision.models, arch, None)
        if factory is None:
            raise ModelError(f"unknown torchvision architecture {arch!r}")
        self.torch = torch
        self.model = factory(weights=None)
        if weights_path:
            self.model.load_state_dict(torch.load(weights_path, map_location=device))
        self.model.eval().to(device)
        self.device = device
        self.input_size = 299 if arch == "inception_v3" else input_size

    def _batch(self, paths: list[str]):
        arrays = []
        for path in paths:
            with Image.open(path) as img:
                rgb = img.convert("RGB").resize((self.input_size, self.input_size),
                                                Image.BILINEAR)
            arrays.append(np.asarray(rgb, dtype=np.float32).transpose(2, 0, 1) / 255.0)
        return self.torch.from_numpy(np.stack(arrays)).to(self.device)

    def logits_batch(self, paths: list[str]) -> np.ndarray:
        with self.torch.no_grad():
            out = self.model(self._batch(paths))
        if not self.torch.is_tensor(out):  # inception_v3 train-mode style outputs
            out = out[0]
        return out.cpu().numpy().astype(np.float64)


class TorchFeatureExtractor(TorchClassifier):
    """Same backbone with the classification head replaced by identity."""

    def __init__(self, **kwargs):
        super().__init__(**kwargs)
        torch = self.torch
        if hasattr(self.model, "fc"):
            self.model.fc = torch.nn.Identity()
        elif hasattr(self.model, "classifier"):
            self.model.classifier = torch.nn.Identity()
        self.model.eval()

    def features_batch(self, paths: list[str]) -> np.ndarray:
        return self.logits_batch(paths)


class TorchDetector:
    """Mask-RCNN adapter; random init unless local weights are given."""

    def __init__(self, weights_path: str | None = None, device: str = "cpu",
                 seed: int = 0, class_names: list[str] | None = None):
        torch, torchvision = _import_torch()
        torch.manual_seed(seed)
        self.model = torchvision.models.detection.maskrcnn_resnet50_fpn(
            weights=None, weights_backbone=None)
        if weights_path:
            self.model.load_state_dict(torch.load(weights_path, map_location=device))
        self.model.eval().to(device)
        self.torch = torch
        self.device = device
        self.class_names = class_names

    def _name(self, label: int) -> str:
        if self.class_names and 0 <= label < len(self.class_names):
            return self.class_names[label]
        return f"class_{label}"

    def detect(self, image_path: str) -> list[dict]:
        with Image.open(image_path) as img:
            rgb = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
        tensor = self.torch.from_numpy(rgb.transpose(2, 0, 1)).to(self.device)
        with self.torch.no_grad():
            out = self.model([tensor])[0]
        detections = []
        for box, label, score in zip(out["boxes"].cpu().numpy(),
                                     out["labels"].cpu().numpy(),
                                     out["scores"].cpu().numpy()):
            detections.append({"class": self._name(int(label)),
                               "score": float(min(max(score, 0.0), 1.0)),
                               "box": [float(v) for v in box]})
        return detections


class ClipEncoderPair:
    """CLIP image/text encoders loaded from a local directory only."""

    def __init__(self, model_path: str, device: str = "cpu"):
        try:
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ModelError("transformers is not installed; CLIP encoders unavailable") from exc
        try:
            self.model = CLIPModel.from_pretrained(model_path, local_files_only=True)
            self.processor = CLIPProcessor.from_pretrained(model_path, local_files_only=True)
        except OSError as exc:
            raise ModelError(f"CLIP weights not found at {model_path!r}: {exc}") from exc
        self.model.eval().to(device)
        self.device = device

    def encode_images(self, paths: list[str]) -> np.ndarray:
        import torch
        images = [Image.open(p).convert("RGB") for p in paths]
        inputs = self.processor(images=images, return_tensors="pt").to(self.device)
        with torch.no_grad():
            feats = self.model.get_image_features(**inputs)
        feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float64)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        import torch
        inputs = self.processor(text=texts, return_tensors="pt", padding=True,
                                truncation=True).to(self.device)
        with torch.no_grad():
            feats = self.model.get_text_features(**inputs)
        feats = feats / feats.norm(dim=-1, keepdim=True)
        return feats.cpu().numpy().astype(np.float64)


def make_classifier(spec: str, weights: str | None = None, device: str = "cpu",
                    n_classes: int = DEFAULT_CLASSES):
    if spec == "hash":
        return HashingClassifier(n_classes=n_classes)
    if spec.startswith("torchvision:"):
        return TorchClassifier(arch=spec.split(":", 1)[1], weights_path=weights,
                               device=device)
    raise ModelError(f"unknown classifier model {spec!r}")


def make_feature_extractor(spec: str, weights: str | None = None, device: str = "cpu"):
    if spec == "hash":
        return HashEncoderPair()
    if spec.startswith("torchvision:"):
        return TorchFeatureExtractor(arch=spec.split(":", 1)[1], weights_path=weights,
                                     device=device)
    if spec.startswith("clip:"):
        return ClipEncoderPair(spec.split(":", 1)[1], device=device)
    raise ModelError(f"unknown feature extractor model {spec!r}")


def make_encoder_pair(spec: str, device: str = "cpu"):
    if spec == "hash":
        return HashEncoderPair()
    if spec.startswith("clip:"):
        return ClipEncoderPair(spec.split(":", 1)[1], device=device)
    raise ModelError(f"unknown encoder pair {spec!r}; use 'hash' or 'clip:<local path>'")


def make_detector(spec: str, weights: str | None = None, device: str = "cpu"):
    if spec == "hash":
        return StubDetector()
    if spec == "maskrcnn" or spec.startswith("maskrcnn:"):
        weights = weights or (spec.split(":", 1)[1] if ":" in spec else None)
        return TorchDetector(weights_path=weights, device=device)
    raise ModelError(f"unknown detector model {spec!r}; use 'hash' or 'maskrcnn[:weights]'")
