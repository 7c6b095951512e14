"""Extraction loop: encode a dataset and its class prompts, write tensor files.

The encoder is injectable so tests run offline; the default is a CLIP
model pulled from the HuggingFace hub.  Image embeddings and text
prototypes are L2-normalized before writing, so downstream cosine scoring
can assume unit-norm rows.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .writer import write_float_matrix, write_label_vector, write_manifest

PROMPT_TEMPLATE = "a photo of a {}."


@dataclass
class ExtractionSpec:
    dataset: str = "cifar100"
    split: str = "train"
    model_id: str = "openai/clip-vit-base-patch16"
    out_dir: str = "extractor_output/cifar100"
    batch_size: int = 256
    device: str = "cpu"


class Encoder(Protocol):
    def encode_images(self, images: Sequence) -> np.ndarray: ...

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray: ...


class ClipEncoder:
    """CLIP via transformers; weights download on first use."""

    def __init__(self, model_id: str, device: str = "cpu"):
        import torch
        from transformers import CLIPModel, CLIPProcessor

        self.torch = torch
        self.device = device
        self.model = CLIPModel.from_pretrained(model_id).to(device).eval()
        self.processor = CLIPProcessor.from_pretrained(model_id)

    def encode_images(self, images: Sequence) -> np.ndarray:
        inputs = self.processor(images=list(images), return_tensors="pt").to(self.device)
        with self.torch.no_grad():
            features = self.model.get_image_features(**inputs)
        return features.cpu().numpy()

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        inputs = self.processor(
            text=list(texts), return_tensors="pt", padding=True, truncation=True
        ).to(self.device)
        with self.torch.no_grad():
            features = self.model.get_text_features(**inputs)
        return features.cpu().numpy()


def class_prompt(class_name: str) -> str:
    return PROMPT_TEMPLATE.format(class_name.replace("_", " "))


def l2_normalize(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("encoder produced a zero-norm embedding")
    return matrix / norms


def load_torchvision_dataset(spec: ExtractionSpec, root: str = "data"):
    """CIFAR-100 via torchvision; downloads on first use."""
    if spec.dataset != "cifar100":
        raise ValueError(f"unsupported dataset {spec.dataset!r}; only cifar100 is wired up")
    from torchvision.datasets import CIFAR100

    return CIFAR100(root=root, train=spec.split == "train", download=True)


def extract(
    spec: ExtractionSpec,
    encoder: Encoder,
    samples: Iterable[tuple[object, int]],
    class_names: list[str],
) -> Path:
    """Encode every sample and one prompt per class; write the manifest.

    ``samples`` yields (image, label) pairs; labels must index into
    ``class_names``.  Returns the manifest path.
    """
    out_dir = Path(spec.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    batches: list[np.ndarray] = []
    labels: list[int] = []
    buffer: list[object] = []

    def flush():
        if buffer:
            batches.append(encoder.encode_images(buffer))
            buffer.clear()

    for image, label in samples:
        buffer.append(image)
        labels.append(int(label))
        if len(buffer) >= spec.batch_size:
            flush()
    flush()
    if not labels:
        raise ValueError("dataset yielded no samples")

    features = l2_normalize(np.concatenate(batches).astype(np.float64)).astype(np.float32)
    prompts = [class_prompt(name) for name in class_names]
    prototypes = l2_normalize(encoder.encode_texts(prompts).astype(np.float64)).astype(np.float32)

    label_arr = np.asarray(labels)
    if label_arr.max() >= len(class_names):
        raise ValueError(
            f"label {int(label_arr.max())} out of range for {len(class_names)} classes"
        )
    if prototypes.shape[1] != features.shape[1]:
        raise ValueError(
            f"text dim {prototypes.shape[1]} does not match image dim {features.shape[1]}"
        )

    stem = f"{spec.split}_manifest"
    names = {
        "features": f"{stem}_features.cuet",
        "prototypes": f"{stem}_prototypes.cuet",
        "labels": f"{stem}_labels.cuet",
    }
    write_float_matrix(out_dir / names["features"], features)
    write_float_matrix(out_dir / names["prototypes"], prototypes)
    write_label_vector(out_dir / names["labels"], label_arr)
    manifest_path = out_dir / f"{stem}.json"
    write_manifest(
        manifest_path,
        classes=class_names,
        features_path=names["features"],
        prototypes_path=names["prototypes"],
        labels_path=names["labels"],
        d=features.shape[1],
        n=features.shape[0],
        source=f"{spec.dataset}/{spec.split} {spec.model_id} prompt={PROMPT_TEMPLATE!r}",
    )
    return manifest_path


def run(spec: ExtractionSpec, data_root: str = "data") -> Path:
    """Real extraction: torchvision dataset plus CLIP weights."""
    dataset = load_torchvision_dataset(spec, root=data_root)
    encoder = ClipEncoder(spec.model_id, device=spec.device)
    return extract(spec, encoder, iter(dataset), list(dataset.classes))
