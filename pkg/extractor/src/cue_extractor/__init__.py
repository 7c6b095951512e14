"""Export CLIP embeddings and text prototypes into the cuekit tensor format."""
from .extract import ClipEncoder, ExtractionSpec, class_prompt, extract, l2_normalize, run
from .writer import write_float_matrix, write_label_vector, write_manifest

__all__ = [
    "ClipEncoder",
    "ExtractionSpec",
    "class_prompt",
    "extract",
    "l2_normalize",
    "run",
    "write_float_matrix",
    "write_label_vector",
    "write_manifest",
]
