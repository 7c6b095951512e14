"""Command-line entry: export a dataset's CLIP embeddings to tensor files."""
from __future__ import annotations

import argparse
import sys

from .extract import ExtractionSpec, run


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cue-extract",
        description="Export CLIP image embeddings and text prototypes as tensor files",
    )
    parser.add_argument("--dataset", default="cifar100", choices=["cifar100"])
    parser.add_argument("--split", default="train", choices=["train", "test"])
    parser.add_argument("--model", default="openai/clip-vit-base-patch16")
    parser.add_argument("--out", default="extractor_output/cifar100")
    parser.add_argument("--batch-size", type=int, default=256)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--data-root", default="data", help="torchvision download cache")
    args = parser.parse_args(argv)

    spec = ExtractionSpec(
        dataset=args.dataset,
        split=args.split,
        model_id=args.model,
        out_dir=args.out,
        batch_size=args.batch_size,
        device=args.device,
    )
    try:
        manifest = run(spec, data_root=args.data_root)
    except Exception as err:  # download failures, dimension mismatches
        print(f"extraction failed: {err}", file=sys.stderr)
        return 1
    print(manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
