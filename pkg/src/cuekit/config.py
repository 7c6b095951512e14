"""Run configuration: one JSON document drives every pipeline command.

Artifact outputs are content-addressed: the run directory is named by a
hash of the full configuration, so runs with different settings can never
silently share or overwrite each other's artifacts.  Individual artifact
paths may be overridden; unset ones resolve to canonical names inside the
run directory.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .trainer import TrainConfig

DEFAULT_ABLATION_SEEDS = (0, 1, 2)


@dataclass
class RunConfig:
    manifest: str = ""
    test_manifest: Optional[str] = None
    out_root: str = "runs"
    # explicit artifact path overrides; None resolves inside the run directory
    split_path: Optional[str] = None
    zeroshot_path: Optional[str] = None
    cues_path: Optional[str] = None
    graph_path: Optional[str] = None
    model_dir: Optional[str] = None
    reports_dir: Optional[str] = None
    # dataset params
    ir: float = 100.0
    n_max: int = 500
    seed: int = 0
    # cue params
    k: int = 5
    mode: str = "top"
    # neighbor params
    provider: str = "fixture"
    fixture_dir: Optional[str] = None
    endpoint: Optional[str] = None
    model_id: str = ""
    neighbor_batch_size: int = 20
    max_neighbors: int = 5
    concurrency: int = 1
    # training and metrics
    train: TrainConfig = field(default_factory=TrainConfig)
    sigma: float = 0.1
    ablation_seeds: tuple[int, ...] = DEFAULT_ABLATION_SEEDS

    def to_dict(self) -> dict:
        return {
            "paths": {
                "manifest": self.manifest,
                "test_manifest": self.test_manifest,
                "out_root": self.out_root,
                "split": self.split_path,
                "zeroshot": self.zeroshot_path,
                "cues": self.cues_path,
                "graph": self.graph_path,
                "model_dir": self.model_dir,
                "reports_dir": self.reports_dir,
                "fixture_dir": self.fixture_dir,
            },
            "dataset": {"ir": self.ir, "n_max": self.n_max, "seed": self.seed},
            "cues": {"k": self.k, "mode": self.mode},
            "neighbors": {
                "provider": self.provider,
                "endpoint": self.endpoint,
                "model_id": self.model_id,
                "batch_size": self.neighbor_batch_size,
                "max_neighbors": self.max_neighbors,
                "concurrency": self.concurrency,
            },
            "train": self.train.to_dict(),
            "metrics": {"sigma": self.sigma},
            "ablation": {"seeds": list(self.ablation_seeds)},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        paths = doc.get("paths", {})
        dataset = doc.get("dataset", {})
        cues = doc.get("cues", {})
        neighbors = doc.get("neighbors", {})
        metrics = doc.get("metrics", {})
        ablation = doc.get("ablation", {})
        return cls(
            manifest=paths.get("manifest", ""),
            test_manifest=paths.get("test_manifest"),
            out_root=paths.get("out_root", "runs"),
            split_path=paths.get("split"),
            zeroshot_path=paths.get("zeroshot"),
            cues_path=paths.get("cues"),
            graph_path=paths.get("graph"),
            model_dir=paths.get("model_dir"),
            reports_dir=paths.get("reports_dir"),
            fixture_dir=paths.get("fixture_dir"),
            ir=float(dataset.get("ir", 100.0)),
            n_max=int(dataset.get("n_max", 500)),
            seed=int(dataset.get("seed", 0)),
            k=int(cues.get("k", 5)),
            mode=cues.get("mode", "top"),
            provider=neighbors.get("provider", "fixture"),
            endpoint=neighbors.get("endpoint"),
            model_id=neighbors.get("model_id", ""),
            neighbor_batch_size=int(neighbors.get("batch_size", 20)),
            max_neighbors=int(neighbors.get("max_neighbors", 5)),
            concurrency=int(neighbors.get("concurrency", 1)),
            train=TrainConfig.from_dict(doc.get("train", TrainConfig().to_dict())),
            sigma=float(metrics.get("sigma", 0.1)),
            ablation_seeds=tuple(int(s) for s in ablation.get("seeds", DEFAULT_ABLATION_SEEDS)),
        )

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def run_dir(self) -> Path:
        return Path(self.out_root) / self.config_hash()[:12]

    # Resolved artifact locations -------------------------------------------------

    def resolved(self, override: Optional[str], default_name: str) -> Path:
        if override:
            return Path(override)
        return self.run_dir() / default_name

    @property
    def split_file(self) -> Path:
        return self.resolved(self.split_path, "split.json")

    @property
    def zeroshot_file(self) -> Path:
        return self.resolved(self.zeroshot_path, "zeroshot.cuet")

    @property
    def cues_file(self) -> Path:
        return self.resolved(self.cues_path, "cues.json")

    @property
    def graph_file(self) -> Path:
        return self.resolved(self.graph_path, "graph.json")

    @property
    def model_path(self) -> Path:
        return self.resolved(self.model_dir, "model")

    @property
    def reports_path(self) -> Path:
        return self.resolved(self.reports_dir, "reports")


def load_config(path: str | Path) -> RunConfig:
    return RunConfig.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_config(path: str | Path, config: RunConfig) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n", encoding="utf-8")
