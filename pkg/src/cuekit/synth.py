"""Synthetic clustered-confusion benchmark.

Classes live in semantic clusters: cluster centers are far apart, class
centers within a cluster are close relative to the sample noise, so the
hard part is telling cluster-mates apart.  Training data is long-tailed,
test data balanced.  Zero-shot prototypes are noisy class centers, and the
ground-truth neighbor graph is cluster co-membership, which gives the cue
losses an honest signal to exploit.

Cluster membership is interleaved (class c belongs to cluster c mod K) so
every cluster spans head, medium, and tail classes.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import tensorio
from .dataset import LabeledEmbeddings, SplitDescriptor, build_split, save_split
from .neighbors import NeighborGraph, save_graph


@dataclass
class BenchmarkSpec:
    num_classes: int = 20
    dim: int = 32
    num_clusters: int = 5
    n_max: int = 150
    ir: float = 100.0
    test_per_class: int = 50
    cluster_scale: float = 10.0  # distance of cluster centers from the origin
    class_scale: float = 0.75  # within-cluster center spread
    noise: float = 3.0  # per-coordinate sample noise
    proto_noise: float = 1.0  # per-coordinate prototype noise

    def __post_init__(self) -> None:
        if self.num_classes % self.num_clusters != 0:
            raise ValueError("num_classes must be a multiple of num_clusters")


@dataclass
class Benchmark:
    pool: LabeledEmbeddings  # balanced generation pool the split selects from
    train: LabeledEmbeddings  # long-tailed subset of the pool
    test: LabeledEmbeddings  # balanced
    prototypes: np.ndarray  # (C, D) noisy class centers
    graph: NeighborGraph  # true cluster co-membership
    split: SplitDescriptor  # how the long-tailed subset was drawn from the pool
    train_counts: np.ndarray
    class_centers: np.ndarray


def cluster_of(cls: int, num_clusters: int) -> int:
    return cls % num_clusters


def make_benchmark(spec: BenchmarkSpec, seed: int) -> Benchmark:
    """Generate one seeded benchmark world."""
    rng = np.random.default_rng([seed, 2024])
    C, d, K = spec.num_classes, spec.dim, spec.num_clusters

    raw = rng.normal(size=(K, d))
    cluster_centers = spec.cluster_scale * raw / np.linalg.norm(raw, axis=1, keepdims=True)
    class_centers = np.stack(
        [
            cluster_centers[cluster_of(c, K)] + spec.class_scale * rng.normal(size=d)
            for c in range(C)
        ]
    )

    def sample(per_class: list[int]) -> LabeledEmbeddings:
        feats, labs = [], []
        for cls, count in enumerate(per_class):
            feats.append(class_centers[cls] + spec.noise * rng.normal(size=(count, d)))
            labs.append(np.full(count, cls))
        return LabeledEmbeddings(
            features=np.concatenate(feats).astype(np.float32),
            labels=np.concatenate(labs),
            class_names=[f"class_{c:02d}" for c in range(C)],
        )

    pool = sample([spec.n_max] * C)
    split = build_split(pool.labels, C, spec.n_max, spec.ir, seed)
    train = pool.subset(split.all_indices())
    test = sample([spec.test_per_class] * C)

    prototypes = (class_centers + spec.proto_noise * rng.normal(size=(C, d))).astype(np.float32)
    neighbors = [
        sorted(o for o in range(C) if o != c and cluster_of(o, K) == cluster_of(c, K))
        for c in range(C)
    ]
    graph = NeighborGraph(
        classes=list(train.class_names),
        neighbors=neighbors,
        meta={
            "provider": "synthetic-truth",
            "model_id": "cluster-co-membership",
            "batch_size": 0,
            "max_neighbors": C // K - 1,
            "created_at": "",
        },
    )
    return Benchmark(
        pool=pool,
        train=train,
        test=test,
        prototypes=prototypes,
        graph=graph,
        split=split,
        train_counts=np.asarray(split.per_class_counts),
        class_centers=class_centers,
    )


def write_benchmark(out_dir: str | Path, bench: Benchmark) -> dict:
    """Persist a benchmark as manifests, split, and graph files.

    The train manifest holds the full balanced pool; the split descriptor
    selects the long-tailed subset from it, exactly as the split command
    would.  Returns the paths, keyed: train_manifest, test_manifest, split,
    graph.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "train_manifest": out_dir / "train_manifest.json",
        "test_manifest": out_dir / "test_manifest.json",
        "split": out_dir / "split.json",
        "graph": out_dir / "graph.json",
    }
    tensorio.save_dataset(paths["train_manifest"], bench.pool, bench.prototypes, source="synthetic")
    tensorio.save_dataset(paths["test_manifest"], bench.test, bench.prototypes, source="synthetic")
    save_split(paths["split"], bench.split)
    save_graph(paths["graph"], bench.graph)
    return {k: str(v) for k, v in paths.items()}
