from __future__ import annotations

import json

import numpy as np
import pytest

from cuekit.config import RunConfig, save_config
from cuekit.losses import LossConfig
from cuekit.neighbors import FixtureProvider, batch_labels, render_prompt
from cuekit.synth import BenchmarkSpec, make_benchmark, write_benchmark
from cuekit.trainer import TrainConfig

TINY_SPEC = BenchmarkSpec(
    num_classes=6,
    dim=8,
    num_clusters=3,
    n_max=30,
    ir=10.0,
    test_per_class=5,
)


@pytest.fixture(scope="session")
def tiny_bench():
    return make_benchmark(TINY_SPEC, seed=0)


@pytest.fixture()
def tiny_run(tmp_path, tiny_bench):
    """A complete on-disk run setup: manifests, fixtures, and a config file."""
    paths = write_benchmark(tmp_path / "data", tiny_bench)

    fixtures = FixtureProvider(tmp_path / "fixtures")
    vocab = list(tiny_bench.train.class_names)
    for batch in batch_labels(vocab, 3):
        prompt = render_prompt(batch, vocab, max_neighbors=2)
        mapping = {
            name: [vocab[n] for n in tiny_bench.graph.neighbors[vocab.index(name)]]
            for name in batch
        }
        fixtures.store(prompt, json.dumps(mapping))

    config = RunConfig(
        manifest=paths["train_manifest"],
        test_manifest=paths["test_manifest"],
        out_root=str(tmp_path / "runs"),
        ir=10.0,
        n_max=30,
        seed=0,
        k=2,
        mode="top",
        provider="fixture",
        fixture_dir=str(tmp_path / "fixtures"),
        neighbor_batch_size=3,
        max_neighbors=2,
        train=TrainConfig(
            epochs=3, batch_size=16, seed=0, init="zero", loss=LossConfig()
        ),
    )
    config_path = tmp_path / "config.json"
    save_config(config_path, config)
    return {"config": config, "config_path": config_path, "paths": paths, "bench": tiny_bench}


def random_prior(rng: np.random.Generator, num_classes: int) -> np.ndarray:
    pi = rng.dirichlet(np.ones(num_classes) * 2.0)
    return np.maximum(pi, 1e-6) / np.maximum(pi, 1e-6).sum()
