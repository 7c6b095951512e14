"""Drive the whole pipeline through the command-line entry points.

Artifacts land in a run directory named by the config hash, so reruns with
different settings never collide.  Each command checks for its upstream
artifacts and says which command produces a missing one.
"""
import json
import tempfile
from pathlib import Path

from cuekit.cli import main
from cuekit.config import RunConfig, save_config
from cuekit.losses import LossConfig
from cuekit.neighbors import FixtureProvider, batch_labels, render_prompt
from cuekit.synth import BenchmarkSpec, make_benchmark, write_benchmark
from cuekit.trainer import TrainConfig

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    bench = make_benchmark(BenchmarkSpec(num_classes=6, dim=8, num_clusters=3,
                                         n_max=30, ir=10.0, test_per_class=10), seed=0)
    paths = write_benchmark(tmp / "data", bench)

    # canned neighbor responses so `neighbors` works offline
    vocab = bench.train.class_names
    fixtures = FixtureProvider(tmp / "fixtures")
    for batch in batch_labels(vocab, 3):
        mapping = {n: [vocab[i] for i in bench.graph.neighbors[vocab.index(n)]] for n in batch}
        fixtures.store(render_prompt(batch, vocab, 2), json.dumps(mapping))

    config = RunConfig(
        manifest=paths["train_manifest"], test_manifest=paths["test_manifest"],
        out_root=str(tmp / "runs"), ir=10.0, n_max=30, seed=0, k=2,
        provider="fixture", fixture_dir=str(tmp / "fixtures"),
        neighbor_batch_size=3, max_neighbors=2,
        train=TrainConfig(epochs=5, batch_size=16, init="zero", loss=LossConfig()),
        ablation_seeds=(0, 1),
    )
    config_path = tmp / "config.json"
    save_config(config_path, config)

    print("run directory:", config.run_dir().name, "\n")

    # eval before train fails with a machine-readable pointer to the producer
    rc = main(["eval", "--config", str(config_path)])
    print(f"(expected) eval before train exits {rc}\n")

    for command in ("split", "zeroshot", "cues", "neighbors", "train", "eval", "ablate", "sweep"):
        rc = main([command, "--config", str(config_path)])
        print(f"cuekit {command:<9} -> exit {rc}")

    reports = config.reports_path
    print("\n--- eval.txt ---")
    print((reports / "eval.txt").read_text())
    print("--- ablation.txt ---")
    print((reports / "ablation.txt").read_text())
    print("--- sweep_all.csv (first rows) ---")
    print("\n".join((reports / "sweep_all.csv").read_text().splitlines()[:3]))
