"""Command-line pipeline: split, zeroshot, cues, neighbors, train, eval, ablate, sweep.

Every command reads one JSON run configuration (plus optional field
overrides), writes its artifacts under a run directory named by the config
hash, and exits 0 on success or nonzero with a machine-readable error JSON
on stderr.  Commands form an acyclic dependency chain; a missing upstream
artifact is reported together with the command that produces it.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import tensorio
from .config import RunConfig, load_config, save_config
from .cues import (
    cue_cache_key,
    expand_targets_llm,
    expand_targets_zs,
    load_cue_cache,
    save_cue_cache,
    variant_cues,
    zero_shot_logits,
)
from .dataset import build_split, compute_prior, load_split, save_split
from .harness import (
    ExperimentData,
    ablation_table,
    head_digest,
    run_ablation,
    run_sweep,
    write_sweep_csv,
)
from .metrics import evaluate, save_report_json, transition_analysis
from .neighbors import FixtureProvider, LiveProvider, build_neighbor_graph, load_graph, save_graph
from .trainer import load_head, predict, save_head, train


class MissingArtifactError(Exception):
    """An upstream artifact is absent; message names the producing command."""

    def __init__(self, path: Path, produced_by: str):
        super().__init__(f"missing artifact {path}; produce it with `cuekit {produced_by}`")
        self.path = str(path)
        self.produced_by = produced_by


def _require(path: Path, produced_by: str) -> Path:
    if not path.exists():
        raise MissingArtifactError(path, produced_by)
    return path


def _require_input(path: str | None, what: str) -> Path:
    if not path:
        raise FileNotFoundError(f"config does not set a {what} path")
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"{what} not found: {p}")
    return p


def _train_subset(config: RunConfig):
    """Load the manifest, apply the split, and derive prior and counts."""
    dataset, prototypes = tensorio.load_dataset(_require_input(config.manifest, "manifest"))
    split = load_split(_require(config.split_file, "split"))
    indices = split.all_indices()
    subset = dataset.subset(indices)
    counts = np.asarray(split.per_class_counts)
    return dataset, prototypes, split, subset, counts


def cmd_split(config: RunConfig) -> Path:
    dataset, _ = tensorio.load_dataset(_require_input(config.manifest, "manifest"))
    split = build_split(dataset.labels, dataset.num_classes, config.n_max, config.ir, config.seed)
    out = config.split_file
    out.parent.mkdir(parents=True, exist_ok=True)
    save_split(out, split)
    return out


def cmd_zeroshot(config: RunConfig) -> Path:
    dataset, prototypes = tensorio.load_dataset(_require_input(config.manifest, "manifest"))
    scores = zero_shot_logits(dataset.features, prototypes)
    out = config.zeroshot_file
    out.parent.mkdir(parents=True, exist_ok=True)
    tensorio.write_tensor(out, scores.astype(np.float32))
    return out


def cmd_cues(config: RunConfig) -> Path:
    manifest_path = _require_input(config.manifest, "manifest")
    manifest = tensorio.load_manifest(manifest_path)
    split = load_split(_require(config.split_file, "split"))
    scores = tensorio.read_tensor(_require(config.zeroshot_file, "zeroshot"))
    dataset, _ = tensorio.load_dataset(manifest_path)
    indices = split.all_indices()
    cues = variant_cues(
        scores[indices], dataset.labels[indices], config.k, mode=config.mode, seed=config.seed
    )
    key = cue_cache_key(manifest.to_dict(), split.to_dict())
    out = config.cues_file
    out.parent.mkdir(parents=True, exist_ok=True)
    save_cue_cache(out, cues, kind="zs", k=config.k, mode=config.mode, key=key)
    return out


def cmd_neighbors(config: RunConfig) -> Path:
    manifest = tensorio.load_manifest(_require_input(config.manifest, "manifest"))
    if config.provider == "fixture":
        provider = FixtureProvider(_require_input(config.fixture_dir, "fixture_dir"))
    elif config.provider == "live":
        provider = LiveProvider(endpoint=config.endpoint, model_id=config.model_id)
    else:
        raise ValueError(f"unknown provider {config.provider!r}; use 'fixture' or 'live'")
    graph, report = build_neighbor_graph(
        manifest.classes,
        provider,
        batch_size=config.neighbor_batch_size,
        max_neighbors=config.max_neighbors,
        concurrency=config.concurrency,
    )
    out = config.graph_file
    out.parent.mkdir(parents=True, exist_ok=True)
    save_graph(out, graph)
    reports = config.reports_path
    reports.mkdir(parents=True, exist_ok=True)
    (reports / "filter_report.json").write_text(
        json.dumps(report.to_json_list(), indent=2) + "\n", encoding="utf-8"
    )
    return out


def cmd_train(config: RunConfig) -> Path:
    manifest = tensorio.load_manifest(_require_input(config.manifest, "manifest"))
    _, prototypes, split, subset, counts = _train_subset(config)
    key = cue_cache_key(manifest.to_dict(), split.to_dict())
    cues, _ = load_cue_cache(_require(config.cues_file, "cues"), expected_key=key)
    graph = load_graph(_require(config.graph_file, "neighbors"))

    prior = compute_prior(counts)
    num_classes = subset.num_classes
    t_zs = expand_targets_zs(cues, subset.labels, num_classes).targets
    t_llm = expand_targets_llm(graph, subset.labels, num_classes).targets
    report = train(subset, prior, t_zs, t_llm, config.train, prototypes=prototypes)

    model_dir = config.model_path
    save_head(model_dir, report.model, extra_header={"config_hash": config.config_hash()})
    reports = config.reports_path
    reports.mkdir(parents=True, exist_ok=True)
    (reports / "train_report.json").write_text(
        json.dumps(
            {
                "epoch_losses": report.epoch_losses,
                "wall_clock_seconds": report.wall_clock_seconds,
                "config_hash": report.config_hash,
                "model_sha256": head_digest(report.model),
                "train_config": report.config.to_dict(),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return model_dir


def cmd_eval(config: RunConfig) -> Path:
    test_set, test_prototypes = tensorio.load_dataset(
        _require_input(config.test_manifest, "test_manifest")
    )
    split = load_split(_require(config.split_file, "split"))
    model = load_head(_require(config.model_path / "head.json", "train").parent)
    counts = np.asarray(split.per_class_counts)

    preds = predict(model, test_set.features)
    report = evaluate(preds, test_set.labels, counts, sigma=config.sigma)
    reports = config.reports_path
    reports.mkdir(parents=True, exist_ok=True)
    save_report_json(reports / "eval.json", report)
    (reports / "eval.txt").write_text(report.to_text(), encoding="utf-8")
    report.per_class_csv(reports / "per_class.csv", counts)

    if config.graph_file.exists():
        graph = load_graph(config.graph_file)
        zs_preds = np.argmax(zero_shot_logits(test_set.features, test_prototypes), axis=1)
        transition = transition_analysis(zs_preds, preds, test_set.labels, graph)
        save_report_json(reports / "transition.json", transition)
        (reports / "transition.txt").write_text(transition.to_text(), encoding="utf-8")
    return reports


def _experiment_data(config: RunConfig) -> ExperimentData:
    _, prototypes, split, subset, counts = _train_subset(config)
    test_set, _ = tensorio.load_dataset(_require_input(config.test_manifest, "test_manifest"))
    graph = load_graph(_require(config.graph_file, "neighbors"))
    scores = tensorio.read_tensor(_require(config.zeroshot_file, "zeroshot"))
    return ExperimentData(
        train=subset,
        test=test_set,
        prototypes=prototypes,
        graph=graph,
        train_counts=counts,
        zs_scores=scores[split.all_indices()].astype(np.float64),
    )


def cmd_ablate(config: RunConfig) -> Path:
    data = _experiment_data(config)
    results = run_ablation(
        data, config.train, config.k, config.ablation_seeds, sigma=config.sigma
    )
    reports = config.reports_path
    reports.mkdir(parents=True, exist_ok=True)
    (reports / "ablation.json").write_text(
        json.dumps([r.row() for r in results], indent=2) + "\n", encoding="utf-8"
    )
    (reports / "ablation.txt").write_text(ablation_table(results), encoding="utf-8")
    return reports


def cmd_sweep(config: RunConfig) -> Path:
    data = _experiment_data(config)
    sweep = run_sweep(data, config.train, config.k, config.train.seed, sigma=config.sigma)
    reports = config.reports_path
    reports.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(reports / "sweep_all.csv", sweep.grid, sweep.all_acc)
    write_sweep_csv(reports / "sweep_few.csv", sweep.grid, sweep.few_acc)
    (reports / "sweep_models.json").write_text(
        json.dumps({f"{i},{j}": d for (i, j), d in sweep.model_sha256.items()}, indent=2) + "\n",
        encoding="utf-8",
    )
    return reports


COMMANDS = {
    "split": cmd_split,
    "zeroshot": cmd_zeroshot,
    "cues": cmd_cues,
    "neighbors": cmd_neighbors,
    "train": cmd_train,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cuekit",
        description="Long-tailed classification pipeline over frozen embeddings",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="run configuration JSON")
        cmd.add_argument("--ir", type=float, help="override imbalance ratio")
        cmd.add_argument("--n-max", type=int, help="override head-class sample budget")
        cmd.add_argument("--k", type=int, help="override cue count")
        cmd.add_argument("--lambda-zs", type=float, help="override instance-cue weight")
        cmd.add_argument("--lambda-llm", type=float, help="override class-cue weight")
        cmd.add_argument("--seed", type=int, help="override dataset and training seed")
        cmd.add_argument("--mode", choices=("top", "random", "last"), help="override cue mode")
        cmd.add_argument("--provider", choices=("fixture", "live"), help="override LLM provider")
        cmd.add_argument("--out-root", help="override the run output root")
        cmd.add_argument(
            "--print-config", action="store_true", help="dump the effective config and exit"
        )
    return parser


def apply_overrides(config: RunConfig, args: argparse.Namespace) -> RunConfig:
    if args.ir is not None:
        config.ir = args.ir
    if args.n_max is not None:
        config.n_max = args.n_max
    if args.k is not None:
        config.k = args.k
    if args.lambda_zs is not None:
        config.train = replace(config.train, loss=replace(config.train.loss, lambda_zs=args.lambda_zs))
    if args.lambda_llm is not None:
        config.train = replace(config.train, loss=replace(config.train.loss, lambda_llm=args.lambda_llm))
    if args.seed is not None:
        config.seed = args.seed
        config.train = replace(config.train, seed=args.seed)
    if args.mode is not None:
        config.mode = args.mode
    if args.provider is not None:
        config.provider = args.provider
    if args.out_root is not None:
        config.out_root = args.out_root
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = apply_overrides(load_config(args.config), args)
        if args.print_config:
            print(json.dumps(config.to_dict(), indent=2))
            return 0
        run_dir = config.run_dir()
        run_dir.mkdir(parents=True, exist_ok=True)
        save_config(run_dir / "config.json", config)
        out = COMMANDS[args.command](config)
        print(out)
        return 0
    except MissingArtifactError as err:
        print(
            json.dumps(
                {"error": "missing_artifact", "message": str(err), "path": err.path,
                 "produced_by": err.produced_by}
            ),
            file=sys.stderr,
        )
        return 2
    except FileNotFoundError as err:
        print(json.dumps({"error": "missing_file", "message": str(err)}), file=sys.stderr)
        return 2
    except Exception as err:  # surface every failure as machine-readable JSON
        print(
            json.dumps({"error": type(err).__name__, "message": str(err)}), file=sys.stderr
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
