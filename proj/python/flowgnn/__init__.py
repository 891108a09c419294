"""Graph neural network intrusion detection over flow records."""

from flowgnn._core import (
    BipartiteGraph,
    ConfigError,
    Error,
    augment_virtual_nodes,
    build_graph,
    f1_scores,
    run_command,
    sample_khop,
    split_dataset,
    write_synthetic,
)


def prepare(manifest, **overrides):
    return run_command("prepare", str(manifest), overrides)


def train(manifest, **overrides):
    return run_command("train", str(manifest), overrides)


def evaluate(manifest, **overrides):
    return run_command("eval", str(manifest), overrides)


def embed(manifest, **overrides):
    return run_command("embed", str(manifest), overrides)


__all__ = [
    "BipartiteGraph",
    "ConfigError",
    "Error",
    "augment_virtual_nodes",
    "build_graph",
    "embed",
    "evaluate",
    "f1_scores",
    "prepare",
    "run_command",
    "sample_khop",
    "split_dataset",
    "train",
    "write_synthetic",
]
