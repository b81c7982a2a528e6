"""Python interface to the continual-learning VQA laboratory.

The C++ core does the actual work; this wrapper adds dict-based configs and
keeps the function surface aligned with the CLI subcommands.
"""

from __future__ import annotations

import json
from typing import Any, Optional

from ._core import (  # noqa: F401
    Dataset,
    VqaclError,
    __version__,
    analyze_checkpoint,
    cl_score,
    evaluate_checkpoint,
    load_dataset,
    pca_project,
    silhouette,
    stratified_random_baseline,
    verify_gold_answers,
    write_dataset,
)
from . import _core


def _config_json(config: Optional[dict[str, Any]]) -> str:
    return "" if config is None else json.dumps(config)


def build_dataset(config: Optional[dict[str, Any]] = None) -> Dataset:
    """Generate both tasks' scene-grounded question splits."""
    return _core.build_dataset(_config_json(config))


def train_single(
    dataset: Dataset,
    task: str,
    out_dir: str,
    head: str = "single",
    config: Optional[dict[str, Any]] = None,
    seed: int = 0,
) -> dict[str, Any]:
    """Train one per-task baseline and return its summary."""
    return _core.train_single(dataset, task, head, _config_json(config), seed, out_dir)


def run_strategy(
    dataset: Dataset,
    strategy: str,
    order: str,
    runs_dir: str,
    config: Optional[dict[str, Any]] = None,
    seed: int = 0,
    ewc_lambda: Optional[float] = None,
    buffer_size: Optional[int] = None,
) -> dict[str, Any]:
    """Run one sequential-training cell (naive/cumulative/ewc/rehearsal)."""
    return _core.run_strategy(
        dataset,
        strategy,
        order,
        _config_json(config),
        seed,
        runs_dir,
        ewc_lambda,
        buffer_size,
    )


__all__ = [
    "Dataset",
    "VqaclError",
    "__version__",
    "analyze_checkpoint",
    "build_dataset",
    "cl_score",
    "evaluate_checkpoint",
    "load_dataset",
    "pca_project",
    "run_strategy",
    "silhouette",
    "stratified_random_baseline",
    "train_single",
    "verify_gold_answers",
    "write_dataset",
]
