"""Scaling grids: one train/evaluate cycle per (size, rate) cell."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

from .data import load_dataset
from .train import TrainConfig, build_model, train

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Cell:
    size: int
    rate: float
    dataset_dir: str


def scaling_run(cells: Sequence[Cell], train_config: TrainConfig,
                out_csv, seed: int = 0, **model_overrides) -> Path:
    """Run every cell, appending a row per cell even when one fails."""
    rows = []
    for cell in cells:
        try:
            dataset = load_dataset(cell.dataset_dir)
            model = build_model(dataset, **model_overrides)
            config = TrainConfig(**{**train_config.__dict__, "seed": seed})
            report = train(model, dataset, config)
            rows.append([cell.size, cell.rate, f"{report.id_accuracy:.4f}",
                         f"{report.ood_accuracy:.4f}", seed])
        except Exception:
            log.exception("cell (size=%s, rate=%s) failed", cell.size, cell.rate)
            rows.append([cell.size, cell.rate, "", "", seed])
    path = Path(out_csv)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["size", "rate", "id_acc", "ood_acc", "seed"])
        writer.writerows(rows)
    return path
