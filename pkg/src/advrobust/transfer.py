"""Model zoos and cross-model transferability matrices."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import model as mlp
from .attacks import AttackSpec, run_attack
from .datasets import Dataset
from .errors import ArgumentError
from .fileio import csv_text
from .model import MlpParams, MlpSpec, TrainConfig, sgd_train

DEFAULT_ZOO = (
    MlpSpec((64, 128, 10), "A"),
    MlpSpec((64, 128, 10), "B"),
    MlpSpec((64, 256, 10), "C"),
    MlpSpec((64, 128, 64, 10), "D"),
)


@dataclass
class TransferMatrix:
    """``rates[s][t]``: percent of source-``s`` successes that also fool ``t``.

    Rows whose source fooled no evaluation example hold ``None``.
    """

    model_ids: list[str]
    rates: list[list[Optional[float]]]
    attack_name: str
    epsilon: Optional[float]
    metric: str = "top1"
    fooled_counts: Optional[list[int]] = None

    def off_diagonal(self) -> list[float]:
        n = len(self.model_ids)
        return [
            self.rates[s][t]
            for s in range(n)
            for t in range(n)
            if s != t and self.rates[s][t] is not None
        ]

    def mean_off_diagonal(self) -> Optional[float]:
        vals = self.off_diagonal()
        return float(np.mean(vals)) if vals else None

    def to_csv(self) -> str:
        rows = [[sid] + list(row) for sid, row in zip(self.model_ids, self.rates)]
        return csv_text(["source"] + list(self.model_ids), rows)

    def to_markdown(self) -> str:
        ids = self.model_ids
        title = f"{self.attack_name} ({self.metric}"
        title += f", eps={self.epsilon!r})" if self.epsilon is not None else ")"
        lines = [
            f"**{title}** - rows: source model, columns: target model",
            "",
            "| source \\ target | " + " | ".join(ids) + " |",
            "|---|" + "---|" * len(ids),
        ]
        for sid, row in zip(ids, self.rates):
            cells = ["n/a" if r is None else f"{r:.0f}" for r in row]
            lines.append(f"| {sid} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "model_ids": list(self.model_ids),
            "rates": self.rates,
            "attack": self.attack_name,
            "epsilon": self.epsilon,
            "metric": self.metric,
            "fooled_counts": self.fooled_counts,
            "mean_off_diagonal": self.mean_off_diagonal(),
        }


def train_zoo(
    specs: Sequence[MlpSpec], cfg: TrainConfig, data: Dataset, seeds: Sequence[int]
) -> list[MlpParams]:
    """Independently train each spec on the shared data with its own seed."""
    if len(specs) != len(seeds) or not specs:
        raise ArgumentError(f"need matching nonempty specs and seeds, got {len(specs)}/{len(seeds)}")
    zoo = []
    for spec, seed in zip(specs, seeds):
        params, _ = sgd_train(spec, TrainConfig(cfg.epochs, cfg.batch_size, cfg.learning_rate, seed), data)
        zoo.append(params)
    return zoo


def _fooled(p: MlpParams, x: np.ndarray, y: np.ndarray, metric: str) -> np.ndarray:
    z = mlp.logits(p, x)
    if metric == "top1":
        return ~mlp.topk_correct(z, y, 1)
    return ~mlp.topk_correct(z, y, min(5, p.spec.num_classes))


def transfer_matrix(
    zoo: Sequence[MlpParams], spec: AttackSpec, data: Dataset, metric: str = "top1"
) -> TransferMatrix:
    """Craft on each source, replay on every target.

    The denominator for row ``s`` is the set of evaluation examples that
    ``s`` classifies correctly and that the attack fools on ``s``. With
    ``metric="topk"`` "correct" and "fooled" mean the true label is inside
    or outside the top-5.
    """
    if not zoo:
        raise ArgumentError("zoo must be nonempty")
    if len(data) == 0:
        raise ArgumentError("evaluation set must be nonempty")
    if metric not in ("top1", "topk"):
        raise ArgumentError(f"metric must be 'top1' or 'topk', got {metric!r}")
    x, y = data.features, data.labels
    rates, counts = [], []
    for src in zoo:
        correct = ~_fooled(src, x, y, metric)
        xs, ys = x[correct], y[correct]
        if len(ys) == 0:
            rates.append([None] * len(zoo))
            counts.append(0)
            continue
        adv = run_attack(src, xs, ys, spec).x_adv
        hit = _fooled(src, adv, ys, metric)
        counts.append(int(hit.sum()))
        if not hit.any():
            rates.append([None] * len(zoo))
            continue
        adv_hit, y_hit = adv[hit], ys[hit]
        row = []
        for tgt in zoo:
            fooled = _fooled(tgt, adv_hit, y_hit, metric)
            row.append(100.0 * int(fooled.sum()) / len(y_hit))
        rates.append(row)
    eps = float(spec.budget.epsilon) if spec.name in ("fgsm", "step_ll", "iter_basic", "iter_ll") else None
    return TransferMatrix([p.spec.id for p in zoo], rates, spec.name, eps, metric, counts)
