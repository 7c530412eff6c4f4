"""Adversarial training and epsilon-sweep robustness curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .attacks import BUDGETED, AttackBudget, AttackSpec, evaluate_attack, run_attack
from .datasets import Dataset
from .errors import ArgumentError
from .model import MlpParams, MlpSpec, TrainConfig, evaluate, train_loop
from .numcore import RngStream

TRAINING_ATTACKS = BUDGETED
# keeps the adversarial-row choice independent of the shuffle stream
_CHOICE_STREAM = 0x5EED0ADF


@dataclass(frozen=True)
class AdvTrainConfig:
    base: TrainConfig = field(default_factory=TrainConfig)
    attack: str = "step_ll"
    budget: AttackBudget = AttackBudget(0.1)
    adv_fraction: float = 0.5

    def __post_init__(self):
        if self.attack not in TRAINING_ATTACKS:
            raise ArgumentError(
                f"training attack must be one of {TRAINING_ATTACKS}, got {self.attack!r}"
            )
        if not 0.0 <= self.adv_fraction <= 1.0:
            raise ArgumentError(f"adv_fraction must be in [0, 1], got {self.adv_fraction}")


def adversarial_train(spec: MlpSpec, cfg: AdvTrainConfig, data: Dataset):
    """Train on minibatches where a seeded subset of rows is replaced by
    adversarial versions crafted against the current parameters.

    ``ceil(adv_fraction * batch)`` rows per batch are replaced; with
    ``adv_fraction == 0`` the result is bitwise identical to ``sgd_train``.
    """
    attack = AttackSpec(cfg.attack, cfg.budget)
    chooser = RngStream(cfg.base.seed ^ _CHOICE_STREAM)

    def hook(params: MlpParams, bx: np.ndarray, by: np.ndarray, _batch: int) -> np.ndarray:
        count = math.ceil(cfg.adv_fraction * len(by))
        if count == 0:
            return bx
        rows = chooser.permutation(len(by))[:count]
        out = bx.copy()
        out[rows] = run_attack(params, bx[rows], by[rows], attack).x_adv
        return out

    return train_loop(spec, cfg.base, data, hook)


@dataclass
class CurveRow:
    epsilon: object  # "clean" or a float
    top1: float
    top5: object
    success_rate: float
    median_l2: float

    def as_tuple(self) -> tuple:
        return (self.epsilon, self.top1, self.top5, self.success_rate, self.median_l2)


CURVE_HEADER = ("epsilon", "top1", "top5", "success_rate", "median_l2")


def robustness_curve(p: MlpParams, spec: AttackSpec, eps_list, data: Dataset) -> list[CurveRow]:
    """A clean row followed by one attacked row per epsilon.

    The budget's ``step_size`` is rescaled with epsilon when it was left at
    its default (``epsilon / steps``).
    """
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ArgumentError("eps_list must be nonempty")
    if any(b < a for a, b in zip(eps_list, eps_list[1:])):
        raise ArgumentError(f"eps_list must be ascending, got {eps_list}")
    if spec.name not in BUDGETED:
        raise ArgumentError(f"{spec.name} has no epsilon budget to sweep")
    top5 = p.spec.num_classes >= 6
    clean1, clean5 = evaluate(p, data, 5 if top5 else 1)
    rows = [CurveRow("clean", clean1, clean5 if top5 else None, 0.0, 0.0)]
    for eps in eps_list:
        rep = evaluate_attack(p, data, spec.with_epsilon(eps))
        rows.append(CurveRow(eps, rep.adv_top1, rep.adv_top5, rep.success_rate, rep.median_l2))
    return rows
