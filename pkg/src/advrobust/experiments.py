"""The seeded desk-scale experiment shared by scripts and the acceptance suite.

Everything is pinned here: data, architectures, seeds, calibrated budgets.
Epsilons are in [0, 1] feature units; the sweep grid is the familiar
{2, 4, 8, 16} ladder times ``EPS_UNIT``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .attacks import AttackBudget, AttackSpec, CwConfig
from .datasets import Dataset, gen_gaussian_mixture, split
from .defense import AdvTrainConfig, adversarial_train
from .model import MlpParams, MlpSpec, TrainConfig, sgd_train
from .transfer import DEFAULT_ZOO, train_zoo

EPS_UNIT = 0.02
EPS_GRID = tuple(k * EPS_UNIT for k in (2, 4, 8, 16))


@dataclass(frozen=True)
class DeskSetup:
    classes: int = 10
    dim: int = 64
    n_per_class: int = 300
    spread: float = 0.04
    data_seed: int = 7
    test_fraction: float = 0.4
    split_seed: int = 7

    widths: tuple[int, ...] = (64, 128, 10)
    train: TrainConfig = TrainConfig(epochs=30, batch_size=32, learning_rate=0.05, seed=1)

    # the "eps = 8" column of the ladder
    calibrated_eps: float = 8 * EPS_UNIT
    iter_steps: int = 10

    adv_attack: str = "fgsm"
    adv_fraction: float = 0.5
    adv_train: TrainConfig = TrainConfig(epochs=200, batch_size=32, learning_rate=0.05, seed=1)

    zoo: tuple[MlpSpec, ...] = DEFAULT_ZOO
    zoo_seeds: tuple[int, ...] = (1, 2, 3, 4)
    transfer_eps: float = 7 * EPS_UNIT

    cw: CwConfig = CwConfig(c=1.0, steps=200, learning_rate=0.01, binary_search_steps=6)
    deepfool_max_iter: int = 50
    deepfool_overshoot: float = 0.02

    def attack(self, name: str, eps: float | None = None) -> AttackSpec:
        eps = self.calibrated_eps if eps is None else eps
        steps = self.iter_steps if name.startswith("iter") else 1
        return AttackSpec(
            name,
            AttackBudget(eps, steps),
            cw=self.cw,
            deepfool_max_iter=self.deepfool_max_iter,
            deepfool_overshoot=self.deepfool_overshoot,
        )


DESK = DeskSetup()


@lru_cache(maxsize=None)
def desk_data(setup: DeskSetup = DESK) -> tuple[Dataset, Dataset]:
    data = gen_gaussian_mixture(
        setup.classes, setup.dim, setup.n_per_class, setup.spread, setup.data_seed
    )
    return split(data, setup.test_fraction, setup.split_seed)


@lru_cache(maxsize=None)
def baseline_model(setup: DeskSetup = DESK) -> MlpParams:
    train, _ = desk_data(setup)
    params, _ = sgd_train(MlpSpec(setup.widths, "baseline"), setup.train, train)
    return params


@lru_cache(maxsize=None)
def adv_trained_model(setup: DeskSetup = DESK) -> MlpParams:
    train, _ = desk_data(setup)
    cfg = AdvTrainConfig(
        setup.adv_train,
        setup.adv_attack,
        AttackBudget(setup.calibrated_eps),
        setup.adv_fraction,
    )
    params, _ = adversarial_train(MlpSpec(setup.widths, "adv"), cfg, train)
    return params


@lru_cache(maxsize=None)
def desk_zoo(setup: DeskSetup = DESK) -> tuple[MlpParams, ...]:
    train, _ = desk_data(setup)
    return tuple(train_zoo(setup.zoo, setup.train, train, setup.zoo_seeds))
