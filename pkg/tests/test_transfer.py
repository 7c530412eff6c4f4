import pytest

from advrobust.attacks import AttackBudget, AttackSpec
from advrobust.datasets import gen_gaussian_mixture, split
from advrobust.errors import ArgumentError
from advrobust.model import MlpSpec, TrainConfig
from advrobust.transfer import DEFAULT_ZOO, TransferMatrix, train_zoo, transfer_matrix

DATA = gen_gaussian_mixture(4, 8, 40, 0.08, seed=12)
TRAIN, TEST = split(DATA, 0.5, 1)
ZOO_SPECS = [MlpSpec((8, 16, 4), "p"), MlpSpec((8, 16, 4), "q"), MlpSpec((8, 24, 4), "r")]
CFG = TrainConfig(epochs=10, batch_size=16, learning_rate=0.1, seed=0)


@pytest.fixture(scope="module")
def zoo():
    return train_zoo(ZOO_SPECS, CFG, TRAIN, [1, 2, 3])


def test_zoo_seeds_differ(zoo):
    assert not zoo[0].equals(zoo[1])
    assert [p.seed for p in zoo] == [1, 2, 3]


@pytest.mark.parametrize("name,steps", [("fgsm", 1), ("iter_ll", 5)])
def test_diagonal_is_exactly_100(zoo, name, steps):
    tm = transfer_matrix(zoo, AttackSpec(name, AttackBudget(0.3, steps)), TEST)
    for i in range(3):
        assert tm.rates[i][i] in (100.0, None)
    assert any(tm.rates[i][i] == 100.0 for i in range(3))
    assert all(0.0 <= r <= 100.0 for r in tm.off_diagonal())


def test_topk_metric(zoo):
    tm = transfer_matrix(zoo, AttackSpec("fgsm", AttackBudget(0.5)), TEST, metric="topk")
    assert tm.metric == "topk"
    # with 4 classes the true label is always inside the top 5, so nothing is fooled
    assert tm.fooled_counts == [0, 0, 0] and tm.mean_off_diagonal() is None


def test_zero_budget_rows_are_undefined(zoo):
    tm = transfer_matrix(zoo, AttackSpec("fgsm", AttackBudget(0.0)), TEST)
    assert tm.fooled_counts == [0, 0, 0]
    assert all(r is None for row in tm.rates for r in row)


def test_renderings():
    tm = TransferMatrix(["A", "B"], [[100.0, 12.5], [None, None]], "fgsm", 0.1, fooled_counts=[8, 0])
    assert tm.to_csv() == "source,A,B\nA,100.0,12.5\nB,,\n"
    md = tm.to_markdown()
    assert "| A | 100 | 12 |" in md and "| B | n/a | n/a |" in md
    assert tm.mean_off_diagonal() == 12.5
    assert tm.summary()["mean_off_diagonal"] == 12.5


def test_argument_errors(zoo):
    with pytest.raises(ArgumentError):
        transfer_matrix([], AttackSpec("fgsm"), TEST)
    with pytest.raises(ArgumentError):
        transfer_matrix(zoo, AttackSpec("fgsm"), TEST, metric="top3")
    with pytest.raises(ArgumentError):
        train_zoo(ZOO_SPECS, CFG, TRAIN, [1])


def test_default_zoo_shapes():
    assert [s.id for s in DEFAULT_ZOO] == ["A", "B", "C", "D"]
    assert len({s.layer_widths for s in DEFAULT_ZOO}) == 3
