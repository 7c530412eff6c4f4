import csv
import json

import numpy as np
import pytest

from advrobust.cli import RunConfig, main
from advrobust.datasets import write_idx
from advrobust.errors import ConfigError

SMALL = {
    "dataset": {"classes": 4, "dim": 8, "n_per_class": 30, "spread": 0.06, "seed": 5, "split_seed": 5},
    "model": {"id": "m", "widths": [8, 16, 4], "epochs": 5, "batch_size": 16, "learning_rate": 0.1, "seed": 2},
    "attack": {"name": "fgsm", "epsilon": 0.1, "eps_list": [0.05, 0.1, 0.2]},
    "defense": {"attack": "step_ll", "epsilon": 0.1, "epochs": 3, "batch_size": 16, "seed": 2},
    "transfer": {
        "models": [{"id": k, "widths": [8, 16, 4]} for k in "ABCD"],
        "seeds": [1, 2, 3, 4],
        "attacks": ["fgsm", "iter_ll"],
        "epsilon": 0.3,
        "steps": 5,
    },
    "output": "out",
}


def write_config(tmp_path, doc=SMALL, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def run_all(tmp_path, out):
    cfg = write_config(tmp_path)
    for sub in ("train", "attack", "adv-train", "transfer", "score"):
        assert main([sub, "--config", str(cfg), "--out", str(out)]) == 0, sub


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_all_subcommands_are_byte_identical_on_rerun(tmp_path, capsys):
    run_all(tmp_path, tmp_path / "a")
    run_all(tmp_path, tmp_path / "b")
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert {"weights.json", "history.csv", "robustness.csv", "attack_report.json", "adv_weights.json",
            "adv_history.csv", "transfer.csv", "transfer.md", "transfer.json", "report.md",
            "report.json"} <= set(names)
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_history_and_curve_headers(tmp_path, capsys):
    run_all(tmp_path, tmp_path / "o")
    hist = read_csv(tmp_path / "o" / "history.csv")
    assert hist[0] == ["epoch", "loss", "top1"] and len(hist) == 6
    curve = read_csv(tmp_path / "o" / "robustness.csv")
    assert curve[0] == ["epsilon", "top1", "top5", "success_rate", "median_l2"]
    assert [r[0] for r in curve[1:]] == ["clean", "0.05", "0.1", "0.2"]


def test_zero_epsilon_row_equals_clean_row(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out = tmp_path / "o"
    assert main(["train", "--config", str(cfg), "--out", str(out)]) == 0
    assert main(["attack", "--config", str(cfg), "--out", str(out), "--eps", "0"]) == 0
    curve = read_csv(out / "robustness.csv")
    assert curve[1][0] == "clean" and curve[2][0] == "0.0"
    assert curve[1][1:] == curve[2][1:]


def test_transfer_diagonal_is_100(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["transfer", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    rows = read_csv(tmp_path / "o" / "transfer.csv")
    assert rows[0] == ["source", "A", "B", "C", "D"]
    assert len(rows) == 5
    for i, row in enumerate(rows[1:], 1):
        assert float(row[i]) == 100.0
    assert (tmp_path / "o" / "transfer_iter_ll.csv").is_file()


def test_seed_override_changes_weights(tmp_path, capsys):
    cfg = write_config(tmp_path)
    main(["train", "--config", str(cfg), "--out", str(tmp_path / "a")])
    main(["train", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "9"])
    a = json.loads((tmp_path / "a" / "weights.json").read_text())
    b = json.loads((tmp_path / "b" / "weights.json").read_text())
    assert a["seed"] == 2 and b["seed"] == 9


def test_idx_dataset(tmp_path, capsys):
    rng = np.random.default_rng(0)
    imgs = rng.integers(0, 256, size=(40, 2, 4), dtype=np.uint8)
    write_idx(tmp_path / "imgs", tmp_path / "labs", imgs, np.arange(40) % 4)
    doc = {
        "dataset": {"kind": "idx", "images": "imgs", "labels": "labs", "seed": 0, "split_seed": 1,
                    "test_fraction": 0.25},
        "model": {"widths": [8, 8, 4], "epochs": 2, "batch_size": 8, "seed": 0},
        "output": "o",
    }
    cfg = write_config(tmp_path, doc)
    assert main(["train", "--config", str(cfg)]) == 0
    assert (tmp_path / "o" / "weights.json").is_file()


def test_selftest_passes(capsys):
    assert main(["selftest"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_selftest_failure_exits_2(monkeypatch, capsys):
    monkeypatch.setattr("advrobust.selftest.run", lambda echo=print: False)
    assert main(["selftest"]) == 2


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(extra=1),
        lambda d: d["model"].update(colour="red"),
        lambda d: d["model"].pop("seed"),
        lambda d: d["dataset"].pop("split_seed"),
        lambda d: d["attack"].update(name="pgd"),
        lambda d: d["transfer"].update(seeds=[1, 2]),
    ],
)
def test_invalid_config_exits_1(tmp_path, capsys, mutate):
    doc = json.loads(json.dumps(SMALL))
    mutate(doc)
    cfg = write_config(tmp_path, doc)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("advrobust: error:") and "\n" not in err


def test_missing_inputs(tmp_path, capsys):
    assert main(["train", "--config", str(tmp_path / "none.json")]) == 1
    assert main(["train"]) == 1
    assert main(["bogus"]) == 1
    (tmp_path / "bad.json").write_text("{")
    assert main(["train", "--config", str(tmp_path / "bad.json")]) == 1
    cfg = write_config(tmp_path)
    # no weights trained yet: runtime failure
    assert main(["attack", "--config", str(cfg), "--out", str(tmp_path / "empty")]) == 2
    assert main(["attack", "--config", str(cfg), "--eps", "a,b"]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 6 and all(line.startswith("advrobust:") for line in err)


def test_section_needed(tmp_path, capsys):
    doc = {k: v for k, v in SMALL.items() if k != "transfer"}
    cfg = write_config(tmp_path, doc)
    assert main(["transfer", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_run_config_defaults():
    cfg = RunConfig.from_dict({"dataset": {"seed": 1, "split_seed": 2}})
    assert cfg.dataset["classes"] == 10 and cfg.output == "out"
    with pytest.raises(ConfigError):
        RunConfig.from_dict([])


def test_no_temp_files_left(tmp_path, capsys):
    run_all(tmp_path, tmp_path / "o")
    assert not [p for p in (tmp_path / "o").iterdir() if p.name.startswith(".")]
