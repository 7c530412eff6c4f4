"""Run the seeded desk-scale experiment and record its numbers.

Writes tests/fixtures/desk_experiment.json (read by the acceptance suite)
and prints the tables. Takes well under a minute on one core.

    python3 scripts/run_desk_experiments.py [--out PATH]
"""

import argparse
import json
import time
from dataclasses import asdict
from pathlib import Path

from advrobust.attacks import evaluate_attack
from advrobust.defense import robustness_curve
from advrobust.experiments import (
    DESK,
    EPS_GRID,
    adv_trained_model,
    baseline_model,
    desk_data,
    desk_zoo,
)
from advrobust.fileio import atomic_write_text
from advrobust.model import evaluate
from advrobust.transfer import transfer_matrix

DEFAULT_OUT = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "desk_experiment.json"


def curve(params, name, test):
    rows = robustness_curve(params, DESK.attack(name), EPS_GRID, test)
    return [asdict(r) for r in rows]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=DEFAULT_OUT)
    args = ap.parse_args()
    t0 = time.perf_counter()
    train, test = desk_data()
    base, adv = baseline_model(), adv_trained_model()
    eps = DESK.calibrated_eps

    record = {
        "setup": {
            "classes": DESK.classes, "dim": DESK.dim, "n_train": len(train), "n_test": len(test),
            "spread": DESK.spread, "calibrated_eps": eps, "eps_grid": list(EPS_GRID),
            "iter_steps": DESK.iter_steps, "transfer_eps": DESK.transfer_eps,
            "adv_attack": DESK.adv_attack, "adv_epochs": DESK.adv_train.epochs,
        },
        "baseline": {"clean_top1": evaluate(base, test)[0]},
        "adv_trained": {"clean_top1": evaluate(adv, test)[0]},
        "curves": {
            "baseline_fgsm": curve(base, "fgsm", test),
            "baseline_iter_basic": curve(base, "iter_basic", test),
        },
    }
    for tag, params in (("baseline", base), ("adv_trained", adv)):
        for name in ("fgsm", "iter_basic", "iter_ll", "step_ll"):
            rep = evaluate_attack(params, test, DESK.attack(name, eps))
            record[tag][f"{name}_top1"] = rep.adv_top1

    for name in ("deepfool", "cw"):
        rep = evaluate_attack(base, test, DESK.attack(name))
        record["baseline"][name] = {
            "success_rate": rep.success_rate,
            "median_l2": rep.median_l2,
            "mean_l2": rep.mean_l2,
            "clean_correct": rep.clean_correct,
        }
    record["baseline"]["cw_over_deepfool_median_l2"] = (
        record["baseline"]["cw"]["median_l2"] / record["baseline"]["deepfool"]["median_l2"]
    )

    zoo = desk_zoo()
    record["transfer"] = {}
    for name in ("fgsm", "iter_ll"):
        tm = transfer_matrix(zoo, DESK.attack(name, DESK.transfer_eps), test)
        record["transfer"][name] = tm.summary()
        print(tm.to_markdown())

    atomic_write_text(args.out, json.dumps(record, indent=2) + "\n")
    b, a = record["baseline"], record["adv_trained"]
    print(f"eps*={eps}: baseline clean {b['clean_top1']:.3f} fgsm {b['fgsm_top1']:.3f} | "
          f"adv-trained clean {a['clean_top1']:.3f} fgsm {a['fgsm_top1']:.3f} iter_ll {a['iter_ll_top1']:.3f}")
    print(f"deepfool median l2 {b['deepfool']['median_l2']:.4f}, cw {b['cw']['median_l2']:.4f}")
    print(f"wrote {args.out} in {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
