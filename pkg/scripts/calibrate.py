"""Sweeps used to pick the desk experiment's budgets and check their stability.

    python3 scripts/calibrate.py eps        # baseline accuracy vs eps for each attack
    python3 scripts/calibrate.py transfer   # FGSM vs iter_ll transfer means vs eps
    python3 scripts/calibrate.py seeds      # adversarial-training outcome across seeds

None of this feeds the test suite directly; the chosen values live in
advrobust.experiments.DeskSetup and the measured results in
tests/fixtures/desk_experiment.json.
"""

import argparse
from dataclasses import replace

from advrobust.attacks import evaluate_attack
from advrobust.experiments import DESK, EPS_UNIT, adv_trained_model, baseline_model, desk_data, desk_zoo
from advrobust.transfer import transfer_matrix


def sweep_eps(setup):
    _, test = desk_data(setup)
    p = baseline_model(setup)
    names = ("fgsm", "step_ll", "iter_basic", "iter_ll")
    print("eps    " + "  ".join(f"{n:>10}" for n in names))
    for k in range(1, 21):
        eps = k * EPS_UNIT
        accs = [evaluate_attack(p, test, setup.attack(n, eps)).adv_top1 for n in names]
        print(f"{eps:5.2f}  " + "  ".join(f"{a:10.3f}" for a in accs))


def sweep_transfer(setup):
    _, test = desk_data(setup)
    zoo = desk_zoo(setup)
    print("eps    fgsm  iter_ll")
    for k in range(4, 11):
        eps = k * EPS_UNIT
        means = [
            transfer_matrix(zoo, setup.attack(n, eps), test).mean_off_diagonal()
            for n in ("fgsm", "iter_ll")
        ]
        print(f"{eps:5.2f}  " + "  ".join("  n/a" if m is None else f"{m:5.1f}" for m in means))


def sweep_seeds(setup, seeds):
    _, test = desk_data(setup)
    eps = setup.calibrated_eps
    print("seed  clean   fgsm  iter_ll  (adversarially trained)")
    for s in seeds:
        cfg = replace(setup, adv_train=replace(setup.adv_train, seed=s))
        p = adv_trained_model(cfg)
        clean = evaluate_attack(p, test, cfg.attack("fgsm", 0.0)).adv_top1
        fgsm = evaluate_attack(p, test, cfg.attack("fgsm", eps)).adv_top1
        ll = evaluate_attack(p, test, cfg.attack("iter_ll", eps)).adv_top1
        print(f"{s:4d}  {clean:5.3f}  {fgsm:5.3f}  {ll:7.3f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("sweep", choices=("eps", "transfer", "seeds"))
    ap.add_argument("--seeds", default="1,2,3,4,5,6")
    args = ap.parse_args()
    if args.sweep == "eps":
        sweep_eps(DESK)
    elif args.sweep == "transfer":
        sweep_transfer(DESK)
    else:
        sweep_seeds(DESK, [int(s) for s in args.seeds.split(",")])


if __name__ == "__main__":
    main()
