"""Command-line entry point: ``advrobust <subcommand> --config run.json``.

Exit codes: 0 success, 1 invalid input (config, arguments, missing files),
2 runtime failure (including a failing selftest).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from . import selftest
from .attacks import ATTACK_NAMES, BUDGETED, AttackBudget, AttackSpec, CwConfig, evaluate_attack
from .datasets import Dataset, gen_gaussian_mixture, load_idx, split
from .defense import CURVE_HEADER, TRAINING_ATTACKS, AdvTrainConfig, adversarial_train, robustness_curve
from .errors import AdvRobustError, ConfigError
from .fileio import atomic_write_text, write_csv
from .model import MlpSpec, TrainConfig, load_weights, save_weights, sgd_train
from .transfer import train_zoo, transfer_matrix
from .vulnscore import THREAT_MODELS, MappingThresholds, build_record, render_report

SUBCOMMANDS = ("train", "attack", "adv-train", "transfer", "score", "selftest")
REQUIRED = object()


def _section(raw: Any, name: str, schema: dict) -> dict:
    """Validate one config object against ``{key: default or REQUIRED}``."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected an object, got {type(raw).__name__}")
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"{name}: unknown key(s) {', '.join(unknown)}")
    out = {}
    for key, default in schema.items():
        if key in raw:
            out[key] = raw[key]
        elif default is REQUIRED:
            raise ConfigError(f"{name}: missing required key {key!r}")
        else:
            out[key] = default
    return out


DATASET_SCHEMA = {
    "kind": "gaussian_mixture",
    "classes": 10,
    "dim": 64,
    "n_per_class": 300,
    "spread": 0.04,
    "images": None,
    "labels": None,
    "seed": REQUIRED,
    "test_fraction": 0.4,
    "split_seed": REQUIRED,
}
TRAIN_KEYS = {"epochs": 30, "batch_size": 32, "learning_rate": 0.05, "seed": REQUIRED}
MODEL_SCHEMA = {"id": "A", "widths": REQUIRED, "weights": None, **TRAIN_KEYS}
CW_SCHEMA = {"c": 1.0, "confidence": 0.0, "steps": 200, "learning_rate": 0.01, "binary_search_steps": 6}
DEEPFOOL_SCHEMA = {"max_iter": 50, "overshoot": 0.02}
ATTACK_SCHEMA = {
    "name": REQUIRED,
    "epsilon": 0.0,
    "steps": 1,
    "step_size": None,
    "eps_list": None,
    "clip_lo": 0.0,
    "clip_hi": 1.0,
    "weights": None,
    "cw": {},
    "deepfool": {},
}
DEFENSE_SCHEMA = {
    "attack": "step_ll",
    "epsilon": REQUIRED,
    "steps": 1,
    "adv_fraction": 0.5,
    "id": "adv",
    **TRAIN_KEYS,
}
TRANSFER_SCHEMA = {
    "models": REQUIRED,
    "seeds": REQUIRED,
    "attacks": ["fgsm", "iter_ll"],
    "epsilon": REQUIRED,
    "steps": 10,
    "metric": "top1",
}
SCORE_SCHEMA = {"inputs": None, "thresholds": {}}
SCORE_INPUT_SCHEMA = {"path": REQUIRED, "title": None, "threat_model": REQUIRED, "narrative": ""}
TOP_SCHEMA = {
    "dataset": None,
    "model": None,
    "attack": None,
    "defense": None,
    "transfer": None,
    "score": None,
    "output": "out",
}


@dataclass
class RunConfig:
    dataset: Optional[dict] = None
    model: Optional[dict] = None
    attack: Optional[dict] = None
    defense: Optional[dict] = None
    transfer: Optional[dict] = None
    score: Optional[dict] = None
    output: str = "out"
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, raw: Any, base_dir: Path = Path(".")) -> "RunConfig":
        top = _section(raw, "config", TOP_SCHEMA)
        cfg = cls(output=str(top["output"]), base_dir=base_dir)
        if top["dataset"] is not None:
            cfg.dataset = _section(top["dataset"], "dataset", DATASET_SCHEMA)
            if cfg.dataset["kind"] not in ("gaussian_mixture", "idx"):
                raise ConfigError(f"dataset.kind must be 'gaussian_mixture' or 'idx'")
        if top["model"] is not None:
            cfg.model = _section(top["model"], "model", MODEL_SCHEMA)
        if top["attack"] is not None:
            a = _section(top["attack"], "attack", ATTACK_SCHEMA)
            if a["name"] not in ATTACK_NAMES:
                raise ConfigError(f"attack.name must be one of {ATTACK_NAMES}")
            a["cw"] = _section(a["cw"], "attack.cw", CW_SCHEMA)
            a["deepfool"] = _section(a["deepfool"], "attack.deepfool", DEEPFOOL_SCHEMA)
            cfg.attack = a
        if top["defense"] is not None:
            d = _section(top["defense"], "defense", DEFENSE_SCHEMA)
            if d["attack"] not in TRAINING_ATTACKS:
                raise ConfigError(f"defense.attack must be one of {TRAINING_ATTACKS}")
            cfg.defense = d
        if top["transfer"] is not None:
            t = _section(top["transfer"], "transfer", TRANSFER_SCHEMA)
            t["models"] = [
                _section(m, f"transfer.models[{i}]", {"id": REQUIRED, "widths": REQUIRED})
                for i, m in enumerate(t["models"])
            ]
            if len(t["models"]) != len(t["seeds"]) or not t["models"]:
                raise ConfigError("transfer: need one seed per model and at least one model")
            for name in t["attacks"]:
                if name not in ATTACK_NAMES:
                    raise ConfigError(f"transfer.attacks: unknown attack {name!r}")
            cfg.transfer = t
        if top["score"] is not None:
            s = _section(top["score"], "score", SCORE_SCHEMA)
            s["thresholds"] = _section(
                s["thresholds"], "score.thresholds",
                {"integrity_high": 0.5, "integrity_low": 0.1, "transfer_easy": 50.0},
            )
            if s["inputs"] is not None:
                s["inputs"] = [
                    _section(item, f"score.inputs[{i}]", SCORE_INPUT_SCHEMA)
                    for i, item in enumerate(s["inputs"])
                ]
                for item in s["inputs"]:
                    if item["threat_model"] not in THREAT_MODELS:
                        raise ConfigError(f"score.inputs: threat_model must be one of {THREAT_MODELS}")
            cfg.score = s
        return cfg

    def need(self, name: str) -> dict:
        section = getattr(self, name)
        if section is None:
            raise ConfigError(f"this subcommand needs a {name!r} section in the config")
        return section

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def out_dir(self) -> Path:
        return self.path(self.output)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return RunConfig.from_dict(raw, path.parent)


def _train_config(section: dict) -> TrainConfig:
    return TrainConfig(
        int(section["epochs"]), int(section["batch_size"]), float(section["learning_rate"]), int(section["seed"])
    )


def build_data(cfg: RunConfig) -> tuple[Dataset, Dataset]:
    d = cfg.need("dataset")
    if d["kind"] == "idx":
        if not d["images"] or not d["labels"]:
            raise ConfigError("dataset.kind 'idx' needs 'images' and 'labels' paths")
        for key in ("images", "labels"):
            if not cfg.path(d[key]).is_file():
                raise ConfigError(f"dataset.{key}: file not found: {cfg.path(d[key])}")
        data = load_idx(cfg.path(d["images"]), cfg.path(d["labels"]))
    else:
        data = gen_gaussian_mixture(
            int(d["classes"]), int(d["dim"]), int(d["n_per_class"]), float(d["spread"]), int(d["seed"])
        )
    return split(data, float(d["test_fraction"]), int(d["split_seed"]))


def build_attack(section: dict, epsilon: Optional[float] = None) -> AttackSpec:
    eps = float(section["epsilon"] if epsilon is None else epsilon)
    budget = AttackBudget(
        eps,
        int(section["steps"]),
        None if section["step_size"] is None else float(section["step_size"]),
        float(section["clip_lo"]),
        float(section["clip_hi"]),
    )
    cw = CwConfig(
        **{k: (int(v) if k in ("steps", "binary_search_steps") else float(v)) for k, v in section["cw"].items()},
        clip_lo=float(section["clip_lo"]),
        clip_hi=float(section["clip_hi"]),
    )
    df = section["deepfool"]
    return AttackSpec(section["name"], budget, cw, int(df["max_iter"]), float(df["overshoot"]))


def _write_json(path: Path, doc) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _history_rows(history):
    return [(h.epoch, h.loss, h.top1) for h in history]


# ------------------------------------------------------------ commands


def cmd_train(cfg: RunConfig, echo) -> None:
    m = cfg.need("model")
    train, test = build_data(cfg)
    spec = MlpSpec(tuple(m["widths"]), str(m["id"]))
    params, history = sgd_train(spec, _train_config(m), train)
    out = cfg.out_dir
    save_weights(params, out / "weights.json")
    write_csv(out / "history.csv", ("epoch", "loss", "top1"), _history_rows(history))
    echo(f"trained {spec.id}: final train loss {history[-1].loss:.4f} -> {out / 'weights.json'}"
         if history else f"saved untrained {spec.id} -> {out / 'weights.json'}")


def cmd_adv_train(cfg: RunConfig, echo) -> None:
    m = cfg.need("model")
    d = cfg.need("defense")
    train, _ = build_data(cfg)
    spec = MlpSpec(tuple(m["widths"]), str(d["id"]))
    steps = int(d["steps"])
    adv_cfg = AdvTrainConfig(
        _train_config(d), d["attack"], AttackBudget(float(d["epsilon"]), steps), float(d["adv_fraction"])
    )
    params, history = adversarial_train(spec, adv_cfg, train)
    out = cfg.out_dir
    save_weights(params, out / "adv_weights.json")
    write_csv(out / "adv_history.csv", ("epoch", "loss", "top1"), _history_rows(history))
    echo(f"adversarially trained {spec.id} ({d['attack']}, eps={d['epsilon']}) -> {out / 'adv_weights.json'}")


def cmd_attack(cfg: RunConfig, echo) -> None:
    a = cfg.need("attack")
    _, test = build_data(cfg)
    weights = a["weights"] or (cfg.model or {}).get("weights") or cfg.out_dir / "weights.json"
    params = load_weights(cfg.path(weights))
    spec = build_attack(a)
    out = cfg.out_dir
    report = evaluate_attack(params, test, spec)
    _write_json(out / "attack_report.json", report.summary())
    if spec.name in BUDGETED:
        eps_list = a["eps_list"] if a["eps_list"] is not None else [spec.budget.epsilon]
        rows = robustness_curve(params, spec, eps_list, test)
        write_csv(out / "robustness.csv", CURVE_HEADER, [r.as_tuple() for r in rows])
    echo(f"{spec.name}: clean top1 {report.clean_top1:.3f}, adversarial top1 {report.adv_top1:.3f}, "
         f"success {report.success_rate:.3f}")


def cmd_transfer(cfg: RunConfig, echo) -> None:
    t = cfg.need("transfer")
    m = cfg.model or {}
    train, test = build_data(cfg)
    specs = [MlpSpec(tuple(item["widths"]), str(item["id"])) for item in t["models"]]
    train_cfg = TrainConfig(
        int(m.get("epochs", 30)), int(m.get("batch_size", 32)), float(m.get("learning_rate", 0.05)), 0
    )
    zoo = train_zoo(specs, train_cfg, train, [int(s) for s in t["seeds"]])
    out = cfg.out_dir
    markdown, summaries = [], []
    for i, name in enumerate(t["attacks"]):
        steps = int(t["steps"]) if name.startswith("iter") else 1
        spec = AttackSpec(name, AttackBudget(float(t["epsilon"]), steps))
        matrix = transfer_matrix(zoo, spec, test, t["metric"])
        atomic_write_text(out / f"transfer_{name}.csv", matrix.to_csv())
        if i == 0:
            atomic_write_text(out / "transfer.csv", matrix.to_csv())
        markdown.append(matrix.to_markdown())
        summaries.append(matrix.summary())
        mean = matrix.mean_off_diagonal()
        echo(f"{name}: mean off-diagonal transfer {'n/a' if mean is None else f'{mean:.1f}%'}")
    atomic_write_text(out / "transfer.md", "\n".join(markdown))
    _write_json(out / "transfer.json", {"matrices": summaries})


def _default_score_inputs(out: Path) -> list[dict]:
    items = []
    if (out / "attack_report.json").is_file():
        items.append({"path": str(out / "attack_report.json"), "title": None,
                      "threat_model": "white_box", "narrative": ""})
    if (out / "transfer.json").is_file():
        items.append({"path": str(out / "transfer.json"), "title": None,
                      "threat_model": "black_box_transfer", "narrative": ""})
    return items


def cmd_score(cfg: RunConfig, echo) -> None:
    s = cfg.score or {"inputs": None, "thresholds": {}}
    thresholds = MappingThresholds(**s["thresholds"])
    inputs = s["inputs"] if s["inputs"] is not None else _default_score_inputs(cfg.out_dir)
    records = []
    for item in inputs:
        path = cfg.path(item["path"])
        if not path.is_file():
            raise ConfigError(f"score input not found: {path}")
        doc = json.loads(path.read_text())
        reports = doc["matrices"] if "matrices" in doc else [doc]
        for rep in reports:
            attack = rep.get("attack", "unknown")
            title = item["title"] or f"{attack} ({item['threat_model'].replace('_', ' ')})"
            if len(reports) > 1 and item["title"]:
                title = f"{item['title']}: {attack}"
            records.append(build_record(title, item["threat_model"], attack, rep, thresholds, item["narrative"]))
    markdown, doc = render_report(records)
    atomic_write_text(cfg.out_dir / "report.md", markdown)
    _write_json(cfg.out_dir / "report.json", doc)
    echo(f"scored {len(records)} finding(s) -> {cfg.out_dir / 'report.md'}")


def cmd_selftest(cfg: Optional[RunConfig], echo) -> bool:
    return selftest.run(echo=echo)


COMMANDS = {
    "train": cmd_train,
    "attack": cmd_attack,
    "adv-train": cmd_adv_train,
    "transfer": cmd_transfer,
    "score": cmd_score,
}


def _apply_overrides(cfg: RunConfig, args) -> None:
    if args.out is not None:
        cfg.output = str(Path(args.out).resolve())
    if args.seed is not None:
        for section in (cfg.model, cfg.defense):
            if section is not None:
                section["seed"] = args.seed
    if args.eps is not None:
        try:
            eps = [float(v) for v in args.eps.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--eps must be a comma-separated list of numbers, got {args.eps!r}") from None
        if cfg.attack is None:
            raise ConfigError("--eps needs an 'attack' section in the config")
        cfg.attack["eps_list"] = eps


class _Parser(argparse.ArgumentParser):
    # keep diagnostics to one line instead of usage + message
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="advrobust", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--out", help="output directory (overrides config 'output')")
    parser.add_argument("--seed", type=int, help="override model/defense training seed")
    parser.add_argument("--eps", help="comma-separated epsilon list for attack sweeps")
    return parser


def main(argv=None) -> int:
    def echo(msg):
        print(msg)

    try:
        args = build_parser().parse_args(argv)
        if args.subcommand == "selftest":
            return 0 if cmd_selftest(None, echo) else 2
        if not args.config:
            raise ConfigError(f"{args.subcommand} needs --config")
        cfg = load_config(args.config)
        _apply_overrides(cfg, args)
    except (ConfigError, AdvRobustError, ValueError) as exc:
        print(f"advrobust: error: {exc}", file=sys.stderr)
        return 1
    try:
        COMMANDS[args.subcommand](cfg, echo)
    except ConfigError as exc:
        print(f"advrobust: error: {exc}", file=sys.stderr)
        return 1
    except (AdvRobustError, OSError, ValueError, KeyError) as exc:
        print(f"advrobust: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
