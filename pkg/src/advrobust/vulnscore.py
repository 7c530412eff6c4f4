"""CVSS v3.0 base scores for ML vulnerabilities found by the attack suite.

The scoring rule is the published CVSS v3.0 base equation, including its
``ceil(x * 10) / 10`` round-up (v3.1 changed that rounding; v3.0 is pinned
here). Mapping empirical attack results onto metric values is a local
convention, see :class:`MappingThresholds`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (
    ArgumentError,
    BadPrefixError,
    DuplicateMetricError,
    MissingMetricError,
    UnknownCodeError,
)

PREFIX = "CVSS:3.0/"


class AttackVector(Enum):
    NETWORK = "N"
    ADJACENT = "A"
    LOCAL = "L"
    PHYSICAL = "P"


class AttackComplexity(Enum):
    LOW = "L"
    HIGH = "H"


class PrivilegesRequired(Enum):
    NONE = "N"
    LOW = "L"
    HIGH = "H"


class UserInteraction(Enum):
    NONE = "N"
    REQUIRED = "R"


class Scope(Enum):
    UNCHANGED = "U"
    CHANGED = "C"


class Impact(Enum):
    NONE = "N"
    LOW = "L"
    HIGH = "H"


# metric abbreviation -> (field name, enum), in canonical vector order
METRICS = {
    "AV": ("attack_vector", AttackVector),
    "AC": ("attack_complexity", AttackComplexity),
    "PR": ("privileges_required", PrivilegesRequired),
    "UI": ("user_interaction", UserInteraction),
    "S": ("scope", Scope),
    "C": ("confidentiality", Impact),
    "I": ("integrity", Impact),
    "A": ("availability", Impact),
}

AV_WEIGHT = {"N": 0.85, "A": 0.62, "L": 0.55, "P": 0.2}
AC_WEIGHT = {"L": 0.77, "H": 0.44}
PR_WEIGHT = {"U": {"N": 0.85, "L": 0.62, "H": 0.27}, "C": {"N": 0.85, "L": 0.68, "H": 0.5}}
UI_WEIGHT = {"N": 0.85, "R": 0.62}
CIA_WEIGHT = {"H": 0.56, "L": 0.22, "N": 0.0}

SEVERITY_BANDS = (
    (0.0, 0.0, "None"),
    (0.1, 3.9, "Low"),
    (4.0, 6.9, "Medium"),
    (7.0, 8.9, "High"),
    (9.0, 10.0, "Critical"),
)


@dataclass(frozen=True)
class BaseMetrics:
    attack_vector: AttackVector
    attack_complexity: AttackComplexity
    privileges_required: PrivilegesRequired
    user_interaction: UserInteraction
    scope: Scope
    confidentiality: Impact
    integrity: Impact
    availability: Impact

    def __post_init__(self):
        for abbr, (name, enum) in METRICS.items():
            value = getattr(self, name)
            if not isinstance(value, enum):
                raise ArgumentError(f"{name} must be a {enum.__name__}, got {value!r}")

    def code(self, abbr: str) -> str:
        return getattr(self, METRICS[abbr][0]).value

    def vector(self) -> str:
        return PREFIX + "/".join(f"{abbr}:{self.code(abbr)}" for abbr in METRICS)


@dataclass(frozen=True)
class ScoreReport:
    base_score: float
    exploitability_sub: float
    impact_sub: float
    severity: str
    vector: str


def parse_vector(s: str) -> BaseMetrics:
    """Parse ``CVSS:3.0/AV:N/AC:L/...``. Metric order is free; codes are case-sensitive."""
    if not isinstance(s, str) or not s.startswith(PREFIX):
        raise BadPrefixError(f"vector must start with {PREFIX!r}: {s!r}")
    seen: dict[str, str] = {}
    for part in s[len(PREFIX):].split("/"):
        abbr, sep, code = part.partition(":")
        if not sep or abbr not in METRICS:
            raise UnknownCodeError(f"unknown metric {part!r} in {s!r}")
        if abbr in seen:
            raise DuplicateMetricError(f"metric {abbr} given twice in {s!r}")
        enum = METRICS[abbr][1]
        if code not in {m.value for m in enum}:
            raise UnknownCodeError(f"unknown code {code!r} for metric {abbr} in {s!r}")
        seen[abbr] = code
    missing = [abbr for abbr in METRICS if abbr not in seen]
    if missing:
        raise MissingMetricError(f"missing metric(s) {', '.join(missing)} in {s!r}")
    return BaseMetrics(**{name: enum(seen[abbr]) for abbr, (name, enum) in METRICS.items()})


def roundup(x: float) -> float:
    """CVSS v3.0 round-up to one decimal."""
    return math.ceil(x * 10) / 10


def severity(score: float) -> str:
    for lo, hi, name in SEVERITY_BANDS:
        if lo <= score <= hi:
            return name
    raise ArgumentError(f"score {score} outside [0, 10]")


def base_score(m: BaseMetrics) -> ScoreReport:
    changed = m.scope is Scope.CHANGED
    iss = 1.0 - (
        (1.0 - CIA_WEIGHT[m.code("C")])
        * (1.0 - CIA_WEIGHT[m.code("I")])
        * (1.0 - CIA_WEIGHT[m.code("A")])
    )
    if changed:
        impact = 7.52 * (iss - 0.029) - 3.25 * (iss - 0.02) ** 15
    else:
        impact = 6.42 * iss
    exploitability = (
        8.22
        * AV_WEIGHT[m.code("AV")]
        * AC_WEIGHT[m.code("AC")]
        * PR_WEIGHT[m.code("S")][m.code("PR")]
        * UI_WEIGHT[m.code("UI")]
    )
    if impact <= 0:
        score = 0.0
    elif changed:
        score = roundup(min(1.08 * (impact + exploitability), 10.0))
    else:
        score = roundup(min(impact + exploitability, 10.0))
    return ScoreReport(score, exploitability, impact, severity(score), m.vector())


def score_vector(s: str) -> ScoreReport:
    return base_score(parse_vector(s))


# ------------------------------------------------ empirical -> metrics

THREAT_MODELS = ("white_box", "black_box_transfer")


@dataclass(frozen=True)
class MappingThresholds:
    """Cut-offs used to turn measured attack outcomes into metric values.

    Success rates are fractions; ``transfer_easy`` is a mean off-diagonal
    transfer rate in percent.
    """

    integrity_high: float = 0.5
    integrity_low: float = 0.1
    transfer_easy: float = 50.0


def _success_fraction(report) -> tuple[float, Optional[float]]:
    """``(success fraction, mean transfer percent or None)`` from a report."""
    if isinstance(report, dict):
        if "mean_off_diagonal" in report:
            mean = report["mean_off_diagonal"]
            mean = 0.0 if mean is None else float(mean)
            return mean / 100.0, mean
        return float(report["success_rate"]), None
    if hasattr(report, "mean_off_diagonal"):
        mean = report.mean_off_diagonal()
        mean = 0.0 if mean is None else float(mean)
        return mean / 100.0, mean
    return float(report.success_rate), None


def map_evaluation_to_metrics(
    report, threat_model: str, thresholds: MappingThresholds = MappingThresholds()
) -> BaseMetrics:
    """Metric values for an attack report (white box) or transfer matrix (black box).

    Fixed assumptions: networked deployment (AV:N), no user interaction,
    unchanged scope, no confidentiality or availability impact. Integrity
    impact follows the attack's success rate.
    """
    if threat_model not in THREAT_MODELS:
        raise ArgumentError(f"threat_model must be one of {THREAT_MODELS}, got {threat_model!r}")
    success, transfer = _success_fraction(report)
    if threat_model == "white_box":
        pr, ac = PrivilegesRequired.HIGH, AttackComplexity.LOW
    else:
        if transfer is None:
            transfer = 100.0 * success
        pr = PrivilegesRequired.NONE
        ac = AttackComplexity.LOW if transfer >= thresholds.transfer_easy else AttackComplexity.HIGH
    if success >= thresholds.integrity_high:
        integrity = Impact.HIGH
    elif success >= thresholds.integrity_low:
        integrity = Impact.LOW
    else:
        integrity = Impact.NONE
    return BaseMetrics(
        AttackVector.NETWORK, ac, pr, UserInteraction.NONE, Scope.UNCHANGED,
        Impact.NONE, integrity, Impact.NONE,
    )


@dataclass
class MlVulnRecord:
    title: str
    threat_model: str
    attack_name: str
    report: dict
    metrics: BaseMetrics
    score: ScoreReport = field(init=False)
    narrative: str = ""

    def __post_init__(self):
        self.score = base_score(self.metrics)

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "threat_model": self.threat_model,
            "attack_name": self.attack_name,
            "report": self.report,
            "metrics": {name: getattr(self.metrics, name).name for name, _ in METRICS.values()},
            "score": {
                "base_score": self.score.base_score,
                "exploitability_sub": self.score.exploitability_sub,
                "impact_sub": self.score.impact_sub,
                "severity": self.score.severity,
                "vector": self.score.vector,
            },
            "narrative": self.narrative,
        }


def build_record(title, threat_model, attack_name, report, thresholds=MappingThresholds(), narrative=""):
    summary = report if isinstance(report, dict) else report.summary()
    metrics = map_evaluation_to_metrics(report, threat_model, thresholds)
    return MlVulnRecord(title, threat_model, attack_name, summary, metrics, narrative)


def render_report(records) -> tuple[str, dict]:
    """Markdown and JSON views of the records, highest score first, then by title."""
    ordered = sorted(records, key=lambda r: (-r.score.base_score, r.title))
    lines = [
        "# ML vulnerability report",
        "",
        "Scores use the CVSS v3.0 base equations.",
        "",
        "| # | Title | Threat model | Attack | Score | Severity | Vector |",
        "|---|---|---|---|---|---|---|",
    ]
    for i, r in enumerate(ordered, 1):
        lines.append(
            f"| {i} | {r.title} | {r.threat_model} | {r.attack_name} | "
            f"{r.score.base_score:.1f} | {r.score.severity} | `{r.score.vector}` |"
        )
    if not ordered:
        lines.append("| - | no findings | | | | | |")
    for r in ordered:
        if r.narrative:
            lines += ["", f"## {r.title}", "", r.narrative]
    doc = {"cvss_version": "3.0", "records": [r.to_dict() for r in ordered]}
    return "\n".join(lines) + "\n", doc
