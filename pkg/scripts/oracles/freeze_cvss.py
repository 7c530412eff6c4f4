"""Re-derive tests/fixtures/cvss_v30_reference.json from the `cvss` package.

The package is an independent implementation of the FIRST calculator and is
only needed here, not by advrobust itself: ``pip install cvss``.
"""

import json
from pathlib import Path

from cvss import CVSS3

FIXTURE = Path(__file__).resolve().parents[2] / "tests" / "fixtures" / "cvss_v30_reference.json"


def main():
    doc = json.loads(FIXTURE.read_text())
    changed = 0
    for case in doc["cases"]:
        c = CVSS3(case["vector"])
        score, sev = float(c.base_score), c.severities()[0]
        if (score, sev) != (case["base_score"], case["severity"]):
            print(f"{case['vector']}: fixture {case['base_score']} {case['severity']}, oracle {score} {sev}")
            case["base_score"], case["severity"] = score, sev
            changed += 1
    FIXTURE.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"{len(doc['cases'])} vectors checked, {changed} updated")


if __name__ == "__main__":
    main()
