import json
from pathlib import Path

import numpy as np
import pytest

from advrobust.model import MlpParams, MlpSpec

FIXTURES = Path(__file__).parent / "fixtures"

# criterion number -> (passed, detail); filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def load_fixture(name):
    return json.loads((FIXTURES / name).read_text())


def affine(w, b=None):
    w = np.asarray(w, dtype=np.float64)
    b = np.zeros(w.shape[0]) if b is None else np.asarray(b, dtype=np.float64)
    return MlpParams(MlpSpec((w.shape[1], w.shape[0])), [w], [b])


@pytest.fixture
def tiny_model():
    """Two-class, one-input linear model: logits (x, -x)."""
    return affine([[1.0], [-1.0]])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
