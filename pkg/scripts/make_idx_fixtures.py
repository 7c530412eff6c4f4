"""Regenerate the IDX parser fixtures under tests/fixtures/."""

import struct
from pathlib import Path

import numpy as np

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

PIXELS = np.array(
    [
        [[0, 255, 128], [1, 2, 3]],
        [[255, 255, 255], [0, 0, 0]],
        [[51, 102, 153], [204, 17, 34]],
        [[7, 0, 0], [0, 0, 250]],
    ],
    dtype=np.uint8,
)
LABELS = np.array([3, 0, 7, 3], dtype=np.uint8)


def images(magic=0x803, count=4, body=None):
    body = PIXELS.tobytes() if body is None else body
    return struct.pack(">4I", magic, count, 2, 3) + body


def labels(magic=0x801, count=4, body=None):
    body = LABELS.tobytes() if body is None else body
    return struct.pack(">2I", magic, count) + body


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    files = {
        "known4-images.idx3-ubyte": images(),
        "known4-labels.idx1-ubyte": labels(),
        # labels magic on an image file, and vice versa
        "bad-magic-images.idx3-ubyte": images(magic=0x801),
        "bad-magic-labels.idx1-ubyte": labels(magic=0x803),
        "truncated-images.idx3-ubyte": images()[:-5],
        "truncated-header.idx3-ubyte": images()[:10],
        "truncated-labels.idx1-ubyte": labels()[:-1],
        "three-labels.idx1-ubyte": labels(count=3, body=LABELS[:3].tobytes()),
    }
    for name, raw in files.items():
        (FIXTURES / name).write_bytes(raw)
        print(f"wrote {name} ({len(raw)} bytes)")


if __name__ == "__main__":
    main()
