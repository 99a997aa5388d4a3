#!/usr/bin/env python3
"""One-shot generator for the frozen digest vectors under tests/corpus/.

Inputs are seeded pseudo-random byte streams plus a few structured edge
cases; expected digests come from the independent oracle routines in
tests/oracles.py. Run once; outputs are committed.
"""

import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracles import spamsum_oracle, tlsh_oracle  # noqa: E402

OUT = ROOT / "tests" / "corpus" / "vectors"


def inputs():
    for i, size in enumerate([100, 257, 1024, 4096, 8192, 16384, 30000,
                              65536, 100000, 131072, 5000, 777]):
        rnd = random.Random(1000 + i)
        yield f"rand{i:02d}", bytes(rnd.randrange(256) for _ in range(size))
    yield "constA", b"\x41" * 8192
    yield "text", (b"the quick brown fox jumps over the lazy dog\n" * 200)
    ramp = bytes(range(256)) * 40
    yield "ramp", ramp


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, data in inputs():
        (OUT / f"{name}.bin").write_bytes(data)
        (OUT / f"{name}.ssdeep.txt").write_text(spamsum_oracle(data) + "\n")
        tl = tlsh_oracle(data)
        (OUT / f"{name}.tlsh.txt").write_text((tl or "DEGENERATE") + "\n")
        print(name, len(data))


if __name__ == "__main__":
    main()
