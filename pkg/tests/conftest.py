import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

VECTOR_DIR = Path(__file__).parent / "corpus" / "vectors"


@pytest.fixture(scope="session")
def golden_vectors():
    vectors = []
    for bin_path in sorted(VECTOR_DIR.glob("*.bin")):
        stem = bin_path.name[:-4]
        vectors.append({
            "name": stem,
            "data": bin_path.read_bytes(),
            "ssdeep": (VECTOR_DIR / f"{stem}.ssdeep.txt").read_text().strip(),
            "tlsh": (VECTOR_DIR / f"{stem}.tlsh.txt").read_text().strip(),
        })
    assert len(vectors) >= 10
    return vectors
