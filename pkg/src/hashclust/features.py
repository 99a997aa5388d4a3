"""Digest vectorization, z-score scaling, and the two distance metrics
used downstream (straight-line distance for K-Means geometry, Jaccard
for import-set comparison)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import BothEmpty, DimensionMismatch, TooFewSamples
from .ssdeep import B64, SsdeepDigest, ssdeep_compare
from .tlsh import TlshDigest, tlsh_distance

SSDEEP_DIM = 129
TLSH_DIM = 131

_B64_INDEX = {ch: i for i, ch in enumerate(B64)}


@dataclass
class FeatureMatrix:
    values: np.ndarray          # (n_samples, n_dims), float64
    sample_ids: list[str]
    scheme: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if len(self.sample_ids) != self.values.shape[0]:
            raise ValueError("sample_ids length must match row count")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature matrix contains non-finite values")


@dataclass(frozen=True)
class ScalingParams:
    mean: np.ndarray
    std: np.ndarray


def vectorize_ssdeep(d: SsdeepDigest) -> np.ndarray:
    """log2(block_size/3) followed by length-normalized character
    histograms of both signatures (64 bins each)."""
    vec = np.zeros(SSDEEP_DIM)
    vec[0] = math.log2(d.block_size / 3)
    for offset, sig in ((1, d.sig_coarse), (65, d.sig_fine)):
        if not sig:
            continue
        for ch in sig:
            vec[offset + _B64_INDEX[ch]] += 1.0
        vec[offset:offset + 64] /= len(sig)
    return vec


def vectorize_tlsh(d: TlshDigest) -> np.ndarray:
    """Header fields (length code, quartile ratios) plus the 128 body
    codes; the checksum carries no similarity signal and is dropped."""
    return np.array([d.l_value, d.q1_ratio, d.q2_ratio, *d.body],
                    dtype=np.float64)


def vectorize_imphash(imphashes, sample_ids=None) -> FeatureMatrix:
    """One-hot over distinct digest values in first-seen order."""
    hashes = [str(h) for h in imphashes]
    if not hashes:
        raise ValueError("need at least one digest")
    columns: dict[str, int] = {}
    for h in hashes:
        if h not in columns:
            columns[h] = len(columns)
    values = np.zeros((len(hashes), len(columns)))
    for i, h in enumerate(hashes):
        values[i, columns[h]] = 1.0
    if sample_ids is None:
        sample_ids = [str(i) for i in range(len(hashes))]
    return FeatureMatrix(values, list(sample_ids), "imphash-onehot")


def standardize(m: FeatureMatrix) -> tuple[FeatureMatrix, ScalingParams]:
    """Per-dimension z-score with population std; constant dimensions
    map to zero rather than dividing by zero."""
    if m.values.shape[0] < 2:
        raise TooFewSamples("standardize needs at least 2 samples")
    mean = m.values.mean(axis=0)
    std = m.values.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    scaled = (m.values - mean) / safe
    scaled[:, std == 0] = 0.0
    return (FeatureMatrix(scaled, list(m.sample_ids), m.scheme),
            ScalingParams(mean, std))


def euclidean(p, q) -> float:
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} differ")
    return float(np.sqrt(np.sum((q - p) ** 2)))


def jaccard(x: set, y: set) -> float:
    if not x and not y:
        raise BothEmpty("Jaccard undefined for two empty sets")
    return len(x & y) / len(x | y)


_METRICS = {
    "euclidean": euclidean,
    "jaccard": jaccard,
    "tlsh_distance": tlsh_distance,
    "ssdeep_score": ssdeep_compare,
}


def pairwise_matrix(samples, metric) -> np.ndarray:
    """Symmetric metric matrix; each pair is evaluated once."""
    if len(samples) < 2:
        raise ValueError("need at least 2 samples")
    fn = _METRICS[metric] if isinstance(metric, str) else metric
    n = len(samples)
    out = np.zeros((n, n))
    for i in range(n):
        out[i, i] = fn(samples[i], samples[i])
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = fn(samples[i], samples[j])
    return out


def matrix_to_csv(m: FeatureMatrix, stream) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["sha256"] + [f"{m.scheme}_{i}"
                                  for i in range(m.values.shape[1])])
    for sid, row in zip(m.sample_ids, m.values):
        writer.writerow([sid] + [repr(float(v)) for v in row])


def matrix_from_csv(data: str, scheme: str) -> FeatureMatrix:
    reader = csv.reader(io.StringIO(data))
    next(reader)  # header
    ids, rows = [], []
    for row in reader:
        ids.append(row[0])
        rows.append([float(v) for v in row[1:]])
    return FeatureMatrix(np.array(rows), ids, scheme)
