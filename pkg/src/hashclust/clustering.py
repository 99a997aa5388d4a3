"""Deterministic K-Means (k-means++ seeding, restarts, Lloyd iteration)
with silhouette scoring and K-sweep model selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyMatrix, KTooLarge, SingleCluster
from .features import FeatureMatrix


@dataclass
class KMeansConfig:
    k: int
    max_iterations: int = 300
    restarts: int = 10
    tolerance: float = 1e-4
    seed: int = 0

    def with_k(self, k: int) -> "KMeansConfig":
        return KMeansConfig(k, self.max_iterations, self.restarts,
                            self.tolerance, self.seed)


@dataclass
class ClusteringResult:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations_run: int


@dataclass
class SilhouetteReport:
    per_k: dict[int, float]
    best_k: int


def _sq_distances(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    # (n, k) squared distances, computed stably and deterministically
    diff = x[:, None, :] - centroids[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _init_plusplus(x: np.ndarray, k: int, rng) -> np.ndarray:
    n = x.shape[0]
    centroids = np.empty((k, x.shape[1]))
    centroids[0] = x[rng.integers(n)]
    closest = np.sum((x - centroids[0]) ** 2, axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total == 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=closest / total))
        centroids[i] = x[idx]
        closest = np.minimum(closest, np.sum((x - centroids[i]) ** 2, axis=1))
    return centroids


def _lloyd(x: np.ndarray, k: int, cfg: KMeansConfig, rng) -> ClusteringResult:
    centroids = _init_plusplus(x, k, rng)
    labels = np.zeros(x.shape[0], dtype=np.intp)
    prev_inertia = np.inf
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        d2 = _sq_distances(x, centroids)
        labels = np.argmin(d2, axis=1)

        # Keep every cluster populated: an emptied cluster is reseeded
        # onto the sample currently farthest from its assigned centroid.
        taken: set[int] = set()
        for c in range(k):
            if np.any(labels == c):
                continue
            own = np.sum((x - centroids[labels]) ** 2, axis=1)
            own[list(taken)] = -1.0
            far = int(np.argmax(own))
            labels[far] = c
            centroids = centroids.copy()
            centroids[c] = x[far]
            taken.add(far)

        inertia = float(np.sum((x - centroids[labels]) ** 2))
        assert inertia <= prev_inertia + 1e-9, "inertia increased"
        prev_inertia = inertia

        new_centroids = np.empty_like(centroids)
        for c in range(k):
            new_centroids[c] = x[labels == c].mean(axis=0)
        shift = np.max(np.sqrt(np.sum((new_centroids - centroids) ** 2,
                                      axis=1)))
        centroids = new_centroids
        if shift < cfg.tolerance:
            break
    # Centroids are exact member means for the returned labels; inertia
    # is recomputed against them so the pair is self-consistent.
    inertia = float(np.sum((x - centroids[labels]) ** 2))
    return ClusteringResult(labels, centroids, inertia, iterations)


def kmeans_fit(m: FeatureMatrix, cfg: KMeansConfig) -> ClusteringResult:
    x = m.values
    if x.shape[0] == 0:
        raise EmptyMatrix("cannot cluster an empty matrix")
    if cfg.k > x.shape[0]:
        raise KTooLarge(f"k={cfg.k} exceeds n_samples={x.shape[0]}")
    if cfg.k < 1:
        raise ValueError("k must be >= 1")
    best: ClusteringResult | None = None
    for restart in range(cfg.restarts):
        rng = np.random.default_rng(cfg.seed + restart)
        result = _lloyd(x, cfg.k, cfg, rng)
        if best is None or result.inertia < best.inertia:
            best = result
    return best


def silhouette_mean(m: FeatureMatrix, labels) -> float:
    labels = np.asarray(labels)
    x = m.values
    distinct = np.unique(labels)
    if len(distinct) < 2:
        raise SingleCluster("silhouette needs at least 2 clusters")
    d2 = _sq_distances(x, x)
    dist = np.sqrt(np.maximum(d2, 0.0))
    scores = np.zeros(len(labels))
    for i in range(len(labels)):
        own = labels[i]
        same = labels == own
        n_same = int(same.sum())
        if n_same == 1:
            continue  # singleton convention: s = 0
        a = dist[i, same].sum() / (n_same - 1)
        b = min(dist[i, labels == other].mean()
                for other in distinct if other != own)
        scores[i] = (b - a) / max(a, b)
    return float(scores.mean())


def sweep_k(m: FeatureMatrix, k_min: int, k_max: int,
            cfg: KMeansConfig) -> SilhouetteReport:
    n = m.values.shape[0]
    if not 2 <= k_min <= k_max <= n - 1:
        raise ValueError(f"need 2 <= k_min <= k_max <= {n - 1}")
    per_k = {}
    for k in range(k_min, k_max + 1):
        result = kmeans_fit(m, cfg.with_k(k))
        per_k[k] = silhouette_mean(m, result.labels)
    best_k = max(sorted(per_k), key=lambda k: per_k[k])
    # max() keeps the first of equal values, which is the smallest K
    return SilhouetteReport(per_k, best_k)
