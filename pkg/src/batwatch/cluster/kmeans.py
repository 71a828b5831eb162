"""K-means over anomalous windows with DTW assignment.

Assignment uses DTW to the centroids; the update step is the plain
pointwise mean of the assigned windows, so centroids stay in window
space.  Convergence is by assignment stability (inertia is not
guaranteed monotone under a DTW assignment with mean updates), capped
at max_iter with a final assignment pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .dtw import DtwConfig, dtw


@dataclass
class ClusterModel:
    k: int
    centroids: list
    assignments: np.ndarray
    inertia: float
    iterations: int
    seed: int


def _values_matrix(windows) -> np.ndarray:
    rows = [np.asarray(getattr(w, "values", w), dtype=np.float64) for w in windows]
    lengths = {r.shape for r in rows}
    if len(lengths) != 1 or rows[0].ndim != 1:
        raise ConfigError("clustering needs equal-length 1-D windows")
    return np.stack(rows)


def _distances_to(data, centroid, config):
    return np.array([dtw(row, centroid, config) for row in data])


def _plus_plus_init(data, k, rng, config):
    n = data.shape[0]
    first = int(rng.integers(n))
    centroids = [data[first].copy()]
    nearest = _distances_to(data, centroids[0], config)
    for _ in range(1, k):
        total = nearest.sum()
        if total > 0:
            choice = int(rng.choice(n, p=nearest / total))
        else:  # all points coincide with a centroid already
            choice = int(rng.integers(n))
        centroids.append(data[choice].copy())
        nearest = np.minimum(nearest, _distances_to(data, centroids[-1], config))
    return centroids


def kmeans_dtw(
    windows,
    k: int = 3,
    seed: int = 0,
    max_iter: int = 100,
    config: DtwConfig | None = None,
) -> ClusterModel:
    """Seeded k-means++ under DTW; deterministic for a fixed seed."""
    data = _values_matrix(windows)
    n = data.shape[0]
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    if n < k:
        raise ConfigError(f"need at least k={k} windows, got {n}")
    rng = np.random.default_rng(seed)
    centroids = _plus_plus_init(data, k, rng, config)

    labels = None
    iterations = 0
    dist = None
    for _ in range(max_iter):
        iterations += 1
        dist = np.stack([_distances_to(data, c, config) for c in centroids])
        new_labels = dist.argmin(axis=0)
        new_labels = _repair_empty(dist, new_labels, k)
        if labels is not None and np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
        for c in range(k):
            centroids[c] = data[labels == c].mean(axis=0)
    else:
        # max_iter hit after an update: restore labels = argmin(centroids)
        dist = np.stack([_distances_to(data, c, config) for c in centroids])
        labels = _repair_empty(dist, dist.argmin(axis=0), k)

    inertia = float(dist[labels, np.arange(n)].sum())
    return ClusterModel(
        k=k,
        centroids=[c.copy() for c in centroids],
        assignments=labels,
        inertia=inertia,
        iterations=iterations,
        seed=seed,
    )


def _repair_empty(dist, labels, k):
    """Give each empty cluster the point farthest from its own centroid."""
    labels = labels.copy()
    for c in range(k):
        if not np.any(labels == c):
            own = dist[labels, np.arange(labels.size)]
            # never seize a cluster's only member
            counts = np.bincount(labels, minlength=k)
            candidates = np.where(counts[labels] > 1)[0]
            worst = candidates[np.argmax(own[candidates])]
            labels[worst] = c
    return labels


def describe_clusters(model: ClusterModel | None, raw_windows) -> dict:
    """Per-cluster summary over raw (denormalized) windows: size, centroid
    preview, mean end-start temperature delta, mean largest single-step
    jump and mean SOC at window start."""
    if not raw_windows:
        return {"k": model.k if model else 0, "clusters": []}
    clusters = []
    for c in range(model.k):
        members = [w for w, lab in zip(raw_windows, model.assignments) if lab == c]
        if not members:
            clusters.append({"label": c, "size": 0})
            continue
        values = [np.asarray(getattr(w, "values", w), dtype=np.float64) for w in members]
        deltas = [float(v[-1] - v[0]) for v in values]
        steps = [float(np.max(np.abs(np.diff(v)))) for v in values]
        socs = [
            float(getattr(w, "soc_start", float("nan")))
            for w in members
        ]
        socs = [s for s in socs if not np.isnan(s)]
        centroid = model.centroids[c]
        clusters.append(
            {
                "label": c,
                "size": len(members),
                "centroid_preview": {
                    "first": float(centroid[0]),
                    "min": float(centroid.min()),
                    "max": float(centroid.max()),
                    "last": float(centroid[-1]),
                },
                "mean_temperature_delta_c": float(np.mean(deltas)),
                "mean_max_step_c": float(np.mean(steps)),
                "mean_soc_start_pct": float(np.mean(socs)) if socs else None,
            }
        )
    return {"k": model.k, "clusters": clusters}
