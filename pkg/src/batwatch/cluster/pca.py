"""PCA via eigendecomposition of the sample covariance.

Component signs are fixed deterministically (largest-magnitude entry
positive) so projections are stable across runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ShapeError


@dataclass
class PcaProjection:
    components: np.ndarray  # (d_out, d_in), rows orthonormal
    explained_variance_ratio: np.ndarray
    mean: np.ndarray

    @property
    def d_in(self) -> int:
        return self.components.shape[1]

    @property
    def d_out(self) -> int:
        return self.components.shape[0]


def pca_fit(windows, n_components: int) -> PcaProjection:
    """Top principal components of the windows, descending variance."""
    data = np.stack([np.asarray(getattr(w, "values", w), dtype=np.float64) for w in windows]) if len(windows) else np.empty((0, 0))
    if data.shape[0] < 2:
        raise ConfigError(f"PCA needs at least 2 windows, got {data.shape[0]}")
    n, d = data.shape
    if not 1 <= n_components <= min(n, d):
        raise ConfigError(
            f"n_components must be in [1, {min(n, d)}] for {n} windows of length {d}"
        )
    mean = data.mean(axis=0)
    centered = data - mean
    cov = centered.T @ centered / (n - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(cov)
    order = np.argsort(eigenvalues)[::-1][:n_components]
    components = eigenvectors[:, order].T.copy()
    for row in components:
        peak = np.argmax(np.abs(row))
        if row[peak] < 0:
            row *= -1.0
    total = float(np.trace(cov))
    top = np.maximum(eigenvalues[order], 0.0)
    ratios = top / total if total > 0 else np.zeros_like(top)
    return PcaProjection(components=components, explained_variance_ratio=ratios, mean=mean)


def pca_transform(projection: PcaProjection, window):
    """Project one window (or a batch of rows) onto the components."""
    arr = np.asarray(getattr(window, "values", window), dtype=np.float64)
    single = arr.ndim == 1
    batch = arr[np.newaxis, :] if single else arr
    if batch.shape[1] != projection.d_in:
        raise ShapeError(f"window length {batch.shape[1]}, expected {projection.d_in}")
    coords = (batch - projection.mean) @ projection.components.T
    return coords[0] if single else coords


def pca_inverse_transform(projection: PcaProjection, coords):
    """Map coordinates back to window space (exact when d_out = d_in)."""
    arr = np.asarray(coords, dtype=np.float64)
    single = arr.ndim == 1
    batch = arr[np.newaxis, :] if single else arr
    if batch.shape[1] != projection.d_out:
        raise ShapeError(f"coords length {batch.shape[1]}, expected {projection.d_out}")
    out = batch @ projection.components + projection.mean
    return out[0] if single else out
