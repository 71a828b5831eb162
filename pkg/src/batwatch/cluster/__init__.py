"""Anomaly post-analysis: DTW distance, DTW k-means and PCA reporting."""

from .dtw import DtwConfig, dtw, dtw_backend_name
from .kmeans import ClusterModel, describe_clusters, kmeans_dtw
from .pca import PcaProjection, pca_fit, pca_inverse_transform, pca_transform

__all__ = [
    "DtwConfig",
    "dtw",
    "dtw_backend_name",
    "ClusterModel",
    "describe_clusters",
    "kmeans_dtw",
    "PcaProjection",
    "pca_fit",
    "pca_inverse_transform",
    "pca_transform",
]
