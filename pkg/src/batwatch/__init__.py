"""batwatch: unsupervised anomaly detection for battery-temperature
telemetry — autoencoder reconstruction error with Gaussian-calibrated
thresholds and DTW clustering of the flagged windows."""

from .calibrate import (
    AnomalyRecord,
    ErrorCalibration,
    calibrate,
    detect,
    error_distribution,
    fit_gaussian,
    select_threshold,
    threshold_sweep,
)
from .cluster import (
    ClusterModel,
    DtwConfig,
    PcaProjection,
    describe_clusters,
    dtw,
    dtw_backend_name,
    kmeans_dtw,
    pca_fit,
    pca_transform,
)
from .config import PipelineConfig
from .gru import (
    GruAutoencoder,
    GruAutoencoderConfig,
    GruCellParams,
    build_gru,
    decode,
    encode,
    gru_cell_step,
    sweep_hidden_sizes,
    train_gru,
)
from .ingest import (
    DatasetSplit,
    NormStats,
    RechargeSegment,
    SampleRecord,
    Window,
    clean,
    fit_normalizer,
    normalize_windows,
    read_samples,
    segment_recharges,
    split_by_time,
    windowize,
    write_samples,
)
from .mlp import MlpAutoencoder, MlpAutoencoderConfig, build_mlp, train
from .model_io import load_model, model_fingerprint, save_model
from .simgen import LabeledStream, ScenarioConfig, generate, ground_truth_windows

__version__ = "0.1.0"
