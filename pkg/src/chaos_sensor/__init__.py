"""Chaos sensor toolkit.

Simulate Hindmarsh-Rose spike intervals, measure their fuzzy entropy, and
train a small perceptron to estimate that entropy from a short window.
"""
from .datasets import (
    DatasetStats,
    LabeledDataset,
    Window,
    WindowingConfig,
    build_base,
    compute_stats,
    load_dataset,
    merge,
    normalize,
    save_dataset,
    window_series,
)
from .evaluation import (
    CHAOTIC_R,
    REGULAR_R,
    MetricsReport,
    SensorCharacteristics,
    averaging_over_n,
    cross_base,
    kfold_cv,
    length_study,
    mape,
    r2,
    rmse,
    sensor_characteristics,
    sfu_predictor,
    spe_predictor,
)
from .fuzzy import FuzzyEnParams, fuzzy_entropy
from .hr import (
    HRParameters,
    IntegrationError,
    bifurcation_scan,
    detect_spikes,
    integrate,
    intervals,
    spike_intervals,
)
from .perceptron import (
    MlpModel,
    TrainConfig,
    forward,
    init_model,
    load_model,
    predict,
    save_model,
    simplify_equal_weights,
    train,
)
from .recordings import WaveformRecording, build_experimental_base, extract_peaks, lowpass

__version__ = "0.1.0"
