"""Metrics, localizers and benchmark protocols."""

from fingan.evaluation.benchmark import BenchmarkSpec, DatasetResolver, EvalReport, run_benchmark, svg_bar_chart
from fingan.evaluation.localizers import (
    LocalizerConfig,
    LocalizerModel,
    build_knn_localizer,
    knn_localize,
    localization_rmse,
    rmse,
    train_cnn_localizer,
    train_dnn_localizer,
    train_localizer,
)
from fingan.evaluation.metrics import RpStats, frechet_distance, frechet_gaussian, per_rp_stats, rss_error, spd_sqrt
