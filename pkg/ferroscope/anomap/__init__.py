"""
Anomalous feature maps: AF values, jet heatmaps, histograms and montages.
"""

from .colormap import JET_ANCHORS, JET_POSITIONS, jet
from .feature_map import AnomalousFeatureMap, MapParams, anomalous_feature, anomalous_features, background_flags, build_map
from .histogram import ANOMALOUS, NORMAL, HistogramBin, histogram, plot_histogram, side_totals, write_histogram_csv
from .montage import MontageOrder, grid_shape, montage, pair_montage, rank_tiles
from .render import heat_field, legend_strip, render

__all__ = [
    "ANOMALOUS",
    "AnomalousFeatureMap",
    "HistogramBin",
    "JET_ANCHORS",
    "JET_POSITIONS",
    "MapParams",
    "MontageOrder",
    "NORMAL",
    "anomalous_feature",
    "anomalous_features",
    "background_flags",
    "build_map",
    "grid_shape",
    "heat_field",
    "histogram",
    "jet",
    "legend_strip",
    "montage",
    "pair_montage",
    "plot_histogram",
    "rank_tiles",
    "render",
    "side_totals",
    "write_histogram_csv",
]
