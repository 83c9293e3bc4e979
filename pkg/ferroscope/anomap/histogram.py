"""
Histogram of raw decision values split at zero.

Bins are [k * w, (k + 1) * w). A bin whose upper edge is <= 0 is on the
anomalous side (drawn brown), every other bin on the normal side (blue).
"""

import io
import math
import os
from dataclasses import dataclass
from typing import List, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ferroscope.utils.errors import InvalidArgumentError  # noqa: E402
from ferroscope.utils.fileio import atomic_write_bytes, write_csv  # noqa: E402

ANOMALOUS = "anomalous"
NORMAL = "normal"
SIDE_COLORS = {ANOMALOUS: "#8B4513", NORMAL: "#1F4E9E"}


@dataclass(frozen=True)
class HistogramBin:
    low: float
    high: float
    count: int
    side: str


def histogram(values: Sequence[float], bin_width: float) -> List[HistogramBin]:
    """Contiguous bins from the lowest to the highest occupied one."""
    if bin_width <= 0 or not math.isfinite(bin_width):
        raise InvalidArgumentError(f"bin_width must be positive, got {bin_width}")
    v = np.asarray(values, dtype=np.float64).ravel()
    if not np.all(np.isfinite(v)):
        raise InvalidArgumentError("Histogram values must be finite")
    if v.size == 0:
        return []
    index = np.floor(v / bin_width).astype(np.int64)
    first, last = int(index.min()), int(index.max())
    counts = np.bincount(index - first, minlength=last - first + 1)
    bins = []
    for offset, count in enumerate(counts):
        k = first + offset
        low, high = k * bin_width, (k + 1) * bin_width
        bins.append(HistogramBin(low, high, int(count), ANOMALOUS if high <= 0 else NORMAL))
    return bins


def side_totals(bins: Sequence[HistogramBin]) -> dict:
    totals = {ANOMALOUS: 0, NORMAL: 0}
    for b in bins:
        totals[b.side] += b.count
    return totals


def write_histogram_csv(path: Union[str, os.PathLike], bins: Sequence[HistogramBin]) -> None:
    write_csv(path, ["bin_low", "bin_high", "count", "side"], ([f"{b.low:.6g}", f"{b.high:.6g}", b.count, b.side] for b in bins))


def plot_histogram(path: Union[str, os.PathLike], bins: Sequence[HistogramBin], title: str = "Anomaly score histogram") -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5), dpi=100)
    try:
        if bins:
            ax.bar(
                [b.low for b in bins],
                [b.count for b in bins],
                width=[b.high - b.low for b in bins],
                align="edge",
                color=[SIDE_COLORS[b.side] for b in bins],
                edgecolor="none",
            )
        ax.axvline(0.0, color="black", linewidth=0.8)
        ax.set_xlabel("decision value v")
        ax.set_ylabel("tiles")
        ax.set_title(title)
        fig.tight_layout()
        buffer = io.BytesIO()
        fig.savefig(buffer, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    atomic_write_bytes(path, buffer.getvalue())
