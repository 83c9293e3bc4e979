"""
Jet colormap with five fixed anchors, linearly interpolated per channel and
rounded half-up to 8 bits:

    t     R    G    B
    0.00  0    0    255
    0.25  0    255  255
    0.50  0    255  0
    0.75  255  255  0
    1.00  255  0    0
"""

import numpy as np

JET_POSITIONS = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
JET_ANCHORS = np.array(
    [
        [0, 0, 255],
        [0, 255, 255],
        [0, 255, 0],
        [255, 255, 0],
        [255, 0, 0],
    ],
    dtype=np.float64,
)


def jet(values: np.ndarray) -> np.ndarray:
    """RGB uint8 colors with shape values.shape + (3,); inputs are clipped to [0, 1]."""
    t = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    channels = [np.interp(t, JET_POSITIONS, JET_ANCHORS[:, c]) for c in range(3)]
    return np.floor(np.stack(channels, axis=-1) + 0.5).astype(np.uint8)
