"""
Mirror-padded neighborhood operations shared by the fractal estimator and
both filtering pipelines. Padding is always symmetric (d c b a | a b c d),
which is numpy's 'symmetric' mode and scipy.ndimage's 'reflect' mode
"""
import numpy as np
from scipy import ndimage

MODE = 'reflect'


def pad(img, half):
    return np.pad(img, half, mode='symmetric')


def shifted(padded, half, drow, dcol, shape):
    """View of ``padded`` aligned so that element [i, j] is the
    (unpadded) image at [i + drow, j + dcol]
    """
    h, w = shape
    r0 = half + drow
    c0 = half + dcol
    return padded[r0:r0 + h, c0:c0 + w]


def correlate_sparse(img, kernel):
    """Correlates ``img`` with ``kernel`` (odd square) by accumulating one
    shifted copy per nonzero weight. Line kernels have side nonzeros out of
    side**2 cells, so this is much cheaper than a dense correlation
    """
    half = kernel.shape[0] // 2
    padded = pad(img, half)
    out = np.zeros_like(img)

    for r, c in zip(*np.nonzero(kernel)):
        out += kernel[r, c] * shifted(padded, half, r - half, c - half,
                                      img.shape)

    return out


def window_power_sum(values, exponent, side):
    """
    Sums values[y] ** exponent[x] over the side x side window centered at
    every x. The exponent belongs to the window center, so it cannot be
    computed with a plain box filter when it varies per pixel
    """
    half = side // 2
    padded = pad(values, half)
    exponent = np.broadcast_to(exponent, values.shape)
    out = np.zeros_like(values)

    for drow in range(-half, half + 1):
        for dcol in range(-half, half + 1):
            out += np.power(shifted(padded, half, drow, dcol, values.shape),
                            exponent)

    return out


def box_mean(values, side):
    """Unit-sum side x side mean filter
    """
    return ndimage.uniform_filter(values, size=side, mode=MODE)
