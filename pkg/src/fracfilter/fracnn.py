"""
FraCNN: a predefined convolutional network that approximates FDIF.

Each layer pair replaces the per-pixel direction estimate with a bank of
line filters whose maximum response is kept, and the per-pixel exponent
D / D_F with a fixed alpha:

    conv:       f_F(x) = max_k (F_k * f)(x)
    nonlinear:  (M * f_F)(x) max(f_F(x), 0)^alpha / (M * max(f_F, 0)^alpha)(x)

where M is a mean filter. There is no pooling, every layer keeps the input
resolution
"""
from functools import partial

import numpy as np

from fracfilter.commons import as_image, check_odd, parallel
from fracfilter.commons.filters import box_mean, correlate_sparse
from fracfilter.config import FracnnConfig
from fracfilter.direction import DEFAULT_SIDE, build_filter_bank
from fracfilter.exceptions import InvalidArgumentError

_EPS_DENOMINATOR = 1e-12


def bank_responses(img, bank, threads=None):
    """Responses of every kernel in the bank, shape (N, height, width)
    """
    img = as_image(img)
    responses = parallel.map_threads(partial(correlate_sparse, img),
                                     bank.kernels,
                                     threads=threads)
    return np.stack(responses)


def conv_max_layer(img, bank=None, threads=None, return_index=False):
    """
    Maximum response over a filter bank at every pixel

    Parameters
    ----------
    img : array-like
        2D grid of intensities

    bank : FilterBank, optional
        Defaults to 30 kernels of side 9

    threads : int, optional
        Worker threads for the bank convolutions (see FDIF_THREADS)

    return_index : bool, default=False
        Also return the index of the winning kernel (lowest index on ties)
    """
    if bank is None:
        bank = build_filter_bank()

    responses = bank_responses(img, bank, threads=threads)
    out = responses.max(axis=0)

    if return_index:
        return out, responses.argmax(axis=0)

    return out


def nonlinear_layer(f_F, alpha=2.0, mean_side=DEFAULT_SIDE,
                    rectify_numerator=False):
    """
    Rectified power normalization, the fixed-alpha counterpart of the FDIF
    transform

    Parameters
    ----------
    f_F : array-like
        Output of conv_max_layer

    alpha : float, default=2.0
        Exponent, must be positive

    mean_side : int, default=9
        Odd side of the mean filter M

    rectify_numerator : bool, default=False
        Average max(f_F, 0) instead of f_F in the numerator
    """
    f = as_image(f_F)

    if not alpha > 0:
        raise InvalidArgumentError(f'Expected alpha to be positive, '
                                   f'got {alpha!r}')

    mean_side = check_odd(mean_side, 'mean_side')

    rectified = np.maximum(f, 0.0)
    powered = np.power(rectified, alpha)
    numerator = box_mean(rectified if rectify_numerator else f,
                         mean_side) * powered
    denominator = box_mean(powered, mean_side)

    out = np.zeros_like(f)
    valid = denominator >= _EPS_DENOMINATOR
    out[valid] = numerator[valid] / denominator[valid]
    return out


def fracnn_layers(img, cfg=None, threads=None):
    """
    Runs the network, yielding the (unclipped) output of every layer pair
    """
    cfg = cfg or FracnnConfig()
    bank = cfg.bank
    current = as_image(img)

    for _ in range(cfg.depth):
        current = nonlinear_layer(conv_max_layer(current,
                                                 bank,
                                                 threads=threads),
                                  alpha=cfg.alpha,
                                  mean_side=cfg.box_side,
                                  rectify_numerator=cfg.rectify_numerator)
        yield current


def fracnn_forward(img, cfg=None, threads=None):
    """
    Full FraCNN forward pass, output clipped to [0, 1]

    Parameters
    ----------
    img : array-like
        2D grid of intensities in [0, 1]

    cfg : FracnnConfig, optional
        Network settings, defaults to FracnnConfig()

    threads : int, optional
        Worker threads for the bank convolutions
    """
    current = as_image(img)

    for current in fracnn_layers(current, cfg, threads=threads):
        pass

    return np.clip(current, 0.0, 1.0)
