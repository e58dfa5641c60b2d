"""
Fractal dimension invariant filtering (FDIF).

Each iteration filters the image along its local orientation and then
applies a power-law correction that restores the local fractal dimension
the filter changed, while preserving the energy of the filtered result in
a neighborhood:

    f_T(x) = ||f_F(B(x))|| / ||f_F(B(x))^alpha|| * f_F(x)^alpha,
    alpha = D(x) / D_F(x)
"""
import numpy as np
from scipy import optimize

from fracfilter.commons import as_image, check_same_shape, check_odd
from fracfilter.commons.filters import window_power_sum
from fracfilter.config import ALPHA_CLAMP, FdifConfig
from fracfilter.direction import (DEFAULT_SIDE, adaptive_filter,
                                  direction_field)
from fracfilter.exceptions import InvalidArgumentError
from fracfilter.fractal import FractalMap, estimate_fractal

_EPS_NORM = 1e-12


def _dimension(value, name):
    if isinstance(value, FractalMap):
        return value.dimension
    return as_image(value, name)


def power_normalize(filtered, alpha, neighborhood):
    """
    Rectifies ``filtered``, raises it to ``alpha`` (scalar or per pixel) and
    rescales every pixel so the L2 norm over its neighborhood matches the
    norm before the power. Where the powered window is all dark the ratio
    is 1
    """
    values = np.maximum(filtered, 0.0)
    alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64),
                            values.shape)

    energy = window_power_sum(values, np.full(values.shape, 2.0),
                              neighborhood)
    powered = window_power_sum(values, 2 * alpha, neighborhood)

    ratio = np.ones_like(values)
    valid = np.sqrt(powered) >= _EPS_NORM
    ratio[valid] = np.sqrt(energy[valid] / powered[valid])

    return ratio * np.power(values, alpha)


def fd_preserving_transform(filtered,
                            d_orig,
                            d_filt,
                            neighborhood=DEFAULT_SIDE,
                            alpha_clamp=ALPHA_CLAMP):
    """
    Nonlinear transform that maps the dimension of the filtered image back
    to the dimension before filtering

    Parameters
    ----------
    filtered : array-like
        Output of the anisotropic filter, f_F

    d_orig : FractalMap or array-like
        Dimension D(x) of the image before filtering

    d_filt : FractalMap or array-like
        Dimension D_F(x) of the filtered image

    neighborhood : int, default=9
        Odd side of the window B(x) whose energy is preserved

    alpha_clamp : tuple of float, default=(0.25, 4.0)
        Bounds applied to alpha = D / D_F
    """
    filtered = as_image(filtered, 'filtered image')
    d_orig = _dimension(d_orig, 'd_orig')
    d_filt = _dimension(d_filt, 'd_filt')
    check_same_shape(filtered, d_orig, d_filt,
                     what='filtered image and dimension maps')
    neighborhood = check_odd(neighborhood, 'neighborhood')

    with np.errstate(divide='ignore', invalid='ignore'):
        alpha = d_orig / d_filt

    alpha = np.where(np.isfinite(alpha), alpha, 1.0)
    alpha = np.clip(alpha, *alpha_clamp)

    return power_normalize(filtered, alpha, neighborhood)


def fdif_steps(img, cfg=None):
    """
    Runs the FDIF iterations, yielding the (unclipped) image after each one
    """
    cfg = cfg or FdifConfig()
    current = as_image(img)

    for _ in range(cfg.iterations):
        field = direction_field(current, window=cfg.window, sigma=cfg.sigma)
        filtered = adaptive_filter(current, field, side=cfg.kernel_side)

        if cfg.alpha is None:
            d_orig = estimate_fractal(current, R=cfg.scales)
            d_filt = estimate_fractal(filtered, R=cfg.scales)
            current = fd_preserving_transform(filtered,
                                              d_orig,
                                              d_filt,
                                              neighborhood=cfg.norm_side,
                                              alpha_clamp=cfg.alpha_clamp)
        else:
            alpha = float(np.clip(cfg.alpha, *cfg.alpha_clamp))
            current = power_normalize(filtered, alpha, cfg.norm_side)

        yield current


def fdif_iterate(img, cfg=None):
    """
    Iterative FDIF, output clipped to [0, 1]

    Parameters
    ----------
    img : array-like
        2D grid of intensities in [0, 1]

    cfg : FdifConfig, optional
        Pipeline settings, defaults to FdifConfig()
    """
    current = as_image(img)

    for current in fdif_steps(current, cfg):
        pass

    return np.clip(current, 0.0, 1.0)


def match_mean(img, target):
    """
    Scales ``img`` by a global factor s so that mean(clip(s img, 0, 1))
    equals ``target``

    Returns
    -------
    tuple
        (rescaled image, saturated). saturated is True when the target
        cannot be reached because every positive pixel is already clipped
        at 1, the image is then returned at that largest scale
    """
    img = np.maximum(as_image(img), 0.0)

    if not 0 <= target <= 1:
        raise InvalidArgumentError('Expected the target mean to be in '
                                   f'[0, 1], got {target!r}')

    positive = img[img > 0]

    if target == 0:
        return np.zeros_like(img), False

    # nothing to scale, a flat image at the target mean
    if not len(positive):
        return np.full(img.shape, float(target)), False

    def gap(scale):
        return np.clip(scale * img, 0.0, 1.0).mean() - target

    top = 1.0 / max(positive.min(), _EPS_NORM)

    if gap(top) < 0:
        return np.clip(top * img, 0.0, 1.0), True

    scale = optimize.brentq(gap, 0.0, top, xtol=1e-12)
    return np.clip(scale * img, 0.0, 1.0), False


def stylize(img, cfg=None):
    """
    Enhances strokes and suppresses texture with FDIF, then rescales the
    result so its mean intensity equals the mean of the input

    Returns
    -------
    tuple
        (stylized image, saturated), see match_mean
    """
    img = as_image(img)
    return match_mean(fdif_iterate(img, cfg), float(img.mean()))
