"""
Per-pixel local fractal dimension.

An image f is treated as a measurement: mu(B_r(x)) is the G_r-smoothed
intensity summed over the Euclidean disc of radius r around x. Fitting the
power law

    log mu(B_r(x)) = D(x) log 2r + L(x)

over r = 1..R gives the local dimension D(x) (slope) and the log fractal
length L(x) (intercept). Smooth patches have D close to 2, curves close to 1
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage

from fracfilter.commons import as_image
from fracfilter.commons.filters import MODE
from fracfilter.exceptions import InvalidArgumentError

EPS_MEASURE = 1e-8
DEFAULT_SCALES = 5

# samples per pixel side when computing the area of a pixel inside a disc
_SUPERSAMPLING = 32


@dataclass(frozen=True)
class MeasurementStack:
    """mu(B_r(x)) for every radius in ``radii``, layers[i] holds radius
    radii[i]
    """
    radii: tuple
    layers: np.ndarray


@dataclass(frozen=True)
class FractalMap:
    """Local fractal dimension D(x) and log fractal length L(x)
    """
    dimension: np.ndarray
    log_length: np.ndarray

    @property
    def shape(self):
        return self.dimension.shape


def _check_radius(r):
    if isinstance(r, bool) or not float(r).is_integer() or r < 1:
        raise InvalidArgumentError('Expected the scale r to be a positive '
                                   f'integer, got {r!r}')
    return int(r)


def _resolve_radii(R, radii):
    if radii is None:
        if isinstance(R, bool) or not float(R).is_integer() or R < 2:
            raise InvalidArgumentError(
                'Expected the number of scales R to be an integer >= 2 '
                f'(the regression needs at least two points), got {R!r}')
        return tuple(range(1, int(R) + 1))

    radii = tuple(_check_radius(r) for r in radii)

    if len(set(radii)) < 2:
        raise InvalidArgumentError('Expected at least two distinct radii, '
                                   f'got {radii!r}')

    return radii


@lru_cache(maxsize=None)
def _profile(r):
    half = math.ceil(3 * r)
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-x**2 / r**2) / (math.sqrt(2 * math.pi) * r)
    g = g / g.sum()
    g.flags.writeable = False
    return g


def gaussian_kernel(r):
    """
    Separable Gaussian G_r(x) = exp(-x^2 / r^2) / (sqrt(2 pi) r) on a
    (2 ceil(3r) + 1)^2 support, renormalized to unit sum

    Parameters
    ----------
    r : int
        Positive integer scale
    """
    r = _check_radius(r)
    p = _profile(r)
    kernel = np.outer(p, p)
    return kernel / kernel.sum()


@lru_cache(maxsize=None)
def disc_weights(r):
    """
    Area of every pixel of a (2r + 1)^2 grid that falls inside the circle of
    radius r centered at the middle pixel. Sums to ~pi r^2 and is exactly
    symmetric under the eight grid rotations/reflections
    """
    r = _check_radius(r)
    n = _SUPERSAMPLING
    sub = (np.arange(n) + 0.5) / n - 0.5
    centers = np.arange(-r, r + 1, dtype=np.float64)
    t = (centers[:, None] + sub[None, :]).ravel()
    inside = (t[:, None]**2 + t[None, :]**2) <= r**2
    side = 2 * r + 1
    weights = inside.reshape(side, n, side, n).sum(axis=(1, 3)) / n**2
    weights.flags.writeable = False
    return weights


def multiscale_measurements(img, R=DEFAULT_SCALES, radii=None):
    """
    Computes mu(B_r(x)) for every pixel and radius

    Parameters
    ----------
    img : array-like
        2D grid of intensities

    R : int, default=5
        Number of scales, uses radii 1..R

    radii : sequence of int, optional
        Explicit radii, overrides ``R``

    Returns
    -------
    MeasurementStack
    """
    img = as_image(img)
    radii = _resolve_radii(R, radii)
    layers = np.empty((len(radii), ) + img.shape)

    for i, r in enumerate(radii):
        p = _profile(r)
        smoothed = ndimage.correlate1d(img, p, axis=0, mode=MODE)
        smoothed = ndimage.correlate1d(smoothed, p, axis=1, mode=MODE)
        layers[i] = ndimage.correlate(smoothed, disc_weights(r), mode=MODE)

    np.maximum(layers, EPS_MEASURE, out=layers)
    return MeasurementStack(radii=radii, layers=layers)


def regress_dimension(stack):
    """
    Closed-form least squares fit of log mu against log 2r at every pixel
    """
    x = np.log(2 * np.asarray(stack.radii, dtype=np.float64))
    y = np.log(stack.layers)
    xc = x - x.mean()
    slope = np.tensordot(xc, y, axes=(0, 0)) / np.dot(xc, xc)
    intercept = y.mean(axis=0) - slope * x.mean()
    return FractalMap(dimension=slope, log_length=intercept)


def estimate_fractal(img, R=DEFAULT_SCALES, radii=None):
    """
    Local fractal dimension and length of an image

    Parameters
    ----------
    img : array-like
        2D grid of intensities

    R : int, default=5
        Number of scales

    radii : sequence of int, optional
        Explicit radii, overrides ``R``

    Returns
    -------
    FractalMap
    """
    return regress_dimension(multiscale_measurements(img, R=R, radii=radii))
