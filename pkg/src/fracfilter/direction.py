"""
Local orientation from the structure tensor and the anisotropic line
filters that integrate an image along it.

Angles follow the usual mathematical convention on the image plane: theta is
measured from the horizontal axis, counter-clockwise with the vertical axis
pointing up (i.e., towards row 0). theta = 0 is a horizontal structure,
theta = pi/2 a vertical one. Orientations live in [0, pi)
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import ndimage

from fracfilter.commons import as_image, check_same_shape, check_odd
from fracfilter.commons.filters import MODE, pad
from fracfilter.exceptions import InvalidArgumentError

DEFAULT_WINDOW = 9
DEFAULT_SIGMA = 1.0
DEFAULT_SIDE = 9
DEFAULT_BANK_SIZE = 30

_DEGENERATE_TRACE = 1e-12
_TIE_TOLERANCE = 1e-12

_CENTRAL_DIFFERENCE = np.array([-0.5, 0.0, 0.5])


@dataclass(frozen=True)
class DirectionField:
    """Per-pixel structure orientation, in radians within [0, pi)
    """
    theta: np.ndarray

    @property
    def shape(self):
        return self.theta.shape


@dataclass(frozen=True)
class FilterBank:
    """N line kernels at angles k pi / N, kernels[k] has angle angles[k]
    """
    kernels: np.ndarray
    angles: np.ndarray

    def __len__(self):
        return len(self.angles)

    @property
    def side(self):
        return self.kernels.shape[-1]

    def snap(self, theta):
        """Returns the bank angle closest to each orientation in ``theta``
        """
        step = np.pi / len(self)
        index = np.mod(np.rint(np.asarray(theta) / step), len(self))
        return self.angles[index.astype(np.intp)]


def _structure_tensor(img, window, sigma):
    smoothed = ndimage.gaussian_filter(img, sigma, mode=MODE)
    grad_h = ndimage.correlate1d(smoothed,
                                 _CENTRAL_DIFFERENCE,
                                 axis=1,
                                 mode=MODE)
    # rows grow downwards, the vertical axis points up
    grad_v = -ndimage.correlate1d(
        smoothed, _CENTRAL_DIFFERENCE, axis=0, mode=MODE)

    area = window * window

    def window_sum(values):
        return ndimage.uniform_filter(values, size=window, mode=MODE) * area

    return (window_sum(grad_h * grad_h), window_sum(grad_v * grad_v),
            window_sum(grad_h * grad_v))


def direction_field(img, window=DEFAULT_WINDOW, sigma=DEFAULT_SIGMA):
    """
    Dominant structure orientation at every pixel.

    The gradients of the sigma-smoothed image over the window x window
    neighborhood form G, the leading eigenvector of G^T G points across the
    structure. The returned angle is the orientation along the structure
    (perpendicular to the leading eigenvector), which is the line a
    directional filter has to follow to integrate a curve

    Parameters
    ----------
    img : array-like
        2D grid of intensities

    window : int, default=9
        Odd neighborhood side (>= 3)

    sigma : float, default=1.0
        Gaussian pre-smoothing before differentiation

    Returns
    -------
    DirectionField
    """
    img = as_image(img)
    window = check_odd(window, 'window', minimum=3)

    if not sigma > 0:
        raise InvalidArgumentError('Expected sigma to be positive, '
                                   f'got {sigma!r}')

    jhh, jvv, jhv = _structure_tensor(img, window, sigma)

    trace = jhh + jvv
    # difference between the two eigenvalues
    spread = np.hypot(jhh - jvv, 2 * jhv)
    across = 0.5 * np.arctan2(2 * jhv, jhh - jvv)
    theta = np.mod(across + np.pi / 2, np.pi)

    flat = (trace < _DEGENERATE_TRACE) | (spread <= _TIE_TOLERANCE * trace)
    theta[flat | (theta >= np.pi)] = 0.0

    return DirectionField(theta=theta)


def _line_offsets(theta, side):
    """
    Offsets (drow, dcol) of the side cells on the digital line through the
    kernel center with orientation theta. Broadcasts over theta, returning
    arrays of shape theta.shape + (side, )
    """
    theta = np.mod(np.asarray(theta, dtype=np.float64), np.pi)
    theta = np.where(theta >= np.pi, 0.0, theta)

    # orientations in (pi/2, pi) are mirror images of those in (0, pi/2)
    mirrored = (theta > np.pi / 2)[..., None]
    base = np.where(theta > np.pi / 2, np.pi - theta, theta)
    cos, sin = np.cos(base)[..., None], np.sin(base)[..., None]

    half = side // 2
    k = np.arange(-half, half + 1)
    shallow = cos >= sin

    with np.errstate(divide='ignore', invalid='ignore'):
        dcol = np.where(shallow, k, np.rint(k * (cos / sin)))
        drow = np.where(shallow, -np.rint(k * (sin / cos)), -k)

    dcol = np.where(mirrored, -dcol, dcol)
    return drow.astype(np.intp), dcol.astype(np.intp)


def directional_filter(theta, side=DEFAULT_SIDE):
    """
    Anisotropic line kernel: the digital line through the center at
    orientation theta, crossing the whole side x side support, with equal
    weights summing to one

    Parameters
    ----------
    theta : float
        Orientation in radians (taken modulo pi)

    side : int, default=9
        Odd kernel side (>= 3)
    """
    side = check_odd(side, 'side', minimum=3)
    drow, dcol = _line_offsets(float(theta), side)
    half = side // 2
    kernel = np.zeros((side, side))
    kernel[half + drow, half + dcol] = 1.0 / side**2
    return kernel / kernel.sum()


@lru_cache(maxsize=None)
def _bank(n, side):
    angles = np.arange(n) * np.pi / n
    kernels = np.stack([directional_filter(a, side) for a in angles])
    angles.flags.writeable = False
    kernels.flags.writeable = False
    return FilterBank(kernels=kernels, angles=angles)


def build_filter_bank(N=DEFAULT_BANK_SIZE, side=DEFAULT_SIDE):
    """
    Bank of N line kernels with angles k pi / N, k = 0..N-1. Banks are
    cached and read-only, so they can be shared across threads
    """
    if isinstance(N, bool) or not float(N).is_integer() or N < 2:
        raise InvalidArgumentError('Expected the bank size N to be an '
                                   f'integer >= 2, got {N!r}')

    side = check_odd(side, 'side', minimum=3)
    return _bank(int(N), side)


def adaptive_filter(img, field, side=DEFAULT_SIDE):
    """
    Filters every pixel with the line kernel oriented along its own
    direction, theta(x), using mirror padding at the borders

    Parameters
    ----------
    img : array-like
        2D grid of intensities

    field : DirectionField or array-like
        Orientation per pixel, same shape as img

    side : int, default=9
        Odd kernel side (>= 3)
    """
    img = as_image(img)
    theta = field.theta if isinstance(field, DirectionField) else np.asarray(
        field, dtype=np.float64)
    check_same_shape(img, theta, what='image and direction field')
    side = check_odd(side, 'side', minimum=3)

    half = side // 2
    drow, dcol = _line_offsets(theta, side)
    height, width = img.shape
    rows = np.arange(height)[:, None, None] + half + drow
    cols = np.arange(width)[None, :, None] + half + dcol
    return pad(img, half)[rows, cols].mean(axis=-1)
