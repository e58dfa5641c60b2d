"""
Validation helpers for the grids passed around the package. An image is a
2D float64 numpy array, row-major, canonical range [0, 1]
"""
import numpy as np

from fracfilter.exceptions import InvalidArgumentError, ShapeMismatchError


def as_image(data, name='image'):
    """Returns ``data`` as a 2D float64 array, validating it is a non-empty
    grid of finite values
    """
    img = np.asarray(data, dtype=np.float64)

    if img.ndim != 2:
        raise InvalidArgumentError(f'Expected {name} to be a 2D grid, '
                                   f'got an array with {img.ndim} '
                                   'dimension(s)')

    if img.shape[0] < 1 or img.shape[1] < 1:
        raise InvalidArgumentError(f'Expected {name} to have at least one '
                                   f'row and one column, got {img.shape}')

    if not np.all(np.isfinite(img)):
        raise InvalidArgumentError(f'Expected {name} to contain finite '
                                   'values only (found NaN or Inf)')

    return img


def check_same_shape(*grids, what='grids'):
    shapes = [np.shape(g) for g in grids]

    if any(s != shapes[0] for s in shapes[1:]):
        raise ShapeMismatchError(*shapes, what=what)


def check_odd(value, name, minimum=1):
    if int(value) != value or value < minimum or value % 2 == 0:
        raise InvalidArgumentError(f'Expected {name} to be an odd integer '
                                   f'>= {minimum}, got {value!r}')

    return int(value)
