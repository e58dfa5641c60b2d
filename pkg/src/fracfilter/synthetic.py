"""
Synthetic images with known structure: Von Koch curves (known dimension),
digital lines at filter bank angles, curves over a textured background with
ground truth, and smooth photo-like images. Every generator is seeded
"""
import math
from pathlib import Path

import numpy as np
from scipy import ndimage

from fracfilter import _io
from fracfilter.direction import _line_offsets
from fracfilter.exceptions import InvalidArgumentError

# log 4 / log 3
KOCH_DIMENSION = math.log(4) / math.log(3)

# arc length between samples when rasterizing a polyline, in pixels
_RASTER_STEP = 0.25


def _shape(shape):
    if np.isscalar(shape):
        shape = (shape, shape)

    shape = tuple(int(s) for s in shape)

    if len(shape) != 2 or min(shape) < 1:
        raise InvalidArgumentError('Expected a positive 2D shape, '
                                   f'got {shape!r}')

    return shape


def rasterize_polyline(points, shape):
    """
    Binary mask with the pixels crossed by a polyline. ``points`` are
    complex numbers col + 1j * row. Pixels outside the grid are dropped
    """
    points = np.asarray(points, dtype=np.complex128)
    shape = _shape(shape)
    mask = np.zeros(shape, dtype=np.uint8)

    if len(points) < 2:
        return mask

    arc = np.concatenate([[0.0], np.cumsum(np.abs(np.diff(points)))])
    t = np.append(np.arange(0.0, arc[-1], _RASTER_STEP), arc[-1])
    rows = np.rint(np.interp(t, arc, points.imag)).astype(np.intp)
    cols = np.rint(np.interp(t, arc, points.real)).astype(np.intp)
    inside = ((rows >= 0) & (rows < shape[0]) & (cols >= 0) &
              (cols < shape[1]))
    mask[rows[inside], cols[inside]] = 1
    return mask


def koch_points(level=5, start=0j, end=1 + 0j):
    """
    Vertices of the Von Koch curve between ``start`` and ``end`` (complex,
    col + 1j * row). The bumps point towards row 0
    """
    if level < 0:
        raise InvalidArgumentError(f'Expected level >= 0, got {level!r}')

    points = np.array([start, end], dtype=np.complex128)
    # rows grow downwards, rotating by -60 degrees raises the bump
    turn = np.exp(-1j * np.pi / 3)

    for _ in range(level):
        a, b = points[:-1], points[1:]
        third = (b - a) / 3
        refined = np.empty(4 * len(a) + 1, dtype=np.complex128)
        refined[0:-1:4] = a
        refined[1::4] = a + third
        refined[2::4] = a + third + third * turn
        refined[3::4] = a + 2 * third
        refined[-1] = points[-1]
        points = refined

    return points


def koch_raster(size=512, level=5, margin=0.025):
    """
    Von Koch curve rasterized one pixel wide on a black size x size grid.
    The base segment spans the width minus ``margin`` on each side and the
    curve is centered vertically

    Returns
    -------
    numpy.ndarray
        Float image with 1.0 on the curve
    """
    size = _shape(size)[0]
    length = size * (1 - 2 * margin)
    height = length * math.sqrt(3) / 6
    base_row = (size + height) / 2
    start = complex(size * margin, base_row)
    points = koch_points(level, start, start + length)
    return rasterize_polyline(points, (size, size)).astype(np.float64)


def line_raster(shape,
                theta,
                offsets=(0, ),
                value=1.0,
                background=0.0):
    """
    Digital lines with orientation theta crossing the whole grid, drawn with
    the same rasterization as the line kernels. ``offsets`` shifts copies of
    the line through the center (rows for shallow lines, columns for steep
    ones)
    """
    shape = _shape(shape)
    side = 2 * max(shape) + 1
    drow, dcol = _line_offsets(float(theta), side)
    base = np.mod(theta, np.pi)
    shallow = abs(math.cos(base)) >= abs(math.sin(base))

    img = np.full(shape, float(background))
    center_row, center_col = shape[0] // 2, shape[1] // 2

    for offset in offsets:
        rows = center_row + drow + (offset if shallow else 0)
        cols = center_col + dcol + (0 if shallow else offset)
        inside = ((rows >= 0) & (rows < shape[0]) & (cols >= 0) &
                  (cols < shape[1]))
        img[rows[inside], cols[inside]] = value

    return img


def sinusoid_texture(shape, rng, base=0.35, amplitude=0.1,
                     wavelengths=(32, 48)):
    """Product of a horizontal and a vertical sinusoid with random
    wavelengths and phases around ``base``
    """
    shape = _shape(shape)
    rows, cols = np.mgrid[0:shape[0], 0:shape[1]]
    lam_r, lam_c = rng.uniform(*wavelengths, size=2)
    phase_r, phase_c = rng.uniform(0, 2 * np.pi, size=2)
    return base + amplitude * (np.sin(2 * np.pi * rows / lam_r + phase_r) *
                               np.sin(2 * np.pi * cols / lam_c + phase_c))


def _random_curve(shape, rng):
    # gently bending arc crossing most of the grid
    height, width = shape
    center = complex(rng.uniform(0.3, 0.7) * width,
                     rng.uniform(0.3, 0.7) * height)
    direction = np.exp(1j * rng.uniform(0, np.pi))
    normal = direction * 1j
    half = 0.4 * min(shape)
    t = np.linspace(-half, half, 200)
    period = rng.uniform(1.0, 2.0) * 2 * half
    bend = rng.uniform(0.03, 0.08) * min(shape)
    phase = rng.uniform(0, 2 * np.pi)
    return center + t * direction + bend * np.sin(2 * np.pi * t / period +
                                                  phase) * normal


def curve_image(shape=(128, 128),
                n_curves=3,
                contrast=0.35,
                noise=0.03,
                seed=0,
                **texture):
    """
    Thin bright curves over a sinusoid texture with additive Gaussian noise

    Parameters
    ----------
    shape : tuple or int, default=(128, 128)
        Image shape

    n_curves : int, default=3
        Number of curves

    contrast : float, default=0.35
        Intensity added on curve pixels

    noise : float, default=0.03
        Standard deviation of the additive noise

    seed : int or numpy.random.SeedSequence, default=0
        Seeds the generator

    **texture
        Passed to sinusoid_texture

    Returns
    -------
    tuple
        (image in [0, 1], binary ground truth)
    """
    shape = _shape(shape)

    if noise < 0:
        raise InvalidArgumentError(f'Expected noise >= 0, got {noise!r}')

    rng = np.random.default_rng(seed)
    gt = np.zeros(shape, dtype=np.uint8)

    for _ in range(n_curves):
        gt |= rasterize_polyline(_random_curve(shape, rng), shape)

    img = sinusoid_texture(shape, rng, **texture) + contrast * gt
    img = img + rng.normal(0.0, noise, size=shape)
    return np.clip(img, 0.0, 1.0), gt


def photo_image(shape=(96, 96), seed=0, n_strokes=4):
    """
    Smooth photo-like image: low-pass filtered noise in [0.15, 0.85] with a
    few dark strokes
    """
    shape = _shape(shape)
    rng = np.random.default_rng(seed)
    smooth = ndimage.gaussian_filter(rng.normal(size=shape),
                                     sigma=min(shape) / 12,
                                     mode='reflect')
    span = smooth.max() - smooth.min()
    smooth = (smooth - smooth.min()) / (span if span > 0 else 1.0)
    img = 0.15 + 0.7 * smooth

    strokes = np.zeros(shape, dtype=np.uint8)

    for _ in range(n_strokes):
        strokes |= rasterize_polyline(_random_curve(shape, rng), shape)

    strokes = ndimage.binary_dilation(strokes)
    img[strokes] *= 0.4
    return img


def write_dataset(path, n=10, shape=(128, 128), seed=0, **kwargs):
    """
    Writes ``n`` curve images to path/images and their ground truth to
    path/gt, both as PNG files named 000.png, 001.png, ...

    Returns
    -------
    list of tuple
        (image path, ground truth path) for every sample
    """
    path = Path(path)
    seeds = np.random.SeedSequence(seed).spawn(n)
    written = []

    for i, child in enumerate(seeds):
        img, gt = curve_image(shape, seed=child, **kwargs)
        name = f'{i:03d}.png'
        written.append((_io.write_image(path / 'images' / name, img),
                        _io.write_image(path / 'gt' / name, gt)))

    return written
