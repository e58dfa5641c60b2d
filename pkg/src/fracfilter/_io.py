from collections import defaultdict
from collections.abc import Mapping
from pathlib import Path

import numpy as np
import yaml
from PIL import Image

from fracfilter.exceptions import (ConfigurationFileTypeError,
                                   ConfigurationError, DuplicateNameError,
                                   ImageReadError, UnpairedFilesError)

IMAGE_SUFFIXES = ('.png', '.pgm')

# ITU-R 601 luma weights
LUMINANCE = np.array([0.299, 0.587, 0.114])


def load_config_file(path):
    """
    Load a config file, validates that the returned value is a dictionary
    """
    path = Path(path)

    if not path.exists():
        raise ConfigurationError(f'Error loading {str(path)!r}. File '
                                 'does not exist.')

    if path.is_dir():
        raise ConfigurationError(f'Error loading {str(path)!r}. Path '
                                 'is a directory.')

    data = yaml.safe_load(path.read_text())

    if not isinstance(data, Mapping):
        raise ConfigurationFileTypeError(path, data)

    return data


def read_image(path):
    """
    Reads an 8-bit grayscale or color PNG/PGM as a float grid in [0, 1].
    Color images are converted to luminance
    """
    path = Path(path)

    try:
        with Image.open(path) as im:
            im.load()

            if im.mode == 'P':
                im = im.convert('RGB')

            mode = im.mode

            if mode in ('L', 'LA'):
                data = np.asarray(im.getchannel(0), dtype=np.float64) / 255
            elif mode in ('RGB', 'RGBA'):
                rgb = np.asarray(im, dtype=np.float64)[..., :3]
                data = rgb @ LUMINANCE / 255
            elif mode == '1':
                data = np.asarray(im, dtype=np.float64)
            else:
                raise ImageReadError(
                    path, f'unsupported image mode {mode!r}, expected an '
                    '8-bit grayscale or color image')
    except OSError as e:
        raise ImageReadError(path, str(e)) from e

    return np.clip(data, 0.0, 1.0)


def read_mask(path):
    """Reads a binary ground truth image, nonzero pixels are positives
    """
    return (read_image(path) > 0.5).astype(np.uint8)


def quantize(img):
    """Maps [0, 1] floats to 8-bit levels, round(value x 255)
    """
    return np.rint(np.clip(img, 0.0, 1.0) * 255).astype(np.uint8)


def write_image(path, img):
    """Writes a [0, 1] grid as an 8-bit grayscale PNG or PGM (P5),
    depending on the suffix
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(quantize(img)).save(path)
    return path


def list_images(path):
    """
    Returns the images in a directory (sorted), or a list with the path
    itself if it is a file
    """
    path = Path(path)

    if path.is_dir():
        return sorted(p for p in path.iterdir()
                      if p.suffix.lower() in IMAGE_SUFFIXES)

    if not path.exists():
        raise ImageReadError(path, 'no such file or directory')

    return [path]


def check_unique(paths, key):
    """Raises DuplicateNameError listing every path whose key is shared with
    another path
    """
    groups = defaultdict(list)

    for path in paths:
        groups[key(path)].append(path)

    duplicates = [p for group in groups.values() if len(group) > 1
                  for p in group]

    if duplicates:
        raise DuplicateNameError(duplicates)


def pair_by_stem(left, right, suffix=''):
    """
    Pairs the images in two directories by file name without extension,
    returns a list of (stem, left_path, right_path). Raises an error listing
    every file that does not have a counterpart, or that shares its stem with
    another file in the same directory (e.g., x.png and x.pgm). When
    ``suffix`` is given (e.g., "_fracnn_prob"), only images in ``left`` whose
    name ends with it are used and it is removed before pairing
    """
    left = [p for p in list_images(left) if p.stem.endswith(suffix)]
    right = list_images(right)

    def left_stem(p):
        return p.stem[:len(p.stem) - len(suffix)]

    check_unique(left, key=left_stem)
    check_unique(right, key=lambda p: p.stem)

    left = {left_stem(p): p for p in left}
    right = {p.stem: p for p in right}
    orphans = [left[s] for s in set(left) - set(right)]
    orphans += [right[s] for s in set(right) - set(left)]

    if orphans:
        raise UnpairedFilesError(orphans)

    return [(stem, left[stem], right[stem]) for stem in sorted(left)]
