"""
Configuration objects. Every run is described by a RunConfig, built from
defaults, an optional YAML file and command line flags (in increasing order
of precedence)
"""
from collections.abc import Mapping
from copy import deepcopy
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from pydantic import (BaseModel, ConfigDict, Field, ValidationError,
                      field_validator)

from fracfilter._io import load_config_file
from fracfilter.direction import (DEFAULT_BANK_SIZE, DEFAULT_SIDE,
                                  DEFAULT_SIGMA, DEFAULT_WINDOW,
                                  build_filter_bank)
from fracfilter.enum import Engine, Matcher
from fracfilter.exceptions import ConfigurationError
from fracfilter.fractal import DEFAULT_SCALES

DEFAULT_CONFIG_FILE = 'fracfilter.yaml'

ALPHA_CLAMP = (0.25, 4.0)


def _odd(value, minimum=3):
    if value < minimum or value % 2 == 0:
        raise ValueError(f'must be an odd integer >= {minimum}, '
                         f'got {value}')
    return value


def _at_least(value, minimum):
    if value < minimum:
        raise ValueError(f'must be >= {minimum}, got {value}')
    return value


class AbstractConfig(BaseModel):
    """Base class for configuration objects, unknown keys are rejected and
    instances are immutable
    """

    model_config = ConfigDict(extra='forbid', frozen=True)


class FdifConfig(AbstractConfig):
    """Iterative fractal dimension invariant filtering

    Parameters
    ----------
    iterations : int
        Number of filter + transform rounds (>= 1)

    kernel_side : int
        Side of the directional line kernels (odd)

    scales : int
        Number of radii R used to estimate the fractal dimension (>= 2)

    alpha_clamp : tuple of float
        Bounds for the exponent D / D_F

    neighborhood : int, optional
        Side of the window whose energy the transform preserves, defaults to
        kernel_side

    alpha : float, optional
        Fixed exponent that replaces D / D_F (skips the dimension estimates)

    window : int
        Structure tensor neighborhood side (odd)

    sigma : float
        Gaussian pre-smoothing applied before computing gradients
    """
    iterations: int = 3
    kernel_side: int = DEFAULT_SIDE
    scales: int = DEFAULT_SCALES
    alpha_clamp: Tuple[float, float] = ALPHA_CLAMP
    neighborhood: Optional[int] = None
    alpha: Optional[float] = None
    window: int = DEFAULT_WINDOW
    sigma: float = DEFAULT_SIGMA

    @field_validator('iterations')
    @classmethod
    def iterations_positive(cls, value):
        return _at_least(value, 1)

    @field_validator('kernel_side', 'window')
    @classmethod
    def odd_side(cls, value):
        return _odd(value)

    @field_validator('neighborhood')
    @classmethod
    def odd_neighborhood(cls, value):
        return value if value is None else _odd(value, minimum=1)

    @field_validator('scales')
    @classmethod
    def enough_scales(cls, value):
        return _at_least(value, 2)

    @field_validator('alpha_clamp')
    @classmethod
    def valid_clamp(cls, value):
        low, high = value

        if not 0 < low <= high:
            raise ValueError('must satisfy 0 < min <= max, '
                             f'got {tuple(value)}')

        return value

    @field_validator('alpha', 'sigma')
    @classmethod
    def positive(cls, value):
        if value is not None and not value > 0:
            raise ValueError(f'must be positive, got {value}')
        return value

    @property
    def norm_side(self):
        return self.neighborhood or self.kernel_side


class FracnnConfig(AbstractConfig):
    """Predefined CNN approximation of FDIF

    Parameters
    ----------
    depth : int
        Number of (convolution, nonlinearity) layer pairs. The layer count
        used in the literature is twice this value (depth 3 is "x6")

    bank_size : int
        Number of line kernels N in the bank

    kernel_side : int
        Side of the line kernels (odd)

    alpha : float
        Fixed exponent of the nonlinear layer, must lie in the FDIF clamp
        range [0.25, 4]

    mean_side : int, optional
        Side of the mean filter M, defaults to kernel_side

    rectify_numerator : bool
        Use max(f, 0) instead of f in the numerator mean of the nonlinear
        layer
    """
    depth: int = 3
    bank_size: int = DEFAULT_BANK_SIZE
    kernel_side: int = DEFAULT_SIDE
    alpha: float = 2.0
    mean_side: Optional[int] = None
    rectify_numerator: bool = False

    @field_validator('depth')
    @classmethod
    def depth_positive(cls, value):
        return _at_least(value, 1)

    @field_validator('bank_size')
    @classmethod
    def bank_size_at_least_two(cls, value):
        return _at_least(value, 2)

    @field_validator('kernel_side')
    @classmethod
    def odd_side(cls, value):
        return _odd(value)

    @field_validator('mean_side')
    @classmethod
    def odd_mean_side(cls, value):
        return value if value is None else _odd(value, minimum=1)

    @field_validator('alpha')
    @classmethod
    def alpha_in_clamp(cls, value):
        low, high = ALPHA_CLAMP

        if not low <= value <= high:
            raise ValueError(f'must be in [{low}, {high}], got {value}')

        return value

    @property
    def bank(self):
        return build_filter_bank(self.bank_size, self.kernel_side)

    @property
    def box_side(self):
        return self.mean_side or self.kernel_side

    @property
    def layer_count(self):
        return 2 * self.depth


class DetectConfig(AbstractConfig):
    """Detection heads: thresholding and patch logistic regression
    """
    threshold: float = 0.1
    otsu: bool = False
    patch_side: int = 9
    n_patches: int = 80000
    epochs: int = 500
    learning_rate: float = 0.1

    @field_validator('threshold')
    @classmethod
    def unit_interval(cls, value):
        if not 0 <= value <= 1:
            raise ValueError(f'must be in [0, 1], got {value}')
        return value

    @field_validator('patch_side')
    @classmethod
    def odd_side(cls, value):
        return _odd(value, minimum=1)

    @field_validator('n_patches')
    @classmethod
    def at_least_two_patches(cls, value):
        return _at_least(value, 2)

    @field_validator('epochs')
    @classmethod
    def non_negative_epochs(cls, value):
        return _at_least(value, 0)

    @field_validator('learning_rate')
    @classmethod
    def positive_rate(cls, value):
        if not value > 0:
            raise ValueError(f'must be positive, got {value}')
        return value


class EvalConfig(AbstractConfig):
    """Evaluation protocol
    """
    d_max: float = 2.0
    n_thresholds: int = 99
    matcher: Matcher = Matcher.optimal

    @field_validator('d_max')
    @classmethod
    def non_negative_distance(cls, value):
        return _at_least(value, 0)

    @field_validator('n_thresholds')
    @classmethod
    def at_least_one_threshold(cls, value):
        return _at_least(value, 1)

    @property
    def thresholds(self):
        """n uniform thresholds strictly inside (0, 1), 0.01..0.99 for n=99
        """
        n = self.n_thresholds
        return np.arange(1, n + 1) / (n + 1)


class RunConfig(AbstractConfig):
    """Everything a CLI command needs
    """
    engine: Engine = Engine.fdif
    seed: int = 0
    threads: Optional[int] = None
    fdif: FdifConfig = Field(default_factory=FdifConfig)
    fracnn: FracnnConfig = Field(default_factory=FracnnConfig)
    detect: DetectConfig = Field(default_factory=DetectConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)

    @field_validator('threads')
    @classmethod
    def positive_threads(cls, value):
        return value if value is None else _at_least(value, 1)

    @classmethod
    def load(cls, path=None, overrides=None):
        """
        Builds a RunConfig from an optional YAML file and a (possibly
        nested) dictionary of overrides. Keys with None values in overrides
        are ignored, so unset CLI flags do not clobber the file

        Parameters
        ----------
        path : str or pathlib.Path, optional
            Config file. If None, uses fracfilter.yaml in the current working
            directory when it exists

        overrides : dict, optional
            Values taking precedence over the file
        """
        if path is None:
            path = DEFAULT_CONFIG_FILE if Path(
                DEFAULT_CONFIG_FILE).is_file() else None

        data = {} if path is None else load_config_file(path)
        data = _merge(data, overrides or {})

        try:
            return cls(**data)
        except ValidationError as e:
            where = f' in {str(path)!r}' if path else ''
            raise ConfigurationError(
                f'Invalid configuration{where}:\n{e}') from e

    @classmethod
    def hints(cls):
        """Default values as a nested dictionary of plain python values
        """
        cfg = cls()
        return {
            'engine': cfg.engine.value,
            'seed': cfg.seed,
            'fdif': {
                **dict(cfg.fdif), 'alpha_clamp': list(cfg.fdif.alpha_clamp)
            },
            'fracnn': dict(cfg.fracnn),
            'detect': dict(cfg.detect),
            'eval': {
                **dict(cfg.eval), 'matcher': cfg.eval.matcher.value
            },
        }


def _merge(base, overrides):
    merged = deepcopy(dict(base))

    for key, value in overrides.items():
        if value is None:
            continue

        if isinstance(value, Mapping):
            current = merged.get(key) or {}

            if not isinstance(current, Mapping):
                raise ConfigurationError(
                    f'Expected key {key!r} to contain a dictionary, '
                    f'got {type(current).__name__}')

            merged[key] = _merge(current, value)
        else:
            merged[key] = value

    return merged
