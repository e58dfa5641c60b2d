"""
Wall-time benchmarks: how the convolution layer scales with the bank size
and how one FDIF iteration compares with one FraCNN layer pair
"""
import time
from dataclasses import dataclass

import numpy as np

from fracfilter.config import FdifConfig, FracnnConfig
from fracfilter.direction import DEFAULT_SIDE, build_filter_bank
from fracfilter.exceptions import InvalidArgumentError
from fracfilter.fdif import fdif_steps
from fracfilter.fracnn import conv_max_layer, fracnn_layers


@dataclass(frozen=True)
class BenchReport:
    size: int
    bank_size: int
    conv_full: float
    conv_half: float
    fdif_iteration: float
    fracnn_pair: float

    @property
    def ratio(self):
        """conv_max_layer time with N kernels over time with N / 2
        """
        return self.conv_full / self.conv_half

    def rows(self):
        n = self.bank_size
        return [
            (f'conv_max_layer N={n}', self.conv_full),
            (f'conv_max_layer N={n // 2}', self.conv_half),
            ('FDIF, one iteration', self.fdif_iteration),
            ('FraCNN, one layer pair', self.fracnn_pair),
        ]


def best_time(fn, repeat=3):
    """Fastest of ``repeat`` calls, in seconds
    """
    if repeat < 1:
        raise InvalidArgumentError(f'Expected repeat >= 1, got {repeat!r}')

    times = []

    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)

    return min(times)


def time_conv_max(img, bank_size, side=DEFAULT_SIDE, repeat=3, threads=1):
    bank = build_filter_bank(bank_size, side)
    return best_time(lambda: conv_max_layer(img, bank, threads=threads),
                     repeat=repeat)


def run_bench(size=512,
              bank_size=30,
              side=DEFAULT_SIDE,
              repeat=3,
              threads=1,
              seed=0):
    """
    Times conv_max_layer with bank_size and bank_size // 2 kernels, one FDIF
    iteration and one FraCNN layer pair on a size x size noise image

    Parameters
    ----------
    threads : int, default=1
        Worker threads for the bank convolutions. A single thread keeps the
        N vs N / 2 ratio close to the operation count ratio
    """
    if bank_size < 4:
        raise InvalidArgumentError('Expected bank_size >= 4, '
                                   f'got {bank_size!r}')

    img = np.random.default_rng(seed).uniform(size=(size, size))

    fdif_cfg = FdifConfig(iterations=1, kernel_side=side)
    fracnn_cfg = FracnnConfig(depth=1, bank_size=bank_size, kernel_side=side)

    return BenchReport(
        size=size,
        bank_size=bank_size,
        conv_full=time_conv_max(img, bank_size, side, repeat, threads),
        conv_half=time_conv_max(img, bank_size // 2, side, repeat, threads),
        fdif_iteration=best_time(lambda: list(fdif_steps(img, fdif_cfg)),
                                 repeat=repeat),
        fracnn_pair=best_time(
            lambda: list(fracnn_layers(img, fracnn_cfg, threads=threads)),
            repeat=repeat))
