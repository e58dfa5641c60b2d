import os
from concurrent.futures import ThreadPoolExecutor

from tqdm.contrib.concurrent import thread_map

from fracfilter.exceptions import ConfigurationError

ENV_THREADS = 'FDIF_THREADS'


def max_workers(threads=None):
    """
    Number of worker threads: the explicit value if passed, otherwise the
    FDIF_THREADS environment variable, otherwise the CPU count
    """
    if threads is None:
        value = os.environ.get(ENV_THREADS)

        if value is None:
            return os.cpu_count() or 1

        try:
            threads = int(value)
        except ValueError:
            raise ConfigurationError(f'Expected {ENV_THREADS} to be a '
                                     f'positive integer, got {value!r}')

    if threads < 1:
        raise ConfigurationError('Expected the number of threads to be a '
                                 f'positive integer, got {threads!r}')

    return threads


def map_threads(fn, items, threads=None):
    """Ordered map over a thread pool (numpy/scipy release the GIL)
    """
    items = list(items)
    workers = min(max_workers(threads), max(len(items), 1))

    if workers == 1:
        return [fn(item) for item in items]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def map_threads_progress(fn, items, threads=None, desc=None, quiet=False):
    """Like map_threads, but displays a progress bar
    """
    items = list(items)
    return thread_map(fn,
                      items,
                      max_workers=min(max_workers(threads),
                                      max(len(items), 1)),
                      desc=desc,
                      disable=quiet,
                      leave=False)
