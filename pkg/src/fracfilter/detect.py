"""
Detection heads that turn feature images into binary curve maps: histogram
thresholding (unsupervised) and a logistic regression over patches
(supervised, only the last layer is learned)
"""
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.special import expit

from fracfilter.commons import as_image, check_same_shape, check_odd
from fracfilter.commons.filters import MODE, pad
from fracfilter.exceptions import (InsufficientClassError,
                                   InvalidArgumentError, ModelFormatError)

N_BINS = 256

MODEL_MAGIC = 'fracfilter-logistic'
MODEL_VERSION = 1

# step halvings tried before an epoch gives up on improving the loss
_MAX_HALVINGS = 50


@dataclass(frozen=True)
class PatchSet:
    """Flattened (row-major) side x side patches and their center labels
    """
    patches: np.ndarray
    labels: np.ndarray
    side: int

    def __len__(self):
        return len(self.labels)

    @classmethod
    def concat(cls, sets):
        sets = list(sets)
        sides = {s.side for s in sets}

        if len(sides) != 1:
            raise InvalidArgumentError('Cannot concatenate patch sets with '
                                       f'different sides: {sorted(sides)}')

        return cls(patches=np.concatenate([s.patches for s in sets]),
                   labels=np.concatenate([s.labels for s in sets]),
                   side=sides.pop())


@dataclass(frozen=True)
class LogisticModel:
    """
    Sigmoid classifier over side x side patches. weights holds side**2
    coefficients (row-major) followed by the bias
    """
    weights: np.ndarray
    side: int
    losses: tuple = field(default=(), compare=False)

    @classmethod
    def zeros(cls, side):
        return cls(weights=np.zeros(side * side + 1), side=side)

    @property
    def coefficients(self):
        return self.weights[:-1].reshape(self.side, self.side)

    @property
    def bias(self):
        return self.weights[-1]

    def predict_proba(self, patches):
        return expit(np.asarray(patches) @ self.weights[:-1] + self.bias)

    def accuracy(self, data):
        predicted = self.predict_proba(data.patches) > 0.5
        return float(np.mean(predicted == (data.labels == 1)))

    def dumps(self):
        lines = [f'{MODEL_MAGIC} {MODEL_VERSION}', f'side {self.side}']
        lines += [repr(float(w)) for w in self.weights]
        return '\n'.join(lines) + '\n'

    @classmethod
    def loads(cls, text, source='<string>'):
        lines = [line.strip() for line in text.splitlines() if line.strip()]

        if not lines or lines[0].split()[0:1] != [MODEL_MAGIC]:
            raise ModelFormatError(
                source, f'expected the first line to start with '
                f'{MODEL_MAGIC!r}')

        header = lines[0].split()

        if header[1:] != [str(MODEL_VERSION)]:
            raise ModelFormatError(
                source, f'unsupported format version {header[1:]}, '
                f'expected {MODEL_VERSION}')

        try:
            key, side = lines[1].split()
            side = int(side)
            weights = np.array([float(w) for w in lines[2:]])
        except (IndexError, ValueError) as e:
            raise ModelFormatError(source, f'cannot parse contents ({e})')

        if key != 'side' or side < 1 or side % 2 == 0:
            raise ModelFormatError(source, 'expected a line "side <odd int>"')

        if len(weights) != side * side + 1:
            raise ModelFormatError(
                source, f'expected {side * side + 1} weights for side '
                f'{side}, got {len(weights)}')

        if not np.all(np.isfinite(weights)):
            raise ModelFormatError(source, 'weights must be finite')

        return cls(weights=weights, side=side)

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.dumps())
        return path

    @classmethod
    def load(cls, path):
        path = Path(path)

        try:
            text = path.read_text()
        except (OSError, UnicodeDecodeError) as e:
            raise ModelFormatError(path, str(e)) from e

        return cls.loads(text, source=path)


def _histogram_bins(img):
    return np.minimum((np.clip(img, 0.0, 1.0) * N_BINS).astype(np.intp),
                      N_BINS - 1)


def otsu_level(img):
    """
    Otsu's threshold over a 256-bin histogram of [0, 1]. Returns the index of
    the last bin in the background class, or None if the histogram has a
    single occupied bin
    """
    img = as_image(img)
    counts = np.bincount(_histogram_bins(img).ravel(),
                         minlength=N_BINS).astype(np.float64)

    if np.count_nonzero(counts) < 2:
        return None

    levels = np.arange(N_BINS)
    total = counts.sum()
    w0 = np.cumsum(counts)
    w1 = total - w0
    s0 = np.cumsum(counts * levels)
    s1 = s0[-1] - s0

    with np.errstate(divide='ignore', invalid='ignore'):
        between = w0 * w1 * (s0 / w0 - s1 / w1)**2 / total**2

    between[(w0 == 0) | (w1 == 0)] = -1.0
    return int(np.argmax(between))


def otsu_threshold(img):
    """
    Binarizes with Otsu's threshold. Images with a single intensity level
    give an all-zero map
    """
    img = as_image(img)
    level = otsu_level(img)

    if level is None:
        return np.zeros(img.shape, dtype=np.uint8)

    return (_histogram_bins(img) > level).astype(np.uint8)


def fixed_threshold(img, t):
    """Pixels strictly above t, t must be in [0, 1]
    """
    img = as_image(img)

    if not 0 <= t <= 1:
        raise InvalidArgumentError('Expected the threshold to be in [0, 1], '
                                   f'got {t!r}')

    return (img > t).astype(np.uint8)


def extract_patches(feature, flat_index, side):
    """Row-major side x side patches centered at the given flat pixel
    indices, mirror padded at the borders
    """
    half = side // 2
    rows, cols = np.unravel_index(flat_index, feature.shape)
    drow, dcol = np.mgrid[-half:half + 1, -half:half + 1]
    padded = pad(feature, half)
    return padded[rows[:, None] + half + drow.ravel(),
                  cols[:, None] + half + dcol.ravel()]


def sample_patches(feature, gt, side=9, n=80000, seed=0):
    """
    Draws a class-balanced set of patches: n // 2 centered on ground truth
    positives and the rest on negatives, without replacement

    Parameters
    ----------
    feature : array-like
        Feature image (e.g., FDIF or FraCNN output)

    gt : array-like
        Binary ground truth, same shape

    side : int, default=9
        Odd patch side

    n : int, default=80000
        Number of patches

    seed : int or numpy.random.SeedSequence, default=0
        Seeds the sampler
    """
    feature = as_image(feature, 'feature image')
    gt = np.asarray(gt) != 0
    check_same_shape(feature, gt, what='feature image and ground truth')
    side = check_odd(side, 'side')

    if n < 2:
        raise InvalidArgumentError(f'Expected n >= 2, got {n!r}')

    n_pos = n // 2
    n_neg = n - n_pos
    positives = np.flatnonzero(gt)
    negatives = np.flatnonzero(~gt)

    if len(positives) < n_pos:
        raise InsufficientClassError('positive', len(positives), n_pos)

    if len(negatives) < n_neg:
        raise InsufficientClassError('negative', len(negatives), n_neg)

    rng = np.random.default_rng(seed)
    chosen = np.concatenate([
        rng.choice(positives, size=n_pos, replace=False),
        rng.choice(negatives, size=n_neg, replace=False)
    ])

    return PatchSet(patches=extract_patches(feature, chosen, side),
                    labels=gt.ravel()[chosen].astype(np.uint8),
                    side=side)


def sample_patches_many(pairs, side=9, n=80000, seed=0):
    """
    Samples n patches in total from several (feature, gt) pairs, splitting
    them evenly across images with independent child seeds
    """
    pairs = list(pairs)

    if not pairs:
        raise InvalidArgumentError('Expected at least one image to sample '
                                   'patches from')

    per_image, extra = divmod(n, len(pairs))
    seeds = np.random.SeedSequence(seed).spawn(len(pairs))

    return PatchSet.concat(
        sample_patches(feature, gt, side=side, n=per_image +
                       (i < extra), seed=child)
        for i, ((feature, gt), child) in enumerate(zip(pairs, seeds)))


def _with_bias(patches):
    return np.hstack([patches, np.ones((len(patches), 1))])


def logistic_loss(weights, X, y):
    """Mean binary cross-entropy, X must include the bias column
    """
    z = X @ weights
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def logistic_gradient(weights, X, y):
    """Gradient of logistic_loss with respect to the weights
    """
    return X.T @ (expit(X @ weights) - y) / len(y)


def train_logistic(data, epochs=500, learning_rate=0.1):
    """
    Full-batch gradient descent on the mean cross-entropy from zero weights.
    When a step increases the loss, the step size is halved and the step
    retried, so the recorded losses never increase

    Parameters
    ----------
    data : PatchSet
        Training patches, both classes must be present

    epochs : int, default=500
        Number of descent steps

    learning_rate : float, default=0.1
        Initial step size

    Returns
    -------
    LogisticModel
        With ``losses`` holding the loss before training and after every
        epoch
    """
    y = np.asarray(data.labels, dtype=np.float64)

    if len(y) == 0 or len(np.unique(y)) < 2:
        raise InvalidArgumentError('Expected training data with both '
                                   'positive and negative patches')

    if epochs < 0:
        raise InvalidArgumentError(f'Expected epochs >= 0, got {epochs!r}')

    X = _with_bias(np.asarray(data.patches, dtype=np.float64))
    weights = np.zeros(X.shape[1])
    loss = logistic_loss(weights, X, y)
    losses = [loss]
    rate = learning_rate

    for _ in range(epochs):
        gradient = logistic_gradient(weights, X, y)

        for _ in range(_MAX_HALVINGS):
            candidate = weights - rate * gradient
            candidate_loss = logistic_loss(candidate, X, y)

            if candidate_loss <= loss:
                weights, loss = candidate, candidate_loss
                break

            rate /= 2

        losses.append(loss)

    return LogisticModel(weights=weights, side=data.side,
                         losses=tuple(losses))


def predict_map(model, feature):
    """
    Probability map: sigmoid of the model applied to the patch centered at
    every pixel (mirror padded at the borders)
    """
    feature = as_image(feature, 'feature image')
    z = ndimage.correlate(feature, model.coefficients, mode=MODE)
    return expit(z + model.bias)
