import itertools

import numpy as np
import pytest

from fracfilter.evaluate import (PRPoint, average_precision, dataset_metrics,
                                 match_tolerant, metrics_to_dict, pr_curve)
from fracfilter.exceptions import InvalidArgumentError, ShapeMismatchError


def _maps(shape):
    n = shape[0] * shape[1]

    for bits in itertools.product([0, 1], repeat=n):
        yield np.array(bits, dtype=np.uint8).reshape(shape)


def _exhaustive_matches(pred, gt, d_max):
    """Largest one-to-one matching, by trying every assignment
    """
    preds = np.argwhere(pred)
    gts = np.argwhere(gt)
    near = [[j for j, g in enumerate(gts) if np.hypot(*(p - g)) <= d_max]
            for p in preds]

    def best(i, used):
        if i == len(preds):
            return 0

        options = [best(i + 1, used)]
        options += [
            1 + best(i + 1, used | {j}) for j in near[i] if j not in used
        ]
        return max(options)

    return best(0, frozenset())


def _augmenting_matches(pred, gt, d_max):
    """Maximum matching size with simple augmenting paths (Kuhn)
    """
    preds = np.argwhere(pred)
    gts = np.argwhere(gt)
    near = [[j for j, g in enumerate(gts) if np.hypot(*(p - g)) <= d_max]
            for p in preds]
    owner = {}

    def augment(i, seen):
        for j in near[i]:
            if j in seen:
                continue

            seen.add(j)

            if j not in owner or augment(owner[j], seen):
                owner[j] = i
                return True

        return False

    return sum(augment(i, set()) for i in range(len(preds)))


@pytest.fixture
def two_images():
    """
    Image a is perfect at t=0.3 (its curve has probability 0.5), image b is
    perfect at t=0.7 (a 0.5 false positive next to a 0.9 curve pixel)
    """
    gt_a = np.zeros((3, 3), dtype=np.uint8)
    gt_a[0, 0] = gt_a[2, 2] = 1
    prob_a = gt_a * 0.5

    gt_b = np.zeros((3, 3), dtype=np.uint8)
    gt_b[1, 1] = 1
    prob_b = gt_b * 0.9
    prob_b[0, 2] = 0.5

    return [(prob_a, gt_a), (prob_b, gt_b)]


def test_identical_maps_match_exactly(rng):
    gt = (rng.uniform(size=(12, 12)) > 0.8).astype(np.uint8)
    n = int(gt.sum())

    assert match_tolerant(gt, gt, d_max=0) == (n, 0, 0)
    assert match_tolerant(gt, gt, d_max=3) == (n, 0, 0)


@pytest.mark.parametrize('d_max, expected', [
    [2, (1, 0, 0)],
    [1, (1, 0, 0)],
    [0.5, (0, 1, 1)],
])
def test_shifted_pixel(d_max, expected):
    gt = np.zeros((5, 5), dtype=np.uint8)
    gt[2, 2] = 1
    pred = np.roll(gt, 1, axis=1)

    assert match_tolerant(pred, gt, d_max=d_max) == expected


def test_empty_prediction():
    gt = np.zeros((4, 4), dtype=np.uint8)
    gt[1, :] = 1

    assert match_tolerant(np.zeros((4, 4)), gt) == (0, 0, 4)


def test_empty_ground_truth():
    pred = np.eye(4)
    assert match_tolerant(pred, np.zeros((4, 4))) == (0, 4, 0)


def test_greedy_can_be_suboptimal():
    # a sits on g1 and is 1.41 px from g2, b only reaches g1
    gt = np.zeros((3, 4), dtype=np.uint8)
    gt[1, 1] = gt[0, 0] = 1
    pred = np.zeros((3, 4), dtype=np.uint8)
    pred[1, 1] = pred[1, 3] = 1

    assert match_tolerant(pred, gt, d_max=2, matcher='greedy') == (1, 1, 1)
    assert match_tolerant(pred, gt, d_max=2, matcher='optimal') == (2, 0, 0)


@pytest.mark.parametrize('shape', [(1, 1), (1, 2), (1, 3), (1, 4), (2, 2),
                                   (2, 3)])
@pytest.mark.parametrize('d_max', [0, 1, 1.5, 2])
def test_optimal_matcher_agrees_with_exhaustive_search(shape, d_max):
    for pred in _maps(shape):
        for gt in _maps(shape):
            tp, fp, fn = match_tolerant(pred, gt, d_max=d_max)

            assert tp == _exhaustive_matches(pred, gt, d_max)
            assert fp == pred.sum() - tp
            assert fn == gt.sum() - tp


@pytest.mark.slow
@pytest.mark.parametrize('shape, d_max', [
    [(2, 4), 1],
    [(2, 4), 1.5],
    [(3, 3), 1.5],
])
def test_optimal_matcher_on_every_pair_of_larger_maps(shape, d_max):
    # augmenting paths give the exact maximum matching
    for pred in _maps(shape):
        for gt in _maps(shape):
            tp, _, _ = match_tolerant(pred, gt, d_max=d_max)
            assert tp == _augmenting_matches(pred, gt, d_max)


def test_optimal_matcher_agrees_on_random_pairs(rng):
    for _ in range(300):
        pred = (rng.uniform(size=(4, 4)) > 0.5).astype(np.uint8)
        gt = (rng.uniform(size=(4, 4)) > 0.5).astype(np.uint8)
        d_max = rng.choice([0, 1, 1.5, 2, 3])

        tp, _, _ = match_tolerant(pred, gt, d_max=d_max)

        assert tp == _augmenting_matches(pred, gt, d_max)


@pytest.mark.parametrize('matcher', ['optimal', 'greedy'])
def test_swapping_maps_swaps_errors(matcher, rng):
    for _ in range(50):
        pred = (rng.uniform(size=(6, 6)) > 0.6).astype(np.uint8)
        gt = (rng.uniform(size=(6, 6)) > 0.6).astype(np.uint8)

        tp, fp, fn = match_tolerant(pred, gt, matcher=matcher)
        tp_, fp_, fn_ = match_tolerant(gt, pred, matcher=matcher)

        if matcher == 'optimal':
            assert (tp_, fp_, fn_) == (tp, fn, fp)
        else:
            assert fp_ - fn_ == fn - fp


def test_match_shape_mismatch():
    with pytest.raises(ShapeMismatchError) as excinfo:
        match_tolerant(np.zeros((3, 3)), np.zeros((3, 4)))

    assert str(excinfo.value) == ('Expected prediction and ground truth with '
                                  'the same shape, got: (3, 3), (3, 4)')


def test_match_negative_distance():
    with pytest.raises(InvalidArgumentError) as excinfo:
        match_tolerant(np.zeros((3, 3)), np.zeros((3, 3)), d_max=-1)

    assert str(excinfo.value) == 'Expected d_max to be non-negative, got -1'


def test_match_unknown_matcher():
    with pytest.raises(InvalidArgumentError) as excinfo:
        match_tolerant(np.zeros((3, 3)), np.zeros((3, 3)), matcher='best')

    assert str(excinfo.value) == ("Unknown matcher 'best', expected one of "
                                  "['optimal', 'greedy']")


def test_pr_point_counts():
    point = PRPoint.from_counts(0.5, tp=3, fp=1, fn=2)

    assert point.precision == 0.75
    assert point.recall == 0.6
    assert point.f1 == pytest.approx(2 * 0.75 * 0.6 / 1.35)


def test_pr_point_empty():
    point = PRPoint.from_counts(0.5, tp=0, fp=0, fn=0)
    assert (point.precision, point.recall, point.f1) == (0, 0, 0)


def test_pr_curve_perfect(rng):
    gt = (rng.uniform(size=(8, 8)) > 0.7).astype(np.uint8)

    (point, ) = pr_curve(gt.astype(float), gt, [0.5])

    assert (point.precision, point.recall, point.f1) == (1, 1, 1)


def test_pr_curve_empty_prediction():
    gt = np.eye(5, dtype=np.uint8)

    (point, ) = pr_curve(np.full((5, 5), 0.5), gt, [0.6])

    assert (point.tp, point.fp, point.fn) == (0, 0, 5)
    assert (point.precision, point.recall) == (0, 0)


def test_pr_curve_by_hand():
    gt = np.zeros((5, 5), dtype=np.uint8)
    gt[2] = 1
    prob = np.zeros((5, 5))
    prob[2] = [0.9, 0.8, 0.6, 0.4, 0.2]
    prob[0, 0] = 0.7
    prob[4, 4] = 0.3

    points = pr_curve(prob, gt, [0.25, 0.5, 0.75], d_max=0)

    assert [(p.tp, p.fp, p.fn) for p in points] == [(4, 2, 1), (3, 1, 2),
                                                    (2, 0, 3)]
    np.testing.assert_allclose([p.precision for p in points],
                               [4 / 6, 3 / 4, 1])
    np.testing.assert_allclose([p.recall for p in points],
                               [4 / 5, 3 / 5, 2 / 5])


def test_pr_curve_needs_thresholds():
    with pytest.raises(InvalidArgumentError) as excinfo:
        pr_curve(np.zeros((2, 2)), np.zeros((2, 2)), [])

    assert str(excinfo.value) == 'Expected at least one threshold'


def test_perfect_detector_scores_one(rng):
    gt = (rng.uniform(size=(10, 10)) > 0.8).astype(np.uint8)

    metrics = dataset_metrics([pr_curve(gt.astype(float), gt, [0.5])])

    assert (metrics.ods, metrics.ois, metrics.ap) == (1, 1, 1)


def test_hand_computed_dataset(two_images):
    curves = [
        pr_curve(prob, gt, [0.3, 0.7], d_max=0) for prob, gt in two_images
    ]

    metrics = dataset_metrics(curves)

    assert metrics.ods == pytest.approx(6 / 7, abs=1e-9)
    assert metrics.ods_threshold == 0.3
    assert metrics.ois == pytest.approx(1, abs=1e-9)
    assert metrics.ap == pytest.approx(11 / 12, abs=1e-9)
    assert metrics.ois > metrics.ods
    assert [p.threshold for p in metrics.best_points()] == [0.3, 0.7]


def test_ods_does_not_exceed_ois(rng):
    thresholds = np.arange(1, 20) / 20

    for _ in range(100):
        curves = []

        for _ in range(rng.integers(1, 5)):
            gt = np.zeros(64, dtype=np.uint8)
            gt[rng.choice(64, size=12, replace=False)] = 1
            gt = gt.reshape(8, 8)
            prob = 0.5 * gt + 0.5 * rng.uniform(size=(8, 8))
            curves.append(pr_curve(prob, gt, thresholds, d_max=1))

        metrics = dataset_metrics(curves)

        assert metrics.ods <= metrics.ois + 1e-12
        assert 0 <= metrics.ap <= 1


def test_average_precision_envelope():
    points = [
        PRPoint.from_counts(0.1, tp=4, fp=4, fn=0),
        PRPoint.from_counts(0.5, tp=2, fp=2, fn=2),
        PRPoint.from_counts(0.9, tp=1, fp=0, fn=3),
    ]

    # recall 0.25 -> 1, 0.5 -> 0.5, 1 -> 0.5
    expected = 0.25 * 1 + 0.25 * 0.75 + 0.5 * 0.5
    assert average_precision(points) == pytest.approx(expected)


def test_average_precision_without_full_recall():
    points = [PRPoint.from_counts(0.5, tp=1, fp=0, fn=1)]
    assert average_precision(points) == pytest.approx(0.5)


def test_dataset_metrics_empty():
    with pytest.raises(InvalidArgumentError) as excinfo:
        dataset_metrics([])

    assert str(excinfo.value) == 'Expected at least one image to evaluate'


def test_dataset_metrics_mismatched_grids():
    gt = np.eye(3, dtype=np.uint8)

    with pytest.raises(InvalidArgumentError) as excinfo:
        dataset_metrics([pr_curve(gt, gt, [0.5]), pr_curve(gt, gt, [0.4])])

    assert 'same threshold grid' in str(excinfo.value)


def test_metrics_to_dict(two_images):
    curves = [pr_curve(prob, gt, [0.3, 0.7], d_max=0) for prob, gt in
              two_images]

    data = metrics_to_dict(dataset_metrics(curves),
                           names=['a', 'b'],
                           matcher='optimal',
                           d_max=0)

    assert data['schema'] == 1
    assert data['matcher'] == 'optimal'
    assert data['d_max'] == 0
    assert [image['name'] for image in data['images']] == ['a', 'b']
    assert [image['best_f1'] for image in data['images']] == [1, 1]
