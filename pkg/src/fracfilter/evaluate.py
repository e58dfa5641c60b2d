"""
Curve detection metrics: tolerant pixel correspondence, precision/recall
curves and the dataset summaries ODS (best F at one shared threshold), OIS
(mean of per-image best F) and AP (area under the aggregated
precision/recall curve)
"""
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial import cKDTree

from fracfilter.commons import as_image, check_same_shape
from fracfilter.detect import fixed_threshold
from fracfilter.enum import Matcher
from fracfilter.exceptions import InvalidArgumentError

SCHEMA_VERSION = 1
DEFAULT_D_MAX = 2.0


def _ratio(num, den):
    return num / den if den else 0.0


@dataclass(frozen=True)
class PRPoint:
    threshold: float
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, threshold, tp, fp, fn):
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        f1 = _ratio(2 * precision * recall, precision + recall)
        return cls(threshold=float(threshold),
                   tp=int(tp),
                   fp=int(fp),
                   fn=int(fn),
                   precision=precision,
                   recall=recall,
                   f1=f1)


@dataclass(frozen=True)
class DatasetMetrics:
    ods: float
    ois: float
    ap: float
    ods_threshold: float
    aggregate: tuple
    per_image: tuple

    def best_points(self):
        """The best-F point of every image
        """
        return [max(curve, key=lambda p: p.f1) for curve in self.per_image]


class _GroundTruth:
    """Ground truth positives with a spatial index, reused across thresholds
    """

    def __init__(self, gt):
        self.points = np.argwhere(np.asarray(gt) != 0)
        self.tree = cKDTree(self.points) if len(self.points) else None

    def __len__(self):
        return len(self.points)

    def count_matches(self, pred, d_max, matcher):
        pred_points = np.argwhere(np.asarray(pred) != 0)

        if not len(pred_points) or self.tree is None:
            return 0

        neighbors = self.tree.query_ball_point(pred_points, r=d_max)

        if matcher is Matcher.greedy:
            return _greedy(pred_points, self.points, neighbors)

        return _maximum_matching(neighbors, len(pred_points),
                                 len(self.points))


def _maximum_matching(neighbors, n_pred, n_gt):
    indptr = np.zeros(n_pred + 1, dtype=np.intp)
    indptr[1:] = np.cumsum([len(n) for n in neighbors])

    if indptr[-1] == 0:
        return 0

    indices = np.concatenate([np.asarray(n, dtype=np.intp)
                              for n in neighbors])
    graph = csr_matrix((np.ones(len(indices)), indices, indptr),
                       shape=(n_pred, n_gt))
    matched = maximum_bipartite_matching(graph, perm_type='column')
    return int(np.count_nonzero(matched >= 0))


def _greedy(pred_points, gt_points, neighbors):
    # predictions in raster order take the nearest free ground truth pixel,
    # ties go to the first ground truth pixel in raster order
    taken = np.zeros(len(gt_points), dtype=bool)
    tp = 0

    for point, candidates in zip(pred_points, neighbors):
        free = [c for c in sorted(candidates) if not taken[c]]

        if not free:
            continue

        d2 = ((gt_points[free] - point)**2).sum(axis=1)
        taken[free[int(np.argmin(d2))]] = True
        tp += 1

    return tp


def _resolve_matcher(matcher):
    if matcher not in Matcher:
        raise InvalidArgumentError(f'Unknown matcher {matcher!r}, expected '
                                   f'one of {Matcher.get_values()}')
    return Matcher(matcher)


def _check_d_max(d_max):
    if not d_max >= 0:
        raise InvalidArgumentError('Expected d_max to be non-negative, '
                                   f'got {d_max!r}')


def match_tolerant(pred,
                   gt,
                   d_max=DEFAULT_D_MAX,
                   matcher=Matcher.optimal):
    """
    One-to-one correspondence between predicted and ground truth positives
    closer than d_max pixels (Euclidean)

    Parameters
    ----------
    pred, gt : array-like
        Binary maps of the same shape

    d_max : float, default=2.0
        Maximum matching distance, in pixels

    matcher : str or Matcher, default='optimal'
        'optimal' finds a maximum matching; 'greedy' visits predictions in
        raster order and gives each the nearest free ground truth pixel

    Returns
    -------
    tuple of int
        (tp, fp, fn)
    """
    check_same_shape(pred, gt, what='prediction and ground truth')
    _check_d_max(d_max)
    matcher = _resolve_matcher(matcher)

    truth = _GroundTruth(gt)
    n_pred = int(np.count_nonzero(pred))
    tp = truth.count_matches(pred, d_max, matcher)
    return tp, n_pred - tp, len(truth) - tp


def pr_curve(prob, gt, thresholds, d_max=DEFAULT_D_MAX,
             matcher=Matcher.optimal):
    """
    Precision/recall at every threshold, thresholding ``prob`` with
    fixed_threshold

    Returns
    -------
    list of PRPoint
    """
    prob = as_image(prob, 'probability map')
    check_same_shape(prob, gt, what='probability map and ground truth')
    _check_d_max(d_max)
    matcher = _resolve_matcher(matcher)
    thresholds = [float(t) for t in np.atleast_1d(thresholds)]

    if not thresholds:
        raise InvalidArgumentError('Expected at least one threshold')

    truth = _GroundTruth(gt)
    points = []

    for t in thresholds:
        pred = fixed_threshold(prob, t)
        n_pred = int(np.count_nonzero(pred))
        tp = truth.count_matches(pred, d_max, matcher)
        points.append(
            PRPoint.from_counts(t, tp, n_pred - tp, len(truth) - tp))

    return points


def average_precision(points):
    """
    Area under the precision/recall curve, with precision replaced by its
    envelope max_{r' >= r} p(r') and the curve extended to recall 0
    """
    recall = np.array([p.recall for p in points])
    precision = np.array([p.precision for p in points])
    order = np.argsort(recall, kind='stable')
    recall, precision = recall[order], precision[order]

    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    recall = np.concatenate([[0.0], recall])
    envelope = np.concatenate([envelope[:1], envelope])

    area = np.sum(np.diff(recall) * (envelope[1:] + envelope[:-1]) / 2)
    return float(np.clip(area, 0.0, 1.0))


def dataset_metrics(curves):
    """
    ODS, OIS and AP from per-image precision/recall curves computed over the
    same thresholds

    Parameters
    ----------
    curves : list of list of PRPoint
        One curve per image

    Returns
    -------
    DatasetMetrics
    """
    curves = [list(c) for c in curves]

    if not curves:
        raise InvalidArgumentError('Expected at least one image to evaluate')

    thresholds = [p.threshold for p in curves[0]]

    if not thresholds:
        raise InvalidArgumentError('Expected at least one threshold')

    for curve in curves[1:]:
        if [p.threshold for p in curve] != thresholds:
            raise InvalidArgumentError(
                'Expected every image to be evaluated over the same '
                'threshold grid')

    aggregate = []

    for i, t in enumerate(thresholds):
        aggregate.append(
            PRPoint.from_counts(t, sum(c[i].tp for c in curves),
                                sum(c[i].fp for c in curves),
                                sum(c[i].fn for c in curves)))

    best = max(range(len(aggregate)), key=lambda i: aggregate[i].f1)
    ois = float(np.mean([max(p.f1 for p in c) for c in curves]))

    return DatasetMetrics(ods=aggregate[best].f1,
                          ois=ois,
                          ap=average_precision(aggregate),
                          ods_threshold=aggregate[best].threshold,
                          aggregate=tuple(aggregate),
                          per_image=tuple(tuple(c) for c in curves))


def metrics_to_dict(metrics, names=None, **metadata):
    """JSON-serializable summary, versioned with a top-level schema key
    """
    names = names or [f'image_{i}' for i in range(len(metrics.per_image))]
    images = []

    for name, point in zip(names, metrics.best_points()):
        images.append({
            'name': name,
            'best_f1': point.f1,
            'best_threshold': point.threshold,
            'precision': point.precision,
            'recall': point.recall,
        })

    return {
        'schema': SCHEMA_VERSION,
        'ods': metrics.ods,
        'ois': metrics.ois,
        'ap': metrics.ap,
        'ods_threshold': metrics.ods_threshold,
        **metadata,
        'images': images,
    }
