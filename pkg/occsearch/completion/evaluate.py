"""
Chamfer distance of a completer's output against the true volume over a
dataset
"""
from collections import OrderedDict
import csv
import logging
import math

import numpy as np

from ..exceptions import CompletionError, EmptyInputError
from ..voxelcore import grid_distance
from . import CompletionInput, complete

logger = logging.getLogger(__name__)

EVALUATION_COLUMNS = ("example_id", "shape", "chamfer")


def _mean_stderr(values):
    if len(values) == 0:
        return math.nan, math.nan
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


class CompletionStats:
    """
    Per-example Chamfer distances in dataset order, None for examples the
    completer failed on

    mean and stderr (sample stddev / sqrt(N)) cover the examples that
    completed; by_shape gives the same pair per shape name
    """

    def __init__(self, completer_name, rows):
        self.completer = completer_name
        self.rows = list(rows)
        values = [c for _, _, c in self.rows if c is not None]
        self.mean, self.stderr = _mean_stderr(values)

    @property
    def failures(self):
        return sum(1 for _, _, c in self.rows if c is None)

    @property
    def chamfer(self):
        return [c for _, _, c in self.rows]

    @property
    def by_shape(self):
        shapes = OrderedDict()
        for _, shape, c in self.rows:
            if c is not None:
                shapes.setdefault(shape, []).append(c)
        return OrderedDict((s, _mean_stderr(v)) for s, v in shapes.items())

    def __repr__(self):
        return "CompletionStats({}, mean={:.3e}, stderr={:.3e}, n={}, failures={})".format(
            self.completer, self.mean, self.stderr, len(self.rows), self.failures)


def evaluate_completer(completer, dataset):
    """grid_distance(complete(completer, example), truth) for every example"""
    if len(dataset) == 0:
        raise ValueError("dataset should not be empty")
    rows = []
    for number, triple in enumerate(dataset):
        example_id = triple.example_id or "{:05d}".format(number)
        completion_input = CompletionInput(triple.partial, triple.free, triple.viewpoint)
        try:
            result = complete(completer, completion_input)
            value = grid_distance(result.completed, triple.truth)
        except (CompletionError, EmptyInputError) as e:
            logger.warning("example %s failed: %s", example_id, e)
            value = None
        rows.append((example_id, triple.shape, value))
    stats = CompletionStats(completer.name, rows)
    logger.info("%r", stats)
    return stats


def write_evaluation_csv(stats, path):
    """One row per example, an empty chamfer cell for failures"""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(EVALUATION_COLUMNS)
        for example_id, shape, value in stats.rows:
            writer.writerow([example_id, shape, "" if value is None else repr(value)])
