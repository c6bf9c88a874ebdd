"""
Shape completion behind a pluggable interface

Every completer's raw guess is projected onto the feasible set: it keeps
the visible surface and never claims space seen to be free.
"""
from abc import ABC, abstractmethod
import logging

import numpy as np

from ..exceptions import EmptyInputError
from ..voxelcore import BinaryVoxelGrid, check_geometry

logger = logging.getLogger(__name__)


class CompletionInput:
    """
    partial: visible surface voxels
    free: voxels seen to be empty
    viewpoint: camera position in the grid's world frame, if known
    """

    def __init__(self, partial, free, viewpoint=None):
        if not isinstance(partial, BinaryVoxelGrid) or not isinstance(free, BinaryVoxelGrid):
            raise TypeError("partial and free should be BinaryVoxelGrids")
        check_geometry(partial, free)
        if np.any(partial.data & free.data):
            raise ValueError("partial and free should not overlap")
        self.partial = partial
        self.free = free
        self.viewpoint = None if viewpoint is None else np.asarray(viewpoint, dtype=np.float64)


class CompletionResult:
    """completed: the visible surface plus whatever the completer added"""

    def __init__(self, completed):
        self.completed = completed

    def __repr__(self):
        return "CompletionResult({!r})".format(self.completed)


class Completer(ABC):
    """Base completer, predict returns a raw grid in the input's geometry"""

    name = None

    @abstractmethod
    def predict(self, completion_input):
        pass

    def __repr__(self):
        return "{}()".format(type(self).__name__)


def enforce_constraints(raw, completion_input):
    """(raw | partial) - free"""
    check_geometry(raw, completion_input.partial)
    data = (raw.data | completion_input.partial.data) & ~completion_input.free.data
    return CompletionResult(raw.with_data(data))


def complete(completer, completion_input):
    """Run a completer and project its guess onto the constraints"""
    if completion_input.partial.is_empty():
        raise EmptyInputError("partial")
    raw = completer.predict(completion_input)
    return enforce_constraints(raw, completion_input)


from .primitives import voxelize_primitive, PRIMITIVES
from .baselines import NullCompleter, PrismHullCompleter, CameraExtrudeCompleter, \
    prism_footprint
from .external import ExternalCompleter

COMPLETERS = {
    NullCompleter.name: NullCompleter,
    PrismHullCompleter.name: PrismHullCompleter,
    CameraExtrudeCompleter.name: CameraExtrudeCompleter,
    ExternalCompleter.name: ExternalCompleter,
}


def get_completer(name, **kwargs):
    """Build a completer by name"""
    if name not in COMPLETERS:
        raise ValueError("unknown completer {}, choose from {}".format(
            name, ", ".join(sorted(COMPLETERS))))
    return COMPLETERS[name](**kwargs)


from .dataset import OccluderSpec, DatasetCamera, DatasetTriple, \
    synthesize_dataset, save_dataset, load_dataset, split_dataset, \
    default_shapes, dataset_geometry
from .evaluate import CompletionStats, evaluate_completer, write_evaluation_csv
