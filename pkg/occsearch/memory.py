"""
Volumetric memory: carrying moved object volume and previously seen free
space into the current field, and relaxing unobserved space toward
tau_occupancy
"""
import logging

import numpy as np

from . import etree, NSMAP, qname, TAU_OCCUPANCY, DEFAULT_ALPHA
from .base import XMLComparableBase
from .voxelcore import OBSERVED_FREE, check_geometry

logger = logging.getLogger(__name__)


def _flag(value):
    return "true" if value else "false"


def _parse_flag(value, default):
    if value is None:
        return default
    return value in ("true", "1")


class MemoryConfig(XMLComparableBase):
    """
    Memory element
    Has optional attributes:
        alpha: decay rate in (0, 1)
        tauOccupancy: occupancy threshold in (0, 1)
        positive: carry moved objects forward
        negative: carry previously free space forward
    """

    def __init__(self, alpha=DEFAULT_ALPHA, tau_occupancy=TAU_OCCUPANCY,
                 positive_enabled=True, negative_enabled=True):
        self.alpha = alpha
        self.tau_occupancy = tau_occupancy
        self.positive_enabled = positive_enabled
        self.negative_enabled = negative_enabled

    @property
    def alpha(self):
        return self._alpha

    @alpha.setter
    def alpha(self, value):
        if not isinstance(value, (int, float)):
            raise TypeError("alpha should be a number")
        if not 0.0 < value < 1.0:
            raise ValueError("alpha should be in (0, 1)")
        self._alpha = float(value)

    @property
    def tau_occupancy(self):
        return self._tau_occupancy

    @tau_occupancy.setter
    def tau_occupancy(self, value):
        if not isinstance(value, (int, float)):
            raise TypeError("tau_occupancy should be a number")
        if not 0.0 < value < 1.0:
            raise ValueError("tau_occupancy should be in (0, 1)")
        self._tau_occupancy = float(value)

    @property
    def positive_enabled(self):
        return self._positive_enabled

    @positive_enabled.setter
    def positive_enabled(self, value):
        self._positive_enabled = bool(value)

    @property
    def negative_enabled(self):
        return self._negative_enabled

    @negative_enabled.setter
    def negative_enabled(self, value):
        self._negative_enabled = bool(value)

    @property
    def enabled(self):
        return self._positive_enabled or self._negative_enabled

    @staticmethod
    def off(tau_occupancy=TAU_OCCUPANCY):
        return MemoryConfig(tau_occupancy=tau_occupancy, positive_enabled=False,
                            negative_enabled=False)

    def element(self):
        el = etree.Element(qname("Memory"), nsmap=NSMAP)
        el.set("alpha", repr(self._alpha))
        el.set("tauOccupancy", repr(self._tau_occupancy))
        el.set("positive", _flag(self._positive_enabled))
        el.set("negative", _flag(self._negative_enabled))
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        return MemoryConfig(
            float(xml.get("alpha", DEFAULT_ALPHA)),
            float(xml.get("tauOccupancy", TAU_OCCUPANCY)),
            _parse_flag(xml.get("positive"), True),
            _parse_flag(xml.get("negative"), True))


def transformed_mask(prev_object, transform):
    """
    Voxels of prev_object's geometry covered by prev_object moved by
    transform, found by mapping every candidate voxel center back
    """
    mask = np.zeros(prev_object.dims, dtype=bool)
    index = prev_object.indices()
    if len(index) == 0:
        return mask
    moved = transform.apply(prev_object.voxel_to_world(index))
    half = prev_object.resolution
    low = np.maximum(prev_object.world_to_voxel(moved.min(axis=0) - half), 0)
    high = np.minimum(prev_object.world_to_voxel(moved.max(axis=0) + half),
                      np.asarray(prev_object.dims) - 1)
    if np.any(high < low):
        return mask
    axes = [np.arange(low[a], high[a] + 1) for a in range(3)]
    candidates = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    source = prev_object.world_to_voxel(
        transform.inverse().apply(prev_object.voxel_to_world(candidates)))
    inside = prev_object.contains(source)
    s = source[inside]
    hit = np.zeros(len(candidates), dtype=bool)
    hit[inside] = prev_object.data[s[:, 0], s[:, 1], s[:, 2]]
    c = candidates[hit]
    mask[c[:, 0], c[:, 1], c[:, 2]] = True
    return mask


def apply_positive_memory(prev_object, transform, field):
    """
    Mark the unobserved voxels of the previous object grid, moved by the
    commanded transform, as occupied; voxels landing outside the workspace
    are dropped
    """
    check_geometry(prev_object, field)
    claim = transformed_mask(prev_object, transform) & field.unobserved()
    occupancy = field.occupancy.copy()
    occupancy[claim] = 1.0
    logger.debug("positive memory claimed %d voxels", int(claim.sum()))
    return field.with_values(occupancy=occupancy)


def apply_negative_memory(prev_field, field, claimed=None):
    """
    Voxels observed free before and unobserved now become free, except the
    ones claimed occupied by completion or positive memory; without an
    explicit claimed mask, unobserved voxels already known occupied count
    as claimed
    """
    check_geometry(prev_field, field)
    newly_hidden = (prev_field.observed == OBSERVED_FREE) & field.unobserved()
    if claimed is None:
        claimed = field.unobserved() & field.known_occupied()
    else:
        claimed = np.asarray(claimed, dtype=bool)
    clear = newly_hidden & ~claimed
    occupancy = field.occupancy.copy()
    occupancy[clear] = 0.0
    logger.debug("negative memory cleared %d voxels", int(clear.sum()))
    return field.with_values(occupancy=occupancy)


def decay_unobserved(field, cfg, steps=1):
    """
    V <- alpha V + (1 - alpha) tau on every unobserved voxel, steps times
    """
    if steps < 1:
        raise ValueError("steps should be at least 1")
    unobserved = field.unobserved()
    values = field.occupancy[unobserved]
    alpha = cfg.alpha
    tau = cfg.tau_occupancy
    for _ in range(int(steps)):
        values = alpha * values + (1.0 - alpha) * tau
    occupancy = field.occupancy.copy()
    occupancy[unobserved] = np.clip(values, 0.0, 1.0)
    return field.with_values(occupancy=occupancy)


def fuse_belief(field, cfg, prior=None, claims=None, moved=()):
    """
    Compose the belief for this step

    field: fresh single frame OccupancyField
    cfg: MemoryConfig, memory off keeps unobserved voxels at tau_occupancy
    prior: belief of the previous step
    claims: bool grid of voxels completion says are occupied
    moved: (prev_object, transform) pairs, the object grids of the previous
        step and their commanded motions

    Precedence on unobserved voxels, lowest first: decayed prior, negative
    memory, positive memory, completion. Observed voxels keep their value.
    """
    unobserved = field.unobserved()
    occupancy = field.occupancy.copy()
    remember = cfg is not None and cfg.enabled and prior is not None
    if remember:
        check_geometry(prior, field)
        decayed = decay_unobserved(prior.with_values(observed=np.zeros(
            prior.dims, dtype=np.int8)), cfg).occupancy.copy()
        tau = field.tau_occupancy
        if not cfg.negative_enabled:
            decayed = np.maximum(decayed, tau)
        if not cfg.positive_enabled:
            decayed = np.minimum(decayed, tau)
        # a moved object's old place is not remembered as occupied
        for prev_object, _ in moved:
            decayed[prev_object.data] = field.tau_occupancy
        occupancy[unobserved] = decayed[unobserved]
        if cfg.negative_enabled:
            hidden = (prior.observed == OBSERVED_FREE) & unobserved
            occupancy[hidden] = 0.0
        if cfg.positive_enabled:
            for prev_object, transform in moved:
                claim = transformed_mask(prev_object, transform) & unobserved
                occupancy[claim] = 1.0
    if claims is not None:
        claims = np.asarray(claims, dtype=bool) & unobserved
        occupancy[claims] = 1.0
    return field.with_values(occupancy=occupancy)
