"""
Shadows cast by occupied voxels and occlusion driven object selection
"""
import logging

import numpy as np

from . import TABLE_LABEL, UNLABELED
from .camera import Camera
from .exceptions import NoSelectableObjectError
from .geometry import march
from .voxelcore import BinaryVoxelGrid

logger = logging.getLogger(__name__)

TABLE_RETRIES = 32


class ShadowSet:
    """
    Unknown voxels hidden from the camera

    voxels: (n, 3) indices of the shadow voxels
    blockers: (n, 3) index of the first occupied voxel on each voxel's
        camera ray, walking from the camera
    bits: (n,) uint64 label bits of every occupied voxel on the ray, or None
    """

    def __init__(self, geometry, voxels, blockers, bits=None):
        voxels = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)
        blockers = np.asarray(blockers, dtype=np.int64).reshape(-1, 3)
        if len(voxels) != len(blockers):
            raise ValueError("every shadow voxel needs a blocker")
        self.geometry = geometry
        self.voxels = voxels
        self.blockers = blockers
        self.bits = None if bits is None else np.asarray(bits, dtype=np.uint64)

    def __len__(self):
        return len(self.voxels)

    def mask(self):
        mask = np.zeros(self.geometry.dims, dtype=bool)
        mask[self.voxels[:, 0], self.voxels[:, 1], self.voxels[:, 2]] = True
        return mask

    def to_grid(self):
        """Shadow voxels as a BinaryVoxelGrid, for the grid file format"""
        return BinaryVoxelGrid.from_mask(self.geometry, self.mask())

    def blocker_labels(self, lookup):
        b = self.blockers
        return lookup[b[:, 0], b[:, 1], b[:, 2]].astype(np.int64)

    def __repr__(self):
        return "ShadowSet({} voxels)".format(len(self))


def raycast(field, origin, target):
    """
    First known occupied voxel on the segment origin -> target, not counting
    the voxel holding target; None when the segment is clear
    """
    hit, _, _ = march(field, origin, target, occupied=field.known_occupied(),
                      skip_end=True)
    if hit[0, 0] < 0:
        return None
    return tuple(int(v) for v in hit[0])


def compute_occlusions(field, camera, labels=None, floor_layers=0):
    """
    Shadow voxels of a field seen from camera

    A voxel is a shadow when it is unknown, at or above floor_layers, in view
    when camera is a Camera, and some known occupied voxel blocks the segment
    from the camera to its center. With labels the label bits met along
    every ray are kept as well.
    """
    candidates = field.unknown()
    candidates[:, :, :floor_layers] = False
    index = np.argwhere(candidates)
    centers = field.voxel_to_world(index)
    if isinstance(camera, Camera):
        keep = camera.in_view(centers)
        index = index[keep]
        centers = centers[keep]
        origin = camera.position
    else:
        origin = np.asarray(camera, dtype=np.float64)
    if len(index) == 0:
        return ShadowSet(field.geometry, index, index,
                         None if labels is None else np.zeros(0, dtype=np.uint64))

    hit, _, bits = march(field, origin, centers, occupied=field.known_occupied(),
                         labels=labels, skip_end=True, first_only=labels is None)
    blocked = hit[:, 0] >= 0
    logger.debug("%d of %d unknown voxels in view are shadows",
                 int(blocked.sum()), len(index))
    return ShadowSet(field.geometry, index[blocked], hit[blocked],
                     None if bits is None else bits[blocked])


def select_object(shadows, lookup, rng, max_retries=TABLE_RETRIES):
    """
    Sample a shadow voxel uniformly and return the label of the object whose
    voxel blocks it, resampling when the blocker is the table or unlabelled
    """
    if len(shadows) == 0:
        raise NoSelectableObjectError("no shadow voxels to sample")
    for _ in range(max_retries):
        i = int(rng.integers(len(shadows)))
        b = shadows.blockers[i]
        label = int(lookup[b[0], b[1], b[2]])
        if TABLE_LABEL < label < UNLABELED:
            return label
    raise NoSelectableObjectError(
        "all {} samples were cast by the table or unknown matter".format(max_retries))
