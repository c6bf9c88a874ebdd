"""
Simulated RGB-D sensing: rendering, segmentation, target detection and
carving an observation into an occupancy field
"""
import logging

import numpy as np

from . import TAU_OCCUPANCY, TAU_TARGET, NO_LABEL, TABLE_LABEL
from .geometry import march
from .scene import TABLE_COLOR
from .voxelcore import OccupancyField, UNOBSERVED, OBSERVED_FREE, \
    OBSERVED_OCCUPIED

logger = logging.getLogger(__name__)

BACKGROUND_COLOR = (0.0, 0.0, 0.0)
# how far past the hit distance a ray point is taken to sit inside the hit voxel
HIT_EPSILON = 1e-6


class Observation:
    """
    One RGB-D frame

    depth: (height, width) meters to the first surface, 0 where nothing
    color: (height, width, 3) RGB in [0, 1]
    labels: (height, width) segment label per pixel, NO_LABEL for background
    camera: the Camera that took it
    """

    def __init__(self, depth, color, labels, camera):
        depth = np.asarray(depth, dtype=np.float64)
        color = np.asarray(color, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int16)
        if depth.shape != camera.shape or labels.shape != camera.shape:
            raise ValueError("depth and labels should be {}".format(camera.shape))
        if color.shape != camera.shape + (3,):
            raise ValueError("color should be {}".format(camera.shape + (3,)))
        labelled = labels != NO_LABEL
        if np.any(~np.isfinite(depth[labelled])) or np.any(depth[labelled] <= 0):
            raise ValueError("labelled pixels should have positive depth")
        self.depth = depth
        self.color = color
        self.labels = labels
        self.camera = camera

    def digest_bytes(self):
        return self.depth.tobytes() + self.labels.tobytes()


class Segment:
    """Pixels of one perceived object, members lists the merged labels"""

    def __init__(self, label, mask, members=None):
        self.label = int(label)
        self.mask = mask
        self.members = tuple(members) if members else (self.label,)

    def __repr__(self):
        return "Segment(label={}, pixels={}, members={})".format(
            self.label, int(self.mask.sum()), self.members)


class SegmentationNoise:
    """Merge visibly adjacent objects with probability p_merge"""

    def __init__(self, p_merge=0.0):
        if not 0.0 <= p_merge <= 1.0:
            raise ValueError("p_merge should be in [0, 1]")
        self.p_merge = float(p_merge)


class TargetClassifier:
    """Pixels within tau_target of the reference color in RGB belong to the target"""

    def __init__(self, reference, tau_target=TAU_TARGET):
        reference = np.asarray(reference, dtype=np.float64)
        if reference.shape != (3,):
            raise ValueError("reference should be an RGB triple")
        if not 0.0 < tau_target <= 1.0:
            raise ValueError("tau_target should be in (0, 1]")
        self.reference = reference
        self.tau_target = float(tau_target)


def render_observation(scene):
    """
    Cast one ray per pixel through the ground truth labels; depth is the
    distance to where the ray enters the first table or object voxel
    """
    camera = scene.camera
    geometry = scene.field_geometry
    labels = scene.label_grid()
    far = camera.far_distance(geometry)
    ends = camera.position + camera.pixel_rays() * far
    hit, t_hit, _ = march(geometry, camera.position, ends,
                          occupied=labels != NO_LABEL, skip_end=False)
    found = hit[:, 0] >= 0

    depth = np.zeros(len(hit))
    depth[found] = t_hit[found] * far
    label_image = np.full(len(hit), NO_LABEL, dtype=np.int16)
    label_image[found] = labels[hit[found, 0], hit[found, 1], hit[found, 2]]

    palette = {TABLE_LABEL: TABLE_COLOR}
    palette.update({obj.label: obj.color for obj in scene.objects})
    color = np.tile(np.asarray(BACKGROUND_COLOR), (len(hit), 1))
    for label, rgb in palette.items():
        color[label_image == label] = rgb

    shape = camera.shape
    return Observation(depth.reshape(shape), color.reshape(shape + (3,)),
                       label_image.reshape(shape), camera)


def _adjacent_pairs(labels):
    pairs = set()
    for a, b in ((labels[:, :-1], labels[:, 1:]), (labels[:-1, :], labels[1:, :])):
        touching = (a != b) & (a > TABLE_LABEL) & (b > TABLE_LABEL)
        for x, y in zip(a[touching].tolist(), b[touching].tolist()):
            pairs.add((min(x, y), max(x, y)))
    return sorted(pairs)


def segment(obs, noise=None, rng=None):
    """
    One mask per visible object, table and background left out; with a
    noise model, visibly adjacent objects merge with probability p_merge
    """
    labels = obs.labels
    present = sorted(int(v) for v in np.unique(labels) if v > TABLE_LABEL)
    parent = {label: label for label in present}

    def find(label):
        while parent[label] != label:
            label = parent[label]
        return label

    if noise is not None and noise.p_merge > 0.0:
        if rng is None:
            raise ValueError("segmentation noise needs an rng")
        for a, b in _adjacent_pairs(labels):
            if rng.random() < noise.p_merge:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)

    groups = {}
    for label in present:
        groups.setdefault(find(label), []).append(label)

    segments = []
    for members in groups.values():
        mask = np.isin(labels, members)
        sizes = [(int((labels == m).sum()), -m) for m in members]
        dominant = -max(sizes)[1]
        segments.append(Segment(dominant, mask, sorted(members)))
    segments.sort(key=lambda s: s.label)
    return segments


def detect_target(obs, classifier):
    """Pixels whose color is within tau_target of the reference"""
    distance = np.linalg.norm(obs.color - classifier.reference, axis=-1)
    return distance < classifier.tau_target


def hit_voxels(obs, geometry):
    """
    Pixel numbers with a return inside the grid and the voxel each one hit
    """
    camera = obs.camera
    depth = obs.depth.ravel()
    pixels = np.nonzero(depth > 0)[0]
    points = camera.position + camera.pixel_rays()[pixels] * \
        (depth[pixels] + HIT_EPSILON)[:, None]
    voxels = geometry.world_to_voxel(points)
    inside = geometry.contains(voxels)
    return pixels[inside], voxels[inside], points[inside]


def build_occupancy(obs, geometry, tau_occupancy=TAU_OCCUPANCY, margin=0.05):
    """
    Carve the observation into an OccupancyField: voxels strictly between
    the camera and each hit are observed free, hit voxels observed occupied
    and everything else unobserved
    """
    _, voxels, points = hit_voxels(obs, geometry)
    free = np.zeros(geometry.dims, dtype=bool)
    if len(points):
        march(geometry, obs.camera.position, points, skip_end=True, visited=free)

    occupied = np.zeros(geometry.dims, dtype=bool)
    occupied[voxels[:, 0], voxels[:, 1], voxels[:, 2]] = True
    free &= ~occupied

    observed = np.full(geometry.dims, UNOBSERVED, dtype=np.int8)
    observed[free] = OBSERVED_FREE
    observed[occupied] = OBSERVED_OCCUPIED
    occupancy = np.full(geometry.dims, float(tau_occupancy))
    occupancy[free] = 0.0
    occupancy[occupied] = 1.0
    logger.debug("carved %d free and %d occupied voxels",
                 int(free.sum()), int(occupied.sum()))
    return OccupancyField(geometry.dims, geometry.resolution, geometry.origin,
                          occupancy, observed, tau_occupancy, margin)


def segment_lookup(obs, segments, geometry):
    """
    Segment label of every voxel hit by a pixel: the segment's label for
    object pixels, TABLE_LABEL for table pixels, NO_LABEL elsewhere
    """
    pixels, voxels, _ = hit_voxels(obs, geometry)
    pixel_label = np.full(obs.labels.size, NO_LABEL, dtype=np.int16)
    pixel_label[obs.labels.ravel() == TABLE_LABEL] = TABLE_LABEL
    for seg in segments:
        pixel_label[seg.mask.ravel()] = seg.label
    lookup = np.full(geometry.dims, NO_LABEL, dtype=np.int16)
    lookup[voxels[:, 0], voxels[:, 1], voxels[:, 2]] = pixel_label[pixels]
    return lookup
