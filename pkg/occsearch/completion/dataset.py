"""
Occluded completion examples: each shape is turned at random, seen by one
camera with part of the image blocked by an obstacle, and cut into the
visible surface, the carved free space and the true volume
"""
import csv
import logging
import math
import os

import numpy as np

from ..camera import Camera
from ..geometry import Transform, march
from ..gridfile import dump_grid, load_grid
from ..voxelcore import BinaryVoxelGrid, GridGeometry
from .primitives import voxelize_primitive

logger = logging.getLogger(__name__)

GRID_SIZE = 64
GRID_RESOLUTION = 0.004
SHIFT_VOXELS = 4
MANIFEST = "manifest.csv"
MANIFEST_COLUMNS = ("example_id", "shape", "roll", "pitch", "yaw", "quadrant",
                    "fraction", "seed", "view_x", "view_y", "view_z")
QUADRANTS = 4


class OccluderSpec:
    """
    An obstacle between the camera and the object, seen as a rectangle in
    one image corner covering fraction of the image; quadrant 0..3 picks
    the corner (top left, top right, bottom left, bottom right), None draws
    one per example
    """

    def __init__(self, fraction=0.25, quadrant=None):
        if not isinstance(fraction, (int, float)):
            raise TypeError("fraction should be a number")
        if not 0.0 <= fraction <= 1.0:
            raise ValueError("fraction should be in [0, 1]")
        if quadrant is not None and quadrant not in range(QUADRANTS):
            raise ValueError("quadrant should be 0, 1, 2, 3 or None")
        self.fraction = float(fraction)
        self.quadrant = quadrant

    def mask(self, shape, quadrant):
        """bool image, True where the obstacle hides the object"""
        rows, cols = shape
        side = math.sqrt(self.fraction)
        h = int(round(rows * side))
        w = int(round(cols * side))
        mask = np.zeros(shape, dtype=bool)
        if h == 0 or w == 0:
            return mask
        r = slice(0, h) if quadrant in (0, 1) else slice(rows - h, rows)
        c = slice(0, w) if quadrant in (0, 2) else slice(cols - w, cols)
        mask[r, c] = True
        return mask

    def __repr__(self):
        return "OccluderSpec(fraction={}, quadrant={})".format(self.fraction, self.quadrant)


class DatasetCamera:
    """
    Camera on a sphere around the grid center at distance, raised by
    elevation radians, with a square image wide enough to hold the grid
    """

    def __init__(self, distance=0.6, elevation=0.35, pixels=192):
        if distance <= 0 or pixels < 1:
            raise ValueError("distance and pixels should be positive")
        self.distance = float(distance)
        self.elevation = float(elevation)
        self.pixels = int(pixels)

    def camera(self, geometry):
        center = geometry.origin + np.asarray(geometry.dims) * geometry.resolution / 2.0
        position = center + self.distance * np.array(
            [0.0, -math.cos(self.elevation), math.sin(self.elevation)])
        half = float(np.asarray(geometry.dims).max()) * geometry.resolution / 2.0
        # the grid's bounding sphere fills the image
        near = self.distance - half * math.sqrt(3.0)
        focal = self.pixels / 2.0 / (half * math.sqrt(3.0) / max(near, 1e-6))
        c = self.pixels / 2.0
        return Camera(position, center, focal, focal, c, c, self.pixels, self.pixels)


class DatasetTriple:
    """
    partial: visible surface voxels
    free: voxels seen to be empty
    truth: the whole object
    viewpoint: camera position in the shifted grid frame
    """

    def __init__(self, partial, free, truth, shape="", rotation=(0.0, 0.0, 0.0),
                 quadrant=None, fraction=0.0, seed=0, example_id=None, viewpoint=None):
        self.partial = partial
        self.free = free
        self.truth = truth
        self.shape = shape
        self.rotation = tuple(float(a) for a in rotation)
        self.quadrant = quadrant
        self.fraction = float(fraction)
        self.seed = int(seed)
        self.example_id = example_id
        self.viewpoint = None if viewpoint is None else np.asarray(viewpoint, dtype=np.float64)

    def __repr__(self):
        return "DatasetTriple({}, shape={}, partial={}, truth={})".format(
            self.example_id, self.shape, self.partial.count(), self.truth.count())


def dataset_geometry(size=GRID_SIZE, resolution=GRID_RESOLUTION):
    """Cubic grid centered on the world origin"""
    half = size * resolution / 2.0
    return GridGeometry((size, size, size), resolution, (-half, -half, -half))


def default_shapes(resolution=GRID_RESOLUTION):
    """Boxes and upright cylinders of a few proportions"""
    return {
        "box_cube": voxelize_primitive("box", (0.08, 0.08, 0.08), resolution),
        "box_slab": voxelize_primitive("box", (0.14, 0.10, 0.04), resolution),
        "box_tall": voxelize_primitive("box", (0.06, 0.08, 0.16), resolution),
        "cylinder_can": voxelize_primitive("cylinder", (0.035, 0.12), resolution),
        "cylinder_disc": voxelize_primitive("cylinder", (0.06, 0.04), resolution),
    }


def place(shape, transform, geometry):
    """
    Voxels of geometry whose centers fall inside shape moved by transform,
    found by mapping each candidate back into the shape's grid
    """
    index = shape.indices()
    mask = np.zeros(geometry.dims, dtype=bool)
    if len(index) == 0:
        return mask
    moved = transform.apply(shape.voxel_to_world(index))
    res = geometry.resolution
    low = np.maximum(geometry.world_to_voxel(moved.min(axis=0) - res), 0)
    high = np.minimum(geometry.world_to_voxel(moved.max(axis=0) + res),
                      np.asarray(geometry.dims) - 1)
    if np.any(high < low):
        return mask
    axes = [np.arange(low[a], high[a] + 1) for a in range(3)]
    candidates = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    local = transform.inverse().apply(geometry.voxel_to_world(candidates))
    cell = shape.world_to_voxel(local)
    inside = shape.contains(cell)
    hit = np.zeros(len(candidates), dtype=bool)
    c = cell[inside]
    hit[inside] = shape.data[c[:, 0], c[:, 1], c[:, 2]]
    c = candidates[hit]
    mask[c[:, 0], c[:, 1], c[:, 2]] = True
    return mask


def shift_mask(mask, delta):
    """Move every voxel by the integer offset delta, dropping what leaves"""
    out = np.zeros_like(mask)
    index = np.argwhere(mask) + np.asarray(delta, dtype=np.int64)
    keep = np.all((index >= 0) & (index < np.asarray(mask.shape)), axis=1)
    index = index[keep]
    out[index[:, 0], index[:, 1], index[:, 2]] = True
    return out


def observe(truth, camera, geometry, hidden=None):
    """
    Visible surface and carved free space of truth; hidden pixels return
    nothing, as if the ray stopped on an obstacle before the grid
    """
    rays = camera.pixel_rays()
    if hidden is not None:
        rays = rays[~hidden.ravel()]
    far = camera.far_distance(geometry)
    free = np.zeros(geometry.dims, dtype=bool)
    hit, _, _ = march(geometry, camera.position, camera.position + rays * far,
                      occupied=truth, skip_end=False, visited=free)
    partial = np.zeros(geometry.dims, dtype=bool)
    found = hit[:, 0] >= 0
    h = hit[found]
    partial[h[:, 0], h[:, 1], h[:, 2]] = True
    return partial, free & ~truth


def _centering_shift(partial, geometry, camera, offset):
    """
    Integer offset taking the partial's box center to the grid center, then
    offset voxels further toward the camera
    """
    index = np.argwhere(partial)
    box_center = (index.min(axis=0) + index.max(axis=0)) / 2.0
    grid_center = (np.asarray(geometry.dims) - 1) / 2.0
    center = geometry.origin + np.asarray(geometry.dims) * geometry.resolution / 2.0
    toward = camera.position - center
    toward /= np.linalg.norm(toward)
    return np.rint(grid_center - box_center + offset * toward).astype(np.int64)


def synthesize_example(shape, camera, geometry, occluder, seed, offset=SHIFT_VOXELS,
                       name="", example_id=None):
    """One triple from its own rng stream, None when nothing is visible"""
    rng = np.random.default_rng(seed)
    rotation = rng.uniform(0.0, 2.0 * math.pi, size=3)
    quadrant = occluder.quadrant if occluder.quadrant is not None else \
        int(rng.integers(QUADRANTS))
    turn = Transform.from_euler(*rotation)
    index = shape.indices()
    center = (shape.voxel_to_world(index.min(axis=0)) +
              shape.voxel_to_world(index.max(axis=0))) / 2.0
    grid_center = geometry.origin + np.asarray(geometry.dims) * geometry.resolution / 2.0
    pose = Transform(turn.rotation, grid_center - turn.rotation.apply(center))
    truth = place(shape, pose, geometry)
    hidden = occluder.mask((camera.height, camera.width), quadrant)
    partial, free = observe(truth, camera, geometry, hidden)
    if not partial.any():
        logger.debug("example %s fully occluded, discarded", example_id)
        return None
    delta = _centering_shift(partial, geometry, camera, offset)
    viewpoint = camera.position + delta * geometry.resolution

    def moved(mask):
        return BinaryVoxelGrid.from_mask(geometry, shift_mask(mask, delta))

    return DatasetTriple(moved(partial), moved(free), moved(truth), name, rotation,
                         quadrant, occluder.fraction, seed, example_id, viewpoint)


def synthesize_dataset(shapes, rotations, occluder=None, camera=None, seed=0,
                       geometry=None, offset=SHIFT_VOXELS):
    """
    rotations random orientations of every shape

    shapes: mapping of name to BinaryVoxelGrid, or a list of grids
    Example i uses the rng seeded with seed + i, so any subset can be
    regenerated on its own. Fully occluded examples are dropped.
    """
    if not shapes:
        raise ValueError("shapes should not be empty")
    if not isinstance(shapes, dict):
        shapes = {"shape{}".format(i): s for i, s in enumerate(shapes)}
    occluder = occluder if occluder is not None else OccluderSpec()
    geometry = geometry if geometry is not None else dataset_geometry()
    camera = (camera if camera is not None else DatasetCamera()).camera(geometry)
    triples = []
    index = 0
    for name, shape in shapes.items():
        for _ in range(int(rotations)):
            example = synthesize_example(shape, camera, geometry, occluder, seed + index,
                                         offset, name, "{:05d}".format(index))
            if example is not None:
                triples.append(example)
            index += 1
    logger.info("synthesized %d of %d examples", len(triples), index)
    return triples


def split_dataset(triples, ratio=(4, 1)):
    """Train and test lists, the first ratio[0] of every sum(ratio) examples go to train"""
    train_part, test_part = ratio
    if train_part < 0 or test_part < 0 or train_part + test_part == 0:
        raise ValueError("ratio should be two nonnegative parts, not both zero")
    period = train_part + test_part
    train = [t for i, t in enumerate(triples) if i % period < train_part]
    test = [t for i, t in enumerate(triples) if i % period >= train_part]
    return train, test


def save_dataset(triples, directory):
    """Three grid files per example plus manifest.csv"""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, MANIFEST), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(MANIFEST_COLUMNS)
        for number, t in enumerate(triples):
            example_id = t.example_id or "{:05d}".format(number)
            for part in ("partial", "free", "truth"):
                dump_grid(getattr(t, part), os.path.join(
                    directory, "{}_{}.vxg".format(example_id, part)))
            writer.writerow([example_id, t.shape] + [repr(a) for a in t.rotation] +
                            ["" if t.quadrant is None else t.quadrant, repr(t.fraction),
                             t.seed] + _view_cells(t.viewpoint))


def load_dataset(directory):
    triples = []
    with open(os.path.join(directory, MANIFEST), newline="") as f:
        for row in csv.DictReader(f):
            example_id = row["example_id"]
            grids = [load_grid(os.path.join(directory, "{}_{}.vxg".format(example_id, part)))
                     for part in ("partial", "free", "truth")]
            triples.append(DatasetTriple(
                *grids, shape=row["shape"],
                rotation=(float(row["roll"]), float(row["pitch"]), float(row["yaw"])),
                quadrant=int(row["quadrant"]) if row["quadrant"] else None,
                fraction=float(row["fraction"]), seed=int(row["seed"]),
                example_id=example_id,
                viewpoint=[float(row[c]) for c in ("view_x", "view_y", "view_z")]
                if row["view_x"] else None))
    return triples


def _view_cells(viewpoint):
    if viewpoint is None:
        return ["", "", ""]
    return [repr(float(v)) for v in viewpoint]
