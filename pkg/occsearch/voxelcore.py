"""
Voxel grids, coordinate transforms, set algebra and the Chamfer distance
"""
import logging
from numbers import Integral, Real

import numpy as np
from scipy.spatial import cKDTree

from . import TAU_OCCUPANCY
from .exceptions import EmptyInputError, GeometryMismatchError

logger = logging.getLogger(__name__)

# observation flags of an OccupancyField
UNOBSERVED = 0
OBSERVED_FREE = 1
OBSERVED_OCCUPIED = 2


class GridGeometry:
    """
    Placement of a regular voxel grid in the world

    dims: voxel counts (nx, ny, nz)
    resolution: edge length of one voxel in meters
    origin: world coordinates of the corner of voxel (0, 0, 0)
    """

    def __init__(self, dims, resolution, origin=(0.0, 0.0, 0.0)):
        if len(dims) != 3 or not all(isinstance(d, Integral) for d in dims):
            raise TypeError("dims should be three integers")
        if min(dims) < 1:
            raise ValueError("dims should be positive")
        if not isinstance(resolution, Real):
            raise TypeError("resolution should be a number")
        if not resolution > 0:
            raise ValueError("resolution should be positive")
        origin = np.asarray(origin, dtype=np.float64)
        if origin.shape != (3,) or not np.all(np.isfinite(origin)):
            raise ValueError("origin should be a finite 3D point")
        self._dims = tuple(int(d) for d in dims)
        self._resolution = float(resolution)
        self._origin = origin
        self._origin.flags.writeable = False

    @property
    def dims(self):
        return self._dims

    @property
    def resolution(self):
        return self._resolution

    @property
    def origin(self):
        return self._origin

    @property
    def extent(self):
        """World coordinates of the far corner"""
        return self._origin + np.asarray(self._dims) * self._resolution

    @property
    def geometry(self):
        return GridGeometry(self._dims, self._resolution, self._origin)

    def same_as(self, other):
        return (self.dims == other.dims and
                self.resolution == other.resolution and
                np.array_equal(self.origin, other.origin))

    def world_to_voxel(self, points):
        """Integer index of the voxel containing each point, may be out of bounds"""
        points = np.asarray(points, dtype=np.float64)
        return np.floor((points - self._origin) / self._resolution).astype(np.int64)

    def voxel_to_world(self, indices):
        """World coordinates of voxel centers"""
        indices = np.asarray(indices, dtype=np.float64)
        return self._origin + (indices + 0.5) * self._resolution

    def contains(self, indices):
        indices = np.asarray(indices)
        return np.all((indices >= 0) & (indices < np.asarray(self._dims)), axis=-1)

    def centers(self):
        """World coordinates of every voxel center, shaped dims + (3,)"""
        axes = [self._origin[a] + (np.arange(n) + 0.5) * self._resolution
                for a, n in enumerate(self._dims)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def __repr__(self):
        return "GridGeometry(dims={}, resolution={}, origin={})".format(
            self._dims, self._resolution, tuple(self._origin.tolist()))


class BinaryVoxelGrid(GridGeometry):
    """
    Dense binary voxel grid, immutable once built

    data is indexed [x, y, z]; operations return new grids
    """

    def __init__(self, dims, resolution, origin=(0.0, 0.0, 0.0), data=None):
        super().__init__(dims, resolution, origin)
        if data is None:
            data = np.zeros(self.dims, dtype=bool)
        data = np.array(data, dtype=bool)
        if data.shape != self.dims:
            raise ValueError("data shape {} does not match dims {}".format(
                data.shape, self.dims))
        data.flags.writeable = False
        self._data = data

    @classmethod
    def empty(cls, geometry):
        return cls(geometry.dims, geometry.resolution, geometry.origin)

    @classmethod
    def from_indices(cls, geometry, indices):
        """Grid with the given in-bounds indices set, others dropped"""
        data = np.zeros(geometry.dims, dtype=bool)
        indices = np.asarray(indices, dtype=np.int64).reshape(-1, 3)
        indices = indices[geometry.contains(indices)]
        data[indices[:, 0], indices[:, 1], indices[:, 2]] = True
        return cls(geometry.dims, geometry.resolution, geometry.origin, data)

    @classmethod
    def from_mask(cls, geometry, mask):
        return cls(geometry.dims, geometry.resolution, geometry.origin, mask)

    @property
    def data(self):
        return self._data

    def with_data(self, data):
        return BinaryVoxelGrid(self.dims, self.resolution, self.origin, data)

    def count(self):
        return int(np.count_nonzero(self._data))

    def is_empty(self):
        return not self._data.any()

    def indices(self):
        """(k, 3) indices of the set voxels"""
        return np.argwhere(self._data)

    def __eq__(self, other):
        if not isinstance(other, BinaryVoxelGrid):
            return NotImplemented
        return self.same_as(other) and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self.dims, self.resolution, self._data.tobytes()))

    def __repr__(self):
        return "BinaryVoxelGrid(dims={}, resolution={}, count={})".format(
            self.dims, self.resolution, self.count())


class OccupancyField(GridGeometry):
    """
    Probabilistic ternary voxel field over the workspace

    occupancy: per voxel probability in [0, 1]
    observed: per voxel flag, UNOBSERVED, OBSERVED_FREE or OBSERVED_OCCUPIED

    Unobserved voxels keep whatever completion or memory put there. They
    count as known once their occupancy sits further than margin from
    tau_occupancy, otherwise they are unknown.
    """

    def __init__(self, dims, resolution, origin=(0.0, 0.0, 0.0),
                 occupancy=None, observed=None, tau_occupancy=TAU_OCCUPANCY,
                 margin=0.05):
        super().__init__(dims, resolution, origin)
        if not 0.0 < tau_occupancy < 1.0:
            raise ValueError("tau_occupancy should be in (0, 1)")
        if not 0.0 <= margin < min(tau_occupancy, 1.0 - tau_occupancy):
            raise ValueError("margin should be in [0, min(tau, 1 - tau))")
        self._tau = float(tau_occupancy)
        self._margin = float(margin)
        if occupancy is None:
            occupancy = np.full(self.dims, self._tau)
        if observed is None:
            observed = np.full(self.dims, UNOBSERVED, dtype=np.int8)
        occupancy = np.array(occupancy, dtype=np.float64)
        observed = np.array(observed, dtype=np.int8)
        if occupancy.shape != self.dims or observed.shape != self.dims:
            raise ValueError("occupancy and observed should match dims")
        if np.any(occupancy < 0.0) or np.any(occupancy > 1.0):
            raise ValueError("occupancy should be in [0, 1]")
        if np.any(occupancy[observed == OBSERVED_FREE] >= self._tau):
            raise ValueError("observed free voxels should be below tau_occupancy")
        if np.any(occupancy[observed == OBSERVED_OCCUPIED] < self._tau):
            raise ValueError("observed occupied voxels should be at or above tau_occupancy")
        occupancy.flags.writeable = False
        observed.flags.writeable = False
        self._occupancy = occupancy
        self._observed = observed

    @classmethod
    def unobserved_like(cls, geometry, tau_occupancy=TAU_OCCUPANCY, margin=0.05):
        return cls(geometry.dims, geometry.resolution, geometry.origin,
                   tau_occupancy=tau_occupancy, margin=margin)

    @property
    def occupancy(self):
        return self._occupancy

    @property
    def observed(self):
        return self._observed

    @property
    def tau_occupancy(self):
        return self._tau

    @property
    def margin(self):
        return self._margin

    def with_values(self, occupancy=None, observed=None):
        return OccupancyField(
            self.dims, self.resolution, self.origin,
            self._occupancy if occupancy is None else occupancy,
            self._observed if observed is None else observed,
            self._tau, self._margin)

    def unobserved(self):
        return self._observed == UNOBSERVED

    def known_occupied(self):
        return ((self._observed == OBSERVED_OCCUPIED) |
                (self.unobserved() & (self._occupancy >= self._tau + self._margin)))

    def known_free(self):
        return ((self._observed == OBSERVED_FREE) |
                (self.unobserved() & (self._occupancy <= self._tau - self._margin)))

    def unknown(self):
        return ~(self.known_occupied() | self.known_free())

    def __eq__(self, other):
        if not isinstance(other, OccupancyField):
            return NotImplemented
        return (self.same_as(other) and self._tau == other._tau and
                np.array_equal(self._observed, other._observed) and
                np.array_equal(self._occupancy, other._occupancy))

    def __repr__(self):
        return "OccupancyField(dims={}, resolution={}, observed={})".format(
            self.dims, self.resolution,
            int(np.count_nonzero(self._observed != UNOBSERVED)))


def check_geometry(a, b):
    if not a.same_as(b):
        raise GeometryMismatchError(
            "grids differ: {!r} and {!r}".format(a.geometry, b.geometry))


def sparse_points(grid):
    """World coordinates of the center of every set voxel"""
    return grid.voxel_to_world(grid.indices())


def _points(points, name):
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise EmptyInputError(name)
    if not np.all(np.isfinite(points)):
        raise ValueError("{} has non finite coordinates".format(name))
    return points


def chamfer_distance(x, y):
    """
    Symmetric mean of squared nearest neighbour distances

    (1/|X|) sum_x min_y |x - y|^2 + (1/|Y|) sum_y min_x |x - y|^2
    """
    x = _points(x, "X")
    y = _points(y, "Y")
    d_xy, _ = cKDTree(y).query(x, k=1)
    d_yx, _ = cKDTree(x).query(y, k=1)
    return float(np.mean(d_xy ** 2) + np.mean(d_yx ** 2))


def grid_distance(u, v):
    """Chamfer distance between the voxel centers of two grids"""
    if u.is_empty():
        raise EmptyInputError("U")
    if v.is_empty():
        raise EmptyInputError("V")
    return chamfer_distance(sparse_points(u), sparse_points(v))


def union(a, b):
    check_geometry(a, b)
    return a.with_data(a.data | b.data)


def intersection(a, b):
    check_geometry(a, b)
    return a.with_data(a.data & b.data)


def difference(a, b):
    check_geometry(a, b)
    return a.with_data(a.data & ~b.data)


def is_subset(a, b):
    check_geometry(a, b)
    return not np.any(a.data & ~b.data)
