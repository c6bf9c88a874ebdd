"""
Voxelize analytic solids

Shapes sit in their canonical object frame: centered on the z axis with the
base on z = 0. Prisms keep the frame of their vertices.
"""
import math

import numpy as np
from scipy.spatial import ConvexHull

from ..voxelcore import BinaryVoxelGrid

PRIMITIVES = ("box", "cylinder", "sphere", "prism")


def _count(extent, resolution):
    if extent < resolution:
        raise ValueError("dims smaller than one voxel: {} < {}".format(
            extent, resolution))
    return int(math.ceil(extent / resolution - 1e-9))


def _centered(n):
    """Voxel center offsets from the middle of an n voxel axis, in voxels"""
    return np.arange(n) + 0.5 - n / 2.0


def voxelize_primitive(kind, dims, resolution, vertices=None):
    """
    Grid of the voxels whose centers lie inside the solid

    box: dims = (size_x, size_y, size_z)
    cylinder: dims = (radius, height), axis along z
    sphere: dims = (radius,)
    prism: dims = (height,) with vertices the 2D outline, taken convex
    """
    if kind not in PRIMITIVES:
        raise ValueError("unknown primitive {}".format(kind))
    if resolution <= 0:
        raise ValueError("resolution should be positive")
    dims = [float(d) for d in dims]
    if any(d <= 0 for d in dims):
        raise ValueError("dims should be positive")

    if kind == "box":
        sx, sy, sz = dims
        n = (_count(sx, resolution), _count(sy, resolution), _count(sz, resolution))
        data = np.ones(n, dtype=bool)
        origin = (-n[0] * resolution / 2.0, -n[1] * resolution / 2.0, 0.0)
        return BinaryVoxelGrid(n, resolution, origin, data)

    if kind == "cylinder":
        radius, height = dims
        nxy = _count(2.0 * radius, resolution)
        nz = _count(height, resolution)
        u = _centered(nxy)
        disc = (u[:, None] ** 2 + u[None, :] ** 2) <= (radius / resolution) ** 2 + 1e-9
        data = np.repeat(disc[:, :, None], nz, axis=2)
        origin = (-nxy * resolution / 2.0, -nxy * resolution / 2.0, 0.0)
        return BinaryVoxelGrid((nxy, nxy, nz), resolution, origin, data)

    if kind == "sphere":
        (radius,) = dims
        n = _count(2.0 * radius, resolution)
        u = _centered(n)
        r2 = u[:, None, None] ** 2 + u[None, :, None] ** 2 + u[None, None, :] ** 2
        data = r2 <= (radius / resolution) ** 2 + 1e-9
        origin = (-n * resolution / 2.0, -n * resolution / 2.0, 0.0)
        return BinaryVoxelGrid((n, n, n), resolution, origin, data)

    # prism
    (height,) = dims
    if vertices is None or len(vertices) < 3:
        raise ValueError("prism needs at least three vertices")
    vertices = np.asarray(vertices, dtype=np.float64).reshape(-1, 2)
    low = vertices.min(axis=0)
    high = vertices.max(axis=0)
    nx = _count(high[0] - low[0], resolution)
    ny = _count(high[1] - low[1], resolution)
    nz = _count(height, resolution)
    xs = low[0] + (np.arange(nx) + 0.5) * resolution
    ys = low[1] + (np.arange(ny) + 0.5) * resolution
    grid_x, grid_y = np.meshgrid(xs, ys, indexing="ij")
    points = np.stack([grid_x.ravel(), grid_y.ravel()], axis=1)
    hull = ConvexHull(vertices)
    inside = np.all(points @ hull.equations[:, :2].T + hull.equations[:, 2] <= 1e-9,
                    axis=1).reshape(nx, ny)
    data = np.repeat(inside[:, :, None], nz, axis=2)
    return BinaryVoxelGrid((nx, ny, nz), resolution, (low[0], low[1], 0.0), data)
