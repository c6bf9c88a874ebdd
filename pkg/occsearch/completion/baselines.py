"""
Geometric completers
"""
import numpy as np
from scipy.spatial import ConvexHull

from . import Completer
from ..exceptions import CompletionError

SQUARE = np.array([[0, 0], [1, 0], [0, 1], [1, 1]])


def prism_footprint(cells):
    """
    Table cells whose centers fall inside the convex hull of the given
    cells, every cell taken as its full unit square
    """
    cells = np.unique(np.asarray(cells, dtype=np.int64).reshape(-1, 2), axis=0)
    if len(cells) == 0:
        return cells
    corners = np.unique((cells[:, None, :] + SQUARE[None, :, :]).reshape(-1, 2), axis=0)
    hull = ConvexHull(corners.astype(np.float64))
    low = cells.min(axis=0)
    high = cells.max(axis=0)
    grid = np.stack(np.meshgrid(np.arange(low[0], high[0] + 1),
                                np.arange(low[1], high[1] + 1), indexing="ij"),
                    axis=-1).reshape(-1, 2)
    centers = grid + 0.5
    inside = np.all(centers @ hull.equations[:, :2].T + hull.equations[:, 2] <= 1e-9, axis=1)
    return grid[inside]


class NullCompleter(Completer):
    """The visible surface is all there is"""

    name = "null"

    def predict(self, completion_input):
        return completion_input.partial


class PrismHullCompleter(Completer):
    """
    Convex prism: the 2D hull of the down-projected surface extruded between
    its lowest and highest layer
    """

    name = "prism_hull"

    def predict(self, completion_input):
        partial = completion_input.partial
        index = partial.indices()
        footprint = prism_footprint(index[:, :2])
        data = np.zeros(partial.dims, dtype=bool)
        z_low = index[:, 2].min()
        z_high = index[:, 2].max()
        data[footprint[:, 0], footprint[:, 1], z_low:z_high + 1] = True
        return partial.with_data(data)


class CameraExtrudeCompleter(Completer):
    """
    Push every surface voxel away from the camera until free space, the
    table plane, the grid edge or the depth budget stops it
    """

    name = "camera_extrude"

    def __init__(self, depth_budget=16, floor=0):
        if depth_budget < 0:
            raise ValueError("depth_budget should not be negative")
        self.depth_budget = int(depth_budget)
        self.floor = int(floor)

    def predict(self, completion_input):
        viewpoint = completion_input.viewpoint
        if viewpoint is None:
            raise CompletionError("camera_extrude needs the camera position")
        partial = completion_input.partial
        free = completion_input.free.data
        centers = partial.voxel_to_world(partial.indices())
        directions = centers - viewpoint
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        data = partial.data.copy()
        alive = np.ones(len(centers), dtype=bool)
        for k in range(1, self.depth_budget + 1):
            voxels = partial.world_to_voxel(centers + directions * (k * partial.resolution))
            alive &= partial.contains(voxels)
            alive &= voxels[:, 2] >= self.floor
            rows = np.nonzero(alive)[0]
            v = voxels[rows]
            stopped = free[v[:, 0], v[:, 1], v[:, 2]]
            alive[rows[stopped]] = False
            v = v[~stopped]
            data[v[:, 0], v[:, 1], v[:, 2]] = True
            if not alive.any():
                break
        return partial.with_data(data)
