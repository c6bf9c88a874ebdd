"""
Rigid transforms and voxel walking along rays
"""
import numpy as np
from scipy.spatial.transform import Rotation

from . import TABLE_LABEL, UNLABELED


class Transform:
    """
    Rigid transform p -> R p + t

    rotation: scipy Rotation
    translation: 3D vector
    """

    def __init__(self, rotation=None, translation=(0.0, 0.0, 0.0)):
        if rotation is None:
            rotation = Rotation.identity()
        if not isinstance(rotation, Rotation):
            raise TypeError("rotation should be a scipy Rotation")
        translation = np.asarray(translation, dtype=np.float64)
        if translation.shape != (3,) or not np.all(np.isfinite(translation)):
            raise ValueError("translation should be a finite 3D vector")
        self._rotation = rotation
        self._translation = translation
        self._translation.flags.writeable = False

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def planar(cls, x, y, yaw=0.0, z=0.0):
        """Rotation about the table normal followed by a translation"""
        return cls(Rotation.from_euler("z", yaw), (x, y, z))

    @classmethod
    def from_euler(cls, roll, pitch, yaw, translation=(0.0, 0.0, 0.0)):
        return cls(Rotation.from_euler("xyz", [roll, pitch, yaw]), translation)

    @classmethod
    def about(cls, pivot, yaw=0.0, dx=0.0, dy=0.0, dz=0.0):
        """Turn by yaw about a vertical axis through pivot, then shift"""
        pivot = np.asarray(pivot, dtype=np.float64)
        rotation = Rotation.from_euler("z", yaw)
        translation = pivot - rotation.apply(pivot) + np.array([dx, dy, dz])
        return cls(rotation, translation)

    @property
    def rotation(self):
        return self._rotation

    @property
    def translation(self):
        return self._translation

    @property
    def yaw(self):
        # + 0.0 folds -0.0 so the scene file never reads yaw="-0.0"
        return float(self._rotation.as_euler("zyx")[0]) + 0.0

    @property
    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self._rotation.as_matrix()
        m[:3, 3] = self._translation
        return m

    def apply(self, points):
        points = np.asarray(points, dtype=np.float64)
        if points.size == 0:
            return points.reshape(-1, 3)
        return self._rotation.apply(points) + self._translation

    def inverse(self):
        inv = self._rotation.inv()
        return Transform(inv, -inv.apply(self._translation))

    def compose(self, other):
        """self after other"""
        return Transform(self._rotation * other._rotation,
                         self._rotation.apply(other._translation) + self._translation)

    def is_identity(self, tol=1e-12):
        return np.allclose(self.matrix, np.eye(4), atol=tol, rtol=0.0)

    def __eq__(self, other):
        if not isinstance(other, Transform):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return "Transform(yaw={:.6f}, translation={})".format(
            self.yaw, tuple(self._translation.tolist()))


def label_bits(labels):
    """One bit per segment label, UNLABELED for anything outside 0..62"""
    labels = np.asarray(labels, dtype=np.int64)
    labels = np.where((labels >= TABLE_LABEL) & (labels < UNLABELED), labels, UNLABELED)
    return np.left_shift(np.uint64(1), labels.astype(np.uint64))


def _clip_to_box(starts, delta, low, high):
    """Parameter interval [t_in, t_out] of each segment inside the box"""
    t_in = np.zeros(len(starts))
    t_out = np.ones(len(starts))
    for axis in range(3):
        d = delta[:, axis]
        s = starts[:, axis]
        moving = d != 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (low[axis] - s) / d
            tb = (high[axis] - s) / d
        near = np.where(moving, np.minimum(ta, tb), -np.inf)
        far = np.where(moving, np.maximum(ta, tb), np.inf)
        outside = ~moving & ((s < low[axis]) | (s >= high[axis]))
        near = np.where(outside, np.inf, near)
        t_in = np.maximum(t_in, near)
        t_out = np.minimum(t_out, far)
    return t_in, t_out


def march(geometry, starts, ends, occupied=None, labels=None,
          skip_start=False, skip_end=True, first_only=True, visited=None):
    """
    Walk every segment starts[i] -> ends[i] through the grid voxel by voxel,
    stepping to whichever grid plane the ray crosses next

    occupied: bool grid, voxels that block
    labels: int grid, collect one bit per label of every occupied voxel met
    skip_start / skip_end: ignore the voxel holding the segment start / end,
        the walk stops on reaching the end voxel when skip_end is set
    first_only: stop each ray at its first occupied voxel
    visited: bool grid, marked for every voxel walked that does not block

    Returns (hit, t_hit, bits): hit is the first occupied voxel per ray or -1
    rows, t_hit the segment parameter where the ray enters it, bits the
    collected label bits (None without labels)
    """
    starts = np.asarray(starts, dtype=np.float64).reshape(-1, 3)
    ends = np.asarray(ends, dtype=np.float64).reshape(-1, 3)
    if ends.shape[0] == 1 and starts.shape[0] != 1:
        ends = np.broadcast_to(ends, starts.shape)
    if starts.shape[0] == 1 and ends.shape[0] != 1:
        starts = np.broadcast_to(starts, ends.shape)
    count = starts.shape[0]
    dims = np.asarray(geometry.dims, dtype=np.int64)
    res = geometry.resolution
    low = geometry.origin
    high = low + dims * res

    hit = np.full((count, 3), -1, dtype=np.int64)
    t_hit = np.full(count, np.inf)
    bits = np.zeros(count, dtype=np.uint64) if labels is not None else None
    if count == 0:
        return hit, t_hit, bits
    if labels is not None:
        label_grid_bits = label_bits(labels)

    delta = ends - starts
    t_in, t_out = _clip_to_box(starts, delta, low, high)
    ids = np.nonzero(t_in < t_out)[0]

    entry = starts[ids] + delta[ids] * t_in[ids, None]
    voxel = np.clip(np.floor((entry - low) / res).astype(np.int64), 0, dims - 1)
    d = delta[ids]
    step = np.sign(d).astype(np.int64)
    boundary = low + (voxel + (step > 0)) * res
    with np.errstate(divide="ignore", invalid="ignore"):
        t_max = np.where(d != 0.0, (boundary - starts[ids]) / d, np.inf)
        t_delta = np.where(d != 0.0, res / np.abs(d), np.inf)
    t_cur = t_in[ids]
    t_end = t_out[ids]
    start_voxel = np.floor((starts[ids] - low) / res).astype(np.int64)
    end_voxel = np.floor((ends[ids] - low) / res).astype(np.int64)

    for _ in range(int(dims.sum()) + 4):
        if len(ids) == 0:
            break
        if skip_end:
            keep = ~np.all(voxel == end_voxel, axis=1)
            if not keep.all():
                ids, voxel, step, t_max, t_delta, t_cur, t_end, start_voxel, end_voxel = (
                    a[keep] for a in (ids, voxel, step, t_max, t_delta, t_cur,
                                      t_end, start_voxel, end_voxel))
                if len(ids) == 0:
                    break
        if occupied is not None:
            occ = occupied[voxel[:, 0], voxel[:, 1], voxel[:, 2]]
        else:
            occ = np.zeros(len(ids), dtype=bool)
        if skip_start:
            occ = occ & ~np.all(voxel == start_voxel, axis=1)
        if visited is not None:
            free = voxel[~occ]
            visited[free[:, 0], free[:, 1], free[:, 2]] = True
        if occ.any():
            occ_ids = ids[occ]
            if bits is not None:
                v = voxel[occ]
                bits[occ_ids] |= label_grid_bits[v[:, 0], v[:, 1], v[:, 2]]
            first = occ & (hit[ids, 0] < 0)
            hit[ids[first]] = voxel[first]
            t_hit[ids[first]] = t_cur[first]
        rows = np.arange(len(ids))
        axis = np.argmin(t_max, axis=1)
        t_cur = t_max[rows, axis]
        voxel[rows, axis] += step[rows, axis]
        t_max[rows, axis] += t_delta[rows, axis]
        alive = (t_cur < t_end) & np.all((voxel >= 0) & (voxel < dims), axis=1)
        if first_only:
            alive &= ~occ
        if not alive.all():
            ids, voxel, step, t_max, t_delta, t_cur, t_end, start_voxel, end_voxel = (
                a[alive] for a in (ids, voxel, step, t_max, t_delta, t_cur,
                                   t_end, start_voxel, end_voxel))
    return hit, t_hit, bits


def first_hits(geometry, occupied, starts, ends, **kwargs):
    """First occupied voxel along each segment, excluding the end voxel"""
    hit, _, _ = march(geometry, starts, ends, occupied=occupied, **kwargs)
    return hit


def segment_point_distance(points, a, b):
    """Distance in the plane from each 2D point to the segment a-b"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    length2 = float(ab @ ab)
    if length2 == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / length2, 0.0, 1.0)
    return np.linalg.norm(points - (a + t[:, None] * ab), axis=1)
