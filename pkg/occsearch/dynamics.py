"""
Quasi-static response of the simulated table to an action

Objects only translate in the table plane when something runs into them;
there is no friction, rotation from contact or toppling.
"""
import logging

import numpy as np

from . import etree, NSMAP, qname
from .actions import SLIDE, PICK
from .base import XMLComparableBase
from .exceptions import InfeasibleActionError
from .geometry import Transform, segment_point_distance

logger = logging.getLogger(__name__)

PENETRATION_CAP = 64
SEPARATION_DIRECTIONS = 16


class GripperModel(XMLComparableBase):
    """
    Gripper element
    Has optional attributes:
        radius: footprint disc radius in meters
        clearance: height above the table the gripper travels at between
            contacts
        reach: furthest distance from the robot anchor an end effector
            point may be
    """

    def __init__(self, radius=0.02, clearance=0.2, reach=0.8):
        self.radius = radius
        self.clearance = clearance
        self.reach = reach

    @property
    def radius(self):
        return self._radius

    @radius.setter
    def radius(self, value):
        if not isinstance(value, (int, float)):
            raise TypeError("radius should be a number")
        if value <= 0:
            raise ValueError("radius should be positive")
        self._radius = float(value)

    @property
    def clearance(self):
        return self._clearance

    @clearance.setter
    def clearance(self, value):
        if not isinstance(value, (int, float)):
            raise TypeError("clearance should be a number")
        if value <= 0:
            raise ValueError("clearance should be positive")
        self._clearance = float(value)

    @property
    def reach(self):
        return self._reach

    @reach.setter
    def reach(self, value):
        if not isinstance(value, (int, float)):
            raise TypeError("reach should be a number")
        if value <= 0:
            raise ValueError("reach should be positive")
        self._reach = float(value)

    def element(self):
        el = etree.Element(qname("Gripper"), nsmap=NSMAP)
        el.set("radius", repr(self._radius))
        el.set("clearance", repr(self._clearance))
        el.set("reach", repr(self._reach))
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        defaults = GripperModel()
        return GripperModel(float(xml.get("radius", defaults.radius)),
                            float(xml.get("clearance", defaults.clearance)),
                            float(xml.get("reach", defaults.reach)))


def robot_anchor(table, camera):
    """
    The robot stands where the camera looks from: the table edge point
    closest to the camera, at table height
    """
    x = min(max(camera.position[0], table.xmin), table.xmax)
    y = min(max(camera.position[1], table.ymin), table.ymax)
    return np.array([x, y, table.height])


def within_reach(waypoints, anchor, gripper):
    distance = np.linalg.norm(np.asarray(waypoints).reshape(-1, 3) - anchor, axis=1)
    return bool(np.all(distance <= gripper.reach))


class Body:
    """
    Voxels of one object in the workspace grid

    key: object id for ground truth, segment label for perception
    voxels: (n, 3) workspace voxel indices
    """

    def __init__(self, key, label, voxels):
        self.key = key
        self.label = int(label)
        self.voxels = np.asarray(voxels, dtype=np.int64).reshape(-1, 3)

    @property
    def footprint(self):
        return np.unique(self.voxels[:, :2], axis=0)

    @property
    def top(self):
        return int(self.voxels[:, 2].max())

    def centroid(self, geometry):
        return geometry.voxel_to_world(self.voxels).mean(axis=0)

    def shifted(self, cells):
        offset = np.array([cells[0], cells[1], 0], dtype=np.int64)
        return Body(self.key, self.label, self.voxels + offset)

    def mask(self, geometry):
        mask = np.zeros(geometry.dims, dtype=bool)
        v = self.voxels[geometry.contains(self.voxels)]
        mask[v[:, 0], v[:, 1], v[:, 2]] = True
        return mask

    def __repr__(self):
        return "Body(key={!r}, label={}, voxels={})".format(
            self.key, self.label, len(self.voxels))


def scene_bodies(scene):
    """Ground truth bodies in label order, objects outside the grid left out"""
    geometry = scene.field_geometry
    bodies = []
    for obj in scene.objects:
        voxels = obj.rasterize(geometry)
        if len(voxels):
            bodies.append(Body(obj.id, obj.label, voxels))
    return bodies


class ActionOutcome:
    """
    poses: object id -> pose after the action, ejected objects included
    contacts: distinct other objects the gripper sweep ran into
    ejected: ids of objects whose centroid left the table
    grasp_held: whether the object was held through the motion
    displaced: ids of other objects that were shoved
    cap_hit: penetration resolution stopped at the iteration cap with
        objects still overlapping
    """

    def __init__(self, poses, contacts=0, ejected=(), grasp_held=False,
                 displaced=(), cap_hit=False):
        self.poses = dict(poses)
        self.contacts = int(contacts)
        self.ejected = tuple(ejected)
        self.grasp_held = bool(grasp_held)
        self.displaced = tuple(displaced)
        self.cap_hit = bool(cap_hit)

    def __repr__(self):
        return ("ActionOutcome(contacts={}, ejected={}, grasp_held={}, "
                "displaced={}, cap_hit={})").format(
                    self.contacts, self.ejected, self.grasp_held,
                    self.displaced, self.cap_hit)


def _segments(waypoints):
    waypoints = np.asarray(waypoints, dtype=np.float64).reshape(-1, 3)
    if len(waypoints) == 1:
        return [(waypoints[0], waypoints[0])]
    return list(zip(waypoints[:-1], waypoints[1:]))


def _touching_segments(body, waypoints, radius, geometry):
    """Path segments whose gripper disc passes over the body below its top"""
    cells = body.footprint
    centers = geometry.origin[:2] + (cells + 0.5) * geometry.resolution
    top = geometry.origin[2] + (body.top + 1) * geometry.resolution
    reach = radius + geometry.resolution / 2.0
    touching = []
    for a, b in _segments(waypoints):
        if min(a[2], b[2]) >= top:
            continue
        if np.any(segment_point_distance(centers, a[:2], b[:2]) < reach):
            touching.append((a, b))
    return touching


def count_contacts(bodies, waypoints, radius, geometry, exclude=()):
    """Bodies other than the excluded keys that the swept gripper touches"""
    return sum(1 for body in bodies if body.key not in exclude and
               _touching_segments(body, waypoints, radius, geometry))


def grasp_blockers(bodies, position, radius, geometry, exclude=()):
    """Keys of bodies with a voxel under the gripper disc at position, at or above its height"""
    position = np.asarray(position, dtype=np.float64)
    layer = max(int(np.floor((position[2] - geometry.origin[2]) / geometry.resolution)), 1)
    keys = []
    for body in bodies:
        if body.key in exclude:
            continue
        voxels = body.voxels[body.voxels[:, 2] >= layer]
        centers = geometry.origin[:2] + (voxels[:, :2] + 0.5) * geometry.resolution
        if np.any(np.linalg.norm(centers - position[:2], axis=1) < radius):
            keys.append(body.key)
    return keys


def sweep_contacts(scene, action, gripper):
    """Distinct non-manipulated objects the gripper's swept footprint hits"""
    bodies = scene_bodies(scene)
    selected = scene.by_label(action.label)
    exclude = () if selected is None else (selected.id,)
    return count_contacts(bodies, action.waypoints, gripper.radius,
                          scene.field_geometry, exclude)


def _sweep_mask(segments, radius, geometry):
    """Columns under the gripper along the given segments"""
    mask = np.zeros(geometry.dims, dtype=bool)
    i, j = np.meshgrid(np.arange(geometry.dims[0]), np.arange(geometry.dims[1]),
                       indexing="ij")
    cells = np.stack([i.ravel(), j.ravel()], axis=1)
    centers = geometry.origin[:2] + (cells + 0.5) * geometry.resolution
    for a, b in segments:
        under = segment_point_distance(centers, a[:2], b[:2]) < \
            radius + geometry.resolution / 2.0
        layer = max(int(np.floor((min(a[2], b[2]) - geometry.origin[2]) /
                                 geometry.resolution)), 1)
        c = cells[under]
        mask[c[:, 0], c[:, 1], layer:] = True
    return mask


def _direction_steps():
    angles = 2.0 * np.pi * np.arange(SEPARATION_DIRECTIONS) / SEPARATION_DIRECTIONS
    return np.stack([np.cos(angles), np.sin(angles)], axis=1)


def separating_translation(body, obstacle, preferred=None, max_cells=None):
    """
    Shortest whole-cell shift in the table plane, over 16 directions, that
    takes body clear of the obstacle mask; ties go to the shift most aligned
    with preferred. Cells pushed off the grid count as clear.
    """
    dims = np.asarray(obstacle.shape)
    if max_cells is None:
        max_cells = int(dims[:2].max())
    preferred = np.zeros(2) if preferred is None else np.asarray(preferred, dtype=np.float64)
    best = None
    for direction in _direction_steps():
        seen = set()
        for s in range(1, max_cells + 1):
            shift = np.rint(direction * s).astype(np.int64)
            key = (int(shift[0]), int(shift[1]))
            if key == (0, 0) or key in seen:
                continue
            seen.add(key)
            moved = body.voxels + np.array([shift[0], shift[1], 0])
            inside = np.all((moved >= 0) & (moved < dims), axis=1)
            m = moved[inside]
            if not obstacle[m[:, 0], m[:, 1], m[:, 2]].any():
                rank = (float(shift @ shift), -float(shift @ preferred))
                if best is None or rank < best[0]:
                    best = (rank, key)
                break
    if best is None:
        raise RuntimeError("no separating translation within {} cells".format(max_cells))
    return best[1]


def _overlaps(a, b, geometry):
    return bool(np.any(a.mask(geometry) & b.mask(geometry)))


def resolve_penetrations(bodies, fixed, geometry, preferred=None, active=(),
                         cap=PENETRATION_CAP):
    """
    Shove bodies out of each other, the fixed body never moves; every shove
    is a separating translation away from the body that ran into the other

    Returns (bodies, offsets, cap_hit), offsets maps keys to the total cell
    shift each body received.
    """
    bodies = {b.key: b for b in bodies}
    order = list(bodies)
    active = [fixed] + [k for k in active if k != fixed]
    offsets = {}
    for _ in range(cap):
        shove = None
        for a in active:
            mask = bodies[a].mask(geometry)
            for b in order:
                if b == a or b == fixed:
                    continue
                if np.any(mask & bodies[b].mask(geometry)):
                    shove = (a, b, mask)
                    break
            if shove:
                break
        if shove is None:
            return list(bodies.values()), offsets, False
        a, b, mask = shove
        pref = preferred
        if pref is None or not np.any(pref):
            pref = bodies[b].centroid(geometry)[:2] - bodies[a].centroid(geometry)[:2]
        shift = separating_translation(bodies[b], mask, pref)
        bodies[b] = bodies[b].shifted(shift)
        total = offsets.get(b, (0, 0))
        offsets[b] = (total[0] + shift[0], total[1] + shift[1])
        if b not in active:
            active.append(b)
    still = any(_overlaps(bodies[a], bodies[b], geometry)
                for i, a in enumerate(order) for b in order[i + 1:])
    return list(bodies.values()), offsets, still


def apply_action(scene, action, gripper):
    """
    Move the selected object by the commanded motion, shove whatever the
    gripper sweep or the moved object runs into and take objects whose
    centroid left the table off it

    Raises InfeasibleActionError when the path leaves the reach or the
    gripper disc at the grasp sits inside another object. Contact
    resolution is deterministic and draws no random numbers.
    """
    selected = scene.by_label(action.label)
    if selected is None:
        raise InfeasibleActionError("no object with label {}".format(action.label))
    anchor = robot_anchor(scene.table, scene.camera)
    if not within_reach(action.waypoints, anchor, gripper):
        raise InfeasibleActionError("path leaves the gripper's reach")

    geometry = scene.field_geometry
    blockers = grasp_blockers(scene_bodies(scene), action.grasp.position, gripper.radius,
                              geometry, (selected.id,))
    if blockers:
        raise InfeasibleActionError(
            "gripper at the grasp collides with {}".format(", ".join(blockers)))
    motion = action.motion()
    poses = {obj.id: obj.pose for obj in scene.objects}
    poses[selected.id] = motion.compose(selected.pose)

    others = [b for b in scene_bodies(scene) if b.key != selected.id]
    moved_voxels = selected.moved(poses[selected.id]).rasterize(geometry)
    moved_body = Body(selected.id, selected.label, moved_voxels)
    preferred = action.direction

    swept = []
    contacts = 0
    shoved = {}
    bodies = []
    for body in others:
        touching = _touching_segments(body, action.waypoints, gripper.radius, geometry)
        if touching:
            contacts += 1
            path = touching[-1][1][:2] - touching[0][0][:2]
            pref = path if np.any(path) else preferred
            shift = separating_translation(
                body, _sweep_mask(touching, gripper.radius, geometry), pref)
            body = body.shifted(shift)
            shoved[body.key] = shift
            swept.append(body.key)
        bodies.append(body)

    bodies, offsets, cap_hit = resolve_penetrations(
        [moved_body] + bodies, selected.id, geometry, preferred, swept)
    if cap_hit:
        logger.info("penetration cap hit moving %s", selected.id)
    for key, shift in offsets.items():
        total = shoved.get(key, (0, 0))
        shoved[key] = (total[0] + shift[0], total[1] + shift[1])
    for key, (dx, dy) in shoved.items():
        pose = poses[key]
        poses[key] = Transform(pose.rotation, pose.translation + np.array(
            [dx * geometry.resolution, dy * geometry.resolution, 0.0]))

    ejected = []
    for obj in scene.objects:
        centroid = obj.moved(poses[obj.id]).centroid()
        if not scene.table.contains_xy(centroid[None, :])[0]:
            ejected.append(obj.id)
    if ejected:
        logger.info("ejected %s", ", ".join(ejected))
    displaced = sorted(k for k, s in shoved.items() if s != (0, 0))
    return ActionOutcome(poses, contacts, ejected, action.kind in (SLIDE, PICK),
                         displaced, cap_hit)
