"""
Greedy action selection: sample Push, Slide and Pick candidates on the
selected objects, drop the infeasible ones and keep the best scored
"""
import logging
import math

import numpy as np
from scipy.spatial import ConvexHull

from . import etree, NSMAP, qname, TAU_GREEDY, DEFAULT_WEIGHTS, TABLE_LABEL, \
    UNLABELED
from .actions import ActionInstance, Grasp, PUSH, SLIDE, PICK, KINDS, \
    push_path, carry_path
from .base import XMLComparableBase
from .completion.baselines import prism_footprint
from .dynamics import GripperModel, Body, count_contacts, robot_anchor, \
    within_reach
from .exceptions import NoFeasibleActionError, NoSelectableObjectError
from .geometry import label_bits, march
from .memory import transformed_mask
from .occlusion import compute_occlusions, select_object
from .voxelcore import BinaryVoxelGrid

logger = logging.getLogger(__name__)

GRASPS_PER_OBJECT = 16
# highest point above the table a push or grasp is made at
CONTACT_HEIGHT = 0.05


class RewardWeights(XMLComparableBase):
    """
    Weights element
    Has optional attributes:
        information, dispersion, direction, collision
    """

    def __init__(self, information=DEFAULT_WEIGHTS[0], dispersion=DEFAULT_WEIGHTS[1],
                 direction=DEFAULT_WEIGHTS[2], collision=DEFAULT_WEIGHTS[3]):
        values = (information, dispersion, direction, collision)
        if not all(isinstance(v, (int, float)) for v in values):
            raise TypeError("weights should be numbers")
        if not all(math.isfinite(v) for v in values):
            raise ValueError("weights should be finite")
        self._values = tuple(float(v) for v in values)

    @property
    def vector(self):
        return np.array(self._values)

    def scaled(self, factor):
        return RewardWeights(*(v * factor for v in self._values))

    def element(self):
        el = etree.Element(qname("Weights"), nsmap=NSMAP)
        for name, value in zip(("information", "dispersion", "direction",
                                "collision"), self._values):
            el.set(name, repr(value))
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        names = ("information", "dispersion", "direction", "collision")
        return RewardWeights(*(float(xml.get(n, d)) for n, d in zip(names, DEFAULT_WEIGHTS)))


class PlannerConfig(XMLComparableBase):
    """
    Planner element
    Has optional attributes:
        samples: candidates drawn per decision
        tauGreedy: chance of attacking the objects blocking the target
        pushMin, pushMax: push distance bounds in meters
        slideTranslation: largest slide shift in meters
        slideRotation, pickRotation: largest turn in radians
        liftMin, liftMax: pick lift bounds in meters
        seed: default episode seed
    And an optional child element:
        Weights
    """

    def __init__(self, n_samples=200, tau_greedy=TAU_GREEDY, weights=None,
                 push_range=(0.05, 0.25), slide_translation=0.3,
                 slide_rotation=math.pi / 2, pick_rotation=math.pi / 2,
                 lift_range=(0.1, 0.2), seed=0):
        self.n_samples = n_samples
        self.tau_greedy = tau_greedy
        self.weights = weights if weights is not None else RewardWeights()
        push_range = tuple(float(v) for v in push_range)
        lift_range = tuple(float(v) for v in lift_range)
        if not 0.0 <= push_range[0] <= push_range[1]:
            raise ValueError("push range should be 0 <= min <= max")
        if not 0.0 <= lift_range[0] <= lift_range[1]:
            raise ValueError("lift range should be 0 <= min <= max")
        if slide_translation < 0 or slide_rotation < 0 or pick_rotation < 0:
            raise ValueError("slide and pick bounds should not be negative")
        self.push_range = push_range
        self.lift_range = lift_range
        self.slide_translation = float(slide_translation)
        self.slide_rotation = float(slide_rotation)
        self.pick_rotation = float(pick_rotation)
        self.seed = int(seed)

    @property
    def n_samples(self):
        return self._n_samples

    @n_samples.setter
    def n_samples(self, value):
        if not isinstance(value, int):
            raise TypeError("n_samples should be an int")
        if value < 1:
            raise ValueError("n_samples should be at least 1")
        self._n_samples = value

    @property
    def tau_greedy(self):
        return self._tau_greedy

    @tau_greedy.setter
    def tau_greedy(self, value):
        if not isinstance(value, (int, float)):
            raise TypeError("tau_greedy should be a number")
        if not 0.0 <= value <= 1.0:
            raise ValueError("tau_greedy should be in [0, 1]")
        self._tau_greedy = float(value)

    @property
    def weights(self):
        return self._weights

    @weights.setter
    def weights(self, value):
        if not isinstance(value, RewardWeights):
            raise TypeError("weights should be RewardWeights")
        self._weights = value

    def element(self):
        el = etree.Element(qname("Planner"), nsmap=NSMAP)
        el.set("samples", str(self._n_samples))
        el.set("tauGreedy", repr(self._tau_greedy))
        el.set("pushMin", repr(self.push_range[0]))
        el.set("pushMax", repr(self.push_range[1]))
        el.set("slideTranslation", repr(self.slide_translation))
        el.set("slideRotation", repr(self.slide_rotation))
        el.set("pickRotation", repr(self.pick_rotation))
        el.set("liftMin", repr(self.lift_range[0]))
        el.set("liftMax", repr(self.lift_range[1]))
        el.set("seed", str(self.seed))
        el.append(self._weights.element())
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        d = PlannerConfig()
        weights = xml.find(qname("Weights"))
        return PlannerConfig(
            int(xml.get("samples", d.n_samples)),
            float(xml.get("tauGreedy", d.tau_greedy)),
            RewardWeights.parse(weights) if weights is not None else None,
            (float(xml.get("pushMin", d.push_range[0])),
             float(xml.get("pushMax", d.push_range[1]))),
            float(xml.get("slideTranslation", d.slide_translation)),
            float(xml.get("slideRotation", d.slide_rotation)),
            float(xml.get("pickRotation", d.pick_rotation)),
            (float(xml.get("liftMin", d.lift_range[0])),
             float(xml.get("liftMax", d.lift_range[1]))),
            int(xml.get("seed", d.seed)))


class PlanningState:
    """
    Everything one decision looks at

    field: belief OccupancyField
    camera: Camera the field was seen from
    lookup: segment label per voxel, NO_LABEL where unknown
    table: Table
    target_label: segment label of the target when it is in sight
    gripper: GripperModel
    floor_layers: voxel layers at the bottom of the field that are table
    """

    def __init__(self, field, camera, lookup, table, target_label=None,
                 gripper=None, floor_layers=1):
        self.field = field
        self.camera = camera
        self.lookup = np.asarray(lookup)
        self.table = table
        self.target_label = target_label
        self.gripper = gripper if gripper is not None else GripperModel()
        self.floor_layers = int(floor_layers)
        self.geometry = field.geometry
        self.anchor = robot_anchor(table, camera)
        self.occupied = field.known_occupied()
        self.shadows = compute_occlusions(field, camera, self.lookup, self.floor_layers)
        self.blockers = self.shadows.blocker_labels(self.lookup)

        self.bodies = {}
        labelled = self.occupied & (self.lookup > TABLE_LABEL) & (self.lookup < UNLABELED)
        labelled[:, :, :self.floor_layers] = False
        for label in np.unique(self.lookup[labelled]).tolist():
            voxels = np.argwhere(labelled & (self.lookup == label))
            self.bodies[int(label)] = Body(int(label), int(label), voxels)
        self._grasps = {}

        above = self.occupied[:, :, self.floor_layers:].any(axis=2)
        clear = field.known_free()[:, :, self.floor_layers] & ~above
        self.free_cells = np.argwhere(clear)
        self.target_action = None
        self.stuck_target = False
        self.blocking = {}

    def assess_target(self, config):
        """
        Look for a feasible Pick of the target; when the target is in sight
        but none exists, weigh the objects in its way. Returns the Pick or None.
        """
        self.target_action = target_pick(self, config)
        self.stuck_target = (self.target_label in self.bodies and
                             self.target_action is None)
        self.blocking = blocking_weights(self) if self.stuck_target else {}
        return self.target_action

    @property
    def labels(self):
        return sorted(self.bodies)

    def centroid(self, label):
        return self.bodies[label].centroid(self.geometry)

    def contact_height(self, label):
        """Height pushes and grasps on the object are made at"""
        top = self.geometry.origin[2] + (self.bodies[label].top + 1) * self.geometry.resolution
        return self.table.height + min((top - self.table.height) / 2.0, CONTACT_HEIGHT)

    def grasps(self, label):
        """Grasp poses spread evenly along the object's hull boundary"""
        if label not in self._grasps:
            self._grasps[label] = hull_grasps(self.bodies[label], self.geometry,
                                              self.gripper, self.contact_height(label))
        return self._grasps[label]

    def cell_centers(self, cells):
        cells = np.asarray(cells).reshape(-1, 2)
        return self.geometry.origin[:2] + (cells + 0.5) * self.geometry.resolution


def hull_grasps(body, geometry, gripper, height, count=GRASPS_PER_OBJECT):
    """
    Grasps on the convex prism around the body: points spaced evenly along
    the hull outline, pushed out by the gripper radius, closing in along the
    inward edge normal
    """
    cells = prism_footprint(body.footprint)
    corners = np.unique((cells[:, None, :] + np.array(
        [[0, 0], [1, 0], [0, 1], [1, 1]])[None, :, :]).reshape(-1, 2), axis=0)
    hull = ConvexHull(corners.astype(np.float64))
    outline = geometry.origin[:2] + corners[hull.vertices] * geometry.resolution
    edges = np.roll(outline, -1, axis=0) - outline
    lengths = np.linalg.norm(edges, axis=1)
    cumulative = np.concatenate([[0.0], np.cumsum(lengths)])
    grasps = []
    for s in (np.arange(count) + 0.5) * cumulative[-1] / count:
        e = min(int(np.searchsorted(cumulative, s, side="right")) - 1, len(edges) - 1)
        point = outline[e] + edges[e] * (s - cumulative[e]) / lengths[e]
        # hull vertices run counterclockwise, the outward normal is on the right
        normal = np.array([edges[e][1], -edges[e][0]]) / lengths[e]
        position = point + normal * (gripper.radius + geometry.resolution / 2.0)
        grasps.append(Grasp([position[0], position[1], height], -normal))
    return grasps


def _disc_blockers(state, position, label):
    """Labels of known occupied voxels under the gripper disc at position"""
    geometry = state.geometry
    res = geometry.resolution
    low = np.maximum(np.floor((position[:2] - state.gripper.radius - geometry.origin[:2]) /
                              res).astype(np.int64), 0)
    high = np.minimum(np.floor((position[:2] + state.gripper.radius - geometry.origin[:2]) /
                               res).astype(np.int64), np.asarray(geometry.dims[:2]) - 1)
    if np.any(high < low):
        return []
    i, j = np.meshgrid(np.arange(low[0], high[0] + 1), np.arange(low[1], high[1] + 1),
                       indexing="ij")
    cells = np.stack([i.ravel(), j.ravel()], axis=1)
    near = np.linalg.norm(state.cell_centers(cells) - position[:2], axis=1) < state.gripper.radius
    cells = cells[near]
    layer = max(int(np.floor((position[2] - geometry.origin[2]) / res)), state.floor_layers)
    column = state.occupied[cells[:, 0], cells[:, 1], layer:]
    labels = state.lookup[cells[:, 0], cells[:, 1], layer:][column]
    return sorted(set(int(v) for v in labels) - {label})


def feasible(state, action):
    """
    The gripper disc at the first contact pose is clear of everything but
    the selected object and the whole path stays within reach
    """
    if _disc_blockers(state, action.grasp.position, action.label):
        return False
    return within_reach(action.waypoints, state.anchor, state.gripper)


def _visible(state, occupied, centers):
    if len(centers) == 0:
        return np.zeros(0, dtype=bool)
    hit, _, _ = march(state.geometry, state.camera.position, centers,
                      occupied=occupied, skip_end=True)
    return hit[:, 0] < 0


def predicted_occupancy(state, label, motion):
    """Known occupied voxels with the object's voxels moved by motion"""
    moved = state.occupied & (state.lookup == label)
    occupied = state.occupied & ~moved
    if moved.any():
        occupied |= transformed_mask(BinaryVoxelGrid.from_mask(state.geometry, moved), motion)
    return occupied


def info_gain(state, label, motion):
    """
    Shadow voxels the motion should reveal

    A shadow voxel cast by the object counts when, with the object moved,
    either the voxel itself or the voxel carried along with the object is
    in clear sight of the camera.
    """
    attributed = state.blockers == label
    if not attributed.any():
        return 0
    occupied = predicted_occupancy(state, label, motion)
    geometry = state.geometry
    voxels = state.shadows.voxels[attributed]

    seen = np.zeros(len(voxels), dtype=bool)
    only = state.shadows.bits[attributed] == label_bits(label)
    seen[only] = _visible(state, occupied, geometry.voxel_to_world(voxels[only]))

    carried = geometry.world_to_voxel(motion.apply(geometry.voxel_to_world(voxels)))
    rest = np.nonzero(~seen & geometry.contains(carried))[0]
    centers = geometry.voxel_to_world(carried[rest])
    in_view = state.camera.in_view(centers)
    rest = rest[in_view]
    seen[rest] = _visible(state, occupied, centers[in_view])
    return int(seen.sum())


def dispersion(centroids):
    """Root mean square planar distance of the centroids from their mean"""
    centroids = np.asarray(centroids, dtype=np.float64).reshape(-1, 3)[:, :2]
    if len(centroids) < 2:
        return 0.0
    return float(np.sqrt(np.mean(np.sum((centroids - centroids.mean(axis=0)) ** 2, axis=1))))


def direction(before, after, others):
    """
    Change of the moved centroid's planar distance from the mean of the
    other centroids, positive moving away
    """
    others = np.asarray(others, dtype=np.float64).reshape(-1, 3)
    if len(others) == 0:
        return 0.0
    center = others[:, :2].mean(axis=0)
    return float(np.linalg.norm(np.asarray(after)[:2] - center) -
                 np.linalg.norm(np.asarray(before)[:2] - center))


def collision(contacts):
    return float(contacts)


def reward(components, weights):
    """w . nu"""
    return float(np.dot(np.asarray(components, dtype=np.float64), weights.vector))


def score(state, action):
    """The four reward components of a candidate"""
    label = action.label
    motion = action.motion()
    before = state.centroid(label)
    after = motion.apply(before[None, :])[0]
    others = [state.centroid(other) for other in state.labels if other != label]
    centroids = others + [after]
    contacts = count_contacts(list(state.bodies.values()), action.waypoints,
                              state.gripper.radius, state.geometry, exclude=(label,))
    return (float(info_gain(state, label, motion)), dispersion(centroids),
            direction(before, after, others), collision(contacts))


class Candidate:
    """One sampled action with its score"""

    def __init__(self, index, action, feasible, components=None, reward=None):
        self.index = index
        self.action = action
        self.feasible = feasible
        self.components = components
        self.reward = reward

    def __repr__(self):
        return "Candidate(index={}, kind={}, label={}, feasible={}, reward={})".format(
            self.index, self.action.kind, self.action.label, self.feasible, self.reward)


def blocking_weights(state):
    """
    Objects standing in the way of the target: for every target grasp the
    labels under the gripper disc, plus for every shadow voxel inside the
    target's footprint the label casting it
    """
    target = state.target_label
    if target is None or target not in state.bodies:
        return {}
    weights = {}
    for grasp in state.grasps(target):
        for label in _disc_blockers(state, grasp.position, target):
            if TABLE_LABEL < label < UNLABELED:
                weights[label] = weights.get(label, 0) + 1
    footprint = prism_footprint(state.bodies[target].footprint)
    inside = np.zeros(state.geometry.dims[:2], dtype=bool)
    inside[footprint[:, 0], footprint[:, 1]] = True
    voxels = state.shadows.voxels
    hidden = inside[voxels[:, 0], voxels[:, 1]]
    for label in state.blockers[hidden].tolist():
        if TABLE_LABEL < label < UNLABELED and label != target:
            weights[label] = weights.get(label, 0) + 1
    return weights


def target_blocking_rule(state, rng, tau_greedy=TAU_GREEDY, fallback=None):
    """
    With probability tau_greedy pick one of the objects in state.blocking
    with probability proportional to its weight, otherwise defer to
    fallback, by default occlusion driven selection over the state's shadows
    """
    if fallback is None:
        def fallback():
            return shadow_object(state, rng)
    weights = state.blocking
    u = rng.random()
    if u < tau_greedy and weights:
        labels = sorted(weights)
        p = np.array([weights[label] for label in labels], dtype=np.float64)
        return int(labels[rng.choice(len(labels), p=p / p.sum())])
    return fallback()


def target_pick(state, config):
    """A feasible Pick lifting the target straight up, or None"""
    target = state.target_label
    if target is None or target not in state.bodies:
        return None
    pivot = state.centroid(target)
    lift = config.lift_range[1]
    for grasp in state.grasps(target):
        action = build_action(state, PICK, target, grasp, (pivot[0], pivot[1], 0.0, lift))
        if feasible(state, action):
            return action
    return None


def build_action(state, kind, label, grasp, params):
    """ActionInstance with its path for the given draw"""
    pivot = state.centroid(label)
    clearance = state.table.height + state.gripper.clearance
    if kind == PUSH:
        angle, distance = params
        u = np.array([math.cos(angle), math.sin(angle)])
        waypoints = push_path(grasp.position[:2], u, distance, grasp.position[2], clearance)
        return ActionInstance(kind, label, params, grasp, pivot, waypoints)
    lift = params[3] if kind == PICK else 0.0
    action = ActionInstance(kind, label, params, grasp, pivot, grasp.position[None, :])
    waypoints = carry_path(grasp, action.motion(), lift, clearance)
    return ActionInstance(kind, label, params, grasp, pivot, waypoints)


def push_contact(state, label, angle):
    """Gripper pose behind the object for a push along angle"""
    u = np.array([math.cos(angle), math.sin(angle)])
    cells = prism_footprint(state.bodies[label].footprint)
    res = state.geometry.resolution
    corners = (cells[:, None, :] + np.array([[0, 0], [1, 0], [0, 1], [1, 1]])[None, :, :]) \
        .reshape(-1, 2) * res + state.geometry.origin[:2]
    center = state.centroid(label)[:2]
    behind = float(((center - corners) @ u).max())
    position = center - u * (behind + state.gripper.radius + res / 2.0)
    return Grasp([position[0], position[1], state.contact_height(label)], u)


def shadow_object(state, rng):
    """SelectObject, any perceived object when no shadow names one"""
    try:
        return select_object(state.shadows, state.lookup, rng)
    except NoSelectableObjectError:
        labels = state.labels
        return labels[int(rng.integers(len(labels)))]


def choose_object(state, config, rng):
    """SelectObject, with the blocking rule while the target is stuck"""
    if state.stuck_target:
        return target_blocking_rule(state, rng, config.tau_greedy)
    return shadow_object(state, rng)


def sample_candidate(state, config, rng):
    """Draw every random choice of one candidate, then build it"""
    kind = KINDS[int(rng.integers(len(KINDS)))]
    label = choose_object(state, config, rng)
    if label not in state.bodies:
        return None
    if kind == PUSH:
        angle = float(rng.uniform(0.0, 2.0 * math.pi))
        distance = float(rng.uniform(*config.push_range))
        grasp = push_contact(state, label, angle)
        return build_action(state, kind, label, grasp, (angle, distance))
    grasps = state.grasps(label)
    grasp = grasps[int(rng.integers(len(grasps)))]
    if kind == SLIDE:
        r = float(rng.uniform(0.0, config.slide_translation))
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        dtheta = float(rng.uniform(-config.slide_rotation, config.slide_rotation))
        return build_action(state, kind, label, grasp,
                            (r * math.cos(phi), r * math.sin(phi), dtheta))
    if len(state.free_cells):
        cell = state.free_cells[int(rng.integers(len(state.free_cells)))]
        x, y = state.cell_centers(cell)[0]
    else:
        x, y = state.centroid(label)[:2]
    dtheta = float(rng.uniform(-config.pick_rotation, config.pick_rotation))
    lift = float(rng.uniform(*config.lift_range))
    return build_action(state, kind, label, grasp, (float(x), float(y), dtheta, lift))


def gen_motion(state, config, rng, record=None):
    """
    Sample n_samples candidates and return the feasible one with the highest
    reward, the earliest on ties

    record: list that receives every Candidate in sample order
    """
    if not state.bodies:
        raise NoFeasibleActionError("no perceived objects to act on")
    best = None
    for index in range(config.n_samples):
        action = sample_candidate(state, config, rng)
        if action is None or not feasible(state, action):
            candidate = Candidate(index, action, False)
        else:
            components = score(state, action)
            candidate = Candidate(index, action, True, components,
                                  reward(components, config.weights))
            if best is None or candidate.reward > best.reward:
                best = candidate
        if record is not None:
            record.append(candidate)
    if best is None:
        raise NoFeasibleActionError("none of {} candidates is feasible".format(
            config.n_samples))
    logger.debug("chose %r", best)
    return best
