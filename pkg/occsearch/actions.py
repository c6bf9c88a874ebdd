"""
Action primitives: Push, Slide and Pick with their parameters, grasp pose
and end effector path
"""
import numpy as np

from . import etree, NSMAP, qname
from .base import XMLComparableBase
from .geometry import Transform

PUSH = "push"
SLIDE = "slide"
PICK = "pick"
KINDS = (PUSH, SLIDE, PICK)
PARAMETER_NAMES = {
    PUSH: ("angle", "distance"),
    SLIDE: ("dx", "dy", "dtheta"),
    PICK: ("x", "y", "dtheta", "lift"),
}


def _floats(text):
    return [float(v) for v in text.split()]


def _format(values):
    return " ".join(repr(float(v)) for v in np.ravel(values))


class Grasp:
    """
    Gripper pose at first contact

    position: 3D point of the gripper center
    approach: unit 2D direction the gripper closes in along
    """

    def __init__(self, position, approach):
        position = np.asarray(position, dtype=np.float64)
        approach = np.asarray(approach, dtype=np.float64)
        if position.shape != (3,) or approach.shape != (2,):
            raise ValueError("grasp needs a 3D position and a 2D approach")
        norm = np.linalg.norm(approach)
        if norm == 0.0:
            raise ValueError("approach should not be zero")
        self.position = position
        self.approach = approach / norm

    def __eq__(self, other):
        if not isinstance(other, Grasp):
            return NotImplemented
        return (np.array_equal(self.position, other.position) and
                np.array_equal(self.approach, other.approach))

    def __repr__(self):
        return "Grasp(position={}, approach={})".format(
            tuple(self.position.tolist()), tuple(self.approach.tolist()))


def push_path(contact, direction, distance, push_height, clearance):
    """Descend beside the object, push along direction, lift off"""
    start = np.array([contact[0], contact[1], push_height])
    end = start.copy()
    end[:2] += direction * distance
    above = np.array([0.0, 0.0, clearance - push_height])
    return np.stack([start + above, start, end, end + above])


def carry_path(grasp, motion, lift, clearance):
    """
    Descend onto the grasp, carry it through motion lifted by lift (0 for a
    drag along the table) and rise again
    """
    start = grasp.position
    end = motion.apply(start[None, :])[0]
    above = np.array([0.0, 0.0, max(clearance - start[2], 0.0)])
    points = [start + above, start]
    if lift > 0.0:
        up = np.array([0.0, 0.0, lift])
        points += [start + up, end + up]
    points += [end, end + above]
    return np.stack(points)


class ActionInstance(XMLComparableBase):
    """
    Action element
    Has required attributes:
        kind: push, slide or pick
        label: segment label of the object acted on
        params: push (angle, distance); slide (dx, dy, dtheta);
            pick (x, y, dtheta, lift)
        grasp: x y z and the 2D approach direction
        pivot: point the object turns about
        waypoints: end effector path, x y z per point
    Has optional attribute:
        object: id of the object the label resolved to
    """

    def __init__(self, kind, label, params, grasp, pivot, waypoints, object_id=None):
        if kind not in KINDS:
            raise ValueError("kind should be one of {}".format(", ".join(KINDS)))
        params = tuple(float(p) for p in params)
        if len(params) != len(PARAMETER_NAMES[kind]):
            raise ValueError("{} takes parameters {}".format(
                kind, ", ".join(PARAMETER_NAMES[kind])))
        if not isinstance(grasp, Grasp):
            raise TypeError("grasp should be a Grasp")
        self._kind = kind
        self._label = int(label)
        self._params = params
        self._grasp = grasp
        self._pivot = np.asarray(pivot, dtype=np.float64)
        self._waypoints = np.asarray(waypoints, dtype=np.float64).reshape(-1, 3)
        self.object_id = object_id

    @property
    def kind(self):
        return self._kind

    @property
    def label(self):
        return self._label

    @property
    def params(self):
        return self._params

    @property
    def grasp(self):
        return self._grasp

    @property
    def pivot(self):
        return self._pivot

    @property
    def waypoints(self):
        return self._waypoints

    @property
    def direction(self):
        """Unit planar direction the object is sent in, zero when it stays put"""
        if self._kind == PUSH:
            angle = self._params[0]
            return np.array([np.cos(angle), np.sin(angle)])
        shift = self.motion().apply(self._pivot[None, :])[0, :2] - self._pivot[:2]
        norm = np.linalg.norm(shift)
        return shift / norm if norm > 0.0 else np.zeros(2)

    def motion(self):
        """Commanded world motion of the object"""
        if self._kind == PUSH:
            angle, distance = self._params
            return Transform.planar(distance * np.cos(angle), distance * np.sin(angle))
        if self._kind == SLIDE:
            dx, dy, dtheta = self._params
            return Transform.about(self._pivot, dtheta, dx, dy)
        x, y, dtheta, _ = self._params
        return Transform.about(self._pivot, dtheta, x - self._pivot[0], y - self._pivot[1])

    def same_decision(self, other):
        """Kind, label and parameters agree exactly"""
        return (self._kind == other._kind and self._label == other._label and
                self._params == other._params)

    def element(self):
        el = etree.Element(qname("Action"), nsmap=NSMAP)
        el.set("kind", self._kind)
        el.set("label", str(self._label))
        if self.object_id is not None:
            el.set("object", self.object_id)
        el.set("params", _format(self._params))
        el.set("grasp", _format(np.concatenate([self._grasp.position, self._grasp.approach])))
        el.set("pivot", _format(self._pivot))
        el.set("waypoints", _format(self._waypoints))
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        grasp = _floats(xml.get("grasp"))
        return ActionInstance(
            xml.get("kind"), int(xml.get("label")), _floats(xml.get("params")),
            Grasp(grasp[:3], grasp[3:]), _floats(xml.get("pivot")),
            _floats(xml.get("waypoints")), xml.get("object"))
