"""
Ground truth world: table, objects and camera, with the scene file format
"""
import logging
import math
import os

import numpy as np

from . import etree, NSMAP, qname, validate, TABLE_LABEL, NO_LABEL, UNLABELED
from .base import XMLComparableBase, XMLListBase
from .camera import Camera
from .completion.primitives import voxelize_primitive
from .exceptions import SceneFileError
from .geometry import Transform
from .gridfile import load_grid, dump_grid
from .voxelcore import BinaryVoxelGrid, GridGeometry

logger = logging.getLogger(__name__)

DEFAULT_COLOR = (0.5, 0.5, 0.5)
TABLE_COLOR = (0.55, 0.45, 0.35)
SHAPE_ATTRIBUTES = {
    "box": ("sizeX", "sizeY", "sizeZ"),
    "cylinder": ("radius", "height"),
    "sphere": ("radius",),
    "prism": ("height",),
    "grid": (),
}


def _floats(text):
    return [float(v) for v in text.split()]


def _format(values):
    return " ".join(repr(float(v)) for v in values)


class Table(XMLComparableBase):
    """
    Table element
    Has required attributes:
        xmin, ymin, xmax, ymax: extent of the top in meters
        height: z of the top surface
    """

    def __init__(self, xmin, ymin, xmax, ymax, height=0.0):
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("table extent should be a nonempty rectangle")
        self._xmin = float(xmin)
        self._ymin = float(ymin)
        self._xmax = float(xmax)
        self._ymax = float(ymax)
        self._height = float(height)

    @property
    def xmin(self):
        return self._xmin

    @property
    def ymin(self):
        return self._ymin

    @property
    def xmax(self):
        return self._xmax

    @property
    def ymax(self):
        return self._ymax

    @property
    def height(self):
        return self._height

    @property
    def center(self):
        return np.array([(self._xmin + self._xmax) / 2.0,
                         (self._ymin + self._ymax) / 2.0, self._height])

    def contains_xy(self, points):
        points = np.asarray(points, dtype=np.float64).reshape(-1, points.shape[-1])
        return ((points[:, 0] >= self._xmin) & (points[:, 0] <= self._xmax) &
                (points[:, 1] >= self._ymin) & (points[:, 1] <= self._ymax))

    def element(self):
        el = etree.Element(qname("Table"), nsmap=NSMAP)
        el.set("xmin", repr(self._xmin))
        el.set("ymin", repr(self._ymin))
        el.set("xmax", repr(self._xmax))
        el.set("ymax", repr(self._ymax))
        el.set("height", repr(self._height))
        return el

    @staticmethod
    def parse(xml):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        return Table(*(float(xml.get(k)) for k in
                       ("xmin", "ymin", "xmax", "ymax", "height")))


class ObjectModel(XMLComparableBase):
    """
    Object element, a rigid voxelized body

    id: unique token
    shape: BinaryVoxelGrid in the canonical object frame
    pose: Transform from object frame to world
    color: RGB in [0, 1]
    is_target: whether this is the object being searched for
    source: how the shape was made, {"shape": kind, ...} for the scene file
    """

    def __init__(self, id, shape, pose=None, color=DEFAULT_COLOR,
                 is_target=False, source=None, label=None, toppled=False):
        if not isinstance(id, str) or not id:
            raise TypeError("id should be a nonempty string")
        if not isinstance(shape, BinaryVoxelGrid):
            raise TypeError("shape should be a BinaryVoxelGrid")
        if shape.is_empty():
            raise ValueError("shape of {} is empty".format(id))
        color = tuple(float(c) for c in color)
        if len(color) != 3 or not all(0.0 <= c <= 1.0 for c in color):
            raise ValueError("color should be RGB in [0, 1]")
        self._id = id
        self._shape = shape
        self._pose = pose if pose is not None else Transform.identity()
        if not isinstance(self._pose, Transform):
            raise TypeError("pose should be a Transform")
        self._color = color
        self._is_target = bool(is_target)
        self._source = dict(source) if source else {"shape": "grid"}
        self._label = label
        self._toppled = bool(toppled)

    @property
    def id(self):
        return self._id

    @property
    def shape(self):
        return self._shape

    @property
    def pose(self):
        return self._pose

    @property
    def color(self):
        return self._color

    @property
    def is_target(self):
        return self._is_target

    @property
    def source(self):
        return dict(self._source)

    @property
    def label(self):
        return self._label

    @property
    def toppled(self):
        return self._toppled

    def moved(self, pose, label=None):
        """Same object at another pose"""
        return ObjectModel(self._id, self._shape, pose, self._color,
                           self._is_target, self._source,
                           self._label if label is None else label,
                           self._toppled)

    def centroid(self):
        """World centroid of the shape's voxel centers"""
        local = self._shape.voxel_to_world(self._shape.indices()).mean(axis=0)
        return self._pose.apply(local[None, :])[0]

    def corners(self):
        low = self._shape.origin
        high = self._shape.extent
        box = np.array([[x, y, z] for x in (low[0], high[0])
                        for y in (low[1], high[1]) for z in (low[2], high[2])])
        return self._pose.apply(box)

    def rasterize(self, geometry):
        """
        World voxel indices covered by the object, by looking up every
        world voxel center in the object frame
        """
        corners = self.corners()
        low = np.maximum(geometry.world_to_voxel(corners.min(axis=0)), 0)
        high = np.minimum(geometry.world_to_voxel(corners.max(axis=0)),
                          np.asarray(geometry.dims) - 1)
        if np.any(high < low):
            return np.zeros((0, 3), dtype=np.int64)
        axes = [np.arange(low[a], high[a] + 1) for a in range(3)]
        index = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        local = self._pose.inverse().apply(geometry.voxel_to_world(index))
        shape = self._shape
        cell = np.floor((local - shape.origin) / shape.resolution + 1e-9).astype(np.int64)
        inside = shape.contains(cell)
        hit = np.zeros(len(index), dtype=bool)
        c = cell[inside]
        hit[inside] = shape.data[c[:, 0], c[:, 1], c[:, 2]]
        return index[hit]

    def element(self):
        el = etree.Element(qname("Object"), nsmap=NSMAP)
        el.set("id", self._id)
        source = self._source
        kind = source.get("shape", "grid")
        el.set("shape", kind)
        for name in SHAPE_ATTRIBUTES[kind]:
            el.set(name, repr(float(source[name])))
        if kind == "prism":
            el.set("vertices", _format(np.ravel(source["vertices"])))
        if kind == "grid":
            el.set("file", source.get("file", "{}.vxg".format(self._id)))
        translation = self._pose.translation
        el.set("x", repr(float(translation[0])))
        el.set("y", repr(float(translation[1])))
        el.set("z", repr(float(translation[2])))
        el.set("yaw", repr(self._pose.yaw))
        el.set("color", _format(self._color))
        if self._is_target:
            el.set("target", "true")
        return el

    @staticmethod
    def parse(xml, resolution, directory="."):
        """
        Parse XML and return ObjectModel, primitives are voxelized at the
        scene resolution and grid files read relative to directory
        """
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        line = getattr(xml, "sourceline", None)
        kind = xml.get("shape")
        if kind not in SHAPE_ATTRIBUTES:
            raise SceneFileError("unknown shape {}".format(kind), line=line)
        source = {"shape": kind}
        for name in SHAPE_ATTRIBUTES[kind]:
            if xml.get(name) is None:
                raise SceneFileError(
                    "{} object {} needs attribute {}".format(
                        kind, xml.get("id"), name), line=line)
            source[name] = float(xml.get(name))
        try:
            if kind == "box":
                shape = voxelize_primitive(
                    "box", (source["sizeX"], source["sizeY"], source["sizeZ"]),
                    resolution)
            elif kind == "cylinder":
                shape = voxelize_primitive(
                    "cylinder", (source["radius"], source["height"]), resolution)
            elif kind == "sphere":
                shape = voxelize_primitive("sphere", (source["radius"],), resolution)
            elif kind == "prism":
                if xml.get("vertices") is None:
                    raise SceneFileError("prism needs vertices", line=line)
                source["vertices"] = np.asarray(
                    _floats(xml.get("vertices"))).reshape(-1, 2).tolist()
                shape = voxelize_primitive("prism", (source["height"],),
                                           resolution, source["vertices"])
            else:
                if xml.get("file") is None:
                    raise SceneFileError("grid object needs a file", line=line)
                source["file"] = xml.get("file")
                shape = load_grid(os.path.join(directory, source["file"]))
        except (ValueError, OSError) as e:
            if isinstance(e, SceneFileError):
                raise
            raise SceneFileError(str(e), line=line)

        pose = Transform.planar(float(xml.get("x", 0.0)), float(xml.get("y", 0.0)),
                                float(xml.get("yaw", 0.0)), float(xml.get("z", 0.0)))
        color = _floats(xml.get("color")) if xml.get("color") else DEFAULT_COLOR
        target = xml.get("target", "false") in ("true", "1")
        return ObjectModel(xml.get("id"), shape, pose, color, target, source)


class ObjectList(XMLListBase):
    """List of ObjectModels"""

    def check(self, value):
        if not isinstance(value, ObjectModel):
            raise TypeError("{} is not an ObjectModel".format(value))

    def element(self):
        el = etree.Element(qname("ObjectList"), nsmap=NSMAP)
        for obj in self:
            el.append(obj.element())
        return el

    @staticmethod
    def parse(xml, resolution=0.01, directory="."):
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)

        new_object_list = ObjectList()
        for element in xml.iterchildren(qname("Object")):
            new_object_list.append(ObjectModel.parse(element, resolution, directory))
        return new_object_list


class Scene(XMLComparableBase):
    """
    Scene element
    Has required attributes:
        resolution: workspace voxel edge in meters
        workspaceHeight: height of the workspace above the table
    And child elements:
        Table, Camera, ObjectList

    Objects get segment labels 1..n in list order. The workspace field has
    one layer below the table top so that the table surface is voxel layer 0.
    """

    def __init__(self, table, camera, objects, resolution=0.015,
                 workspace_height=0.27, name="", ejected=()):
        if not isinstance(table, Table):
            raise TypeError("table should be a Table")
        if not isinstance(camera, Camera):
            raise TypeError("camera should be a Camera")
        if resolution <= 0 or workspace_height <= 0:
            raise ValueError("resolution and workspace height should be positive")
        objects = objects if isinstance(objects, ObjectList) else ObjectList(list(objects))
        ids = [o.id for o in objects]
        if len(set(ids)) != len(ids):
            raise ValueError("object ids should be unique")
        if len(ids) >= UNLABELED:
            raise ValueError("a scene holds at most {} objects".format(UNLABELED - 1))
        if table.contains_xy(camera.position[None, :])[0] and \
                camera.position[2] <= table.height + workspace_height:
            raise ValueError("camera should be off the table")
        self._table = table
        self._camera = camera
        self._resolution = float(resolution)
        self._workspace_height = float(workspace_height)
        self._name = name
        self._ejected = tuple(ejected)
        labelled = ObjectList()
        for number, obj in enumerate(objects, start=1):
            labelled.append(obj if obj.label is not None else obj.moved(obj.pose, number))
        labels = [o.label for o in labelled]
        if any(not TABLE_LABEL < label < UNLABELED for label in labels):
            raise ValueError("object labels should be in 1..{}".format(UNLABELED - 1))
        if len(set(labels)) != len(labels):
            raise ValueError("object labels should be unique")
        self._objects = labelled

    @property
    def table(self):
        return self._table

    @property
    def camera(self):
        return self._camera

    @property
    def objects(self):
        return self._objects

    @property
    def resolution(self):
        return self._resolution

    @property
    def workspace_height(self):
        return self._workspace_height

    @property
    def name(self):
        return self._name

    @property
    def ejected(self):
        return self._ejected

    @property
    def target_id(self):
        for obj in self._objects:
            if obj.is_target:
                return obj.id
        return None

    @property
    def field_geometry(self):
        res = self._resolution
        t = self._table
        dims = (int(math.ceil((t.xmax - t.xmin) / res - 1e-9)),
                int(math.ceil((t.ymax - t.ymin) / res - 1e-9)),
                int(math.ceil(self._workspace_height / res - 1e-9)) + 1)
        return GridGeometry(dims, res, (t.xmin, t.ymin, t.height - res))

    def get(self, id):
        for obj in self._objects:
            if obj.id == id:
                return obj
        raise KeyError(id)

    def by_label(self, label):
        for obj in self._objects:
            if obj.label == label:
                return obj
        return None

    def object_voxels(self):
        """World voxel indices per object id"""
        geometry = self.field_geometry
        return {obj.id: obj.rasterize(geometry) for obj in self._objects}

    def label_grid(self):
        """Ground truth labels over the workspace: table layer, objects, NO_LABEL"""
        geometry = self.field_geometry
        labels = np.full(geometry.dims, NO_LABEL, dtype=np.int16)
        labels[:, :, 0] = TABLE_LABEL
        for obj in self._objects:
            index = obj.rasterize(geometry)
            labels[index[:, 0], index[:, 1], index[:, 2]] = obj.label
        return labels

    def with_poses(self, poses, ejected=()):
        """New scene with some objects moved and some taken off the table"""
        ejected = set(ejected)
        objects = ObjectList()
        for obj in self._objects:
            if obj.id in ejected:
                continue
            objects.append(obj.moved(poses.get(obj.id, obj.pose)))
        return Scene(self._table, self._camera, objects, self._resolution,
                     self._workspace_height, self._name,
                     self._ejected + tuple(sorted(ejected)))

    def with_outcome(self, outcome):
        """Scene after an ActionOutcome"""
        return self.with_poses(outcome.poses, outcome.ejected)

    def element(self):
        el = etree.Element(qname("Scene"), nsmap=NSMAP)
        if self._name:
            el.set("name", self._name)
        el.set("resolution", repr(self._resolution))
        el.set("workspaceHeight", repr(self._workspace_height))
        el.append(self._table.element())
        el.append(self._camera.element())
        el.append(self._objects.element())
        return el

    @staticmethod
    def parse(xml, directory="."):
        """
        Parse XML and return Scene
        """
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)
        resolution = float(xml.get("resolution"))
        table = camera = objects = None
        for element in xml.getchildren():
            tag = etree.QName(element.tag).localname
            if tag == "Table":
                table = Table.parse(element)
            elif tag == "Camera":
                camera = Camera.parse(element)
            elif tag == "ObjectList":
                objects = ObjectList.parse(element, resolution, directory)
        if table is None or camera is None or objects is None:
            raise SceneFileError("scene needs Table, Camera and ObjectList",
                                 line=xml.sourceline)
        return Scene(table, camera, objects, resolution,
                     float(xml.get("workspaceHeight")), xml.get("name", ""))


def load_scene(path):
    """
    Read, validate and parse a scene file, errors carry file and line
    """
    try:
        tree = etree.parse(path)
    except etree.XMLSyntaxError as e:
        raise SceneFileError(e.msg, path, e.lineno)
    valid, error = validate(tree.getroot())
    if not valid:
        last = error.error_log.last_error
        raise SceneFileError(last.message, path, last.line)
    try:
        return Scene.parse(tree.getroot(), os.path.dirname(os.path.abspath(path)))
    except SceneFileError as e:
        raise SceneFileError(e.message, path, e.line)


def save_scene(scene, path):
    """Write a scene file, grid shaped objects get their grid file beside it"""
    directory = os.path.dirname(os.path.abspath(path))
    for obj in scene.objects:
        if obj.source.get("shape") == "grid":
            dump_grid(obj.shape, os.path.join(
                directory, obj.source.get("file", "{}.vxg".format(obj.id))))
    with open(path, "wb") as f:
        f.write(scene.pretty_print())
