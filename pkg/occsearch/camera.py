"""
Pinhole camera
"""
import numpy as np

from . import etree, NSMAP, qname
from .base import XMLComparableBase


class Camera(XMLComparableBase):
    """
    Camera element
    Has required attributes:
        x, y, z: position in meters
        lookX, lookY, lookZ: point the optical axis passes through
        fx, fy: focal lengths in pixels
        cx, cy: principal point in pixels
        width, height: image size in pixels

    Image rows grow downwards and columns to the right; world z is up.
    """

    def __init__(self, position, look_at, fx, fy, cx, cy, width, height):
        position = np.asarray(position, dtype=np.float64)
        look_at = np.asarray(look_at, dtype=np.float64)
        if position.shape != (3,) or look_at.shape != (3,):
            raise ValueError("position and look_at should be 3D points")
        if np.allclose(position, look_at):
            raise ValueError("camera should look somewhere other than its position")
        if fx <= 0 or fy <= 0:
            raise ValueError("focal lengths should be positive")
        if int(width) < 1 or int(height) < 1:
            raise ValueError("image should be at least one pixel")
        self._position = position
        self._look_at = look_at
        self._fx = float(fx)
        self._fy = float(fy)
        self._cx = float(cx)
        self._cy = float(cy)
        self._width = int(width)
        self._height = int(height)

        forward = look_at - position
        forward /= np.linalg.norm(forward)
        up = np.array([0.0, 0.0, 1.0])
        if abs(forward @ up) > 0.999:
            up = np.array([0.0, 1.0, 0.0])
        right = np.cross(forward, up)
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        # columns: camera x, y, z axes in world coordinates
        self._rotation = np.stack([right, down, forward], axis=1)

    @property
    def position(self):
        return self._position

    @property
    def look_at(self):
        return self._look_at

    @property
    def fx(self):
        return self._fx

    @property
    def fy(self):
        return self._fy

    @property
    def cx(self):
        return self._cx

    @property
    def cy(self):
        return self._cy

    @property
    def width(self):
        return self._width

    @property
    def height(self):
        return self._height

    @property
    def shape(self):
        return (self._height, self._width)

    def pixel_rays(self):
        """Unit world directions through every pixel center, row major"""
        v, u = np.mgrid[0:self._height, 0:self._width]
        cam = np.stack([(u.ravel() + 0.5 - self._cx) / self._fx,
                        (v.ravel() + 0.5 - self._cy) / self._fy,
                        np.ones(u.size)], axis=1)
        rays = cam @ self._rotation.T
        return rays / np.linalg.norm(rays, axis=1, keepdims=True)

    def project(self, points):
        """Pixel coordinates (u, v) and depth along the optical axis"""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        cam = (points - self._position) @ self._rotation
        depth = cam[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = self._fx * cam[:, 0] / depth + self._cx
            v = self._fy * cam[:, 1] / depth + self._cy
        return u, v, depth

    def far_distance(self, geometry):
        """Length past which every ray has left the grid"""
        corners = np.array([[x, y, z]
                            for x in (geometry.origin[0], geometry.extent[0])
                            for y in (geometry.origin[1], geometry.extent[1])
                            for z in (geometry.origin[2], geometry.extent[2])])
        return float(np.linalg.norm(corners - self._position, axis=1).max()) + 1.0

    def in_view(self, points):
        u, v, depth = self.project(points)
        return ((depth > 0) & (u >= 0) & (u < self._width) &
                (v >= 0) & (v < self._height))

    def element(self):
        """Returns XML element"""
        el = etree.Element(qname("Camera"), nsmap=NSMAP)
        for name, value in zip(("x", "y", "z"), self._position):
            el.set(name, repr(float(value)))
        for name, value in zip(("lookX", "lookY", "lookZ"), self._look_at):
            el.set(name, repr(float(value)))
        el.set("fx", repr(self._fx))
        el.set("fy", repr(self._fy))
        el.set("cx", repr(self._cx))
        el.set("cy", repr(self._cy))
        el.set("width", str(self._width))
        el.set("height", str(self._height))
        return el

    @staticmethod
    def parse(xml):
        """
        Parse XML and return Camera
        """
        if isinstance(xml, (str, bytes)):
            xml = etree.fromstring(xml)

        def number(name):
            return float(xml.get(name))

        return Camera(
            (number("x"), number("y"), number("z")),
            (number("lookX"), number("lookY"), number("lookZ")),
            number("fx"), number("fy"), number("cx"), number("cy"),
            int(xml.get("width")), int(xml.get("height")))
