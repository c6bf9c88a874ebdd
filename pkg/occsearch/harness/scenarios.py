"""
Built-in scenes

A: a tall deep decoy box beside a small can the ball hides behind; the
   decoy's unseen bulk keeps drawing the planner back unless memory
   remembers the ground it was moved off as free
B: two long low boxes as distractions and a small cylinder hiding the ball
C1-C3: 5 to 8 objects spread apart, the ball behind one of them
D1-D3: 6, 8 and 10 objects packed in touching rows with the ball behind them

The target is a yellow ball the camera cannot see at the start.
"""
from collections import OrderedDict
import math

import numpy as np

from ..camera import Camera
from ..completion import voxelize_primitive
from ..geometry import Transform
from ..scene import Table, ObjectModel, Scene

RESOLUTION = 0.015
WORKSPACE_HEIGHT = 0.27
BALL_RADIUS = 0.035
BALL_COLOR = (1.0, 0.85, 0.0)
PALETTE = (
    (0.2, 0.3, 0.8),
    (0.8, 0.2, 0.2),
    (0.2, 0.65, 0.3),
    (0.55, 0.25, 0.7),
    (0.1, 0.55, 0.6),
    (0.75, 0.35, 0.55),
    (0.35, 0.35, 0.45),
    (0.15, 0.15, 0.4),
    (0.6, 0.1, 0.35),
)


def default_table():
    return Table(0.0, 0.0, 0.6, 0.6, 0.0)


def default_camera():
    """Camera standing off the near table edge, looking across it"""
    return Camera((0.3, -0.3, 0.5), (0.3, 0.35, 0.0), 90.0, 90.0, 60.0, 45.0, 120, 90)


def box(id, x, y, size, color, yaw=0.0):
    return ObjectModel(id, voxelize_primitive("box", size, RESOLUTION),
                       Transform.planar(x, y, yaw), color,
                       source={"shape": "box", "sizeX": size[0], "sizeY": size[1],
                               "sizeZ": size[2]})


def cylinder(id, x, y, radius, height, color):
    return ObjectModel(id, voxelize_primitive("cylinder", (radius, height), RESOLUTION),
                       Transform.planar(x, y), color,
                       source={"shape": "cylinder", "radius": radius, "height": height})


def ball(x, y, id="ball"):
    return ObjectModel(id, voxelize_primitive("sphere", (BALL_RADIUS,), RESOLUTION),
                       Transform.planar(x, y), BALL_COLOR, is_target=True,
                       source={"shape": "sphere", "radius": BALL_RADIUS})


def _scene(name, objects, height=WORKSPACE_HEIGHT):
    return Scene(default_table(), default_camera(), objects, RESOLUTION, height, name)


def scene_a():
    return _scene("A", [
        box("decoy", 0.48, 0.30, (0.18, 0.27, 0.33), PALETTE[0]),
        cylinder("can", 0.3, 0.28, 0.035, 0.16, PALETTE[1]),
        ball(0.3, 0.36),
    ], height=0.36)


def scene_b():
    return _scene("B", [
        box("box_left", 0.1, 0.3, (0.12, 0.24, 0.10), PALETTE[0]),
        box("box_right", 0.5, 0.3, (0.12, 0.24, 0.10), PALETTE[2]),
        cylinder("cylinder", 0.3, 0.3, 0.04, 0.16, PALETTE[1]),
        ball(0.3, 0.38),
    ])


def _behind_camera_line(x, y, distance):
    """Point distance closer to the camera than (x, y), in the table plane"""
    eye = default_camera().position[:2]
    u = np.array([x, y]) - eye
    u /= np.linalg.norm(u)
    return np.array([x, y]) - u * distance


def sparse_scene(name, count, seed):
    """
    count objects with at least 13 cm between centers: the ball, a tall
    cylinder between it and the camera and count - 2 distractors
    """
    rng = np.random.default_rng(seed)
    target = np.array([rng.uniform(0.18, 0.42), rng.uniform(0.38, 0.48)])
    hider = _behind_camera_line(target[0], target[1], 0.11)
    objects = [cylinder("hider", hider[0], hider[1], 0.05, 0.16, PALETTE[1]),
               ball(target[0], target[1])]
    centers = [hider, target]
    attempts = 0
    while len(objects) < count:
        attempts += 1
        if attempts > 10000:
            raise RuntimeError("could not place {} objects in scene {}".format(count, name))
        p = rng.uniform(0.08, 0.52, size=2)
        if min(np.linalg.norm(p - c) for c in centers) < 0.13:
            continue
        # leave room behind the ball for pushes and picks
        if np.linalg.norm(p - target) < 0.2 and p[1] > target[1]:
            continue
        color = PALETTE[(len(objects) + 1) % len(PALETTE)]
        index = len(objects) - 1
        if rng.random() < 0.5:
            size = (rng.uniform(0.04, 0.07), rng.uniform(0.04, 0.07), rng.uniform(0.06, 0.16))
            objects.append(box("box{}".format(index), p[0], p[1],
                               tuple(round(s, 3) for s in size), color,
                               yaw=round(float(rng.uniform(0.0, math.pi)), 3)))
        else:
            objects.append(cylinder("cyl{}".format(index), p[0], p[1],
                                    round(float(rng.uniform(0.025, 0.04)), 3),
                                    round(float(rng.uniform(0.06, 0.16)), 3), color))
        centers.append(p)
    return _scene(name, objects)


# box size, whole cells
CELL = RESOLUTION
ROW_DEPTH = 4 * CELL


def dense_scene(name, back, front, seed):
    """
    Two touching rows of boxes four cells wide and deep, back row of back
    boxes and front row of front boxes offset by half a box, the ball
    touching the back row from behind
    """
    rng = np.random.default_rng(seed)
    width = 4 * CELL
    back_y = 20 * CELL
    front_y = back_y - ROW_DEPTH
    center_x = 20 * CELL
    objects = []
    first = center_x - width * (back - 1) / 2.0
    for k in range(back):
        height = round(float(rng.uniform(0.14, 0.18)), 3)
        objects.append(box("back{}".format(k), first + k * width, back_y,
                           (width, ROW_DEPTH, height), PALETTE[k % len(PALETTE)]))
    first = center_x - width * (front - 1) / 2.0
    for k in range(front):
        height = round(float(rng.uniform(0.09, 0.18)), 3)
        objects.append(box("front{}".format(k), first + k * width, front_y,
                           (width, ROW_DEPTH, height), PALETTE[(k + 4) % len(PALETTE)]))
    # five cell ball: center half a cell off the grid, front cells touching
    ball_y = back_y + ROW_DEPTH / 2.0 + 2.5 * CELL
    objects.append(ball(center_x + 0.5 * CELL, ball_y))
    return _scene(name, objects)


def scenario_library():
    """All built-in scenes by name"""
    return OrderedDict([
        ("A", scene_a()),
        ("B", scene_b()),
        ("C1", sparse_scene("C1", 5, 11)),
        ("C2", sparse_scene("C2", 6, 12)),
        ("C3", sparse_scene("C3", 8, 13)),
        ("D1", dense_scene("D1", 3, 2, 21)),
        ("D2", dense_scene("D2", 4, 3, 22)),
        ("D3", dense_scene("D3", 5, 4, 23)),
    ])
