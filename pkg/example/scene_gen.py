"""
Write a scene file on the default table and camera from objects given on
the command line

Examples:

    python scene_gen.py \
        --box crate:0.3,0.25,0.12,0.08,0.2 \
        --cylinder can:0.2,0.3,0.035,0.16 \
        --ball 0.3,0.38 \
        --output crate.xml

Boxes are id:x,y,size_x,size_y,size_z with an optional fifth size field
yaw (radians), cylinders id:x,y,radius,height, all in meters.
"""
import argparse
import logging
import sys

import occsearch
from occsearch.harness.scenarios import PALETTE, box, cylinder, ball, \
    default_table, default_camera, RESOLUTION, WORKSPACE_HEIGHT


logger = logging.getLogger()


def split_object(text, count, optional=0):
    try:
        id, numbers = text.split(":")
    except ValueError:
        raise ValueError("object must be ID:NUMBERS (missing :) in {}".format(text))
    values = [float(v) for v in numbers.split(",")]
    if not count <= len(values) <= count + optional:
        raise ValueError("{} needs {} numbers".format(id, count))
    return id, values


def build_objects(args):
    objects = []
    for text in args.boxes or []:
        id, v = split_object(text, 5, optional=1)
        color = PALETTE[len(objects) % len(PALETTE)]
        objects.append(box(id, v[0], v[1], (v[2], v[3], v[4]), color,
                           yaw=v[5] if len(v) > 5 else 0.0))
        logger.debug("box %s at %s", id, v[:2])
    for text in args.cylinders or []:
        id, v = split_object(text, 4)
        color = PALETTE[len(objects) % len(PALETTE)]
        objects.append(cylinder(id, v[0], v[1], v[2], v[3], color))
        logger.debug("cylinder %s at %s", id, v[:2])
    if args.ball:
        x, y = (float(v) for v in args.ball.split(","))
        objects.append(ball(x, y))
    return objects


def main():
    parser = argparse.ArgumentParser(
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=__doc__,
    )
    parser.add_argument(
        "--box",
        action="append",
        dest="boxes",
        help="Box as id:x,y,size_x,size_y,size_z[,yaw], repeatable",
        required=False,
    )
    parser.add_argument(
        "--cylinder",
        action="append",
        dest="cylinders",
        help="Cylinder as id:x,y,radius,height, repeatable",
        required=False,
    )
    parser.add_argument(
        "--ball",
        action="store",
        dest="ball",
        help="Target ball position as x,y",
        required=False,
    )
    parser.add_argument(
        "--name",
        action="store",
        dest="name",
        help="Scene name",
        required=False,
        default="",
    )
    parser.add_argument(
        "--output",
        action="store",
        dest="output",
        help="Scene file to write, stdout when left out",
        required=False,
    )
    parser.add_argument(
        "--log_level",
        action="store",
        dest="log_level",
        help="Set log verbosity (Default is WARN)",
        required=False,
        default="WARN",
    )
    args = parser.parse_args()

    logger.setLevel(args.log_level)
    ch = logging.StreamHandler()
    ch.setLevel(args.log_level)
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    ch.setFormatter(formatter)
    logger.addHandler(ch)

    try:
        scene = occsearch.Scene(default_table(), default_camera(), build_objects(args),
                                RESOLUTION, WORKSPACE_HEIGHT, args.name)
    except (TypeError, ValueError) as e:
        parser.error(str(e))

    valid, error = occsearch.validate(scene.element())
    if not valid:
        logger.error("scene does not validate: %s", error)
        sys.exit(1)

    if args.output:
        occsearch.save_scene(scene, args.output)
    else:
        print(str(scene.pretty_print(xml_declaration=True), "utf-8"))


if __name__ == "__main__":
    main()
