"""
Print how many hidden voxels each object of a scene casts as seen from the
scene's camera, largest first

Examples:

    python shadow_report.py scene_a.xml

Outputs one line per object, its id and the voxel count separated by a tab.
"""
import argparse
import logging
import sys

import numpy as np

import occsearch
from occsearch.occlusion import compute_occlusions
from occsearch.sensing import render_observation, build_occupancy, segment, \
    segment_lookup


logger = logging.getLogger()


def shadow_counts(scene):
    """Shadow voxels per object id, seen from the start of an episode"""
    obs = render_observation(scene)
    geometry = scene.field_geometry
    field = build_occupancy(obs, geometry)
    segments = segment(obs)
    lookup = segment_lookup(obs, segments, geometry)
    shadows = compute_occlusions(field, scene.camera, lookup, floor_layers=1)
    labels, counts = np.unique(shadows.blocker_labels(lookup), return_counts=True)
    result = {}
    for label, count in zip(labels.tolist(), counts.tolist()):
        obj = scene.by_label(label)
        if obj is None:
            logger.debug("%d voxels behind label %d", count, label)
            continue
        result[obj.id] = count
    return result


def main():
    parser = argparse.ArgumentParser(
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=__doc__,
    )
    parser.add_argument("scene", help="Scene XML file")
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
        scene = occsearch.load_scene(args.scene)
    except (occsearch.SceneFileError, OSError) as e:
        logger.error("%s", e)
        sys.exit(1)

    counts = shadow_counts(scene)
    for id, count in sorted(counts.items(), key=lambda item: -item[1]):
        print("{}\t{}".format(id, count))


if __name__ == "__main__":
    main()
