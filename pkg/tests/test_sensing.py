import numpy as np
import pytest

from occsearch import Camera, Table, ObjectModel, Scene, NO_LABEL, TABLE_LABEL
from occsearch.completion import voxelize_primitive
from occsearch.geometry import Transform
from occsearch.sensing import Observation, SegmentationNoise, TargetClassifier, \
    render_observation, segment, detect_target, hit_voxels, build_occupancy, \
    segment_lookup
from occsearch.voxelcore import UNOBSERVED

RED = (0.9, 0.1, 0.1)
BLUE = (0.1, 0.2, 0.9)


def stacked_scene():
    """A low blue box in front of a tall red one, as seen from the camera"""
    camera = Camera((0.15, -0.3, 0.4), (0.15, 0.15, 0.0), 60.0, 60.0, 32.0, 24.0, 64, 48)
    low = ObjectModel("low", voxelize_primitive("box", (0.06, 0.06, 0.06), 0.015),
                      Transform.planar(0.15, 0.12), BLUE,
                      source={"shape": "box", "sizeX": 0.06, "sizeY": 0.06, "sizeZ": 0.06})
    tall = ObjectModel("tall", voxelize_primitive("box", (0.06, 0.06, 0.12), 0.015),
                       Transform.planar(0.15, 0.18), RED, is_target=True,
                       source={"shape": "box", "sizeX": 0.06, "sizeY": 0.06, "sizeZ": 0.12})
    return Scene(Table(0.0, 0.0, 0.3, 0.3), camera, [low, tall], 0.015, 0.15)


def test_render_sees_table_and_both_objects():
    scene = stacked_scene()
    obs = render_observation(scene)
    assert obs.depth.shape == (48, 64)
    assert set(np.unique(obs.labels).tolist()) == {NO_LABEL, TABLE_LABEL, 1, 2}
    assert (obs.depth[obs.labels != NO_LABEL] > 0).all()
    assert (obs.depth[obs.labels == NO_LABEL] == 0).all()
    assert obs.color[obs.labels == 2].tolist() == [list(RED)] * int((obs.labels == 2).sum())


def test_render_depth_lands_in_labelled_voxels():
    scene = stacked_scene()
    obs = render_observation(scene)
    geometry = scene.field_geometry
    pixels, voxels, _ = hit_voxels(obs, geometry)
    truth = scene.label_grid()[voxels[:, 0], voxels[:, 1], voxels[:, 2]]
    assert len(pixels) >= 0.99 * (obs.labels != NO_LABEL).sum()
    assert np.mean(truth == obs.labels.ravel()[pixels]) > 0.99


def test_segment_one_mask_per_object():
    obs = render_observation(stacked_scene())
    segments = segment(obs)
    assert [s.label for s in segments] == [1, 2]
    for s in segments:
        assert np.array_equal(s.mask, obs.labels == s.label)
        assert s.members == (s.label,)


def test_segment_merges_adjacent_objects():
    obs = render_observation(stacked_scene())
    segments = segment(obs, SegmentationNoise(1.0), np.random.default_rng(0))
    assert len(segments) == 1
    merged = segments[0]
    assert merged.members == (1, 2)
    assert np.array_equal(merged.mask, obs.labels > TABLE_LABEL)
    bigger = 1 if (obs.labels == 1).sum() >= (obs.labels == 2).sum() else 2
    assert merged.label == bigger


def test_segment_noise_needs_rng():
    obs = render_observation(stacked_scene())
    with pytest.raises(ValueError):
        segment(obs, SegmentationNoise(0.5))
    with pytest.raises(ValueError):
        SegmentationNoise(1.5)


def test_detect_target_by_color():
    obs = render_observation(stacked_scene())
    mask = detect_target(obs, TargetClassifier(RED))
    assert mask.any()
    assert np.array_equal(mask, obs.labels == 2)
    with pytest.raises(ValueError):
        TargetClassifier(RED, 0.0)


def test_build_occupancy_carves_free_space():
    scene = stacked_scene()
    obs = render_observation(scene)
    geometry = scene.field_geometry
    field = build_occupancy(obs, geometry)
    truth = scene.label_grid()
    assert np.mean(truth[field.known_free()] == NO_LABEL) > 0.99
    assert np.mean(truth[field.known_occupied()] != NO_LABEL) > 0.99
    assert field.known_free().sum() > 0
    # inside the tall box and the table under it
    assert field.observed[9, 12, 4] == UNOBSERVED
    assert field.observed[9, 12, 0] == UNOBSERVED
    assert field.unknown()[9, 12, 4]


def test_segment_lookup_labels_hit_voxels():
    scene = stacked_scene()
    obs = render_observation(scene)
    geometry = scene.field_geometry
    lookup = segment_lookup(obs, segment(obs), geometry)
    assert set(np.unique(lookup).tolist()) <= {NO_LABEL, TABLE_LABEL, 1, 2}
    truth = scene.label_grid()
    for label in (TABLE_LABEL, 1, 2):
        assert np.mean(truth[lookup == label] == label) > 0.99


def test_observation_checks_shapes():
    camera = stacked_scene().camera
    with pytest.raises(ValueError):
        Observation(np.zeros((2, 2)), np.zeros((48, 64, 3)),
                    np.full((48, 64), NO_LABEL), camera)
    with pytest.raises(ValueError):
        Observation(np.zeros((48, 64)), np.zeros((48, 64, 3)),
                    np.zeros((48, 64)), camera)
