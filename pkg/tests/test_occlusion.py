import numpy as np
import pytest
import occsearch
from occsearch.camera import Camera
from occsearch.occlusion import ShadowSet, compute_occlusions, raycast, select_object
from occsearch.voxelcore import OccupancyField, GridGeometry, UNOBSERVED, \
    OBSERVED_FREE, OBSERVED_OCCUPIED


def random_field(rng):
    dims = tuple(int(n) for n in rng.integers(3, 13, size=3))
    res = float(rng.choice([0.015, 0.1, 1.0]))
    origin = rng.uniform(-1.0, 1.0, size=3)
    kind = rng.choice(3, size=dims, p=[0.45, 0.45, 0.1])
    occupancy = rng.uniform(0.3, 0.7, size=dims)
    observed = np.full(dims, UNOBSERVED, dtype=np.int8)
    observed[kind == 1] = OBSERVED_FREE
    occupancy[kind == 1] = 0.0
    observed[kind == 2] = OBSERVED_OCCUPIED
    occupancy[kind == 2] = 1.0
    return OccupancyField(dims, res, origin, occupancy=occupancy, observed=observed)


def slab_shadows(field, origin):
    """Unknown voxels whose segment from origin crosses a known occupied box
    other than their own, by clipping every segment against every box"""
    candidates = np.argwhere(field.unknown())
    boxes = np.argwhere(field.known_occupied())
    mask = np.zeros(field.dims, dtype=bool)
    if len(candidates) == 0 or len(boxes) == 0:
        return mask
    res = field.resolution
    centers = field.voxel_to_world(candidates)
    low = field.origin + boxes * res
    high = low + res
    d = centers - origin
    t_in = np.zeros((len(candidates), len(boxes)))
    t_out = np.ones((len(candidates), len(boxes)))
    for axis in range(3):
        ta = (low[None, :, axis] - origin[axis]) / d[:, None, axis]
        tb = (high[None, :, axis] - origin[axis]) / d[:, None, axis]
        t_in = np.maximum(t_in, np.minimum(ta, tb))
        t_out = np.minimum(t_out, np.maximum(ta, tb))
    crossed = t_in < t_out
    own = np.all(candidates[:, None, :] == boxes[None, :, :], axis=2)
    blocked = np.any(crossed & ~own, axis=1)
    hidden = candidates[blocked]
    mask[hidden[:, 0], hidden[:, 1], hidden[:, 2]] = True
    return mask


def test_shadows_match_slab_clipping():
    rng = np.random.default_rng(11)
    for _ in range(100):
        field = random_field(rng)
        size = field.extent - field.origin
        origin = rng.uniform(field.origin - size, field.extent + size)
        shadows = compute_occlusions(field, origin)
        assert np.array_equal(shadows.mask(), slab_shadows(field, origin))


def test_blocker_is_the_first_occupied_voxel():
    rng = np.random.default_rng(12)
    for _ in range(20):
        field = random_field(rng)
        origin = field.origin - 0.5 * (field.extent - field.origin)
        shadows = compute_occlusions(field, origin)
        occupied = field.known_occupied()
        for voxel, blocker in zip(shadows.voxels, shadows.blockers):
            assert occupied[tuple(blocker)]
            assert not np.array_equal(voxel, blocker)
            assert raycast(field, origin, field.voxel_to_world(voxel)) == tuple(blocker)


def line_field():
    # camera side [2, 3, unknown, unknown, unknown]
    occupancy = np.array([1.0, 1.0, 0.5, 0.5, 0.5]).reshape(5, 1, 1)
    observed = np.array([OBSERVED_OCCUPIED, OBSERVED_OCCUPIED, UNOBSERVED,
                         UNOBSERVED, UNOBSERVED], dtype=np.int8).reshape(5, 1, 1)
    field = OccupancyField((5, 1, 1), 1.0, occupancy=occupancy, observed=observed)
    labels = np.array([2, 3, -1, -1, -1]).reshape(5, 1, 1)
    return field, labels


def test_label_bits_collect_every_blocker():
    field, labels = line_field()
    shadows = compute_occlusions(field, np.array([-1.5, 0.5, 0.5]), labels=labels)
    assert len(shadows) == 3
    assert shadows.voxels[:, 0].tolist() == [2, 3, 4]
    assert shadows.blockers.tolist() == [[0, 0, 0]] * 3
    assert shadows.bits.tolist() == [(1 << 2) | (1 << 3)] * 3
    assert shadows.blocker_labels(labels).tolist() == [2, 2, 2]


def test_raycast_clear_and_blocked():
    field, _ = line_field()
    assert raycast(field, [-1.5, 0.5, 0.5], [4.5, 0.5, 0.5]) == (0, 0, 0)
    assert raycast(field, [6.5, 0.5, 0.5], [2.5, 0.5, 0.5]) is None
    # the end voxel never blocks
    assert raycast(field, [-1.5, 0.5, 0.5], [0.5, 0.5, 0.5]) is None


def test_floor_layers_are_not_candidates():
    field = OccupancyField.unobserved_like(GridGeometry((3, 3, 3), 1.0))
    occupancy = np.full((3, 3, 3), 0.5)
    observed = np.full((3, 3, 3), UNOBSERVED, dtype=np.int8)
    occupancy[:, 0, :] = 1.0
    observed[:, 0, :] = OBSERVED_OCCUPIED
    field = field.with_values(occupancy, observed)
    origin = np.array([1.5, -2.0, 1.5])
    assert compute_occlusions(field, origin).mask()[:, 1:, :].all()
    shadows = compute_occlusions(field, origin, floor_layers=1)
    assert not shadows.mask()[:, :, 0].any()
    assert shadows.mask()[:, 1:, 1:].all()


def test_camera_keeps_only_voxels_in_view():
    geometry = GridGeometry((8, 8, 4), 0.1)
    occupancy = np.full(geometry.dims, 0.5)
    observed = np.full(geometry.dims, UNOBSERVED, dtype=np.int8)
    occupancy[:, 0, :] = 1.0
    observed[:, 0, :] = OBSERVED_OCCUPIED
    field = OccupancyField(geometry.dims, 0.1, occupancy=occupancy, observed=observed)
    # narrow view of the middle of the grid
    camera = Camera((0.4, -1.0, 0.2), (0.4, 0.4, 0.2), 200.0, 200.0, 10.0, 10.0, 20, 20)
    shadows = compute_occlusions(field, camera)
    everything = compute_occlusions(field, camera.position)
    assert 0 < len(shadows) < len(everything)
    assert camera.in_view(field.voxel_to_world(shadows.voxels)).all()


def test_no_candidates_gives_empty_set():
    field = OccupancyField((2, 2, 2), 1.0, occupancy=np.zeros((2, 2, 2)),
                           observed=np.full((2, 2, 2), OBSERVED_FREE, dtype=np.int8))
    shadows = compute_occlusions(field, [-1.0, -1.0, -1.0], labels=np.zeros((2, 2, 2)))
    assert len(shadows) == 0
    assert shadows.bits.tolist() == []
    assert shadows.to_grid().is_empty()


def test_select_object_returns_blocking_object():
    field, labels = line_field()
    shadows = compute_occlusions(field, np.array([-1.5, 0.5, 0.5]))
    rng = np.random.default_rng(3)
    assert select_object(shadows, labels, rng) == 2


def test_select_object_retries_past_the_table():
    geometry = GridGeometry((4, 1, 1), 1.0)
    shadows = ShadowSet(geometry, [[2, 0, 0], [3, 0, 0]], [[0, 0, 0], [1, 0, 0]])
    lookup = np.array([occsearch.TABLE_LABEL, 5, -1, -1]).reshape(4, 1, 1)
    rng = np.random.default_rng(4)
    for _ in range(20):
        assert select_object(shadows, lookup, rng) == 5


def test_select_object_gives_up():
    geometry = GridGeometry((4, 1, 1), 1.0)
    shadows = ShadowSet(geometry, [[2, 0, 0]], [[0, 0, 0]])
    lookup = np.array([occsearch.TABLE_LABEL, occsearch.UNLABELED, -1, -1]).reshape(4, 1, 1)
    with pytest.raises(occsearch.NoSelectableObjectError):
        select_object(shadows, lookup, np.random.default_rng(5))
    with pytest.raises(occsearch.NoSelectableObjectError):
        select_object(ShadowSet(geometry, [], []), lookup, np.random.default_rng(5))


def test_select_object_follows_shadow_share():
    geometry = GridGeometry((6, 1, 1), 1.0)
    # three shadow voxels behind label 2, one behind label 5
    shadows = ShadowSet(geometry, [[2, 0, 0], [3, 0, 0], [4, 0, 0], [5, 0, 0]],
                        [[0, 0, 0], [0, 0, 0], [0, 0, 0], [1, 0, 0]])
    lookup = np.array([2, 5, -1, -1, -1, -1]).reshape(6, 1, 1)
    rng = np.random.default_rng(6)
    draws = [select_object(shadows, lookup, rng) for _ in range(8000)]
    assert set(draws) == {2, 5}
    assert abs(draws.count(2) / 8000.0 - 0.75) < 0.02


def slab_first_hit(field, origin, target):
    """First known occupied box entered by origin -> target, the box holding
    target aside, found by clipping the segment against every box"""
    end = tuple(int(v) for v in field.world_to_voxel(np.asarray(target)[None, :])[0])
    boxes = [tuple(int(v) for v in b) for b in np.argwhere(field.known_occupied())]
    d = np.asarray(target) - origin
    best, best_t = None, np.inf
    for b in boxes:
        if b == end:
            continue
        low = field.origin + np.array(b) * field.resolution
        high = low + field.resolution
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (low - origin) / d
            tb = (high - origin) / d
        t_in = max(0.0, np.minimum(ta, tb).max())
        t_out = min(1.0, np.maximum(ta, tb).min())
        if t_in < t_out and t_in < best_t:
            best, best_t = b, t_in
    return best


def test_raycast_matches_box_clipping():
    rng = np.random.default_rng(13)
    for _ in range(40):
        field = random_field(rng)
        size = field.extent - field.origin
        origin = field.origin - rng.uniform(0.2, 1.0, size=3) * size
        for voxel in rng.integers(0, field.dims, size=(5, 3)):
            target = field.voxel_to_world(voxel[None, :])[0]
            assert raycast(field, origin, target) == slab_first_hit(field, origin, target)


def test_adding_an_occupied_voxel_keeps_every_other_shadow():
    rng = np.random.default_rng(14)
    for _ in range(30):
        field = random_field(rng)
        size = field.extent - field.origin
        origin = rng.uniform(field.origin - size, field.extent + size)
        before = compute_occlusions(field, origin).mask()
        voxel = tuple(int(v) for v in rng.integers(0, field.dims))
        occupancy = field.occupancy.copy()
        observed = field.observed.copy()
        occupancy[voxel] = 1.0
        observed[voxel] = OBSERVED_OCCUPIED
        after = compute_occlusions(field.with_values(occupancy, observed), origin).mask()
        before[voxel] = False
        assert not (before & ~after).any()
