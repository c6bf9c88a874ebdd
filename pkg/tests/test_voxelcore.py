import numpy as np
import pytest
import occsearch
from occsearch.voxelcore import GridGeometry, BinaryVoxelGrid, OccupancyField, \
    chamfer_distance, grid_distance, sparse_points, union, intersection, \
    difference, is_subset, UNOBSERVED, OBSERVED_FREE, OBSERVED_OCCUPIED


def brute_chamfer(x, y):
    total_x = 0.0
    for p in x:
        total_x += min(float(np.sum((p - q) ** 2)) for q in y)
    total_y = 0.0
    for q in y:
        total_y += min(float(np.sum((p - q) ** 2)) for p in x)
    return total_x / len(x) + total_y / len(y)


def test_geometry_rejects_bad_arguments():
    with pytest.raises(TypeError):
        GridGeometry((2, 2), 0.1)
    with pytest.raises(TypeError):
        GridGeometry((2, 2, 2.0), 0.1)
    with pytest.raises(ValueError):
        GridGeometry((2, 0, 2), 0.1)
    with pytest.raises(ValueError):
        GridGeometry((2, 2, 2), 0.0)
    with pytest.raises(TypeError):
        GridGeometry((2, 2, 2), "0.1")


def test_world_voxel_conversion():
    g = GridGeometry((4, 5, 6), 0.5, (1.0, -1.0, 0.0))
    assert g.world_to_voxel([1.0, -1.0, 0.0]).tolist() == [0, 0, 0]
    assert g.world_to_voxel([1.49, -0.51, 0.99]).tolist() == [0, 0, 1]
    assert g.world_to_voxel([0.9, -1.0, 0.0]).tolist() == [-1, 0, 0]
    assert g.voxel_to_world([1, 2, 3]).tolist() == [1.75, 0.25, 1.75]
    assert g.contains([[0, 0, 0], [3, 4, 5], [4, 0, 0], [0, -1, 0]]).tolist() == \
        [True, True, False, False]
    assert g.extent.tolist() == [3.0, 1.5, 3.0]


def test_chamfer_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = rng.normal(size=(int(rng.integers(1, 20)), 3))
        y = rng.normal(size=(int(rng.integers(1, 20)), 3))
        expected = brute_chamfer(x, y)
        assert chamfer_distance(x, y) == pytest.approx(expected, rel=1e-9, abs=1e-15)


def test_chamfer_matches_brute_force_large_sets():
    rng = np.random.default_rng(8)
    for _ in range(20):
        x = rng.uniform(-1, 1, size=(int(rng.integers(100, 201)), 3))
        y = rng.uniform(-1, 1, size=(int(rng.integers(100, 201)), 3))
        d = ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=2)
        expected = d.min(axis=1).mean() + d.min(axis=0).mean()
        assert chamfer_distance(x, y) == pytest.approx(expected, rel=1e-9)


def test_chamfer_of_identical_sets_is_zero():
    rng = np.random.default_rng(9)
    for _ in range(50):
        x = rng.normal(size=(int(rng.integers(1, 200)), 3))
        assert chamfer_distance(x, x.copy()) == 0.0


def test_chamfer_is_symmetric():
    x = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    y = np.array([[0.0, 2.0, 0.0]])
    assert chamfer_distance(x, y) == chamfer_distance(y, x)
    # x to y: (4 + 5) / 2, y to x: 4
    assert chamfer_distance(x, y) == pytest.approx(8.5)


def test_chamfer_empty_names_the_set():
    with pytest.raises(occsearch.EmptyInputError) as e:
        chamfer_distance(np.zeros((0, 3)), np.zeros((1, 3)))
    assert e.value.name == "X"
    with pytest.raises(occsearch.EmptyInputError) as e:
        chamfer_distance(np.zeros((1, 3)), [])
    assert e.value.name == "Y"


def test_grid_distance_uses_voxel_centers():
    g = GridGeometry((4, 4, 4), 0.5)
    u = BinaryVoxelGrid.from_indices(g, [[0, 0, 0]])
    v = BinaryVoxelGrid.from_indices(g, [[2, 0, 0]])
    assert sparse_points(u).tolist() == [[0.25, 0.25, 0.25]]
    assert grid_distance(u, v) == pytest.approx(2.0)
    assert grid_distance(u, u) == 0.0
    with pytest.raises(occsearch.EmptyInputError):
        grid_distance(BinaryVoxelGrid.empty(g), v)


def test_set_algebra():
    g = GridGeometry((3, 3, 3), 1.0)
    a = BinaryVoxelGrid.from_indices(g, [[0, 0, 0], [1, 1, 1]])
    b = BinaryVoxelGrid.from_indices(g, [[1, 1, 1], [2, 2, 2]])
    assert union(a, b).count() == 3
    assert intersection(a, b).indices().tolist() == [[1, 1, 1]]
    assert difference(a, b).indices().tolist() == [[0, 0, 0]]
    assert is_subset(intersection(a, b), a)
    assert not is_subset(a, b)


def test_set_algebra_rejects_different_geometry():
    a = BinaryVoxelGrid((3, 3, 3), 1.0)
    b = BinaryVoxelGrid((3, 3, 3), 0.5)
    with pytest.raises(occsearch.GeometryMismatchError):
        union(a, b)


def test_from_indices_drops_out_of_bounds():
    g = GridGeometry((2, 2, 2), 1.0)
    grid = BinaryVoxelGrid.from_indices(g, [[0, 0, 0], [2, 0, 0], [-1, 1, 1]])
    assert grid.count() == 1


def test_grid_is_immutable():
    grid = BinaryVoxelGrid((2, 2, 2), 1.0)
    with pytest.raises(ValueError):
        grid.data[0, 0, 0] = True


def test_occupancy_field_classification():
    occupancy = np.full((4, 1, 1), 0.5)
    observed = np.full((4, 1, 1), UNOBSERVED, dtype=np.int8)
    occupancy[0] = 0.0
    observed[0] = OBSERVED_FREE
    occupancy[1] = 1.0
    observed[1] = OBSERVED_OCCUPIED
    occupancy[2] = 0.8
    occupancy[3] = 0.52
    field = OccupancyField((4, 1, 1), 1.0, occupancy=occupancy, observed=observed,
                           tau_occupancy=0.5, margin=0.05)
    assert field.known_free().ravel().tolist() == [True, False, False, False]
    assert field.known_occupied().ravel().tolist() == [False, True, True, False]
    assert field.unknown().ravel().tolist() == [False, False, False, True]
    assert field.unobserved().ravel().tolist() == [False, False, True, True]


def test_occupancy_field_checks_flags_against_values():
    observed = np.full((1, 1, 1), OBSERVED_FREE, dtype=np.int8)
    with pytest.raises(ValueError):
        OccupancyField((1, 1, 1), 1.0, occupancy=np.full((1, 1, 1), 0.9),
                       observed=observed)
    with pytest.raises(ValueError):
        OccupancyField((1, 1, 1), 1.0, occupancy=np.full((1, 1, 1), 1.5))
    with pytest.raises(ValueError):
        OccupancyField((1, 1, 1), 1.0, tau_occupancy=1.0)
