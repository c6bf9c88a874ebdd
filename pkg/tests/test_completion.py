import csv
import math
import sys

import numpy as np
import pytest

import occsearch
from occsearch.completion import CompletionInput, Completer, complete, \
    enforce_constraints, get_completer, voxelize_primitive, COMPLETERS, \
    OccluderSpec, DatasetCamera, DatasetTriple, synthesize_dataset, save_dataset, \
    load_dataset, split_dataset, dataset_geometry, default_shapes, evaluate_completer, \
    write_evaluation_csv
from occsearch.completion.baselines import NullCompleter, PrismHullCompleter, \
    CameraExtrudeCompleter, prism_footprint
from occsearch.completion.dataset import synthesize_example
from occsearch.completion.external import ExternalCompleter
from occsearch.voxelcore import BinaryVoxelGrid, GridGeometry, grid_distance, is_subset


def random_input(rng):
    dims = tuple(int(n) for n in rng.integers(4, 11, size=3))
    geometry = GridGeometry(dims, 0.01, rng.uniform(-0.1, 0.1, size=3))
    partial = rng.random(dims) < rng.uniform(0.01, 0.2)
    partial[tuple(rng.integers(0, d) for d in dims)] = True
    free = (rng.random(dims) < rng.uniform(0.0, 0.6)) & ~partial
    viewpoint = geometry.origin + rng.uniform(-1.0, 1.0, size=3) + \
        np.array([0.0, 0.0, 0.5])
    return CompletionInput(BinaryVoxelGrid.from_mask(geometry, partial),
                           BinaryVoxelGrid.from_mask(geometry, free), viewpoint)


def builtin_completers():
    return [NullCompleter(), PrismHullCompleter(), CameraExtrudeCompleter(depth_budget=6)]


def test_completers_keep_constraints():
    rng = np.random.default_rng(31)
    completers = builtin_completers()
    for _ in range(1000):
        completion_input = random_input(rng)
        for completer in completers:
            completed = complete(completer, completion_input).completed
            assert is_subset(completion_input.partial, completed)
            assert not np.any(completed.data & completion_input.free.data)


def test_enforce_constraints_is_idempotent():
    rng = np.random.default_rng(32)
    for _ in range(200):
        completion_input = random_input(rng)
        raw = completion_input.partial.with_data(rng.random(completion_input.partial.dims) < 0.3)
        once = enforce_constraints(raw, completion_input).completed
        twice = enforce_constraints(once, completion_input).completed
        assert once == twice


def test_complete_rejects_empty_partial():
    g = GridGeometry((3, 3, 3), 0.01)
    empty = CompletionInput(BinaryVoxelGrid.empty(g), BinaryVoxelGrid.empty(g))
    with pytest.raises(occsearch.EmptyInputError) as e:
        complete(NullCompleter(), empty)
    assert e.value.name == "partial"


def test_input_rejects_overlap_and_mismatch():
    g = GridGeometry((3, 3, 3), 0.01)
    a = BinaryVoxelGrid.from_indices(g, [[1, 1, 1]])
    with pytest.raises(ValueError):
        CompletionInput(a, a)
    with pytest.raises(occsearch.GeometryMismatchError):
        CompletionInput(a, BinaryVoxelGrid((3, 3, 3), 0.02))


def test_get_completer():
    assert set(COMPLETERS) == {"null", "prism_hull", "camera_extrude", "external"}
    assert isinstance(get_completer("prism_hull"), PrismHullCompleter)
    assert get_completer("camera_extrude", depth_budget=3).depth_budget == 3
    with pytest.raises(ValueError):
        get_completer("oracle")


def test_custom_completer_is_projected():
    class Everything(Completer):
        name = "everything"

        def predict(self, completion_input):
            return completion_input.partial.with_data(
                np.ones(completion_input.partial.dims, dtype=bool))

    rng = np.random.default_rng(33)
    completion_input = random_input(rng)
    completed = complete(Everything(), completion_input).completed
    assert np.array_equal(completed.data, ~completion_input.free.data)


def test_voxelize_box():
    box = voxelize_primitive("box", (1.0, 1.0, 1.0), 0.5)
    assert box.dims == (2, 2, 2)
    assert box.count() == 8
    assert box.origin.tolist() == [-0.5, -0.5, 0.0]


def test_voxelize_sphere_volume():
    sphere = voxelize_primitive("sphere", (0.05,), 0.005)
    volume = sphere.count() * 0.005 ** 3
    assert volume == pytest.approx(4.0 / 3.0 * math.pi * 0.05 ** 3, rel=0.1)


def test_voxelize_cylinder_is_symmetric():
    data = voxelize_primitive("cylinder", (0.04, 0.1), 0.01).data
    assert data.shape == (8, 8, 10)
    assert np.array_equal(data, data[::-1, :, :])
    assert np.array_equal(data, data[:, ::-1, :])
    assert np.array_equal(data, data.transpose(1, 0, 2))
    assert (data == data[:, :, :1]).all()


def test_voxelize_prism_square_is_a_box():
    square = [[-0.02, -0.02], [0.02, -0.02], [0.02, 0.02], [-0.02, 0.02]]
    prism = voxelize_primitive("prism", (0.03,), 0.01, square)
    assert prism.count() == 4 * 4 * 3


def test_voxelize_rejects_bad_arguments():
    with pytest.raises(ValueError):
        voxelize_primitive("cone", (0.1, 0.1), 0.01)
    with pytest.raises(ValueError):
        voxelize_primitive("box", (0.005, 0.1, 0.1), 0.01)
    with pytest.raises(ValueError):
        voxelize_primitive("prism", (0.1,), 0.01, [[0.0, 0.0], [0.1, 0.0]])


def test_prism_footprint_fills_the_hull():
    # an L of cells: the hull takes in the inner corner and the cells on its diagonal
    cells = [[0, 0], [1, 0], [2, 0], [0, 1], [0, 2]]
    footprint = {tuple(c) for c in prism_footprint(cells).tolist()}
    assert footprint == {(0, 0), (1, 0), (2, 0), (0, 1), (0, 2), (1, 1), (2, 1), (1, 2)}


def upright_box_input():
    """A 6 cube in a 16 grid seen from the -y side and above"""
    g = GridGeometry((16, 16, 16), 0.01)
    truth = np.zeros(g.dims, dtype=bool)
    truth[5:11, 5:11, 0:6] = True
    partial = np.zeros(g.dims, dtype=bool)
    partial[5:11, 5:11, 5] = True
    partial[5:11, 5, 0:6] = True
    free = np.zeros(g.dims, dtype=bool)
    free[:, :5, :] = True
    free[:, :, 6:] = True
    completion_input = CompletionInput(BinaryVoxelGrid.from_mask(g, partial),
                                       BinaryVoxelGrid.from_mask(g, free),
                                       (0.08, -0.5, 0.5))
    return completion_input, BinaryVoxelGrid.from_mask(g, truth)


def test_prism_hull_beats_null_on_a_box():
    completion_input, truth = upright_box_input()
    hull = complete(PrismHullCompleter(), completion_input).completed
    null = complete(NullCompleter(), completion_input).completed
    assert hull == truth
    assert grid_distance(hull, truth) == 0.0
    assert grid_distance(null, truth) > 0.0


def test_camera_extrude_stops_on_free_space_floor_and_budget():
    g = GridGeometry((1, 1, 10), 1.0)
    partial = BinaryVoxelGrid.from_indices(g, [[0, 0, 8]])
    above = (0.5, 0.5, 20.0)

    free = BinaryVoxelGrid.from_indices(g, [[0, 0, 4]])
    out = complete(CameraExtrudeCompleter(), CompletionInput(partial, free, above)).completed
    assert out.indices()[:, 2].tolist() == [5, 6, 7, 8]

    nothing = BinaryVoxelGrid.empty(g)
    out = complete(CameraExtrudeCompleter(floor=3),
                   CompletionInput(partial, nothing, above)).completed
    assert out.indices()[:, 2].tolist() == [3, 4, 5, 6, 7, 8]

    out = complete(CameraExtrudeCompleter(depth_budget=2),
                   CompletionInput(partial, nothing, above)).completed
    assert out.indices()[:, 2].tolist() == [6, 7, 8]

    with pytest.raises(occsearch.CompletionError):
        complete(CameraExtrudeCompleter(), CompletionInput(partial, nothing))


def copy_partial_command():
    return [sys.executable, "-c",
            "import os, shutil, sys; d = sys.argv[1]; "
            "shutil.copy(os.path.join(d, 'partial.vxg'), os.path.join(d, 'completed.vxg'))"]


def test_external_completer_round_trip(tmp_path):
    completion_input, _ = upright_box_input()
    completer = ExternalCompleter(str(tmp_path), copy_partial_command())
    completed = complete(completer, completion_input).completed
    assert completed == completion_input.partial
    assert (tmp_path / "free.vxg").exists()
    assert np.loadtxt(str(tmp_path / "viewpoint.txt")).tolist() == [0.08, -0.5, 0.5]


def test_external_completer_failures(tmp_path):
    completion_input, _ = upright_box_input()
    silent = ExternalCompleter(str(tmp_path / "a"), [sys.executable, "-c", "pass"])
    with pytest.raises(occsearch.CompletionError):
        complete(silent, completion_input)
    failing = ExternalCompleter(str(tmp_path / "b"),
                                [sys.executable, "-c", "raise SystemExit(3)"])
    with pytest.raises(occsearch.CompletionError):
        complete(failing, completion_input)
    # no command: the answer should already be there
    with pytest.raises(occsearch.CompletionError):
        complete(ExternalCompleter(str(tmp_path / "c")), completion_input)


def test_external_completer_checks_geometry(tmp_path):
    completion_input, _ = upright_box_input()
    occsearch.dump_grid(BinaryVoxelGrid.from_indices(
        BinaryVoxelGrid((4, 4, 4), 0.01), [[0, 0, 0]]), str(tmp_path / "completed.vxg"))
    with pytest.raises(occsearch.CompletionError):
        complete(ExternalCompleter(str(tmp_path)), completion_input)


def test_occluder_mask_corners():
    spec = OccluderSpec(0.25)
    assert spec.mask((4, 4), 3).astype(int).tolist() == [
        [0, 0, 0, 0],
        [0, 0, 0, 0],
        [0, 0, 1, 1],
        [0, 0, 1, 1],
    ]
    assert spec.mask((4, 4), 0)[:2, :2].all()
    assert not OccluderSpec(0.0).mask((4, 4), 1).any()
    assert OccluderSpec(1.0).mask((4, 4), 2).all()
    with pytest.raises(ValueError):
        OccluderSpec(1.5)
    with pytest.raises(ValueError):
        OccluderSpec(0.5, 4)


SMALL_GEOMETRY = dataset_geometry(24, 0.01)
SMALL_CAMERA = DatasetCamera(pixels=48)


def small_shapes():
    return {"box": voxelize_primitive("box", (0.08, 0.06, 0.05), 0.01),
            "can": voxelize_primitive("cylinder", (0.03, 0.07), 0.01)}


def synthesize(**kwargs):
    kwargs.setdefault("occluder", OccluderSpec(0.25))
    return synthesize_dataset(small_shapes(), 3, camera=SMALL_CAMERA,
                              geometry=SMALL_GEOMETRY, **kwargs)


def test_synthesized_triples_are_consistent():
    triples = synthesize(seed=1)
    assert 0 < len(triples) <= 6
    for t in triples:
        assert not t.partial.is_empty()
        assert is_subset(t.partial, t.truth)
        assert not np.any(t.free.data & t.truth.data)
        assert t.shape in ("box", "can")
        assert t.partial.same_as(t.truth)


def test_synthesis_is_deterministic():
    a = synthesize(seed=4)
    b = synthesize(seed=4)
    assert [t.example_id for t in a] == [t.example_id for t in b]
    for x, y in zip(a, b):
        assert x.partial == y.partial
        assert x.free == y.free
        assert x.truth == y.truth
        assert x.rotation == y.rotation
    c = synthesize(seed=5)
    assert [t.rotation for t in a] != [t.rotation for t in c]


def test_examples_regenerate_alone():
    triples = synthesize(seed=10)
    camera = SMALL_CAMERA.camera(SMALL_GEOMETRY)
    last = triples[-1]
    again = synthesize_example(small_shapes()[last.shape], camera, SMALL_GEOMETRY,
                               OccluderSpec(0.25), last.seed, name=last.shape)
    assert last.seed == 10 + int(last.example_id)
    assert again.truth == last.truth
    assert again.partial == last.partial


def test_degenerate_occluders():
    assert synthesize(occluder=OccluderSpec(1.0)) == []
    open_view = synthesize(occluder=OccluderSpec(0.0))
    assert len(open_view) == 6
    hidden = synthesize(occluder=OccluderSpec(0.25, quadrant=1))
    assert all(t.quadrant == 1 for t in hidden)


def test_split_dataset():
    train, test = split_dataset(list(range(10)))
    assert train == [0, 1, 2, 3, 5, 6, 7, 8]
    assert test == [4, 9]
    with pytest.raises(ValueError):
        split_dataset([1], (0, 0))


def test_save_and_load_dataset(tmp_path):
    triples = synthesize(seed=2)
    save_dataset(triples, str(tmp_path))
    loaded = load_dataset(str(tmp_path))
    assert len(loaded) == len(triples)
    for x, y in zip(triples, loaded):
        assert x.example_id == y.example_id
        assert x.partial == y.partial and x.free == y.free and x.truth == y.truth
        assert x.rotation == y.rotation
        assert x.quadrant == y.quadrant
        assert x.viewpoint.tolist() == y.viewpoint.tolist()


def test_evaluate_mean_and_stderr(tmp_path):
    triples = synthesize(seed=3)
    stats = evaluate_completer(NullCompleter(), triples)
    expected = [grid_distance(t.partial, t.truth) for t in triples]
    assert stats.chamfer == pytest.approx(expected)
    assert stats.mean == pytest.approx(np.mean(expected))
    assert stats.stderr == pytest.approx(np.std(expected, ddof=1) / math.sqrt(len(expected)))
    assert stats.failures == 0
    assert set(stats.by_shape) <= {"box", "can"}

    path = str(tmp_path / "chamfer.csv")
    write_evaluation_csv(stats, path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["example_id", "shape", "chamfer"]
    assert [float(r[2]) for r in rows[1:]] == pytest.approx(expected)


def test_evaluate_counts_failures(tmp_path):
    triples = synthesize(seed=3)[:2]
    stats = evaluate_completer(ExternalCompleter(str(tmp_path)), triples)
    assert stats.failures == 2
    assert stats.chamfer == [None, None]
    assert math.isnan(stats.mean)
    with pytest.raises(ValueError):
        evaluate_completer(NullCompleter(), [])


def test_single_example_has_zero_stderr():
    completion_input, truth = upright_box_input()
    triple = DatasetTriple(completion_input.partial, completion_input.free, truth, "box")
    stats = evaluate_completer(PrismHullCompleter(), [triple])
    assert stats.mean == 0.0
    assert stats.stderr == 0.0
    assert stats.rows[0][0] == "00000"


@pytest.mark.slow
def test_prism_hull_beats_null_over_a_dataset():
    triples = synthesize_dataset(default_shapes(), 45, occluder=OccluderSpec(0.25), seed=0)
    assert len(triples) >= 200
    hull = evaluate_completer(PrismHullCompleter(), triples)
    null = evaluate_completer(NullCompleter(), triples)
    assert hull.failures == 0
    assert hull.mean <= 0.7 * null.mean
