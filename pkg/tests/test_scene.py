import math

import numpy as np
import pytest
from lxml import etree

import occsearch
from occsearch import Camera, Table, ObjectModel, Scene, SceneFileError, \
    load_scene, save_scene
from occsearch.completion import voxelize_primitive
from occsearch.geometry import Transform
from occsearch.voxelcore import BinaryVoxelGrid


def camera():
    return Camera((0.15, -0.3, 0.4), (0.15, 0.15, 0.0), 60.0, 60.0, 32.0, 24.0, 64, 48)


def box(id, x, y, size=(0.06, 0.06, 0.06), yaw=0.0, **kwargs):
    source = {"shape": "box", "sizeX": size[0], "sizeY": size[1], "sizeZ": size[2]}
    return ObjectModel(id, voxelize_primitive("box", size, 0.015),
                       Transform.planar(x, y, yaw), source=source, **kwargs)


def small_scene(objects):
    return Scene(Table(0.0, 0.0, 0.3, 0.3), camera(), objects, 0.015, 0.15, "small")


SCENE_WITH_BAD_OBJECT = b"""<?xml version="1.0" encoding="UTF-8"?>
<Scene xmlns="urn:occsearch:1" resolution="0.015" workspaceHeight="0.15">
  <Table xmin="0" ymin="0" xmax="0.3" ymax="0.3" height="0"/>
  <Camera x="0.15" y="-0.3" z="0.4" lookX="0.15" lookY="0.15" lookZ="0" fx="60" fy="60" cx="32" cy="24" width="64" height="48"/>
  <ObjectList>
    <Object id="can" shape="cylinder" height="0.1" x="0.1" y="0.1"/>
  </ObjectList>
</Scene>
"""


def test_table_element():
    xml = etree.tostring(Table(0.0, 0.0, 0.6, 0.6).element())
    assert xml == (
        b'<Table xmlns="urn:occsearch:1" xmin="0.0" ymin="0.0" xmax="0.6" ymax="0.6" height="0.0"/>'
    )


def test_table_rejects_empty_extent():
    with pytest.raises(ValueError):
        Table(0.3, 0.0, 0.3, 0.6)


def test_object_element():
    obj = box("crate", 0.1, 0.2, color=(1.0, 0.0, 0.0), is_target=True)
    xml = etree.tostring(obj.element())
    assert xml == (
        b'<Object xmlns="urn:occsearch:1" id="crate" shape="box" sizeX="0.06" sizeY="0.06" sizeZ="0.06" x="0.1" y="0.2" z="0.0" yaw="0.0" color="1.0 0.0 0.0" target="true"/>'
    )


def test_scene_round_trip():
    scene = small_scene([box("a", 0.15, 0.12), box("b", 0.15, 0.18, (0.06, 0.06, 0.12))])
    valid, error = occsearch.validate(scene.element())
    assert valid, error
    parsed = Scene.parse(scene.pretty_print())
    assert parsed == scene
    assert [o.label for o in parsed.objects] == [1, 2]
    assert occsearch.parse(scene.pretty_print()) == scene


def test_parse_keeps_yaw():
    scene = small_scene([box("a", 0.15, 0.15, yaw=0.5)])
    parsed = Scene.parse(scene.pretty_print())
    assert parsed.get("a").pose.yaw == pytest.approx(0.5)


def test_field_geometry_puts_the_table_on_layer_zero():
    geometry = small_scene([]).field_geometry
    assert geometry.dims == (20, 20, 11)
    assert geometry.resolution == 0.015
    assert geometry.origin == pytest.approx(np.array([0.0, 0.0, -0.015]))


def test_label_grid():
    scene = small_scene([box("a", 0.15, 0.15)])
    labels = scene.label_grid()
    assert (labels[:, :, 0] == occsearch.TABLE_LABEL).all()
    assert (labels == 1).sum() == 64
    assert labels[8:12, 8:12, 1:5].tolist() == np.ones((4, 4, 4)).tolist()
    assert (labels[:, :, 5:] == occsearch.NO_LABEL).all()


def test_rasterize_quarter_turn():
    straight = box("a", 0.15, 0.15, (0.06, 0.03, 0.06))
    turned = box("a", 0.15, 0.15, (0.06, 0.03, 0.06), yaw=math.pi / 2)
    geometry = small_scene([]).field_geometry
    a = straight.rasterize(geometry)
    b = turned.rasterize(geometry)
    assert len(a) == len(b) == 4 * 2 * 4
    assert np.ptp(a[:, 0]) == 3 and np.ptp(a[:, 1]) == 1
    assert np.ptp(b[:, 0]) == 1 and np.ptp(b[:, 1]) == 3


def test_centroid():
    assert box("a", 0.15, 0.15).centroid() == pytest.approx(np.array([0.15, 0.15, 0.03]))


def test_scene_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        small_scene([box("a", 0.1, 0.1), box("a", 0.2, 0.2)])


def test_scene_caps_object_count():
    objects = [box("o{}".format(k), 0.15, 0.15) for k in range(62)]
    assert small_scene(objects).objects[-1].label == 62
    with pytest.raises(ValueError):
        small_scene(objects + [box("o62", 0.15, 0.15)])


def test_scene_rejects_camera_on_table():
    inside = Camera((0.15, 0.15, 0.1), (0.15, 0.3, 0.0), 60.0, 60.0, 32.0, 24.0, 64, 48)
    with pytest.raises(ValueError):
        Scene(Table(0.0, 0.0, 0.3, 0.3), inside, [], 0.015, 0.15)


def test_object_rejects_empty_shape():
    with pytest.raises(ValueError):
        ObjectModel("a", BinaryVoxelGrid((2, 2, 2), 0.1))
    with pytest.raises(TypeError):
        ObjectModel("", voxelize_primitive("sphere", (0.05,), 0.015))


def test_with_poses_moves_and_ejects():
    scene = small_scene([box("a", 0.1, 0.1), box("b", 0.2, 0.2)])
    moved = scene.with_poses({"a": Transform.planar(0.12, 0.1)}, ejected=["b"])
    assert [o.id for o in moved.objects] == ["a"]
    assert moved.get("a").pose.translation.tolist() == [0.12, 0.1, 0.0]
    assert moved.get("a").label == 1
    assert moved.ejected == ("b",)
    assert scene.get("a").pose.translation.tolist() == [0.1, 0.1, 0.0]
    with pytest.raises(KeyError):
        moved.get("b")


def test_target_id():
    scene = small_scene([box("a", 0.1, 0.1), box("ball", 0.2, 0.2, is_target=True)])
    assert scene.target_id == "ball"
    assert scene.by_label(2).id == "ball"
    assert scene.by_label(9) is None


def test_load_scene_reports_object_line(tmp_path):
    path = tmp_path / "scene.xml"
    path.write_bytes(SCENE_WITH_BAD_OBJECT)
    with pytest.raises(SceneFileError) as e:
        load_scene(str(path))
    assert e.value.filename == str(path)
    assert e.value.line == 6
    assert "radius" in e.value.message


def test_load_scene_reports_schema_line(tmp_path):
    path = tmp_path / "scene.xml"
    path.write_bytes(SCENE_WITH_BAD_OBJECT.replace(b'shape="cylinder"', b'shape="cone"'))
    with pytest.raises(SceneFileError) as e:
        load_scene(str(path))
    assert e.value.line == 6


def test_load_scene_reports_syntax_error(tmp_path):
    path = tmp_path / "scene.xml"
    path.write_bytes(SCENE_WITH_BAD_OBJECT.replace(b"</ObjectList>", b"</ObjectLst>"))
    with pytest.raises(SceneFileError) as e:
        load_scene(str(path))
    assert e.value.line == 7
    assert str(e.value).startswith("{}:7: ".format(path))


def test_save_scene_writes_grid_files(tmp_path):
    shape = BinaryVoxelGrid.from_indices(
        BinaryVoxelGrid((3, 3, 3), 0.015, (-0.0225, -0.0225, 0.0)),
        [[0, 0, 0], [1, 1, 1], [2, 2, 2], [1, 1, 0]])
    scene = small_scene([ObjectModel("odd", shape, Transform.planar(0.15, 0.15),
                                     source={"shape": "grid", "file": "odd.vxg"}),
                         box("a", 0.05, 0.05)])
    path = tmp_path / "scene.xml"
    save_scene(scene, str(path))
    assert (tmp_path / "odd.vxg").exists()
    loaded = load_scene(str(path))
    assert loaded == scene
    assert loaded.get("odd").shape == shape
