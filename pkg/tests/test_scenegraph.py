import numpy as np
import pytest

from geomod import model
from geomod.model import Single
from geomod.scenegraph import (INTERACTIVITY_CAP, PALETTES, BuildError,
                               BuildOptions, CapabilityError, build,
                               compile_scene, euler_xyz_matrix,
                               placement_matrix, transform_points)

from conftest import repeated_box_document

PAIRS_XML = """
<detector version="v4" world="world">
  <box name="brick" x="10" y="10" z="10"/>
  <tube name="ring" rmin="5" rmax="8" zhalf="4"/>
  <composition name="pair">
    <posXYZ volume="brick" X_Y_Z="-20;0;0"/>
    <posXYZ volume="brick" X_Y_Z="20;0;0"/>
  </composition>
  <composition name="world">
    <posXYZ volume="pair" X_Y_Z="0;0;0"/>
    <posXYZ volume="pair" X_Y_Z="0;100;0"/>
    <posXYZ volume="pair" X_Y_Z="0;200;0" rot="0;0;90"/>
    <posXYZ volume="ring" X_Y_Z="0;-100;0"/>
  </composition>
</detector>
"""


def pairs_doc():
    doc, _ = model.parse_document(PAIRS_XML)
    return doc


def compiled(doc, **kw):
    opts = BuildOptions(**kw)
    return compile_scene(build(doc, opts), opts)


# -- transforms ---------------------------------------------------------------

def test_euler_rotation_order_is_x_then_y_then_z():
    rx, ry, rz = 30.0, 45.0, 60.0
    m = euler_xyz_matrix(rx, ry, rz)
    composed = (euler_xyz_matrix(rx, 0, 0)
                @ euler_xyz_matrix(0, ry, 0)
                @ euler_xyz_matrix(0, 0, rz))
    assert np.allclose(m, composed)
    # Rx(90) sends +y to +z
    assert np.allclose(euler_xyz_matrix(90, 0, 0) @ [0, 1, 0], [0, 0, 1])


def test_placement_matrix_applies_rotation_then_translation():
    p = Single("v", (1.0, 2.0, 3.0), (0.0, 0.0, 90.0))
    m = placement_matrix(p)
    out = transform_points(m, np.array([[1.0, 0.0, 0.0]]))
    assert np.allclose(out, [[1.0, 3.0, 3.0]])


# -- options ------------------------------------------------------------------

def test_option_validation():
    with pytest.raises(BuildError):
        BuildOptions(optimization=4)
    with pytest.raises(BuildError):
        BuildOptions(quality=10)
    with pytest.raises(BuildError):
        BuildOptions(interactivity=3)
    with pytest.raises(BuildError):
        BuildOptions(palette="NEON")


def test_interactivity_caps():
    assert INTERACTIVITY_CAP == {0: 2, 1: 2, 2: 1, 3: 0}
    for opt, cap in INTERACTIVITY_CAP.items():
        for want in (0, 1, 2):
            opts = BuildOptions(optimization=opt, interactivity=want)
            assert opts.effective_interactivity == min(want, cap)


def test_palettes_have_eight_colors():
    for name, colors in PALETTES.items():
        assert len(colors) == 8
        for c in colors:
            assert len(c) == 3 and all(0 <= v <= 1 for v in c)


# -- geometry dedup -----------------------------------------------------------

def test_no_dedup_at_optimization_zero():
    scene = compiled(repeated_box_document(50), optimization=0)
    assert scene.stats.shape_instances == 50
    assert scene.stats.distinct_geometries == 50


def test_dedup_collapses_identical_solids():
    scene = compiled(repeated_box_document(1000), optimization=1)
    assert scene.stats.shape_instances == 1000
    assert scene.stats.distinct_geometries == 1
    assert scene.stats.triangles_stored * 1000 == scene.stats.triangles_rendered


def test_dedup_respects_parameters_and_quality():
    doc = model.GenericDocument(version="v4", world="world")
    doc.solids["a"] = model.SolidDef("a", model.Box(2, 2, 2))
    doc.solids["b"] = model.SolidDef("b", model.Box(2, 2, 2.5))
    comp = model.Composition("world")
    comp.placements.append(Single("a", (0.0, 0.0, 0.0)))
    comp.placements.append(Single("b", (10.0, 0.0, 0.0)))
    doc.compositions["world"] = comp
    scene = compiled(doc, optimization=1)
    assert scene.stats.distinct_geometries == 2


# -- shared groups ------------------------------------------------------------

def test_shared_groups_found_at_optimization_two():
    assert compiled(pairs_doc(), optimization=1).stats.shared_groups == 0
    scene = compiled(pairs_doc(), optimization=2)
    assert scene.stats.shared_groups == 1
    assert scene.stats.shape_instances == 7   # 3 pairs x 2 bricks + 1 ring


def test_instance_paths_name_repeated_placements():
    scene = compiled(pairs_doc(), optimization=2)
    paths = {"/".join(i.path) for i in scene.instances}
    assert "world/pair.0/brick.0" in paths
    assert "world/pair.2/brick.1" in paths
    assert "world/ring" in paths


def test_shared_references_keep_distinct_world_positions():
    scene = compiled(pairs_doc(), optimization=2)
    by_path = {"/".join(i.path): i for i in scene.instances}
    p0 = by_path["world/pair.0/brick.0"].matrix[:3, 3]
    p1 = by_path["world/pair.1/brick.0"].matrix[:3, 3]
    assert np.allclose(p1 - p0, [0, 100, 0])


# -- cross-level equivalence --------------------------------------------------

@pytest.mark.parametrize("opt", [1, 2, 3])
def test_optimization_preserves_rendered_triangles(opt):
    base = compiled(pairs_doc(), optimization=0)
    other = compiled(pairs_doc(), optimization=opt)
    assert other.canonical_triangles() == base.canonical_triangles()


def test_flattening_merges_instances():
    scene = compiled(pairs_doc(), optimization=3)
    assert scene.stats.shape_instances < 7
    assert all(i.node.name for i in scene.instances)


def test_memory_estimate_decreases_with_optimization():
    doc = repeated_box_document(300)
    sizes = [compiled(doc, optimization=o).stats.memory_bytes for o in (0, 1)]
    assert sizes[1] < sizes[0]


def test_build_is_deterministic():
    a = compiled(pairs_doc(), optimization=2)
    b = compiled(pairs_doc(), optimization=2)
    assert [i.path for i in a.instances] == [i.path for i in b.instances]
    assert a.canonical_triangles() == b.canonical_triangles()
    assert a.stats.as_dict() == b.stats.as_dict()


# -- interactivity ------------------------------------------------------------

def test_appearance_edit_requires_interactivity():
    scene = compiled(pairs_doc(), optimization=1, interactivity=0)
    with pytest.raises(CapabilityError, match="interactivity"):
        scene.set_appearance(("world", "ring"), color=(1, 0, 0))


def test_appearance_edit_applies_color():
    scene = compiled(pairs_doc(), optimization=1, interactivity=1)
    scene.set_appearance(("world", "ring"), color=(1, 0, 0), transparency=0.5)
    idx = scene.instance_index(("world", "ring"))
    app = scene.builder.appearances[scene.instances[idx].appearance_id]
    assert app.color[:3] == (1, 0, 0)
    assert app.transparency == 0.5


def test_appearance_edit_unknown_path():
    scene = compiled(pairs_doc(), optimization=1, interactivity=1)
    with pytest.raises(KeyError):
        scene.set_appearance(("world", "nope"), color=(1, 0, 0))


def test_flattened_scene_refuses_identity_edits():
    scene = compiled(pairs_doc(), optimization=3, interactivity=2)
    assert scene.opts.effective_interactivity == 0
    with pytest.raises(CapabilityError, match="discards identities"):
        scene.set_appearance(("world", "ring"), color=(1, 0, 0))
    with pytest.raises(CapabilityError, match="discards identities"):
        scene.set_transform(("world", "ring"), np.eye(4))
    with pytest.raises(CapabilityError, match="discards identities"):
        scene.toggle_visibility(("world", "ring"), False)


def test_calibration_requires_full_interactivity():
    scene = compiled(pairs_doc(), optimization=2, interactivity=2)
    assert scene.opts.effective_interactivity == 1   # capped by optimization 2
    with pytest.raises(CapabilityError, match="interactivity 2"):
        scene.set_transform(("world", "ring"), np.eye(4))


def test_calibration_moves_instance_and_bounds():
    scene = compiled(pairs_doc(), optimization=1, interactivity=2)
    idx = scene.instance_index(("world", "ring"))
    before = scene.instance_bounds[idx][0].copy()
    delta = np.eye(4)
    delta[:3, 3] = [7.0, 0.0, 0.0]
    scene.set_transform(("world", "ring"), delta)
    after = scene.instance_bounds[idx][0]
    assert np.allclose(after - before, [7, 0, 0])
    assert np.allclose(scene.inverse_matrix(idx) @ scene.instances[idx].matrix,
                       np.eye(4), atol=1e-12)


def test_visibility_toggle_hides_triangles():
    scene = compiled(pairs_doc(), optimization=1, interactivity=1)
    full = len(scene.canonical_triangles(include_hidden=False))
    scene.toggle_visibility(("world", "ring"), False)
    hidden = len(scene.canonical_triangles(include_hidden=False))
    ring_tris = scene.mesh_of(scene.instance_index(("world", "ring"))).ntriangles
    assert full - hidden == ring_tris
    scene.toggle_visibility(("world", "ring"), True)
    assert len(scene.canonical_triangles(include_hidden=False)) == full


def test_shared_definition_visibility_switches_all_references():
    scene = compiled(pairs_doc(), optimization=2, interactivity=1)
    scene.toggle_visibility(("world", "pair.0", "brick.0"), False)
    hidden = [i for i in scene.instances if not i.visible]
    # the shape definition is shared, so the matching brick disappears
    # from every pair reference
    assert {"/".join(i.path) for i in hidden} == {
        "world/pair.0/brick.0", "world/pair.1/brick.0", "world/pair.2/brick.0"}
