import json
import xml.etree.ElementTree as ET

import numpy as np

from geomod import model
from geomod.export import (convert_v4_to_v6, convert_v6_to_v4,
                           export_scene_wire, export_txt, export_vrml,
                           export_x3d, scene_wire_document)
from geomod.scenegraph import BuildOptions, build, compile_scene

from conftest import LISTING_FORMULAS_XML, repeated_box_document

SMALL_XML = """
<detector version="v4" world="world">
  <box name="slab" x="10" y="20" z="4" material="iron"/>
  <tube name="ring" rmin="5" rmax="8" zhalf="4"/>
  <material name="iron" density="7.87" color="0.6;0.2;0.2"/>
  <composition name="world">
    <posXYZ volume="slab" X_Y_Z="0;0;0"/>
    <posXYZ volume="slab" X_Y_Z="30;0;0" rot="0;0;45"/>
    <posXYZ volume="ring" X_Y_Z="-30;0;0"/>
  </composition>
</detector>
"""


def small_scene(**kw):
    doc, _ = model.parse_document(SMALL_XML)
    opts = BuildOptions(**kw)
    return compile_scene(build(doc, opts), opts)


# -- VRML ---------------------------------------------------------------------

def test_vrml_header_and_def_use():
    out = export_vrml(small_scene(optimization=1))
    assert out.startswith("#VRML V2.0 utf8\n")
    # two slabs share one geometry definition, the ring has its own
    assert out.count("geometry DEF G") == 2
    assert out.count("geometry USE G") == 1
    assert out.count("Transform {") == 3


def test_vrml_def_use_mirrors_geometry_table():
    scene = small_scene(optimization=0)   # no dedup: every instance defines
    out = export_vrml(scene)
    assert out.count("geometry DEF G") == 3
    assert out.count("geometry USE G") == 0


def test_vrml_omits_hidden_instances():
    scene = small_scene(optimization=1, interactivity=1)
    scene.toggle_visibility(("world", "ring"), False)
    out = export_vrml(scene)
    assert out.count("Transform {") == 2


def test_vrml_uses_nine_significant_digits():
    scene = small_scene()
    scene.instances[0].matrix[0, 3] = 1.23456789123456
    out = export_vrml(scene)
    assert "1.23456789 " in out
    assert "1.234567891" not in out


# -- X3D ----------------------------------------------------------------------

def test_x3d_is_well_formed_xml():
    out = export_x3d(small_scene())
    root = ET.fromstring(out)
    assert root.tag == "X3D"
    shapes = root.findall(".//Shape")
    assert len(shapes) == 3
    assert len(root.findall(".//IndexedFaceSet[@DEF]")) == 2
    assert len(root.findall(".//IndexedFaceSet[@USE]")) == 1


def test_x3d_material_colors_come_from_the_document():
    out = export_x3d(small_scene())
    root = ET.fromstring(out)
    colors = {m.get("diffuseColor") for m in root.findall(".//Material")}
    assert "0.6 0.2 0.2" in colors


# -- TXT ----------------------------------------------------------------------

def test_txt_dump_structure():
    out = export_txt(small_scene(optimization=1))
    lines = out.strip().splitlines()
    assert lines[0] == "group world"
    assert sum(1 for l in lines if l.strip().startswith("shape ")) == 3
    assert sum(1 for l in lines if l.strip().startswith("transform ")) == 3


def test_txt_lists_shared_group_bodies():
    doc = repeated_box_document(4)
    # wrap the boxes in a sub-assembly used twice so sharing kicks in
    sub = model.Composition("cell")
    sub.placements.append(model.Single("unit", (0.0, 0.0, 0.0)))
    doc.compositions["cell"] = sub
    doc.compositions["world"].placements = [
        model.Single("cell", (0.0, 0.0, 0.0)),
        model.Single("cell", (50.0, 0.0, 0.0)),
    ]
    opts = BuildOptions(optimization=2)
    out = export_txt(compile_scene(build(doc, opts), opts))
    assert "sharedref" in out
    assert "sharedgroup SG0" in out


# -- determinism --------------------------------------------------------------

def test_exports_are_byte_deterministic():
    a, b = small_scene(optimization=2), small_scene(optimization=2)
    assert export_vrml(a) == export_vrml(b)
    assert export_x3d(a) == export_x3d(b)
    assert export_txt(a) == export_txt(b)
    assert export_scene_wire(a) == export_scene_wire(b)


# -- wire JSON ----------------------------------------------------------------

def test_wire_document_schema():
    scene = small_scene(optimization=1)
    doc = scene_wire_document(scene)
    assert doc["version"] == "1"
    assert len(doc["geometries"]) == 2
    assert len(doc["instances"]) == 3
    for g in doc["geometries"]:
        assert len(g["vertices"]) % 3 == 0
        assert len(g["triangles"]) % 3 == 0
        assert max(g["triangles"]) < len(g["vertices"]) // 3
    for inst in doc["instances"]:
        assert len(inst["matrix"]) == 16
        assert inst["matrix"][12:] == [0.0, 0.0, 0.0, 1.0]  # row-major affine
        assert 0 <= inst["geom"] < len(doc["geometries"])
    assert doc["stats"]["shape_instances"] == 3


def test_wire_tree_indexes_instances():
    doc = scene_wire_document(small_scene(optimization=1))
    tree = doc["tree"]
    assert tree["name"] == "world"

    leaves = []

    def walk(n):
        if n["instance"] >= 0:
            leaves.append(n["instance"])
        for c in n["children"]:
            walk(c)

    walk(tree)
    assert sorted(leaves) == list(range(len(doc["instances"])))


def test_wire_round_trips_through_json():
    scene = small_scene(optimization=2)
    text = export_scene_wire(scene)
    assert json.loads(text) == scene_wire_document(scene)


# -- converters ---------------------------------------------------------------

def test_v6_to_v4_produces_explicit_document():
    doc, _ = model.parse_document(LISTING_FORMULAS_XML)
    out = convert_v6_to_v4(doc)
    assert out.version == "v4"
    assert out.solids["abox"].shape == model.Box(5.5, 5.0, 8.0)
    text = model.serialize_document(out)
    again, _ = model.parse_document(text)
    assert again.solids["abox"].shape == model.Box(5.5, 5.0, 8.0)


def test_v6_to_v4_preserves_rendered_triangles():
    xml = """
    <detector version="v6" world="world">
      <var name="w" value="10"/>
      <box XYZ="w;w*2;4" name="slab"/>
      <composition name="world">
        <mposPhi volume="slab" ncopy="4" R="50" phi0="0" dphi="90"/>
      </composition>
    </detector>"""
    doc, _ = model.parse_document(xml)
    v4 = convert_v6_to_v4(doc)
    opts = BuildOptions(optimization=1)
    a = compile_scene(build(model.expand_placements(doc_expanded(doc)), opts), opts)
    b = compile_scene(build(v4, opts), opts)
    assert a.canonical_triangles() == b.canonical_triangles()


def doc_expanded(doc):
    from geomod import expr
    return expr.expand_document(doc)


def test_v4_to_v6_only_changes_version():
    doc, _ = model.parse_document(SMALL_XML)
    out = convert_v4_to_v6(doc)
    assert out.version == "v6"
    assert out.solids == doc.solids and out.compositions == doc.compositions


def test_v6_to_v4_requires_sources_for_unresolved_params():
    import pytest
    from geomod.paramfill import FillError
    doc, _ = model.parse_document(
        '<detector version="v6" world="b">'
        '<var connection="demo" name="p"/><box name="b" x="1" y="1" z="1"/></detector>')
    with pytest.raises(FillError, match="unresolved"):
        convert_v6_to_v4(doc)
