"""Exporters (VRML97, X3D, TXT, viewer wire JSON) and document converters.

All exports are deterministic byte streams for a given scene; numbers are
formatted with 9 significant digits, locale-independent.  VRML/X3D reuse
geometry via DEF/USE exactly where the internal geometry table shares it,
so the export itself shows the optimization level at work.
"""

from __future__ import annotations

import json
import math

import numpy as np

from . import expr, model, paramfill
from .scenegraph import (CompiledScene, GroupNode, SharedRefNode, ShapeNode,
                         TransformNode)


def _f(v: float) -> str:
    out = format(float(v), ".9g")
    return "0" if out == "-0" else out


def _matrix_to_translation_rotation(m: np.ndarray):
    """Rigid matrix -> (translation, (axis, angle_rad)) for VRML/X3D Transforms."""
    t = m[:3, 3]
    r = m[:3, :3]
    # axis-angle from rotation matrix
    trace = float(np.trace(r))
    cos_a = max(-1.0, min(1.0, (trace - 1.0) / 2.0))
    angle = math.acos(cos_a)
    if angle < 1e-12:
        return t, ((0.0, 0.0, 1.0), 0.0)
    if math.pi - angle < 1e-6:
        # near 180 deg: take axis from the dominant diagonal entry
        d = np.diag(r)
        k = int(np.argmax(d))
        axis = np.zeros(3)
        axis[k] = math.sqrt(max(0.0, (d[k] + 1.0) / 2.0))
        for j in range(3):
            if j != k and axis[k] > 1e-12:
                axis[j] = r[k, j] / (2.0 * axis[k])
        axis = axis / np.linalg.norm(axis)
        return t, (tuple(axis), angle)
    axis = np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    axis = axis / (2.0 * math.sin(angle))
    return t, (tuple(axis), angle)


def _visible(scene: CompiledScene, inst) -> bool:
    if not inst.visible:
        return False
    if inst.appearance_id is not None:
        return scene.builder.appearances[inst.appearance_id].visible
    return True


# ---------------------------------------------------------------------------
# VRML97

def export_vrml(scene: CompiledScene) -> str:
    lines = ["#VRML V2.0 utf8", ""]
    defined: set[int] = set()
    for inst in scene.instances:
        if not _visible(scene, inst):
            continue
        t, (axis, angle) = _matrix_to_translation_rotation(inst.matrix)
        lines.append("Transform {")
        lines.append(f"  translation {_f(t[0])} {_f(t[1])} {_f(t[2])}")
        if angle != 0.0:
            lines.append(f"  rotation {_f(axis[0])} {_f(axis[1])} {_f(axis[2])} {_f(angle)}")
        lines.append("  children [")
        lines.append("    Shape {")
        if inst.appearance_id is not None:
            app = scene.builder.appearances[inst.appearance_id]
            r, g, b, _ = app.color
            lines.append("      appearance Appearance {")
            lines.append(f"        material Material {{ diffuseColor {_f(r)} {_f(g)} {_f(b)}"
                         f" transparency {_f(app.transparency)} }}")
            lines.append("      }")
        gid = inst.geometry_id
        if gid in defined:
            lines.append(f"      geometry USE G{gid}")
        else:
            defined.add(gid)
            mesh = scene.builder.geometries[gid]
            pts = " ".join(f"{_f(v[0])} {_f(v[1])} {_f(v[2])}," for v in mesh.vertices)
            idx = " ".join(f"{tri[0]} {tri[1]} {tri[2]} -1," for tri in mesh.triangles)
            lines.append(f"      geometry DEF G{gid} IndexedFaceSet {{")
            lines.append(f"        coord Coordinate {{ point [ {pts} ] }}")
            lines.append(f"        coordIndex [ {idx} ]")
            lines.append("      }")
        lines.append("    }")
        lines.append("  ]")
        lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# X3D

def _xml_escape(s: str) -> str:
    return (s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
            .replace('"', "&quot;"))


def export_x3d(scene: CompiledScene) -> str:
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             '<X3D profile="Interchange" version="3.3">',
             "  <Scene>"]
    defined: set[int] = set()
    for inst in scene.instances:
        if not _visible(scene, inst):
            continue
        t, (axis, angle) = _matrix_to_translation_rotation(inst.matrix)
        rot = "" if angle == 0.0 else \
            f' rotation="{_f(axis[0])} {_f(axis[1])} {_f(axis[2])} {_f(angle)}"'
        lines.append(f'    <Transform translation="{_f(t[0])} {_f(t[1])} {_f(t[2])}"{rot}>')
        lines.append("      <Shape>")
        if inst.appearance_id is not None:
            app = scene.builder.appearances[inst.appearance_id]
            r, g, b, _ = app.color
            lines.append("        <Appearance>")
            lines.append(f'          <Material diffuseColor="{_f(r)} {_f(g)} {_f(b)}"'
                         f' transparency="{_f(app.transparency)}"/>')
            lines.append("        </Appearance>")
        gid = inst.geometry_id
        if gid in defined:
            lines.append(f'        <IndexedFaceSet USE="G{gid}"/>')
        else:
            defined.add(gid)
            mesh = scene.builder.geometries[gid]
            idx = " ".join(f"{tri[0]} {tri[1]} {tri[2]} -1" for tri in mesh.triangles)
            pts = " ".join(f"{_f(v[0])} {_f(v[1])} {_f(v[2])}" for v in mesh.vertices)
            lines.append(f'        <IndexedFaceSet DEF="G{gid}" coordIndex="{idx}">')
            lines.append(f'          <Coordinate point="{pts}"/>')
            lines.append("        </IndexedFaceSet>")
        lines.append("      </Shape>")
        lines.append("    </Transform>")
    lines.append("  </Scene>")
    lines.append("</X3D>")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# TXT debug dump

def export_txt(scene: CompiledScene) -> str:
    """Deterministic indented tree dump of the scene graph."""
    lines: list[str] = []
    builder = scene.builder

    def tsum(m: np.ndarray) -> str:
        t = m[:3, 3]
        rot = "R" if not np.allclose(m[:3, :3], np.eye(3), atol=1e-12) else "I"
        return f"[{_f(t[0])},{_f(t[1])},{_f(t[2])}|{rot}]"

    def walk(node, depth: int):
        pad = "  " * depth
        if isinstance(node, GroupNode):
            lines.append(f"{pad}group {node.name}")
            for c in node.children:
                walk(c, depth + 1)
        elif isinstance(node, TransformNode):
            lines.append(f"{pad}transform {tsum(node.matrix)}")
            walk(node.child, depth + 1)
        elif isinstance(node, SharedRefNode):
            lines.append(f"{pad}sharedref {node.name} -> SG{node.group_id}")
        elif isinstance(node, ShapeNode):
            app = "-" if node.appearance_id is None else f"A{node.appearance_id}"
            vis = "" if node.visible else " hidden"
            lines.append(f"{pad}shape {node.name} G{node.geometry_id} {app}{vis}")

    walk(scene.root, 0)
    for gid in sorted(builder.shared_groups):
        lines.append(f"sharedgroup SG{gid}")
        walk(builder.shared_groups[gid], 1)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# viewer wire format (JSON)

def scene_wire_document(scene: CompiledScene) -> dict:
    """Schema: see docs/formats.md (version "1")."""
    geometries = []
    for mesh in scene.builder.geometries:
        geometries.append({
            "vertices": [round(float(c), 9) for v in mesh.vertices for c in v],
            "triangles": [int(i) for tri in mesh.triangles for i in tri],
        })
    appearances = []
    for app in scene.builder.appearances:
        appearances.append({
            "color": [round(float(c), 9) for c in app.color],
            "transparency": round(float(app.transparency), 9),
            "mode": app.mode,
            "visible": bool(app.visible),
        })
    instances = []
    for inst in scene.instances:
        instances.append({
            "geom": inst.geometry_id,
            "app": -1 if inst.appearance_id is None else inst.appearance_id,
            "matrix": [round(float(v), 9) for v in inst.matrix.reshape(-1)],
            "path": list(inst.path),
            "visible": _visible(scene, inst),
        })
    tree = _build_tree(scene)
    return {
        "version": "1",
        "geometries": geometries,
        "appearances": appearances,
        "instances": instances,
        "tree": tree,
        "stats": scene.stats.as_dict(),
    }


def _build_tree(scene: CompiledScene) -> dict:
    root_name = scene.instances[0].path[0] if scene.instances else \
        getattr(scene.root, "name", "scene")
    root = {"name": root_name, "children": [], "instance": -1}
    index: dict[tuple, dict] = {(root_name,): root}
    for i, inst in enumerate(scene.instances):
        node = root
        for depth in range(2, len(inst.path) + 1):
            prefix = inst.path[:depth]
            child = index.get(prefix)
            if child is None:
                child = {"name": prefix[-1], "children": [], "instance": -1}
                index[prefix] = child
                node["children"].append(child)
            node = child
        node["instance"] = i
    return root


def export_scene_wire(scene: CompiledScene) -> str:
    return json.dumps(scene_wire_document(scene), separators=(",", ":"),
                      sort_keys=False)


# ---------------------------------------------------------------------------
# document converters

def convert_v6_to_v4(doc: model.GenericDocument,
                     config: paramfill.ConnectionConfig | None = None,
                     sources: dict | None = None) -> model.GenericDocument:
    """Pipeline: fill external parameters, expand formulas, expand placements."""
    if doc.unresolved_params:
        if config is None or sources is None:
            raise paramfill.FillError(
                "document has unresolved parameters but no sources were given")
        doc = paramfill.fill(doc, config, sources)
    doc = expr.expand_document(doc)
    doc = model.expand_placements(doc)
    doc.version = "v4"
    return doc


def convert_v4_to_v6(doc: model.GenericDocument) -> model.GenericDocument:
    """Explicit documents are valid v6; only the version string changes."""
    from dataclasses import replace
    return replace(doc, version="v6")
