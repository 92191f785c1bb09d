"""Optimized scene graph built from an expanded generic document.

Build options:
  optimization 0  every placement gets its own geometry copy
  optimization 1  geometries deduplicated by structural hash
  optimization 2  + repeated subtrees stored once as shared groups
  optimization 3  static flatten: world-baked meshes merged per material;
                  individual volume identities are discarded
  quality 0..9    tessellation density (see solids.nseg)
  interactivity   0 none, 1 appearance edits, 2 + calibration transforms;
                  capped by optimization: cap(0)=cap(1)=2, cap(2)=1, cap(3)=0

Placement transforms stay OUTSIDE shared subtrees, so translated/rotated
copies of the same structure still share one definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import solids
from .model import (Composition, GenericDocument, Material, Shape, Single,
                    SolidDef, ValidationError, shape_params)

INTERACTIVITY_CAP = {0: 2, 1: 2, 2: 1, 3: 0}

# default colors cycled over materials without a color hint
_DEFAULT_PALETTE = [
    (0.80, 0.80, 0.85), (0.85, 0.45, 0.30), (0.35, 0.60, 0.85),
    (0.45, 0.75, 0.40), (0.85, 0.75, 0.30), (0.65, 0.45, 0.80),
    (0.40, 0.75, 0.75), (0.75, 0.50, 0.60),
]

ATLANTIS_PALETTE = [
    (0.95, 0.95, 0.95), (0.90, 0.20, 0.20), (0.20, 0.80, 0.20),
    (0.25, 0.45, 0.95), (0.95, 0.85, 0.20), (0.90, 0.45, 0.10),
    (0.60, 0.25, 0.80), (0.20, 0.80, 0.80),
]

PALETTES = {"DEFAULT": _DEFAULT_PALETTE, "ATLANTIS": ATLANTIS_PALETTE}


class BuildError(Exception):
    pass


class CapabilityError(Exception):
    """Operation not available under the scene's build options."""


@dataclass
class BuildOptions:
    graphical: bool = True
    optimization: int = 1
    quality: int = 3
    interactivity: int = 0
    representations: dict[str, str] = field(default_factory=dict)
    palette: str = "DEFAULT"

    def __post_init__(self):
        if self.optimization not in (0, 1, 2, 3):
            raise BuildError(f"optimization must be 0..3, got {self.optimization}")
        if not 0 <= self.quality <= 9:
            raise BuildError(f"quality must be 0..9, got {self.quality}")
        if self.interactivity not in (0, 1, 2):
            raise BuildError(f"interactivity must be 0..2, got {self.interactivity}")
        if self.palette not in PALETTES:
            raise BuildError(f"unknown palette {self.palette!r}")

    @property
    def effective_interactivity(self) -> int:
        return min(self.interactivity, INTERACTIVITY_CAP[self.optimization])


@dataclass
class Appearance:
    color: tuple[float, float, float, float] = (0.8, 0.8, 0.8, 1.0)
    transparency: float = 0.0
    mode: str = "solid"     # solid | wireframe | vertexframe
    visible: bool = True


@dataclass
class GroupNode:
    name: str
    children: list = field(default_factory=list)


@dataclass
class TransformNode:
    matrix: np.ndarray      # 4x4 affine, mm
    child: object


@dataclass
class SharedRefNode:
    group_id: int
    name: str               # instance name at the reference site


@dataclass
class ShapeNode:
    geometry_id: int
    appearance_id: int | None
    name: str
    pickable: bool = True
    visible: bool = True


SceneNode = object  # GroupNode | TransformNode | SharedRefNode | ShapeNode


# ---------------------------------------------------------------------------
# transforms

def euler_xyz_matrix(rx: float, ry: float, rz: float) -> np.ndarray:
    """Rotation from Euler angles (degrees), applied X then Y then Z intrinsic."""
    ax, ay, az = (math.radians(a) for a in (rx, ry, rz))
    cx, sx = math.cos(ax), math.sin(ax)
    cy, sy = math.cos(ay), math.sin(ay)
    cz, sz = math.cos(az), math.sin(az)
    mx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    my = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    mz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return mx @ my @ mz


def placement_matrix(p: Single) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = euler_xyz_matrix(*(float(v) for v in p.rotation))
    m[:3, 3] = [float(v) for v in p.translation]
    return m


def transform_points(matrix: np.ndarray, pts: np.ndarray) -> np.ndarray:
    return pts @ matrix[:3, :3].T + matrix[:3, 3]


# ---------------------------------------------------------------------------
# scene builder (geometry / appearance tables shared across builds)

def _geometry_key(shape: Shape, quality: int) -> tuple:
    params = tuple(round(float(v), 9) for v in shape_params(shape))
    return (type(shape).__name__, params, quality)


class SceneBuilder:
    """Owns the geometry/appearance/shared-group tables for one scene."""

    def __init__(self, opts: BuildOptions):
        self.opts = opts
        self.geometries: list[solids.Mesh] = []
        self.geometry_shapes: list[Shape | None] = []   # analytic solid per geometry (None for merged)
        self.appearances: list[Appearance] = []
        self.shared_groups: dict[int, GroupNode] = {}
        self._geom_index: dict[tuple, int] = {}
        self._mesh_cache: dict[tuple, solids.Mesh] = {}
        self._next_group_id = 0

    # -- geometry ----------------------------------------------------------
    def add_geometry(self, shape: Shape) -> int:
        key = _geometry_key(shape, self.opts.quality)
        if self.opts.optimization >= 1 and key in self._geom_index:
            return self._geom_index[key]
        mesh = self._mesh_cache.get(key)
        if mesh is None:
            mesh = solids.tessellate(shape, self.opts.quality)
            self._mesh_cache[key] = mesh
        gid = len(self.geometries)
        self.geometries.append(mesh)
        self.geometry_shapes.append(shape)
        if self.opts.optimization >= 1:
            self._geom_index[key] = gid
        return gid

    def add_raw_geometry(self, mesh: solids.Mesh, shape: Shape | None = None) -> int:
        self.geometries.append(mesh)
        self.geometry_shapes.append(shape)
        return len(self.geometries) - 1

    # -- appearance --------------------------------------------------------
    def add_appearance(self, color: tuple[float, float, float],
                       transparency: float = 0.0, mode: str = "solid") -> int | None:
        if not self.opts.graphical:
            return None
        self.appearances.append(Appearance((color[0], color[1], color[2], 1.0),
                                           transparency, mode))
        return len(self.appearances) - 1

    def material_color(self, material: str | None,
                       materials: dict[str, Material]) -> tuple[float, float, float]:
        palette = PALETTES[self.opts.palette]
        if material and material in materials and materials[material].color_hint:
            return materials[material].color_hint
        if material:
            return palette[hash(material) % len(palette)]
        return palette[0]

    def palette_color(self, index: int) -> tuple[float, float, float]:
        palette = PALETTES[self.opts.palette]
        return palette[index % len(palette)]

    def new_shared_group(self, node: GroupNode) -> int:
        gid = self._next_group_id
        self._next_group_id += 1
        self.shared_groups[gid] = node
        return gid


# ---------------------------------------------------------------------------
# build

def _structural_hashes(doc: GenericDocument, quality: int) -> dict[str, tuple]:
    """Content hash per volume; equal hashes mean geometrically identical subtrees."""
    hashes: dict[str, tuple] = {}

    def vol_hash(name: str) -> tuple:
        if name in hashes:
            return hashes[name]
        if name in doc.solids:
            s = doc.solids[name]
            h = ("solid", _geometry_key(s.shape, quality), s.material)
        else:
            comp = doc.compositions[name]
            items = []
            for p in comp.placements:
                if not isinstance(p, Single):
                    raise BuildError(f"composition {comp.name!r}: expand placements first")
                t = tuple(round(float(v), 9) for v in p.translation)
                r = tuple(round(float(v), 9) for v in p.rotation)
                items.append((vol_hash(p.volume), t, r))
            h = ("comp", tuple(items))
        hashes[name] = h
        return h

    for name in list(doc.solids) + list(doc.compositions):
        vol_hash(name)
    return hashes


def _occurrence_counts(doc: GenericDocument, hashes: dict[str, tuple]) -> dict[tuple, int]:
    """How many times each subtree hash occurs in the full instantiation."""
    counts: dict[tuple, int] = {}
    multiplicity: dict[str, int] = {}

    def visit(name: str, mult: int):
        multiplicity[name] = multiplicity.get(name, 0) + mult
        if name in doc.compositions:
            for p in doc.compositions[name].placements:
                visit(p.volume, mult)

    if doc.world:
        visit(doc.world, 1)
    for name, mult in multiplicity.items():
        h = hashes[name]
        counts[h] = counts.get(h, 0) + mult
    return counts


def _instance_names(comp: Composition) -> list[str]:
    """Unique child names: bare volume name, or name.i when placed repeatedly."""
    totals: dict[str, int] = {}
    for p in comp.placements:
        totals[p.volume] = totals.get(p.volume, 0) + 1
    seen: dict[str, int] = {}
    names = []
    for p in comp.placements:
        if totals[p.volume] == 1:
            names.append(p.volume)
        else:
            i = seen.get(p.volume, 0)
            seen[p.volume] = i + 1
            names.append(f"{p.volume}.{i}")
    return names


def build(doc: GenericDocument, opts: BuildOptions,
          builder: SceneBuilder | None = None) -> GroupNode:
    """Instantiate the scene graph for the document's world volume.

    The returned root carries the SceneBuilder used (root.builder); compile()
    picks it up from there.
    """
    if builder is None:
        builder = SceneBuilder(opts)
    if doc.world is None:
        raise BuildError("document has no world volume")
    if doc.world not in doc.solids and doc.world not in doc.compositions:
        raise BuildError(f"world volume {doc.world!r} undefined")

    materials = {m.name: m for m in doc.materials}
    appearance_cache: dict[str | None, tuple] = {}

    def shape_appearance(material: str | None) -> int | None:
        # one appearance cell per shape node at opt<=1 (per-instance edits);
        # shared cells at opt>=2 (edits propagate through shared groups)
        if not opts.graphical:
            return None
        color = builder.material_color(material, materials)
        if opts.optimization >= 2:
            if material not in appearance_cache:
                appearance_cache[material] = builder.add_appearance(color)
            return appearance_cache[material]
        return builder.add_appearance(color)

    hashes = _structural_hashes(doc, opts.quality)
    share = set()
    if opts.optimization >= 2:
        counts = _occurrence_counts(doc, hashes)
        share = {h for h, n in counts.items() if n >= 2 and h[0] == "comp"}
    shared_ids: dict[tuple, int] = {}

    def build_volume(name: str, instance_name: str):
        if name in doc.solids:
            sd = doc.solids[name]
            solids.check_shape(sd.shape)
            return ShapeNode(builder.add_geometry(sd.shape),
                             shape_appearance(sd.material), instance_name)
        comp = doc.compositions[name]
        h = hashes[name]
        if h in share:
            if h not in shared_ids:
                shared_ids[h] = builder.new_shared_group(build_composition(comp))
            return SharedRefNode(shared_ids[h], instance_name)
        node = build_composition(comp)
        node.name = instance_name
        return node

    def build_composition(comp: Composition) -> GroupNode:
        group = GroupNode(comp.name)
        names = _instance_names(comp)
        for p, child_name in zip(comp.placements, names):
            if not isinstance(p, Single):
                raise BuildError(f"composition {comp.name!r}: expand placements first")
            group.children.append(
                TransformNode(placement_matrix(p), build_volume(p.volume, child_name)))
        return group

    root = GroupNode(doc.world)
    if doc.world in doc.solids:
        root.children.append(TransformNode(np.eye(4), build_volume(doc.world, doc.world)))
    else:
        comp = doc.compositions[doc.world]
        names = _instance_names(comp)
        for p, child_name in zip(comp.placements, names):
            if not isinstance(p, Single):
                raise BuildError(f"composition {comp.name!r}: expand placements first")
            root.children.append(
                TransformNode(placement_matrix(p), build_volume(p.volume, child_name)))

    if opts.optimization == 3:
        root = _flatten(root, builder, doc)
    root.builder = builder
    return root


def _flatten(root: GroupNode, builder: SceneBuilder, doc: GenericDocument) -> GroupNode:
    """Bake world transforms and merge meshes per appearance batch."""
    instances = _expand_instances(root, builder)
    batches: dict[int | None, list] = {}
    for inst in instances:
        batches.setdefault(inst.appearance_id, []).append(inst)

    merged_builder_ids = []
    flat = GroupNode(root.name)
    fresh = SceneBuilder(builder.opts)
    fresh.appearances = builder.appearances
    for app_id in sorted(batches, key=lambda a: (-1 if a is None else a)):
        verts, tris = [], []
        offset = 0
        for inst in batches[app_id]:
            mesh = builder.geometries[inst.geometry_id]
            verts.append(transform_points(inst.matrix, mesh.vertices))
            tris.append(mesh.triangles + offset)
            offset += mesh.nvertices
        v = np.vstack(verts)
        t = np.vstack(tris)
        mesh = solids.Mesh(v, t, solids._vertex_normals(v, t))
        gid = fresh.add_raw_geometry(mesh, None)
        name = f"batch:{'none' if app_id is None else app_id}"
        flat.children.append(TransformNode(np.eye(4), ShapeNode(gid, app_id, name)))
        merged_builder_ids.append(gid)
    # the flattened scene owns only the merged geometry
    builder.geometries = fresh.geometries
    builder.geometry_shapes = fresh.geometry_shapes
    builder.shared_groups = {}
    return flat


# ---------------------------------------------------------------------------
# compile

@dataclass
class Instance:
    geometry_id: int
    appearance_id: int | None
    matrix: np.ndarray           # world transform (rigid)
    path: tuple[str, ...]
    node: ShapeNode

    @property
    def visible(self) -> bool:
        app_visible = True
        return self.node.visible and app_visible

    def world_aabb(self, builder_shapes, geometries) -> tuple[np.ndarray, np.ndarray]:
        shape = builder_shapes[self.geometry_id]
        if shape is not None:
            lo, hi = solids.aabb(shape)
        else:
            verts = geometries[self.geometry_id].vertices
            lo, hi = verts.min(axis=0), verts.max(axis=0)
        corners = np.array([[x, y, z] for x in (lo[0], hi[0])
                            for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])
        world = transform_points(self.matrix, corners)
        return world.min(axis=0), world.max(axis=0)


def _expand_instances(root, builder: SceneBuilder) -> list[Instance]:
    instances: list[Instance] = []

    def walk(node, matrix: np.ndarray, path: tuple[str, ...]):
        if isinstance(node, GroupNode):
            for child in node.children:
                walk(child, matrix, path + (node.name,))
        elif isinstance(node, TransformNode):
            walk(node.child, matrix @ node.matrix, path)
        elif isinstance(node, SharedRefNode):
            group = builder.shared_groups[node.group_id]
            for child in group.children:
                walk(child, matrix, path + (node.name,))
        elif isinstance(node, ShapeNode):
            instances.append(Instance(node.geometry_id, node.appearance_id,
                                      matrix, path + (node.name,), node))
        else:
            raise BuildError(f"unknown node {node!r}")

    walk(root, np.eye(4), ())
    return instances


@dataclass
class SceneStats:
    nodes: int
    shape_instances: int
    distinct_geometries: int
    shared_groups: int
    triangles_stored: int
    triangles_rendered: int
    memory_bytes: int

    def render(self) -> str:
        rows = [
            ("nodes", self.nodes),
            ("shape instances", self.shape_instances),
            ("distinct geometries", self.distinct_geometries),
            ("shared groups", self.shared_groups),
            ("triangles stored", self.triangles_stored),
            ("triangles rendered", self.triangles_rendered),
            ("memory bytes", self.memory_bytes),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)

    def as_dict(self) -> dict:
        return {
            "nodes": self.nodes,
            "shape_instances": self.shape_instances,
            "distinct_geometries": self.distinct_geometries,
            "shared_groups": self.shared_groups,
            "triangles_stored": self.triangles_stored,
            "triangles_rendered": self.triangles_rendered,
            "memory_bytes": self.memory_bytes,
        }


def _count_nodes(root, builder: SceneBuilder) -> int:
    count = 0
    seen_groups: set[int] = set()

    def walk(node):
        nonlocal count
        count += 1
        if isinstance(node, GroupNode):
            for c in node.children:
                walk(c)
        elif isinstance(node, TransformNode):
            walk(node.child)
        elif isinstance(node, SharedRefNode) and node.group_id not in seen_groups:
            seen_groups.add(node.group_id)
            walk(builder.shared_groups[node.group_id])

    walk(root)
    return count


class CompiledScene:
    """Immutable topology; appearance cells and (at interactivity 2)
    calibration transforms are the only mutable state.

    Mutations and queries must be externally serialized (the HTTP server
    does this with a lock); concurrent read-only queries are safe.
    """

    def __init__(self, root, opts: BuildOptions, builder: SceneBuilder):
        self.root = root
        self.opts = opts
        self.builder = builder
        self.instances = _expand_instances(root, builder)
        self._by_path = {inst.path: i for i, inst in enumerate(self.instances)}
        self._inverse = [np.linalg.inv(inst.matrix) for inst in self.instances]
        self._refresh_bounds()
        self.stats = self._compute_stats()

    def _refresh_bounds(self):
        from .bvh import BVH
        boxes = [inst.world_aabb(self.builder.geometry_shapes, self.builder.geometries)
                 for inst in self.instances]
        self.instance_bounds = boxes
        self.bvh = BVH(boxes)

    def _compute_stats(self) -> SceneStats:
        geoms = self.builder.geometries
        tri_stored = sum(g.ntriangles for g in geoms)
        vert_stored = sum(g.nvertices for g in geoms)
        tri_rendered = sum(geoms[i.geometry_id].ntriangles for i in self.instances)
        nodes = _count_nodes(self.root, self.builder)
        # documented estimate: 48 B/vertex (position+normal float64),
        # 12 B/triangle (3 x int32), 64 B/node, 160 B/instance
        memory = vert_stored * 48 + tri_stored * 12 + nodes * 64 + len(self.instances) * 160
        return SceneStats(nodes, len(self.instances), len(geoms),
                          len(self.builder.shared_groups), tri_stored, tri_rendered, memory)

    # -- path resolution ---------------------------------------------------
    def instance_index(self, path: tuple[str, ...]) -> int | None:
        return self._by_path.get(tuple(path))

    def instances_under(self, path: tuple[str, ...]) -> list[int]:
        path = tuple(path)
        n = len(path)
        return [i for i, inst in enumerate(self.instances)
                if inst.path[:n] == path]

    def inverse_matrix(self, index: int) -> np.ndarray:
        return self._inverse[index]

    def mesh_of(self, index: int) -> solids.Mesh:
        return self.builder.geometries[self.instances[index].geometry_id]

    def shape_of(self, index: int) -> Shape | None:
        return self.builder.geometry_shapes[self.instances[index].geometry_id]

    # -- mutations ---------------------------------------------------------
    def set_appearance(self, path, color=None, transparency=None, mode=None, visible=None):
        """Update appearance cells for all shapes under path. Raises
        CapabilityError when the options forbid it, KeyError for bad paths."""
        if self.opts.optimization == 3:
            raise CapabilityError(
                "optimization level 3 discards identities; volumes cannot be "
                "individually manipulated")
        if self.opts.effective_interactivity < 1:
            raise CapabilityError(
                f"appearance edits need interactivity >= 1 "
                f"(effective: {self.opts.effective_interactivity})")
        if not self.opts.graphical:
            raise CapabilityError("scene built without graphical attributes")
        indices = self.instances_under(path)
        if not indices:
            raise KeyError(f"unknown path {'/'.join(path)}")
        for i in indices:
            app_id = self.instances[i].appearance_id
            if app_id is None:
                continue
            app = self.builder.appearances[app_id]
            if color is not None:
                app.color = (color[0], color[1], color[2],
                             color[3] if len(color) > 3 else app.color[3])
            if transparency is not None:
                app.transparency = float(transparency)
            if mode is not None:
                if mode not in ("solid", "wireframe", "vertexframe"):
                    raise ValueError(f"bad draw mode {mode!r}")
                app.mode = mode
            if visible is not None:
                app.visible = bool(visible)

    def set_transform(self, path, delta: np.ndarray):
        """Apply a world-frame calibration delta to every instance under path."""
        if self.opts.effective_interactivity < 2:
            reason = ("optimization level 3 discards identities"
                      if self.opts.optimization == 3 else
                      f"calibration needs effective interactivity 2 "
                      f"(effective: {self.opts.effective_interactivity}, "
                      f"optimization {self.opts.optimization} caps it at "
                      f"{INTERACTIVITY_CAP[self.opts.optimization]})")
            raise CapabilityError(reason)
        indices = self.instances_under(path)
        if not indices:
            raise KeyError(f"unknown path {'/'.join(path)}")
        delta = np.asarray(delta, dtype=float)
        for i in indices:
            inst = self.instances[i]
            inst.matrix = delta @ inst.matrix
            self._inverse[i] = np.linalg.inv(inst.matrix)
        self._refresh_bounds()

    def toggle_visibility(self, path, flag: bool):
        """Mark all shape nodes under path. Applies to shared definitions, so
        every reference of a shared group switches together."""
        if self.opts.optimization == 3:
            raise CapabilityError(
                "optimization level 3 discards identities; volumes cannot be "
                "individually manipulated")
        if self.opts.effective_interactivity < 1:
            raise CapabilityError(
                f"visibility toggles need interactivity >= 1 "
                f"(effective: {self.opts.effective_interactivity})")
        indices = self.instances_under(path)
        if not indices:
            raise KeyError(f"unknown path {'/'.join(path)}")
        for i in indices:
            self.instances[i].node.visible = bool(flag)

    # -- canonicalization ---------------------------------------------------
    def canonical_triangles(self, include_hidden: bool = True) -> list[tuple]:
        """Sorted world-space triangle multiset (rounded to 1e-6 mm), with
        each triangle rotated so its smallest vertex comes first. Orientation
        is preserved, so mirrored geometry stays distinct."""
        out = []
        for i, inst in enumerate(self.instances):
            if not include_hidden and not inst.visible:
                continue
            mesh = self.mesh_of(i)
            world = transform_points(inst.matrix, mesh.vertices)
            corners = np.round(world[mesh.triangles], 6)
            for tri in corners:
                verts = [tuple(v) for v in tri]
                k = min(range(3), key=lambda j: verts[j])
                out.append(tuple(verts[k:] + verts[:k]))
        out.sort()
        return out


def compile_scene(root, opts: BuildOptions) -> CompiledScene:
    builder = getattr(root, "builder", None)
    if builder is None:
        raise BuildError("root was not produced by build()")
    return CompiledScene(root, opts, builder)
