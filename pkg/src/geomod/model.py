"""Typed in-memory model of the detector-description XML dialect.

Conventions (fixed for the whole toolkit):
  * lengths in millimeters, angles in degrees, density in g/cm3
  * Box/Trd dimensions are FULL lengths; *zhalf* fields are half-lengths
  * rotations are Euler angles applied X-then-Y-then-Z (intrinsic)
  * vector-valued attributes use ';' separators, e.g. XYZ="5.5;a[5];t[2,3]"

Attribute values that are not plain numbers are kept verbatim as expression
strings ("v6" form); the expr module turns them into numbers.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from typing import Union

# A dimension is either a resolved number or an unexpanded expression string.
Param = Union[float, str]


class ModelError(Exception):
    """Structural problem that prevents building a document."""


class ParseError(ModelError):
    pass


class ValidationError(ModelError):
    pass


# ---------------------------------------------------------------------------
# shapes

@dataclass
class Box:
    x: Param
    y: Param
    z: Param


@dataclass
class Tube:
    rmin: Param
    rmax: Param
    zhalf: Param
    phi0: Param = 0.0
    dphi: Param = 360.0


@dataclass
class Cone:
    rmin1: Param
    rmax1: Param
    rmin2: Param
    rmax2: Param
    zhalf: Param
    phi0: Param = 0.0
    dphi: Param = 360.0


@dataclass
class Trd:
    x1: Param
    x2: Param
    y1: Param
    y2: Param
    zhalf: Param


@dataclass
class Polycone:
    phi0: Param
    dphi: Param
    zplanes: list[tuple[Param, Param, Param]] = field(default_factory=list)  # (z, rmin, rmax)


@dataclass
class SphereShell:
    rmin: Param
    rmax: Param
    theta0: Param = 0.0
    dtheta: Param = 180.0
    phi0: Param = 0.0
    dphi: Param = 360.0


@dataclass
class Helix:
    rho: Param      # coil radius
    pitch: Param    # advance per turn
    turns: Param
    rtube: Param


Shape = Union[Box, Tube, Cone, Trd, Polycone, SphereShell, Helix]

SHAPE_KINDS = {
    Box: "box", Tube: "tube", Cone: "cone", Trd: "trd",
    Polycone: "polycone", SphereShell: "sphere", Helix: "helix",
}


def shape_params(shape: Shape) -> list[Param]:
    """Flat parameter list in a canonical order (used for hashing/serializing)."""
    if isinstance(shape, Box):
        return [shape.x, shape.y, shape.z]
    if isinstance(shape, Tube):
        return [shape.rmin, shape.rmax, shape.zhalf, shape.phi0, shape.dphi]
    if isinstance(shape, Cone):
        return [shape.rmin1, shape.rmax1, shape.rmin2, shape.rmax2,
                shape.zhalf, shape.phi0, shape.dphi]
    if isinstance(shape, Trd):
        return [shape.x1, shape.x2, shape.y1, shape.y2, shape.zhalf]
    if isinstance(shape, Polycone):
        out: list[Param] = [shape.phi0, shape.dphi]
        for z, rmin, rmax in shape.zplanes:
            out.extend((z, rmin, rmax))
        return out
    if isinstance(shape, SphereShell):
        return [shape.rmin, shape.rmax, shape.theta0, shape.dtheta,
                shape.phi0, shape.dphi]
    if isinstance(shape, Helix):
        return [shape.rho, shape.pitch, shape.turns, shape.rtube]
    raise TypeError(f"not a shape: {shape!r}")


# ---------------------------------------------------------------------------
# document elements

@dataclass
class SolidDef:
    name: str
    shape: Shape
    material: str | None = None


@dataclass
class Single:
    volume: str
    translation: tuple[Param, Param, Param] = (0.0, 0.0, 0.0)
    rotation: tuple[Param, Param, Param] = (0.0, 0.0, 0.0)


@dataclass
class MultiPhi:
    volume: str
    ncopy: Param
    phi0: Param
    dphi: Param
    radius: Param


@dataclass
class MultiZ:
    volume: str
    ncopy: Param
    z0: Param
    dz: Param


Placement = Union[Single, MultiPhi, MultiZ]


@dataclass
class Composition:
    name: str
    placements: list[Placement] = field(default_factory=list)


@dataclass
class Material:
    name: str
    density: float
    color_hint: tuple[float, float, float] | None = None


@dataclass
class ParamRef:
    connection: str
    name: str


@dataclass
class VarDef:
    name: str
    value: Param | None = None
    connection: str | None = None   # unresolved external parameter if set


@dataclass
class ArrayDef:
    name: str
    values: list[Param] = field(default_factory=list)


@dataclass
class TableDef:
    name: str
    rows: list[list[Param]] = field(default_factory=list)


Definition = Union[VarDef, ArrayDef, TableDef]


@dataclass
class Diagnostic:
    severity: str           # "ERROR" | "WARNING"
    message: str
    source: str = "<doc>"
    line: int | None = None

    def render(self) -> str:
        where = self.source if self.line is None else f"{self.source}:{self.line}"
        return f"{self.severity} {where}: {self.message}"


@dataclass
class GenericDocument:
    version: str = "v4"
    materials: list[Material] = field(default_factory=list)
    solids: dict[str, SolidDef] = field(default_factory=dict)
    compositions: dict[str, Composition] = field(default_factory=dict)
    definitions: list[Definition] = field(default_factory=list)
    world: str | None = None

    @property
    def unresolved_params(self) -> list[ParamRef]:
        return [ParamRef(d.connection, d.name) for d in self.definitions
                if isinstance(d, VarDef) and d.connection is not None]


# ---------------------------------------------------------------------------
# parsing

def _param(text: str) -> Param:
    try:
        return float(text)
    except ValueError:
        return text.strip()


def _params(text: str) -> list[Param]:
    return [_param(t) for t in text.split(";") if t.strip() != ""]


def _attr(el: ET.Element, name: str, default: Param | None = None) -> Param:
    raw = el.get(name)
    if raw is None:
        if default is None:
            raise ParseError(f"<{el.tag}> missing attribute {name!r}")
        return default
    return _param(raw)


def _vec3(el: ET.Element, name: str, default=None) -> tuple[Param, Param, Param]:
    raw = el.get(name)
    if raw is None:
        if default is None:
            raise ParseError(f"<{el.tag}> missing attribute {name!r}")
        return default
    parts = _params(raw)
    if len(parts) != 3:
        raise ParseError(f"<{el.tag}> attribute {name!r} needs 3 components, got {len(parts)}")
    return (parts[0], parts[1], parts[2])


def _parse_box(el: ET.Element) -> Box:
    if el.get("XYZ") is not None:
        x, y, z = _vec3(el, "XYZ")
        return Box(x, y, z)
    return Box(_attr(el, "x"), _attr(el, "y"), _attr(el, "z"))


def _parse_solid(el: ET.Element) -> Shape:
    tag = el.tag
    if tag == "box":
        return _parse_box(el)
    if tag == "tube":
        return Tube(_attr(el, "rmin", 0.0), _attr(el, "rmax"), _attr(el, "zhalf"),
                    _attr(el, "phi0", 0.0), _attr(el, "dphi", 360.0))
    if tag == "cone":
        return Cone(_attr(el, "rmin1", 0.0), _attr(el, "rmax1"),
                    _attr(el, "rmin2", 0.0), _attr(el, "rmax2"),
                    _attr(el, "zhalf"), _attr(el, "phi0", 0.0), _attr(el, "dphi", 360.0))
    if tag == "trd":
        return Trd(_attr(el, "x1"), _attr(el, "x2"), _attr(el, "y1"),
                   _attr(el, "y2"), _attr(el, "zhalf"))
    if tag == "polycone":
        planes = []
        for zp in el:
            if zp.tag != "zplane":
                raise ParseError(f"<polycone> child must be <zplane>, got <{zp.tag}>")
            planes.append((_attr(zp, "z"), _attr(zp, "rmin", 0.0), _attr(zp, "rmax")))
        return Polycone(_attr(el, "phi0", 0.0), _attr(el, "dphi", 360.0), planes)
    if tag == "sphere":
        return SphereShell(_attr(el, "rmin", 0.0), _attr(el, "rmax"),
                           _attr(el, "theta0", 0.0), _attr(el, "dtheta", 180.0),
                           _attr(el, "phi0", 0.0), _attr(el, "dphi", 360.0))
    if tag == "helix":
        return Helix(_attr(el, "rho"), _attr(el, "pitch"),
                     _attr(el, "turns"), _attr(el, "rtube"))
    raise ParseError(f"unknown solid element <{tag}>")


_SOLID_TAGS = {"box", "tube", "cone", "trd", "polycone", "sphere", "helix"}


def _parse_placement(el: ET.Element) -> Placement:
    if el.tag == "posXYZ":
        return Single(str(el.get("volume")),
                      _vec3(el, "X_Y_Z", (0.0, 0.0, 0.0)),
                      _vec3(el, "rot", (0.0, 0.0, 0.0)))
    if el.tag == "mposPhi":
        return MultiPhi(str(el.get("volume")), _attr(el, "ncopy"),
                        _attr(el, "phi0", 0.0), _attr(el, "dphi"),
                        _attr(el, "R", 0.0))
    if el.tag == "mposZ":
        return MultiZ(str(el.get("volume")), _attr(el, "ncopy"),
                      _attr(el, "z0"), _attr(el, "dz"))
    raise ParseError(f"unknown placement element <{el.tag}>")


def parse_document(xml_text: str, source: str = "<doc>") -> tuple[GenericDocument, list[Diagnostic]]:
    """Parse detector XML into a GenericDocument.

    Unrecognized elements are warn-and-skip; structural problems
    (duplicate names, bad attributes) raise ParseError.
    Returns the document and the list of parse-time warnings.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"{source}:{line}:{col}: malformed XML: {exc.msg}") from exc

    doc = GenericDocument(version=str(root.get("version") or "v4"))
    if root.get("world"):
        doc.world = root.get("world")
    warnings: list[Diagnostic] = []
    defined_names: set[str] = set()

    def check_unique(name: str, what: str):
        if name in defined_names:
            raise ValidationError(f"duplicate name {name!r} ({what})")
        defined_names.add(name)

    def handle(el: ET.Element):
        tag = el.tag
        if tag == "materials":
            for m in el:
                handle(m)
        elif tag == "material":
            name = el.get("name")
            if not name:
                raise ParseError("<material> missing name")
            density = float(_attr(el, "density"))
            if density <= 0:
                raise ValidationError(f"material {name!r}: density must be > 0")
            color = None
            if el.get("color"):
                parts = [float(p) for p in str(el.get("color")).replace(";", " ").split()]
                if len(parts) != 3:
                    raise ParseError(f"material {name!r}: color needs 3 components")
                color = (parts[0], parts[1], parts[2])
            doc.materials.append(Material(name, density, color))
        elif tag in _SOLID_TAGS:
            name = el.get("name")
            if not name:
                warnings.append(Diagnostic("WARNING", f"<{tag}> without name skipped", source))
                return
            check_unique(name, "solid")
            doc.solids[name] = SolidDef(name, _parse_solid(el), el.get("material"))
        elif tag == "composition":
            name = el.get("name")
            if not name:
                raise ParseError("<composition> missing name")
            check_unique(name, "composition")
            comp = Composition(name)
            for child in el:
                comp.placements.append(_parse_placement(child))
            doc.compositions[name] = comp
        elif tag == "var":
            name = el.get("name")
            if not name:
                raise ParseError("<var> missing name")
            if el.get("connection") is not None:
                doc.definitions.append(VarDef(name, None, str(el.get("connection"))))
            else:
                doc.definitions.append(VarDef(name, _attr(el, "value")))
        elif tag == "array":
            name = el.get("name")
            if not name:
                raise ParseError("<array> missing name")
            doc.definitions.append(ArrayDef(name, _params(str(el.get("values") or ""))))
        elif tag == "table":
            name = el.get("name")
            if not name:
                raise ParseError("<table> missing name")
            rows = []
            for row in el:
                if row.tag != "row":
                    raise ParseError(f"<table> child must be <row>, got <{row.tag}>")
                rows.append(_params(str(row.get("values") or "")))
            doc.definitions.append(TableDef(name, rows))
        else:
            if el.get("name"):
                warnings.append(Diagnostic(
                    "WARNING", f"unknown element <{tag}> name={el.get('name')!r} skipped", source))
            else:
                warnings.append(Diagnostic("WARNING", f"unknown element <{tag}> skipped", source))

    for el in root:
        handle(el)

    if doc.world is None:
        doc.world = _infer_world(doc)
    if doc.world is None:
        warnings.append(Diagnostic("WARNING", "no world volume", source))
    return doc, warnings


def _infer_world(doc: GenericDocument) -> str | None:
    """World = the unique volume never referenced by a composition."""
    referenced = {p.volume for c in doc.compositions.values() for p in c.placements}
    candidates = [n for n in list(doc.compositions) + list(doc.solids) if n not in referenced]
    if doc.compositions:
        candidates = [n for n in candidates if n in doc.compositions]
    if len(candidates) == 1:
        return candidates[0]
    return None


# ---------------------------------------------------------------------------
# validation

def validate(doc: GenericDocument) -> list[Diagnostic]:
    """All dangling references, name collisions and composition cycles.

    Diagnostics are data; an empty list means the document is buildable.
    """
    diags: list[Diagnostic] = []
    overlap = set(doc.solids) & set(doc.compositions)
    for name in sorted(overlap):
        diags.append(Diagnostic("ERROR", f"name {name!r} used for both a solid and a composition"))

    names = set(doc.solids) | set(doc.compositions)
    for comp in doc.compositions.values():
        if not comp.placements:
            diags.append(Diagnostic("ERROR", f"composition {comp.name!r} has no placements"))
        for p in comp.placements:
            if p.volume not in names:
                diags.append(Diagnostic("ERROR", f"dangling reference {p.volume!r} in composition {comp.name!r}"))

    # composition cycle detection (DFS, three-color)
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {n: WHITE for n in doc.compositions}
    stack_path: list[str] = []

    def dfs(n: str) -> list[str] | None:
        color[n] = GRAY
        stack_path.append(n)
        for p in doc.compositions[n].placements:
            v = p.volume
            if v in doc.compositions:
                if color[v] == GRAY:
                    return stack_path[stack_path.index(v):] + [v]
                if color[v] == WHITE:
                    cyc = dfs(v)
                    if cyc:
                        return cyc
        stack_path.pop()
        color[n] = BLACK
        return None

    for n in doc.compositions:
        if color[n] == WHITE:
            cyc = dfs(n)
            if cyc:
                diags.append(Diagnostic("ERROR", "composition cycle: " + " -> ".join(cyc)))
                break

    if doc.world is None:
        diags.append(Diagnostic("WARNING", "no world volume"))
    elif doc.world not in names:
        diags.append(Diagnostic("ERROR", f"world volume {doc.world!r} undefined"))

    mat_names = set()
    for m in doc.materials:
        if m.name in mat_names:
            diags.append(Diagnostic("ERROR", f"duplicate material {m.name!r}"))
        mat_names.add(m.name)

    return diags


# ---------------------------------------------------------------------------
# placement expansion

def _require_number(v: Param, what: str) -> float:
    if isinstance(v, str):
        raise ValidationError(f"{what} is not numeric: {v!r} (expand formulas first)")
    return float(v)


def expand_placements(doc: GenericDocument) -> GenericDocument:
    """Replace every multiple placement by its explicit Single copies.

    MultiPhi copy i sits at angle phi0 + i*dphi on a circle of the given
    radius and is rotated about Z by the same angle; MultiZ copy i sits at
    z0 + i*dz.  Idempotent.
    """
    new_comps: dict[str, Composition] = {}
    for comp in doc.compositions.values():
        out: list[Placement] = []
        for p in comp.placements:
            if isinstance(p, Single):
                out.append(p)
            elif isinstance(p, MultiPhi):
                n = int(_require_number(p.ncopy, f"{comp.name}: ncopy"))
                if n < 1:
                    raise ValidationError(f"composition {comp.name!r}: ncopy must be >= 1")
                phi0 = _require_number(p.phi0, "phi0")
                dphi = _require_number(p.dphi, "dphi")
                r = _require_number(p.radius, "R")
                for i in range(n):
                    ang = phi0 + i * dphi
                    rad = math.radians(ang)
                    out.append(Single(p.volume,
                                      (r * math.cos(rad), r * math.sin(rad), 0.0),
                                      (0.0, 0.0, ang)))
            elif isinstance(p, MultiZ):
                n = int(_require_number(p.ncopy, f"{comp.name}: ncopy"))
                if n < 1:
                    raise ValidationError(f"composition {comp.name!r}: ncopy must be >= 1")
                z0 = _require_number(p.z0, "z0")
                dz = _require_number(p.dz, "dz")
                for i in range(n):
                    out.append(Single(p.volume, (0.0, 0.0, z0 + i * dz), (0.0, 0.0, 0.0)))
            else:
                raise TypeError(f"unknown placement {p!r}")
        new_comps[comp.name] = Composition(comp.name, out)
    return replace(doc, compositions=new_comps)


# ---------------------------------------------------------------------------
# serialization (writes the same dialect parse_document reads)

def _fmt(v: Param) -> str:
    if isinstance(v, str):
        return v
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return format(v, ".9g")


def serialize_document(doc: GenericDocument) -> str:
    """Write a document back to its XML form (inverse of parse_document)."""
    lines = [f'<detector version="{doc.version}"'
             + (f' world="{doc.world}"' if doc.world else "") + ">"]
    if doc.materials:
        lines.append("  <materials>")
        for m in doc.materials:
            color = "" if m.color_hint is None else \
                f' color="{_fmt(m.color_hint[0])} {_fmt(m.color_hint[1])} {_fmt(m.color_hint[2])}"'
            lines.append(f'    <material name="{m.name}" density="{_fmt(m.density)}"{color}/>')
        lines.append("  </materials>")
    for d in doc.definitions:
        if isinstance(d, VarDef):
            if d.connection is not None:
                lines.append(f'  <var connection="{d.connection}" name="{d.name}"/>')
            else:
                lines.append(f'  <var name="{d.name}" value="{_fmt(d.value)}"/>')
        elif isinstance(d, ArrayDef):
            lines.append(f'  <array name="{d.name}" values="{";".join(_fmt(v) for v in d.values)}"/>')
        elif isinstance(d, TableDef):
            lines.append(f'  <table name="{d.name}">')
            for row in d.rows:
                lines.append(f'    <row values="{";".join(_fmt(v) for v in row)}"/>')
            lines.append("  </table>")
    for s in doc.solids.values():
        kind = SHAPE_KINDS[type(s.shape)]
        mat = f' material="{s.material}"' if s.material else ""
        if isinstance(s.shape, Polycone):
            lines.append(f'  <polycone name="{s.name}" phi0="{_fmt(s.shape.phi0)}" '
                         f'dphi="{_fmt(s.shape.dphi)}"{mat}>')
            for z, rmin, rmax in s.shape.zplanes:
                lines.append(f'    <zplane z="{_fmt(z)}" rmin="{_fmt(rmin)}" rmax="{_fmt(rmax)}"/>')
            lines.append("  </polycone>")
        else:
            attrs = " ".join(f'{k}="{_fmt(v)}"' for k, v in _shape_attrs(s.shape))
            lines.append(f'  <{kind} name="{s.name}" {attrs}{mat}/>')
    for c in doc.compositions.values():
        lines.append(f'  <composition name="{c.name}">')
        for p in c.placements:
            if isinstance(p, Single):
                t = ";".join(_fmt(v) for v in p.translation)
                r = ";".join(_fmt(v) for v in p.rotation)
                lines.append(f'    <posXYZ volume="{p.volume}" X_Y_Z="{t}" rot="{r}"/>')
            elif isinstance(p, MultiPhi):
                lines.append(f'    <mposPhi volume="{p.volume}" ncopy="{_fmt(p.ncopy)}" '
                             f'phi0="{_fmt(p.phi0)}" dphi="{_fmt(p.dphi)}" R="{_fmt(p.radius)}"/>')
            elif isinstance(p, MultiZ):
                lines.append(f'    <mposZ volume="{p.volume}" ncopy="{_fmt(p.ncopy)}" '
                             f'z0="{_fmt(p.z0)}" dz="{_fmt(p.dz)}"/>')
        lines.append("  </composition>")
    lines.append("</detector>")
    return "\n".join(lines) + "\n"


def _shape_attrs(shape: Shape) -> list[tuple[str, Param]]:
    if isinstance(shape, Box):
        return [("x", shape.x), ("y", shape.y), ("z", shape.z)]
    if isinstance(shape, Tube):
        return [("rmin", shape.rmin), ("rmax", shape.rmax), ("zhalf", shape.zhalf),
                ("phi0", shape.phi0), ("dphi", shape.dphi)]
    if isinstance(shape, Cone):
        return [("rmin1", shape.rmin1), ("rmax1", shape.rmax1), ("rmin2", shape.rmin2),
                ("rmax2", shape.rmax2), ("zhalf", shape.zhalf),
                ("phi0", shape.phi0), ("dphi", shape.dphi)]
    if isinstance(shape, Trd):
        return [("x1", shape.x1), ("x2", shape.x2), ("y1", shape.y1),
                ("y2", shape.y2), ("zhalf", shape.zhalf)]
    if isinstance(shape, SphereShell):
        return [("rmin", shape.rmin), ("rmax", shape.rmax), ("theta0", shape.theta0),
                ("dtheta", shape.dtheta), ("phi0", shape.phi0), ("dphi", shape.dphi)]
    if isinstance(shape, Helix):
        return [("rho", shape.rho), ("pitch", shape.pitch),
                ("turns", shape.turns), ("rtube", shape.rtube)]
    raise TypeError(f"not a flat shape: {shape!r}")
