"""Event-side geometry: hits and truth tracks.

Tracks are helices in a solenoid field along z: radius r = pt/(0.3*|q|*Bz)
in meters (pt in GeV, Bz in Tesla; geometry in mm), turning direction
-charge*sign(Bz), advancing dz = 2*pi*r*sinh(eta) per turn.  The pt cut is
boundary-inclusive (pt >= cut survives).
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace

import numpy as np

from . import solids
from .model import ParseError, SphereShell
from .scenegraph import (BuildOptions, GroupNode, SceneBuilder, ShapeNode,
                         TransformNode)


class EventError(Exception):
    pass


@dataclass
class Hit:
    id: int
    position: tuple[float, float, float]
    energy: float           # GeV
    kine: int = 0


@dataclass
class TruthTrack:
    pt: float               # GeV
    phi0: float             # deg
    eta: float
    d0: float = 0.0         # mm
    z0: float = 0.0         # mm
    charge: int = 1
    pdg: int = 0


@dataclass
class EventDocument:
    run: int = 0
    event: int = 0
    hits: dict[str, list[Hit]] = field(default_factory=dict)
    tracks: list[TruthTrack] = field(default_factory=list)


@dataclass
class EventOptions:
    pt_cut: float = 0.0
    hit_style: str = "point"        # "point" | "sphere"
    hit_radius: float = 5.0         # mm, sphere representation
    color_mode: str = "by-collection"  # "by-collection" | "from-kine"
    palette: str = "DEFAULT"
    bz: float = 2.0                 # Tesla, solenoid field along z
    rmax: float = 1000.0            # mm, tracking extent cylinder
    zmax: float = 3000.0            # mm
    track_radius: float = 2.0      # mm, tube representation of tracks
    max_turns: float = 3.0

    def __post_init__(self):
        if self.pt_cut < 0:
            raise EventError("pt_cut must be >= 0")
        if self.hit_radius <= 0:
            raise EventError("hit radius must be > 0")


# ---------------------------------------------------------------------------
# parsing

def parse_event(xml_text: str) -> tuple[EventDocument, list[str]]:
    """Parse an event XML document; unknown collections warn-and-skip.

    Expected shape::

        <event run="1" event="42">
          <hits name="SCT">
            <hit id="1" pos="x;y;z" e="0.2" kine="3"/>
          </hits>
          <tracks>
            <track pt="5.0" phi0="30" eta="0.5" d0="0" z0="0" charge="1" pdg="13"/>
          </tracks>
        </event>
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed event XML: {exc}") from exc
    ev = EventDocument(run=int(root.get("run", 0)), event=int(root.get("event", 0)))
    warnings: list[str] = []
    for el in root:
        if el.tag == "hits":
            name = el.get("name", "hits")
            coll = ev.hits.setdefault(name, [])
            for h in el:
                if h.tag != "hit":
                    warnings.append(f"unknown element <{h.tag}> in collection {name!r} skipped")
                    continue
                pos = [float(v) for v in str(h.get("pos", "0;0;0")).split(";")]
                if len(pos) != 3:
                    raise EventError(f"hit in {name!r}: pos needs 3 components")
                coll.append(Hit(int(h.get("id", 0)), (pos[0], pos[1], pos[2]),
                                float(h.get("e", 0.0)), int(h.get("kine", 0))))
        elif el.tag == "tracks":
            for t in el:
                if t.tag != "track":
                    warnings.append(f"unknown element <{t.tag}> in tracks skipped")
                    continue
                pt = float(t.get("pt", 0))
                if pt <= 0:
                    raise EventError(f"track: pt must be > 0, got {pt}")
                charge = int(t.get("charge", 1))
                if abs(charge) != 1:
                    raise EventError(f"track: |charge| must be 1, got {charge}")
                ev.tracks.append(TruthTrack(pt, float(t.get("phi0", 0)),
                                            float(t.get("eta", 0)),
                                            float(t.get("d0", 0)), float(t.get("z0", 0)),
                                            charge, int(t.get("pdg", 0))))
        else:
            warnings.append(f"unknown collection <{el.tag}> skipped")
    return ev, warnings


def filter_tracks(ev: EventDocument, pt_cut: float) -> EventDocument:
    """Keep tracks with pt >= pt_cut; hits untouched. Idempotent & monotone."""
    if pt_cut < 0:
        raise EventError("pt_cut must be >= 0")
    return replace(ev, tracks=[t for t in ev.tracks if t.pt >= pt_cut])


# ---------------------------------------------------------------------------
# helix sampling

def helix_radius_mm(pt: float, charge: int, bz: float) -> float:
    """Transverse radius in mm from pt = 0.3 * B * r (GeV, Tesla, meters)."""
    if bz == 0:
        raise EventError("Bz = 0: charged tracks have no helix radius "
                         "(straight-line fallback is not provided)")
    return pt / (0.3 * abs(charge) * abs(bz)) * 1000.0


def helix_center(track: TruthTrack, opts: EventOptions) -> tuple[float, float, float]:
    """(cx, cy, r) of the transverse circle."""
    r = helix_radius_mm(track.pt, track.charge, opts.bz)
    sigma = -track.charge * (1 if opts.bz > 0 else -1)
    phi = math.radians(track.phi0)
    px = -track.d0 * math.sin(phi)
    py = track.d0 * math.cos(phi)
    cx = px + sigma * r * (-math.sin(phi))
    cy = py + sigma * r * math.cos(phi)
    return cx, cy, r


def track_to_polyline(track: TruthTrack, opts: EventOptions,
                      quality: int = 3) -> np.ndarray:
    """Sample the track's helix until it leaves the extent cylinder.

    At least nseg(quality) samples per turn; the final sample is interpolated
    onto the extent boundary.  eta=0 closes a flat circle after one turn.
    """
    if opts.bz == 0:
        raise EventError("Bz = 0: refusing straight-line fallback for a charged track")
    cx, cy, r = helix_center(track, opts)
    sigma = -track.charge * (1 if opts.bz > 0 else -1)
    phi = math.radians(track.phi0)
    px = -track.d0 * math.sin(phi)
    py = track.d0 * math.cos(phi)
    beta0 = math.atan2(py - cy, px - cx)
    dz_per_turn = 2 * math.pi * r * math.sinh(track.eta)

    n = solids.nseg(quality)
    step = 2 * math.pi / n
    max_alpha = 2 * math.pi * (1.0 if track.eta == 0 else opts.max_turns)

    points = []
    alpha = 0.0
    prev = None
    while alpha <= max_alpha + 1e-12:
        x = cx + r * math.cos(beta0 + sigma * alpha)
        y = cy + r * math.sin(beta0 + sigma * alpha)
        z = track.z0 + dz_per_turn * alpha / (2 * math.pi)
        p = np.array([x, y, z])
        inside = math.hypot(x, y) <= opts.rmax and abs(z) <= opts.zmax
        if not inside:
            if prev is not None:
                points.append(_clip_to_extent(prev, p, opts))
            break
        points.append(p)
        prev = p
        alpha += step
    if len(points) < 2:
        # track starts outside or immediately leaves; keep a degenerate stub
        points = [np.array([px, py, track.z0]), np.array([px, py, track.z0])]
    return np.stack(points)


def _clip_to_extent(inside: np.ndarray, outside: np.ndarray,
                    opts: EventOptions) -> np.ndarray:
    """Bisect the segment onto the extent cylinder boundary."""
    a, b = inside, outside
    for _ in range(60):
        m = (a + b) / 2
        if math.hypot(m[0], m[1]) <= opts.rmax and abs(m[2]) <= opts.zmax:
            a = m
        else:
            b = m
    return (a + b) / 2


# ---------------------------------------------------------------------------
# scene generation

def _octahedron(radius: float) -> solids.Mesh:
    """Tiny marker for point-style hits."""
    r = radius
    v = np.array([[r, 0, 0], [-r, 0, 0], [0, r, 0], [0, -r, 0], [0, 0, r], [0, 0, -r]],
                 dtype=float)
    t = np.array([[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
                  [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]])
    return solids.Mesh(v, t, solids._vertex_normals(v, t))


def build_event_scene(ev: EventDocument, opts: EventOptions,
                      build_opts: BuildOptions,
                      builder: SceneBuilder | None = None) -> GroupNode:
    """Hits become point markers or spheres, tracks become thin helix tubes."""
    if builder is None:
        builder = SceneBuilder(build_opts)
    ev = filter_tracks(ev, opts.pt_cut)
    root = GroupNode(f"event.{ev.run}.{ev.event}")

    def color_for(collection_index: int, kine: int) -> tuple[float, float, float]:
        if opts.color_mode == "from-kine":
            return builder.palette_color(kine)
        return builder.palette_color(collection_index)

    for ci, (name, hits) in enumerate(sorted(ev.hits.items())):
        group = GroupNode(name)
        if opts.hit_style == "sphere":
            shape = SphereShell(0.0, opts.hit_radius)
            gid = builder.add_geometry(shape)
        else:
            gid = builder.add_raw_geometry(_octahedron(1.0), None)
        app_cache: dict[tuple, int | None] = {}
        for hi, h in enumerate(hits):
            color = color_for(ci, h.kine)
            if color not in app_cache:
                app_cache[color] = builder.add_appearance(color)
            m = np.eye(4)
            m[:3, 3] = h.position
            group.children.append(TransformNode(
                m, ShapeNode(gid, app_cache[color], f"hit.{h.id}" if h.id else f"hit.{hi}")))
        root.children.append(group)

    if ev.tracks:
        tgroup = GroupNode("tracks")
        for ti, t in enumerate(ev.tracks):
            poly = track_to_polyline(t, opts, build_opts.quality)
            if len(poly) < 2 or float(np.linalg.norm(poly[-1] - poly[0])) == 0.0:
                continue
            mesh = solids.sweep_tube(poly, opts.track_radius, max(6, solids.nseg(0) // 2))
            gid = builder.add_raw_geometry(mesh, None)
            color = builder.palette_color(abs(t.pdg)) if opts.color_mode == "from-kine" \
                else builder.palette_color(ti)
            app = builder.add_appearance(color, mode="wireframe"
                                         if opts.hit_style == "point" else "solid")
            tgroup.children.append(TransformNode(np.eye(4),
                                                 ShapeNode(gid, app, f"track.{ti}")))
        root.children.append(tgroup)

    root.builder = builder
    return root
