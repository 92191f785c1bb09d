"""Analytic and tessellated representations of the CSG solid vocabulary.

Tessellation places polygon vertices ON the analytic curved surface
(inscribed polygons), so triangle meshes underestimate curved volumes and
converge to the analytic volume from below as the quality level rises.
Quality q in 0..9 maps to nseg(q) = 12 + 6*q segments per full circle.

All meshes are watertight, consistently outward-oriented and free of
degenerate triangles; containment tests are boundary-inclusive within
an absolute tolerance of 1e-9 mm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .model import (Box, Cone, Helix, Polycone, Shape, SphereShell, Trd, Tube)

TOL = 1e-9  # boundary tolerance, mm


class SolidError(Exception):
    pass


def nseg(q: int) -> int:
    """Circle-segment count for quality level q (0..9)."""
    if not 0 <= q <= 9:
        raise SolidError(f"quality level must be in 0..9, got {q}")
    return 12 + 6 * q


# ---------------------------------------------------------------------------
# mesh

@dataclass
class Mesh:
    vertices: np.ndarray   # (N, 3) float64
    triangles: np.ndarray  # (M, 3) int
    normals: np.ndarray    # (N, 3) unit vectors

    @property
    def nvertices(self) -> int:
        return len(self.vertices)

    @property
    def ntriangles(self) -> int:
        return len(self.triangles)

    def triangle_corners(self) -> np.ndarray:
        """(M, 3, 3) world coordinates of triangle corners."""
        return self.vertices[self.triangles]


def mesh_volume(m: Mesh) -> float:
    """Signed volume by the divergence theorem: (1/6) sum det(v0, v1, v2).

    Requires a watertight mesh; positive for outward orientation.
    """
    problems = check_mesh(m, require_positive_volume=False)
    if problems:
        raise SolidError("mesh is not watertight: " + problems[0])
    corners = m.triangle_corners()
    return float(np.einsum("ij,ij->i", corners[:, 0],
                           np.cross(corners[:, 1], corners[:, 2])).sum() / 6.0)


def check_mesh(m: Mesh, require_positive_volume: bool = True) -> list[str]:
    """Watertightness / orientation / degeneracy report (empty = good)."""
    problems = []
    tris = m.triangles
    if len(tris) == 0:
        return ["empty mesh"]
    corners = m.triangle_corners()
    areas = 0.5 * np.linalg.norm(
        np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]), axis=1)
    scale = max(1.0, float(np.abs(m.vertices).max()))
    if (areas < 1e-12 * scale * scale).any():
        problems.append("degenerate (zero-area) triangle present")

    edges: dict[tuple[int, int], int] = {}
    for tri in tris:
        for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
            key = (int(a), int(b))
            edges[key] = edges.get(key, 0) + 1
    for (a, b), n in edges.items():
        if n != 1:
            problems.append(f"directed edge ({a},{b}) used {n} times")
            break
    else:
        for (a, b) in edges:
            if (b, a) not in edges:
                problems.append(f"edge ({a},{b}) has no opposite-orientation twin")
                break
    if require_positive_volume and not problems:
        vol = float(np.einsum("ij,ij->i", corners[:, 0],
                              np.cross(corners[:, 1], corners[:, 2])).sum() / 6.0)
        if vol <= 0:
            problems.append(f"non-positive signed volume {vol}")
    return problems


class _MeshBuilder:
    """Accumulates triangle soup, then welds coincident vertices.

    Welding keys coordinates rounded to 1e-9 mm so that seams generated
    from identical angle values fuse exactly; degenerate triangles
    (collapsed quad corners, axis points) are dropped.
    """

    def __init__(self):
        self._tris: list[np.ndarray] = []

    def add_tri(self, a, b, c):
        self._tris.append(np.array([a, b, c], dtype=float))

    def add_quad(self, a, b, c, d):
        self.add_tri(a, b, c)
        self.add_tri(a, c, d)

    def finish(self) -> Mesh:
        if not self._tris:
            raise SolidError("no triangles generated")
        soup = np.stack(self._tris)              # (M, 3, 3)
        flat = soup.reshape(-1, 3)
        key = np.round(flat, 9)
        _, first, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
        vertices = flat[first]
        triangles = inverse.reshape(-1, 3)
        # drop degenerate triangles (repeated indices or zero area)
        keep = ((triangles[:, 0] != triangles[:, 1])
                & (triangles[:, 1] != triangles[:, 2])
                & (triangles[:, 2] != triangles[:, 0]))
        triangles = triangles[keep]
        corners = vertices[triangles]
        cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        areas = 0.5 * np.linalg.norm(cross, axis=1)
        scale = max(1.0, float(np.abs(vertices).max()))
        triangles = triangles[areas >= 1e-12 * scale * scale]
        # drop vertices that lost all their triangles
        used = np.zeros(len(vertices), dtype=bool)
        used[triangles.ravel()] = True
        remap = np.cumsum(used) - 1
        vertices = vertices[used]
        triangles = remap[triangles]
        normals = _vertex_normals(vertices, triangles)
        return Mesh(vertices, triangles, normals)


def _vertex_normals(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    corners = vertices[triangles]
    face_n = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    normals = np.zeros_like(vertices)
    for k in range(3):
        np.add.at(normals, triangles[:, k], face_n)
    lens = np.linalg.norm(normals, axis=1, keepdims=True)
    lens[lens == 0] = 1.0
    return normals / lens


# ---------------------------------------------------------------------------
# shape invariants

def check_shape(s: Shape):
    def positive(v, what):
        if not v > 0:
            raise SolidError(f"{type(s).__name__}: {what} must be > 0, got {v}")

    def require(cond, what):
        if not cond:
            raise SolidError(f"{type(s).__name__}: {what}")

    if isinstance(s, Box):
        positive(s.x, "x"); positive(s.y, "y"); positive(s.z, "z")
    elif isinstance(s, Tube):
        positive(s.zhalf, "zhalf"); positive(s.rmax, "rmax")
        require(0 <= s.rmin <= s.rmax, "0 <= rmin <= rmax")
        require(0 < s.dphi <= 360, "dphi in (0, 360]")
    elif isinstance(s, Cone):
        positive(s.zhalf, "zhalf")
        require(0 <= s.rmin1 <= s.rmax1, "0 <= rmin1 <= rmax1")
        require(0 <= s.rmin2 <= s.rmax2, "0 <= rmin2 <= rmax2")
        require(s.rmax1 > 0 or s.rmax2 > 0, "rmax1 or rmax2 > 0")
        require(0 < s.dphi <= 360, "dphi in (0, 360]")
    elif isinstance(s, Trd):
        positive(s.zhalf, "zhalf")
        for f in ("x1", "x2", "y1", "y2"):
            positive(getattr(s, f), f)
    elif isinstance(s, Polycone):
        require(len(s.zplanes) >= 2, "at least two z planes")
        zs = [z for z, _, _ in s.zplanes]
        require(all(a < b for a, b in zip(zs, zs[1:])), "zplanes strictly increasing in z")
        for z, rmin, rmax in s.zplanes:
            require(0 <= rmin <= rmax, f"0 <= rmin <= rmax at z={z}")
        require(max(rmax for _, _, rmax in s.zplanes) > 0, "some rmax > 0")
        require(0 < s.dphi <= 360, "dphi in (0, 360]")
    elif isinstance(s, SphereShell):
        positive(s.rmax, "rmax")
        require(0 <= s.rmin <= s.rmax, "0 <= rmin <= rmax")
        require(0 <= s.theta0 < 180, "theta0 in [0, 180)")
        require(0 < s.dtheta and s.theta0 + s.dtheta <= 180, "theta0 + dtheta <= 180")
        require(0 < s.dphi <= 360, "dphi in (0, 360]")
    elif isinstance(s, Helix):
        positive(s.rho, "rho"); positive(s.pitch, "pitch")
        positive(s.turns, "turns"); positive(s.rtube, "rtube")
        require(s.rtube < s.rho, "rtube < rho (tube must not self-intersect the axis)")
    else:
        raise SolidError(f"unknown shape {s!r}")


# ---------------------------------------------------------------------------
# tessellation

def tessellate(s: Shape, q: int) -> Mesh:
    check_shape(s)
    n = nseg(q)
    if isinstance(s, Box):
        return _tess_hexahedron(_box_corners(s))
    if isinstance(s, Trd):
        return _tess_hexahedron(_trd_corners(s))
    if isinstance(s, (Tube, Cone, Polycone)):
        return _tess_revolved(_profile_planes(s), _phi_range(s), n)
    if isinstance(s, SphereShell):
        return _tess_sphere(s, n)
    if isinstance(s, Helix):
        centers = _helix_centers(s, n)
        return sweep_tube(centers, s.rtube, n)
    raise SolidError(f"unknown shape {s!r}")


def _box_corners(s: Box) -> np.ndarray:
    hx, hy, hz = s.x / 2, s.y / 2, s.z / 2
    return np.array([[sx * hx, sy * hy, sz * hz]
                     for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)], dtype=float)


def _trd_corners(s: Trd) -> np.ndarray:
    out = []
    for sz, hx, hy in ((-1, s.x1 / 2, s.y1 / 2), (1, s.x2 / 2, s.y2 / 2)):
        for sy in (-1, 1):
            for sx in (-1, 1):
                out.append([sx * hx, sy * hy, sz * s.zhalf])
    return np.array(out, dtype=float)


def _tess_hexahedron(c: np.ndarray) -> Mesh:
    # corner order: (z-,y-,x-),(z-,y-,x+),(z-,y+,x-),(z-,y+,x+), then z+
    b = _MeshBuilder()
    b.add_quad(c[0], c[2], c[3], c[1])  # bottom, -z
    b.add_quad(c[4], c[5], c[7], c[6])  # top, +z
    b.add_quad(c[0], c[1], c[5], c[4])  # -y
    b.add_quad(c[2], c[6], c[7], c[3])  # +y
    b.add_quad(c[0], c[4], c[6], c[2])  # -x
    b.add_quad(c[1], c[3], c[7], c[5])  # +x
    return b.finish()


def _phi_range(s) -> tuple[float, float, bool]:
    phi0 = math.radians(float(s.phi0))
    dphi = math.radians(float(s.dphi))
    return phi0, dphi, float(s.dphi) >= 360.0 - 1e-12


def _profile_planes(s: Shape) -> list[tuple[float, float, float]]:
    """(z, rmin, rmax) planes bottom to top for solids of revolution."""
    if isinstance(s, Tube):
        return [(-s.zhalf, s.rmin, s.rmax), (s.zhalf, s.rmin, s.rmax)]
    if isinstance(s, Cone):
        return [(-s.zhalf, s.rmin1, s.rmax1), (s.zhalf, s.rmin2, s.rmax2)]
    if isinstance(s, Polycone):
        return [(z, rmin, rmax) for z, rmin, rmax in s.zplanes]
    raise SolidError(f"not a solid of revolution: {s!r}")


def _tess_revolved(planes, phi_range, n: int) -> Mesh:
    phi0, dphi, full = phi_range
    nphi = max(3, int(round(n * dphi / (2 * math.pi)))) if not full else n
    b = _MeshBuilder()

    def pt(r, j, z):
        jj = j % nphi if full else j
        phi = phi0 + dphi * jj / nphi
        return (r * math.cos(phi), r * math.sin(phi), z)

    has_inner = any(rmin > 0 for _, rmin, _ in planes)
    for (z0, rmin0, rmax0), (z1, rmin1, rmax1) in zip(planes, planes[1:]):
        for j in range(nphi):
            # outer wall, normal +r
            b.add_quad(pt(rmax0, j, z0), pt(rmax0, j + 1, z0),
                       pt(rmax1, j + 1, z1), pt(rmax1, j, z1))
            if has_inner:
                # inner wall, normal -r
                b.add_quad(pt(rmin0, j, z0), pt(rmin1, j, z1),
                           pt(rmin1, j + 1, z1), pt(rmin0, j + 1, z0))
    zb, rminb, rmaxb = planes[0]
    zt, rmint, rmaxt = planes[-1]
    for j in range(nphi):
        # bottom cap, normal -z
        b.add_quad(pt(rminb, j, zb), pt(rminb, j + 1, zb),
                   pt(rmaxb, j + 1, zb), pt(rmaxb, j, zb))
        # top cap, normal +z
        b.add_quad(pt(rmint, j, zt), pt(rmaxt, j, zt),
                   pt(rmaxt, j + 1, zt), pt(rmint, j + 1, zt))
    if not full:
        for (z0, rmin0, rmax0), (z1, rmin1, rmax1) in zip(planes, planes[1:]):
            # start face at phi0, normal opposes increasing phi
            b.add_quad(pt(rmin0, 0, z0), pt(rmax0, 0, z0),
                       pt(rmax1, 0, z1), pt(rmin1, 0, z1))
            # end face at phi0+dphi
            b.add_quad(pt(rmin0, nphi, z0), pt(rmin1, nphi, z1),
                       pt(rmax1, nphi, z1), pt(rmax0, nphi, z0))
    return b.finish()


def _tess_sphere(s: SphereShell, n: int) -> Mesh:
    th0 = math.radians(s.theta0)
    dth = math.radians(s.dtheta)
    phi0 = math.radians(s.phi0)
    dphi = math.radians(s.dphi)
    full = s.dphi >= 360.0 - 1e-12
    nphi = n if full else max(3, int(round(n * dphi / (2 * math.pi))))
    nth = max(2, int(round(n * dth / (2 * math.pi))))
    b = _MeshBuilder()

    def pt(r, i, j):
        jj = j % nphi if full else j
        th = th0 + dth * i / nth
        ph = phi0 + dphi * jj / nphi
        return (r * math.sin(th) * math.cos(ph),
                r * math.sin(th) * math.sin(ph),
                r * math.cos(th))

    for i in range(nth):
        for j in range(nphi):
            # outer surface, normal +r
            b.add_quad(pt(s.rmax, i, j), pt(s.rmax, i + 1, j),
                       pt(s.rmax, i + 1, j + 1), pt(s.rmax, i, j + 1))
            if s.rmin > 0:
                b.add_quad(pt(s.rmin, i, j), pt(s.rmin, i, j + 1),
                           pt(s.rmin, i + 1, j + 1), pt(s.rmin, i + 1, j))
    # theta caps (degenerate at poles; welding drops collapsed quads)
    for j in range(nphi):
        b.add_quad(pt(s.rmin, 0, j), pt(s.rmax, 0, j),
                   pt(s.rmax, 0, j + 1), pt(s.rmin, 0, j + 1))
        b.add_quad(pt(s.rmin, nth, j), pt(s.rmin, nth, j + 1),
                   pt(s.rmax, nth, j + 1), pt(s.rmax, nth, j))
    if not full:
        for i in range(nth):
            # start face at phi0, normal opposes increasing phi
            b.add_quad(pt(s.rmin, i, 0), pt(s.rmin, i + 1, 0),
                       pt(s.rmax, i + 1, 0), pt(s.rmax, i, 0))
            b.add_quad(pt(s.rmin, i, nphi), pt(s.rmax, i, nphi),
                       pt(s.rmax, i + 1, nphi), pt(s.rmin, i + 1, nphi))
    return b.finish()


def _helix_centers(s: Helix, n: int) -> np.ndarray:
    nsamp = max(2, int(math.ceil(n * s.turns))) + 1
    t = np.linspace(0.0, 2 * math.pi * s.turns, nsamp)
    return np.stack([s.rho * np.cos(t), s.rho * np.sin(t),
                     s.pitch * t / (2 * math.pi)], axis=1)


def sweep_tube(centers: np.ndarray, rtube: float, nsec: int) -> Mesh:
    """Closed tube swept along a polyline using parallel-transport frames."""
    centers = np.asarray(centers, dtype=float)
    if len(centers) < 2:
        raise SolidError("sweep needs at least 2 path points")
    tangents = np.zeros_like(centers)
    seg = centers[1:] - centers[:-1]
    seg = seg / np.linalg.norm(seg, axis=1, keepdims=True)
    tangents[0] = seg[0]
    tangents[-1] = seg[-1]
    if len(centers) > 2:
        mid = seg[:-1] + seg[1:]
        tangents[1:-1] = mid / np.linalg.norm(mid, axis=1, keepdims=True)

    # parallel transport an initial normal along the path
    t0 = tangents[0]
    ref = np.array([0.0, 0.0, 1.0]) if abs(t0[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    n0 = np.cross(t0, ref)
    n0 /= np.linalg.norm(n0)
    normals = [n0]
    for i in range(1, len(centers)):
        prev_t, cur_t = tangents[i - 1], tangents[i]
        axis = np.cross(prev_t, cur_t)
        sin_a = np.linalg.norm(axis)
        cos_a = float(np.clip(np.dot(prev_t, cur_t), -1.0, 1.0))
        nrm = normals[-1]
        if sin_a > 1e-12:
            axis = axis / sin_a
            nrm = (nrm * cos_a + np.cross(axis, nrm) * sin_a
                   + axis * np.dot(axis, nrm) * (1 - cos_a))
        nrm = nrm - np.dot(nrm, cur_t) * cur_t
        nrm /= np.linalg.norm(nrm)
        normals.append(nrm)

    b = _MeshBuilder()
    alphas = 2 * math.pi * np.arange(nsec) / nsec
    rings = []
    for c, t, nrm in zip(centers, tangents, normals):
        bino = np.cross(t, nrm)
        ring = c + rtube * (np.outer(np.cos(alphas), nrm) + np.outer(np.sin(alphas), bino))
        rings.append(ring)
    for r0, r1 in zip(rings, rings[1:]):
        for k in range(nsec):
            k1 = (k + 1) % nsec
            b.add_quad(r0[k], r0[k1], r1[k1], r1[k])
    for k in range(nsec):
        k1 = (k + 1) % nsec
        b.add_tri(centers[0], rings[0][k1], rings[0][k])    # start cap, normal -t
        b.add_tri(centers[-1], rings[-1][k], rings[-1][k1])  # end cap, normal +t
    return b.finish()


# ---------------------------------------------------------------------------
# containment (vectorized; scalar contains() wraps contains_many)

def _phi_ok(x: np.ndarray, y: np.ndarray, phi0: float, dphi: float) -> np.ndarray:
    if dphi >= 360.0 - 1e-12:
        return np.ones(len(x), dtype=bool)
    r = np.hypot(x, y)
    ang_tol = np.degrees(TOL / np.maximum(r, TOL))
    rel = (np.degrees(np.arctan2(y, x)) - phi0) % 360.0
    # within [0, dphi] up to the angular tolerance (wrap at 360)
    return (rel <= dphi + ang_tol) | (rel >= 360.0 - ang_tol)


def contains_many(s: Shape, pts: np.ndarray) -> np.ndarray:
    """Boundary-inclusive membership test for an (N, 3) point array."""
    pts = np.asarray(pts, dtype=float)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    if isinstance(s, Box):
        return ((np.abs(x) <= s.x / 2 + TOL) & (np.abs(y) <= s.y / 2 + TOL)
                & (np.abs(z) <= s.z / 2 + TOL))
    if isinstance(s, Tube):
        r = np.hypot(x, y)
        return ((np.abs(z) <= s.zhalf + TOL) & (r >= s.rmin - TOL)
                & (r <= s.rmax + TOL) & _phi_ok(x, y, s.phi0, s.dphi))
    if isinstance(s, Cone):
        r = np.hypot(x, y)
        frac = np.clip((z + s.zhalf) / (2 * s.zhalf), 0.0, 1.0)
        rmin = s.rmin1 + (s.rmin2 - s.rmin1) * frac
        rmax = s.rmax1 + (s.rmax2 - s.rmax1) * frac
        return ((np.abs(z) <= s.zhalf + TOL) & (r >= rmin - TOL)
                & (r <= rmax + TOL) & _phi_ok(x, y, s.phi0, s.dphi))
    if isinstance(s, Trd):
        frac = np.clip((z + s.zhalf) / (2 * s.zhalf), 0.0, 1.0)
        hx = (s.x1 + (s.x2 - s.x1) * frac) / 2
        hy = (s.y1 + (s.y2 - s.y1) * frac) / 2
        return ((np.abs(z) <= s.zhalf + TOL) & (np.abs(x) <= hx + TOL)
                & (np.abs(y) <= hy + TOL))
    if isinstance(s, Polycone):
        r = np.hypot(x, y)
        ok = np.zeros(len(pts), dtype=bool)
        for (z0, rmin0, rmax0), (z1, rmin1, rmax1) in zip(s.zplanes, s.zplanes[1:]):
            in_slab = (z >= z0 - TOL) & (z <= z1 + TOL)
            frac = np.clip((z - z0) / (z1 - z0), 0.0, 1.0)
            rmin = rmin0 + (rmin1 - rmin0) * frac
            rmax = rmax0 + (rmax1 - rmax0) * frac
            ok |= in_slab & (r >= rmin - TOL) & (r <= rmax + TOL)
        return ok & _phi_ok(x, y, s.phi0, s.dphi)
    if isinstance(s, SphereShell):
        r = np.linalg.norm(pts, axis=1)
        ok = (r >= s.rmin - TOL) & (r <= s.rmax + TOL)
        theta = np.degrees(np.arccos(np.clip(z / np.maximum(r, TOL), -1.0, 1.0)))
        ang_tol = np.degrees(TOL / np.maximum(r, TOL))
        ok &= (theta >= s.theta0 - ang_tol) & (theta <= s.theta0 + s.dtheta + ang_tol)
        return ok & _phi_ok(x, y, s.phi0, s.dphi)
    if isinstance(s, Helix):
        return _helix_distance(s, pts) <= s.rtube + TOL
    raise SolidError(f"unknown shape {s!r}")


def contains(s: Shape, p) -> bool:
    """Analytic point membership in the solid's local frame."""
    return bool(contains_many(s, np.asarray(p, dtype=float).reshape(1, 3))[0])


def _helix_distance(s: Helix, pts: np.ndarray) -> np.ndarray:
    """Minimum distance from each point to the helix center curve."""
    t_end = 2 * math.pi * s.turns
    grid = np.linspace(0.0, t_end, max(64, int(96 * s.turns)) + 1)
    cx = s.rho * np.cos(grid)
    cy = s.rho * np.sin(grid)
    cz = s.pitch * grid / (2 * math.pi)
    d2 = ((pts[:, 0, None] - cx) ** 2 + (pts[:, 1, None] - cy) ** 2
          + (pts[:, 2, None] - cz) ** 2)
    best = np.argmin(d2, axis=1)
    out = np.empty(len(pts))
    step = grid[1] - grid[0]
    for i, k in enumerate(best):
        lo = max(0.0, grid[k] - step)
        hi = min(t_end, grid[k] + step)
        p = pts[i]

        def f(t):
            return ((p[0] - s.rho * math.cos(t)) ** 2
                    + (p[1] - s.rho * math.sin(t)) ** 2
                    + (p[2] - s.pitch * t / (2 * math.pi)) ** 2)

        res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        out[i] = math.sqrt(min(res.fun, d2[i, k]))
    return out


# ---------------------------------------------------------------------------
# analytic volume

def analytic_volume(s: Shape) -> float:
    check_shape(s)
    if isinstance(s, Box):
        return s.x * s.y * s.z
    if isinstance(s, Tube):
        return (s.dphi / 360.0) * math.pi * (s.rmax ** 2 - s.rmin ** 2) * 2 * s.zhalf
    if isinstance(s, Cone):
        return _frustum_shell(2 * s.zhalf, s.rmin1, s.rmax1, s.rmin2, s.rmax2, s.dphi)
    if isinstance(s, Trd):
        h = 2 * s.zhalf
        return h * (s.x1 * s.y1 / 3 + s.x2 * s.y2 / 3 + (s.x1 * s.y2 + s.x2 * s.y1) / 6)
    if isinstance(s, Polycone):
        total = 0.0
        for (z0, rmin0, rmax0), (z1, rmin1, rmax1) in zip(s.zplanes, s.zplanes[1:]):
            total += _frustum_shell(z1 - z0, rmin0, rmax0, rmin1, rmax1, s.dphi)
        return total
    if isinstance(s, SphereShell):
        dphi_rad = math.radians(s.dphi)
        c0 = math.cos(math.radians(s.theta0))
        c1 = math.cos(math.radians(s.theta0 + s.dtheta))
        return dphi_rad * (c0 - c1) * (s.rmax ** 3 - s.rmin ** 3) / 3.0
    if isinstance(s, Helix):
        arc = s.turns * math.sqrt((2 * math.pi * s.rho) ** 2 + s.pitch ** 2)
        return math.pi * s.rtube ** 2 * arc
    raise SolidError(f"unknown shape {s!r}")


def _frustum_shell(h: float, rmin1: float, rmax1: float,
                   rmin2: float, rmax2: float, dphi: float) -> float:
    def frustum(r1, r2):
        return math.pi * h / 3.0 * (r1 * r1 + r1 * r2 + r2 * r2)
    return (dphi / 360.0) * (frustum(rmax1, rmax2) - frustum(rmin1, rmin2))


# ---------------------------------------------------------------------------
# bounds

def _arc_extremes(r_lo: float, r_hi: float, phi0: float, dphi: float):
    """x/y ranges of the annular arc r in [r_lo, r_hi], phi in [phi0, phi0+dphi] deg."""
    angles = [phi0, phi0 + dphi]
    k0 = math.ceil(phi0 / 90.0)
    while k0 * 90.0 <= phi0 + dphi:
        angles.append(k0 * 90.0)
        k0 += 1
    xs, ys = [], []
    for a in angles:
        rad = math.radians(a)
        for r in (r_lo, r_hi):
            xs.append(r * math.cos(rad))
            ys.append(r * math.sin(rad))
    if dphi < 360.0 and r_lo == 0.0:
        xs.append(0.0)
        ys.append(0.0)
    return min(xs), max(xs), min(ys), max(ys)


def aabb(s: Shape) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounds in the local frame, containing every mesh vertex."""
    check_shape(s)
    if isinstance(s, Box):
        h = np.array([s.x / 2, s.y / 2, s.z / 2])
        return -h, h
    if isinstance(s, Trd):
        hx = max(s.x1, s.x2) / 2
        hy = max(s.y1, s.y2) / 2
        return np.array([-hx, -hy, -s.zhalf]), np.array([hx, hy, s.zhalf])
    if isinstance(s, (Tube, Cone, Polycone)):
        planes = _profile_planes(s)
        rmax = max(r for _, _, r in planes)
        rmin = min(r for _, r, _ in planes)
        x0, x1, y0, y1 = _arc_extremes(rmin, rmax, float(s.phi0), float(s.dphi))
        return (np.array([x0, y0, planes[0][0]]), np.array([x1, y1, planes[-1][0]]))
    if isinstance(s, SphereShell):
        th0 = math.radians(s.theta0)
        th1 = math.radians(s.theta0 + s.dtheta)
        sin_max = 1.0 if th0 <= math.pi / 2 <= th1 else max(math.sin(th0), math.sin(th1))
        smax = s.rmax * sin_max
        x0, x1, y0, y1 = _arc_extremes(0.0, smax, float(s.phi0), float(s.dphi))
        zvals = [r * math.cos(t) for r in (s.rmin, s.rmax) for t in (th0, th1)]
        return (np.array([x0, y0, min(zvals)]), np.array([x1, y1, max(zvals)]))
    if isinstance(s, Helix):
        r = s.rho + s.rtube
        return (np.array([-r, -r, -s.rtube]),
                np.array([r, r, s.pitch * s.turns + s.rtube]))
    raise SolidError(f"unknown shape {s!r}")


# ---------------------------------------------------------------------------
# misc oracles

def circumscription_error(s: Shape, q: int) -> float:
    """Max distance between the analytic curved surface and its chords (sagitta)."""
    n = nseg(q)
    half = math.pi / n
    if isinstance(s, (Tube, Cone, Polycone)):
        planes = _profile_planes(s)
        rmax = max(r for _, _, r in planes)
        return rmax * (1 - math.cos(half))
    if isinstance(s, SphereShell):
        return s.rmax * (1 - math.cos(half))
    if isinstance(s, Helix):
        return (s.rho + s.rtube) * (1 - math.cos(half)) + s.rtube * (1 - math.cos(half))
    return 0.0


def winding_number_inside(mesh: Mesh, pts: np.ndarray) -> np.ndarray:
    """Generalized winding number test: True where points are inside the mesh."""
    pts = np.asarray(pts, dtype=float)
    corners = mesh.triangle_corners()  # (M, 3, 3)
    out = np.empty(len(pts), dtype=bool)
    for i, p in enumerate(pts):
        a = corners[:, 0] - p
        b = corners[:, 1] - p
        c = corners[:, 2] - p
        la = np.linalg.norm(a, axis=1)
        lb = np.linalg.norm(b, axis=1)
        lc = np.linalg.norm(c, axis=1)
        num = np.einsum("ij,ij->i", a, np.cross(b, c))
        den = (la * lb * lc + np.einsum("ij,ij->i", a, b) * lc
               + np.einsum("ij,ij->i", b, c) * la
               + np.einsum("ij,ij->i", c, a) * lb)
        w = np.arctan2(num, den).sum() / (2 * math.pi)
        out[i] = abs(w) > 0.25
    return out
