"""Geometric navigation on a compiled scene: point location ("Where am I?"),
ray picking and collision detection.

Location uses the ANALYTIC solids (exact containment); picking intersects
the TESSELLATED triangles the user actually sees.  The two disagree inside
a band of twice the circumscription error around curved surfaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import solids
from .scenegraph import CapabilityError, CompiledScene, transform_points

T_TIE = 1e-9  # mm; pick hits closer than this are tied, broken by path order


@dataclass(frozen=True)
class Ray:
    origin: tuple[float, float, float]
    direction: tuple[float, float, float]


@dataclass(frozen=True)
class PickHit:
    path: tuple[str, ...]
    t: float
    point: tuple[float, float, float]


def locate(scene: CompiledScene, point) -> tuple[str, ...] | None:
    """Deepest volume whose analytic solid contains the point, or None."""
    if scene.opts.optimization == 3:
        raise CapabilityError("optimization level 3 discards identities; "
                              "point location needs an identity-preserving scene")
    p = np.asarray(point, dtype=float)
    best: tuple[int, tuple[str, ...]] | None = None
    for idx in scene.bvh.query_point(p):
        shape = scene.shape_of(idx)
        if shape is None:
            continue
        local = scene.inverse_matrix(idx)[:3, :3] @ p + scene.inverse_matrix(idx)[:3, 3]
        if solids.contains(shape, local):
            key = (-len(scene.instances[idx].path), scene.instances[idx].path)
            if best is None or key < best:
                best = key
    return best[1] if best else None


def _ray_triangles(origin: np.ndarray, direction: np.ndarray,
                   corners: np.ndarray) -> np.ndarray:
    """Moller-Trumbore over (M,3,3) triangles; returns hit parameters (inf = miss)."""
    eps = 1e-12
    v0 = corners[:, 0]
    e1 = corners[:, 1] - v0
    e2 = corners[:, 2] - v0
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    ok = np.abs(det) > eps
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origin - v0
    u = np.einsum("ij,ij->i", tvec, pvec) * inv_det
    qvec = np.cross(tvec, e1)
    v = np.einsum("j,ij->i", direction, qvec) * inv_det
    t = np.einsum("ij,ij->i", e2, qvec) * inv_det
    hit = ok & (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1 + 1e-12) & (t > eps)
    return np.where(hit, t, np.inf)


def pick(scene: CompiledScene, ray: Ray) -> PickHit | None:
    """Nearest positive-t intersection with any visible instance's triangles."""
    origin = np.asarray(ray.origin, dtype=float)
    direction = np.asarray(ray.direction, dtype=float)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise ValueError("ray direction must be non-zero")
    direction = direction / norm

    best_t = np.inf
    best_path: tuple[str, ...] | None = None
    for t_enter, idx in scene.bvh.query_ray(origin, direction):
        if t_enter > best_t + T_TIE:
            break
        inst = scene.instances[idx]
        if not inst.visible or not inst.node.pickable:
            continue
        inv = scene.inverse_matrix(idx)
        o_local = inv[:3, :3] @ origin + inv[:3, 3]
        d_local = inv[:3, :3] @ direction  # rigid transform keeps t in mm
        ts = _ray_triangles(o_local, d_local, scene.mesh_of(idx).triangle_corners())
        t = float(ts.min())
        if t == np.inf:
            continue
        if t < best_t - T_TIE or (abs(t - best_t) <= T_TIE
                                  and (best_path is None or inst.path < best_path)):
            best_t = min(t, best_t)
            best_path = inst.path
    if best_path is None:
        return None
    point = origin + best_t * direction
    return PickHit(best_path, best_t, (float(point[0]), float(point[1]), float(point[2])))


def _segments_hit_triangles(segs_a: np.ndarray, segs_b: np.ndarray,
                            corners: np.ndarray) -> bool:
    """True if any segment a->b crosses any triangle."""
    for a, b in zip(segs_a, segs_b):
        d = b - a
        length = float(np.linalg.norm(d))
        if length == 0.0:
            continue
        ts = _ray_triangles(a, d / length, corners)
        if (ts <= length + 1e-9).any():
            return True
    return False


def collide(scene: CompiledScene, path_a, path_b) -> bool:
    """AABB reject, then vertex containment both ways, then edge/triangle tests."""
    ia = scene.instance_index(tuple(path_a))
    ib = scene.instance_index(tuple(path_b))
    if ia is None:
        raise KeyError(f"unknown path {'/'.join(path_a)}")
    if ib is None:
        raise KeyError(f"unknown path {'/'.join(path_b)}")
    lo_a, hi_a = scene.instance_bounds[ia]
    lo_b, hi_b = scene.instance_bounds[ib]
    if (lo_a > hi_b + 1e-9).any() or (lo_b > hi_a + 1e-9).any():
        return False

    for i, j in ((ia, ib), (ib, ia)):
        verts_world = transform_points(scene.instances[i].matrix, scene.mesh_of(i).vertices)
        shape_j = scene.shape_of(j)
        inv_j = scene.inverse_matrix(j)
        local = transform_points(inv_j, verts_world)
        if shape_j is not None and solids.contains_many(shape_j, local).any():
            return True
        if shape_j is None and solids.winding_number_inside(scene.mesh_of(j), local).any():
            return True

    # edges of a against triangles of b (in b's local frame)
    for i, j in ((ia, ib), (ib, ia)):
        mesh_i = scene.mesh_of(i)
        world = transform_points(scene.instances[i].matrix, mesh_i.vertices)
        local = transform_points(scene.inverse_matrix(j), world)
        tris = mesh_i.triangles
        edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
        edges = np.unique(np.sort(edges, axis=1), axis=0)
        if _segments_hit_triangles(local[edges[:, 0]], local[edges[:, 1]],
                                   scene.mesh_of(j).triangle_corners()):
            return True
    return False


# ---------------------------------------------------------------------------
# independent oracles (kept separate from the BVH-accelerated paths)

def locate_bruteforce(scene: CompiledScene, points: np.ndarray) -> list[tuple[str, ...] | None]:
    """Deepest-containment over ALL instances, vectorized over points."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    best_key: list = [None] * n
    best_path: list = [None] * n
    for idx, inst in enumerate(scene.instances):
        shape = scene.shape_of(idx)
        if shape is None:
            continue
        local = transform_points(scene.inverse_matrix(idx), points)
        inside = solids.contains_many(shape, local)
        key = (-len(inst.path), inst.path)
        for i in np.nonzero(inside)[0]:
            if best_key[i] is None or key < best_key[i]:
                best_key[i] = key
                best_path[i] = inst.path
    return best_path


def pick_bruteforce(scene: CompiledScene, ray: Ray) -> PickHit | None:
    """All-triangle intersection in world space, no acceleration structure."""
    origin = np.asarray(ray.origin, dtype=float)
    direction = np.asarray(ray.direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    best_t = np.inf
    best_path = None
    for idx, inst in enumerate(scene.instances):
        if not inst.visible or not inst.node.pickable:
            continue
        mesh = scene.mesh_of(idx)
        world = transform_points(inst.matrix, mesh.vertices)
        ts = _ray_triangles(origin, direction, world[mesh.triangles])
        t = float(ts.min())
        if t == np.inf:
            continue
        if t < best_t - T_TIE or (abs(t - best_t) <= T_TIE
                                  and (best_path is None or inst.path < best_path)):
            best_t = min(t, best_t)
            best_path = inst.path
    if best_path is None:
        return None
    point = origin + best_t * direction
    return PickHit(best_path, best_t, tuple(float(c) for c in point))
