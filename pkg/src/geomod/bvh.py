"""Bounding volume hierarchy over instance AABBs.

Median split on the widest centroid axis; every leaf holds exactly one
instance, so leaf count equals instance count.
"""

from __future__ import annotations

import numpy as np


class BVH:
    def __init__(self, boxes: list[tuple[np.ndarray, np.ndarray]]):
        self.lo = np.array([b[0] for b in boxes]) if boxes else np.zeros((0, 3))
        self.hi = np.array([b[1] for b in boxes]) if boxes else np.zeros((0, 3))
        # node arrays: bounds, children (-1 for leaves), leaf instance index
        self.node_lo: list[np.ndarray] = []
        self.node_hi: list[np.ndarray] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.item: list[int] = []
        self.root = -1
        if len(boxes) > 0:
            centers = (self.lo + self.hi) / 2.0
            self.root = self._build(np.arange(len(boxes)), centers)

    def _build(self, idx: np.ndarray, centers: np.ndarray) -> int:
        node = len(self.node_lo)
        self.node_lo.append(self.lo[idx].min(axis=0))
        self.node_hi.append(self.hi[idx].max(axis=0))
        self.left.append(-1)
        self.right.append(-1)
        if len(idx) == 1:
            self.item.append(int(idx[0]))
            return node
        self.item.append(-1)
        c = centers[idx]
        axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
        order = np.argsort(c[:, axis], kind="stable")
        half = len(idx) // 2
        left = self._build(idx[order[:half]], centers)
        right = self._build(idx[order[half:]], centers)
        self.left[node] = left
        self.right[node] = right
        return node

    @property
    def leaf_count(self) -> int:
        return sum(1 for i in self.item if i >= 0)

    def query_point(self, p: np.ndarray, pad: float = 1e-9) -> list[int]:
        """Instance indices whose AABB contains p (inflated by pad)."""
        if self.root < 0:
            return []
        out: list[int] = []
        stack = [self.root]
        while stack:
            n = stack.pop()
            lo, hi = self.node_lo[n], self.node_hi[n]
            if (p < lo - pad).any() or (p > hi + pad).any():
                continue
            if self.item[n] >= 0:
                out.append(self.item[n])
            else:
                stack.append(self.left[n])
                stack.append(self.right[n])
        return out

    def query_ray(self, origin: np.ndarray, direction: np.ndarray) -> list[tuple[float, int]]:
        """(t_entry, instance) pairs for AABBs crossed by the ray, sorted by entry."""
        if self.root < 0:
            return []
        inv = np.where(direction != 0.0, 1.0 / np.where(direction == 0.0, 1.0, direction), np.inf)
        out: list[tuple[float, int]] = []
        stack = [self.root]
        while stack:
            n = stack.pop()
            t0 = (self.node_lo[n] - origin) * inv
            t1 = (self.node_hi[n] - origin) * inv
            tmin = np.minimum(t0, t1)
            tmax = np.maximum(t0, t1)
            # axes with zero direction: inside the slab or never
            zero = direction == 0.0
            if zero.any():
                inside = (origin[zero] >= self.node_lo[n][zero] - 1e-9) & \
                         (origin[zero] <= self.node_hi[n][zero] + 1e-9)
                if not inside.all():
                    continue
                tmin = np.where(zero, -np.inf, tmin)
                tmax = np.where(zero, np.inf, tmax)
            enter = float(np.max(tmin))
            leave = float(np.min(tmax))
            if enter > leave + 1e-12 or leave < -1e-12:
                continue
            if self.item[n] >= 0:
                out.append((max(enter, 0.0), self.item[n]))
            else:
                stack.append(self.left[n])
                stack.append(self.right[n])
        out.sort()
        return out
