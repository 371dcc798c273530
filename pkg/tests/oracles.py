"""Reference computations the tests compare the package against.

Kept deliberately separate from the package code: different formulas,
no shared helpers.
"""

from __future__ import annotations

import math
import random
from collections import deque

R_EARTH = 6_371_000.0


def great_circle_vector(lat1, lon1, lat2, lon2, radius=R_EARTH) -> float:
    """Central angle from unit vectors, atan2(|a x b|, a . b); well conditioned
    for both tiny and near-antipodal separations."""
    def unit(lat, lon):
        p, l = math.radians(lat), math.radians(lon)
        return (math.cos(p) * math.cos(l), math.cos(p) * math.sin(l), math.sin(p))

    ax, ay, az = unit(lat1, lon1)
    bx, by, bz = unit(lat2, lon2)
    cx, cy, cz = ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx
    return radius * math.atan2(math.sqrt(cx * cx + cy * cy + cz * cz), ax * bx + ay * by + az * bz)


def meridian_arc(dlat_deg: float, radius=R_EARTH) -> float:
    """Along a meridian the great-circle distance is just radius times the angle."""
    return radius * math.radians(abs(dlat_deg))


def bfs_depths(adjacency: dict[int, list[int]], root: int) -> dict[int, int]:
    depth = {root: 0}
    todo = deque([root])
    while todo:
        n = todo.popleft()
        for m in adjacency[n]:
            if m not in depth:
                depth[m] = depth[n] + 1
                todo.append(m)
    return depth


def random_tree(rng: random.Random, n_relays: int, chain: bool = False) -> dict[int, list[int]]:
    """Server 0 plus relays 1..n; each relay hangs off an earlier node."""
    adj: dict[int, list[int]] = {0: []}
    for node in range(1, n_relays + 1):
        parent = node - 1 if chain else rng.randrange(node)
        adj[node] = [parent]
        adj[parent].append(node)
    return adj
