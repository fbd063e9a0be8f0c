"""Per-map BFS caching: distance fields, canonical shortest paths.

Path tie-breaking is fixed once for the whole system: breadth-first from the
start cell, expanding neighbors in Up, Down, Left, Right order, and taking
the first-found shortest path (the parent chain of the target).
"""
from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from .errors import NoPath
from .gridworld import (
    DIRECTION_DELTAS,
    DIRECTION_ORDER,
    Cell,
    Direction,
    GridMap,
    View,
)
from . import kernels


class MapCache:
    """Caches BFS floods for both views of one map. Read-only once built."""

    def __init__(self, grid_map: GridMap):
        self.map = grid_map
        self._blocked = {
            View.TRUE: grid_map.blocked_array(View.TRUE),
            View.HUMAN: grid_map.blocked_array(View.HUMAN),
        }
        self._floods: Dict[Tuple[View, Cell], tuple] = {}

    def flood(self, view: View, source: Cell):
        """(dist, parent) arrays for a BFS rooted at source."""
        key = (view, source)
        hit = self._floods.get(key)
        if hit is None:
            hit = kernels.grid_bfs(self._blocked[view], source[0], source[1])
            self._floods[key] = hit
        return hit

    def distance(self, view: View, frm: Cell, to: Cell) -> int:
        """Shortest-path length between two cells, -1 if disconnected."""
        dist, _ = self.flood(view, to)
        return int(dist[frm])

    def path(self, view: View, frm: Cell, to: Cell) -> List[Direction]:
        """Canonical shortest move sequence frm -> to. Raises NoPath."""
        if frm == to:
            return []
        dist, parent = self.flood(view, frm)
        if dist[to] < 0:
            raise NoPath(f"no {view.value}-view path from {frm} to {to}")
        moves: List[Direction] = []
        cell = to
        while cell != frm:
            direction = DIRECTION_ORDER[int(parent[cell])]
            moves.append(direction)
            dr, dc = DIRECTION_DELTAS[direction]
            cell = (cell[0] - dr, cell[1] - dc)
        moves.reverse()
        return moves

    def first_step(self, view: View, frm: Cell, to: Cell) -> Optional[Direction]:
        """First move of the canonical path, None when already there."""
        if frm == to:
            return None
        return self.path(view, frm, to)[0]
