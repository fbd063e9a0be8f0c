"""First-response grid domain: maps with asymmetric views, team states, actions.

The world is a 4-connected cell grid. Two kinds of blocked cells exist:
visible obstacles (known to everyone) and hidden obstacles (known to the
robot's sensors but absent from the human's pre-disaster floor plan).
The human steers by commanding marked rooms; the robot moves one cell at a
time. All actions cost 1.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from .errors import IllegalAction, InvalidMap, InvalidPlan
from . import kernels

Cell = Tuple[int, int]  # (row, col)


class Agent(str, Enum):
    HUMAN = "HUMAN"
    ROBOT = "ROBOT"


class View(str, Enum):
    TRUE = "TRUE"
    HUMAN = "HUMAN"


class Direction(str, Enum):
    UP = "Up"
    DOWN = "Down"
    LEFT = "Left"
    RIGHT = "Right"


# Fixed neighbor order used everywhere a direction tie must break deterministically.
DIRECTION_ORDER: Tuple[Direction, ...] = (
    Direction.UP,
    Direction.DOWN,
    Direction.LEFT,
    Direction.RIGHT,
)

DIRECTION_DELTAS = {
    Direction.UP: (-1, 0),
    Direction.DOWN: (1, 0),
    Direction.LEFT: (0, -1),
    Direction.RIGHT: (0, 1),
}

_DIR_INDEX = {d: i for i, d in enumerate(DIRECTION_ORDER)}


def step_cell(cell: Cell, direction: Direction) -> Cell:
    dr, dc = DIRECTION_DELTAS[direction]
    return (cell[0] + dr, cell[1] + dc)


@dataclass(frozen=True)
class Action:
    """One agent action: a human room command or a robot unit move."""

    agent: Agent
    room: Optional[int] = None
    direction: Optional[Direction] = None

    def __post_init__(self):
        if self.agent is Agent.HUMAN:
            if self.room is None or self.direction is not None:
                raise IllegalAction("human actions are room commands")
        else:
            if self.direction is None or self.room is not None:
                raise IllegalAction("robot actions are moves")

    @staticmethod
    def command(room: int) -> "Action":
        return Action(Agent.HUMAN, room=room)

    @staticmethod
    def move(direction: Direction) -> "Action":
        return Action(Agent.ROBOT, direction=direction)

    @property
    def cost(self) -> int:
        return 1

    @property
    def is_command(self) -> bool:
        return self.agent is Agent.HUMAN

    @property
    def is_move(self) -> bool:
        return self.agent is Agent.ROBOT

    def sort_key(self) -> Tuple[int, int]:
        # Commands (by room id) order before moves (by Up/Down/Left/Right).
        if self.is_command:
            return (0, self.room)
        return (1, _DIR_INDEX[self.direction])

    def __repr__(self):
        if self.is_command:
            return f"Command({self.room})"
        return f"Move({self.direction.value})"


@dataclass(frozen=True)
class CompositePlan:
    """Interleaved human/robot action sequence, in execution order."""

    actions: Tuple[Action, ...] = ()

    def __len__(self) -> int:
        return len(self.actions)

    def __iter__(self) -> Iterator[Action]:
        return iter(self.actions)

    def __getitem__(self, idx):
        return self.actions[idx]

    def __add__(self, other: "CompositePlan") -> "CompositePlan":
        return CompositePlan(self.actions + other.actions)

    @staticmethod
    def of(actions: Sequence[Action]) -> "CompositePlan":
        return CompositePlan(tuple(actions))

    @property
    def cost(self) -> int:
        # Unit action costs: plan cost is its length.
        return len(self.actions)


@dataclass(frozen=True)
class GridMap:
    """A grid with blocked cells, marked rooms and the robot's start cell.

    `rooms` binds contiguous ids 0..R-1 to cells. The true map blocks
    visible and hidden obstacles; the human view blocks visible ones only.
    """

    width: int
    height: int
    visible_obstacles: frozenset
    hidden_obstacles: frozenset
    rooms: Tuple[Tuple[int, Cell], ...]
    robot_start: Cell

    def __post_init__(self):
        object.__setattr__(self, "visible_obstacles", frozenset(self.visible_obstacles))
        object.__setattr__(self, "hidden_obstacles", frozenset(self.hidden_obstacles))
        object.__setattr__(self, "rooms", tuple((int(r), (int(c[0]), int(c[1]))) for r, c in self.rooms))
        self._validate()

    def _validate(self):
        if self.width < 1 or self.height < 1:
            raise InvalidMap("grid dimensions must be positive")
        for cell in list(self.visible_obstacles) + list(self.hidden_obstacles):
            if not self.in_bounds(cell):
                raise InvalidMap(f"obstacle {cell} out of bounds")
        if self.visible_obstacles & self.hidden_obstacles:
            raise InvalidMap("visible and hidden obstacle sets overlap")
        ids = [r for r, _ in self.rooms]
        if sorted(ids) != list(range(len(ids))):
            raise InvalidMap("room ids must be unique and contiguous from 0")
        occupied = set()
        for rid, cell in self.rooms:
            if not self.in_bounds(cell):
                raise InvalidMap(f"room {rid} at {cell} out of bounds")
            if cell in self.visible_obstacles or cell in self.hidden_obstacles:
                raise InvalidMap(f"room {rid} sits on an obstacle")
            if cell in occupied:
                raise InvalidMap(f"two rooms share cell {cell}")
            occupied.add(cell)
        if not self.in_bounds(self.robot_start):
            raise InvalidMap("robot start out of bounds")
        if self.robot_start in self.visible_obstacles or self.robot_start in self.hidden_obstacles:
            raise InvalidMap("robot start sits on an obstacle")
        dist, _ = kernels.grid_bfs(self.blocked_array(View.TRUE), *self.robot_start)
        for rid, cell in self.rooms:
            if dist[cell] < 0:
                raise InvalidMap(f"room {rid} unreachable from robot start on the true map")

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def obstacles(self, view: View) -> frozenset:
        if view is View.TRUE:
            return self.visible_obstacles | self.hidden_obstacles
        return self.visible_obstacles

    def blocked_array(self, view: View) -> np.ndarray:
        grid = np.zeros((self.height, self.width), dtype=np.uint8)
        for r, c in self.obstacles(view):
            grid[r, c] = 1
        return grid

    def is_free(self, cell: Cell, view: View) -> bool:
        return self.in_bounds(cell) and cell not in self.obstacles(view)

    @property
    def room_ids(self) -> frozenset:
        return frozenset(r for r, _ in self.rooms)

    def room_cell(self, room_id: int) -> Cell:
        for rid, cell in self.rooms:
            if rid == room_id:
                return cell
        raise KeyError(f"no room {room_id}")

    def human_view(self) -> "GridMap":
        return human_view(self)


@dataclass(frozen=True)
class Problem:
    """One teaming task: a map, the goal rooms and the explicability weight."""

    map: GridMap
    goal: frozenset
    alpha: float = 1.0
    notes: str = ""

    def __post_init__(self):
        object.__setattr__(self, "goal", frozenset(int(g) for g in self.goal))
        if not self.goal <= self.map.room_ids:
            raise InvalidMap("goal references unknown room ids")
        if self.alpha < 0:
            raise InvalidMap("alpha must be nonnegative")

    def initial_state(self) -> "TeamState":
        return TeamState(robot_pos=self.map.robot_start, visited=frozenset(), current_command=None, tick=0)


@dataclass(frozen=True)
class TeamState:
    """Snapshot of the team: robot cell, visited rooms, active command, tick."""

    robot_pos: Cell
    visited: frozenset
    current_command: Optional[int]
    tick: int

    def __post_init__(self):
        object.__setattr__(self, "visited", frozenset(self.visited))

    def key(self) -> Tuple[Cell, frozenset, Optional[int]]:
        # Search identity: position, visited set and command (tick excluded).
        return (self.robot_pos, self.visited, self.current_command)


def human_view(grid_map: GridMap) -> GridMap:
    """Project the map onto the human's knowledge: hidden obstacles vanish."""
    if not grid_map.hidden_obstacles:
        return grid_map
    return replace(grid_map, hidden_obstacles=frozenset())


def apply_action(state: TeamState, action: Action, grid_map: GridMap) -> TeamState:
    """Deterministic transition. Raises IllegalAction on rule violations.

    Arriving at the commanded room's cell marks that room visited and clears
    the command. Passing over a non-commanded room changes nothing.
    """
    if action.is_command:
        room = action.room
        if room not in grid_map.room_ids:
            raise IllegalAction(f"unknown room {room}")
        if room in state.visited:
            raise IllegalAction(f"room {room} already visited")
        if room == state.current_command:
            raise IllegalAction(f"room {room} is already the active command")
        return replace(state, current_command=room, tick=state.tick + 1)

    if state.current_command is None:
        raise IllegalAction("robot cannot move without an active command")
    target = step_cell(state.robot_pos, action.direction)
    if not grid_map.in_bounds(target):
        raise IllegalAction(f"move {action.direction.value} leaves the grid")
    if target in grid_map.obstacles(View.TRUE):
        raise IllegalAction(f"move {action.direction.value} enters an obstacle at {target}")
    visited = state.visited
    command = state.current_command
    if target == grid_map.room_cell(command):
        visited = visited | {command}
        command = None
    return TeamState(robot_pos=target, visited=visited, current_command=command, tick=state.tick + 1)


def legal_actions(state: TeamState, grid_map: GridMap, agent: Agent) -> list:
    """Actions available to one agent. Robot moves require an active command."""
    if agent is Agent.HUMAN:
        return [
            Action.command(rid)
            for rid, _ in grid_map.rooms
            if rid not in state.visited and rid != state.current_command
        ]
    if state.current_command is None:
        return []
    moves = []
    for direction in DIRECTION_ORDER:
        target = step_cell(state.robot_pos, direction)
        if grid_map.in_bounds(target) and target not in grid_map.obstacles(View.TRUE):
            moves.append(Action.move(direction))
    return moves


def is_goal(state: TeamState, problem: Problem) -> bool:
    return problem.goal <= state.visited


def replay(plan: CompositePlan, problem: Problem, start_state: Optional[TeamState] = None) -> list:
    """Replay a plan, returning the state after each action.

    Raises InvalidPlan if any step is illegal (which also covers the
    command-before-move and no-obstacle invariants).
    """
    state = start_state if start_state is not None else problem.initial_state()
    states = []
    for i, action in enumerate(plan):
        try:
            state = apply_action(state, action, problem.map)
        except IllegalAction as exc:
            raise InvalidPlan(f"action {i} ({action!r}) is illegal: {exc}") from exc
        states.append(state)
    return states
