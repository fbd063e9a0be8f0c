"""Composite-plan search: cost-only baseline and explicability-aware variant.

Both planners run the same best-first loop (f = g + h, ties by lower h then
FIFO) over interleaved human commands and robot moves. The baseline scores
nodes by the length of a greedy completion; the explicability-aware variant
additionally labels the plan prefix plus that completion and penalizes
expected-inexplicable structure:

    h = (1 - score) * (|prefix| + |completion|) * |completion| + |completion|

An exhaustive enumerator provides the ground-truth optimum on small
instances for testing.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .errors import BudgetExhausted, Infeasible, NoPath, NoPlan
from .gridworld import (
    Action,
    Agent,
    CompositePlan,
    GridMap,
    Problem,
    TeamState,
    View,
    apply_action,
    is_goal,
    legal_actions,
)
from .labeler import Label, explicability_score
from .paths import MapCache

DEFAULT_NODE_BUDGET = 200_000


@dataclass(frozen=True)
class SearchNode:
    state: TeamState
    path: Tuple[Action, ...]
    g: float
    h: float

    @property
    def f(self) -> float:
        return self.g + self.h


@dataclass(frozen=True)
class PlanResult:
    plan: CompositePlan
    cost: float
    explicability_score: float
    nodes_expanded: int


def bfs_path(
    grid_map: GridMap,
    frm,
    to,
    view: View = View.TRUE,
    cache: Optional[MapCache] = None,
) -> List[Action]:
    """Shortest move sequence between two cells in the chosen view.

    Deterministic: breadth-first expansion in Up, Down, Left, Right order,
    first-found shortest path. Raises NoPath when disconnected.
    """
    if cache is None:
        cache = MapCache(grid_map)
    return [Action.move(d) for d in cache.path(view, frm, to)]


def relaxed_plan(
    state: TeamState,
    problem: Problem,
    cache: Optional[MapCache] = None,
) -> CompositePlan:
    """Greedy completion: repeatedly command and walk to the nearest
    unvisited goal room (true-map distances, ties to the lowest room id).

    The first segment omits its command when the nearest room is already
    the active command, so prefix + completion always replays cleanly.
    Distance ties prefer the active command (re-commanding an equally near
    room would fake a command change), then the lowest room id.
    """
    if cache is None:
        cache = MapCache(problem.map)
    remaining = sorted(problem.goal - state.visited)
    actions: List[Action] = []
    pos = state.robot_pos
    active = state.current_command
    while remaining:
        scored = []
        for rid in remaining:
            d = cache.distance(View.TRUE, pos, problem.map.room_cell(rid))
            if d < 0:
                raise NoPath(f"room {rid} unreachable from {pos}")
            scored.append((d, rid != active, rid))
        _, _, rid = min(scored)
        cell = problem.map.room_cell(rid)
        if rid != active:
            actions.append(Action.command(rid))
        actions.extend(Action.move(d) for d in cache.path(View.TRUE, pos, cell))
        pos = cell
        active = None
        remaining.remove(rid)
    return CompositePlan.of(actions)


def heuristic_value(labels: Sequence[Label], rp_len: int) -> float:
    """Closed-form combiner over the labeled prefix+completion sequence."""
    if rp_len == 0:
        return 0.0
    score = explicability_score(labels)
    return (1.0 - score) * len(labels) * rp_len + rp_len


def explicable_heuristic(
    node: SearchNode,
    problem: Problem,
    model,
    cache: Optional[MapCache] = None,
    start_state: Optional[TeamState] = None,
    rp: Optional[CompositePlan] = None,
) -> float:
    """Labeler-in-the-loop heuristic for one search node.

    node.path must be replayable from start_state (the search origin,
    defaulting to the problem's initial state). rp may be injected to skip
    recomputing the greedy completion.
    """
    if rp is None:
        rp = relaxed_plan(node.state, problem, cache=cache)
    if len(rp) == 0:
        return 0.0
    combined = CompositePlan(tuple(node.path) + rp.actions)
    labels = model.label(combined, problem, start_state=start_state, cache=cache)
    return heuristic_value(labels, len(rp))


def _score_plan(plan: CompositePlan, problem: Problem, model, start_state=None, cache=None) -> float:
    if model is None:
        return 0.0
    if len(plan) == 0:
        return 1.0  # vacuous: nothing to find inexplicable
    labels = model.label(plan, problem, start_state=start_state, cache=cache)
    return explicability_score(labels)


def plan_objective(
    plan: CompositePlan,
    problem: Problem,
    model,
    start_state: Optional[TeamState] = None,
    cache: Optional[MapCache] = None,
) -> float:
    """cost + alpha * (1 - score) * cost, the quantity the oracle minimizes."""
    if len(plan) == 0:
        return 0.0
    score = _score_plan(plan, problem, model, start_state=start_state, cache=cache)
    return len(plan) + problem.alpha * (1.0 - score) * len(plan)


def _best_first(problem: Problem, h_fn, start_state, node_budget):
    grid_map = problem.map
    start = start_state if start_state is not None else problem.initial_state()
    heap: list = []
    counter = itertools.count()
    best_f: dict = {}

    def push(state: TeamState, path: Tuple[Action, ...]):
        node = SearchNode(state=state, path=path, g=float(len(path)), h=h_fn(state, path))
        key = state.key()
        seen = best_f.get(key)
        if seen is not None and seen <= node.f:
            return
        best_f[key] = node.f
        heapq.heappush(heap, (node.f, node.h, next(counter), node))

    try:
        push(start, ())
    except NoPath as exc:
        raise NoPlan(str(exc)) from exc

    expanded = 0
    while heap:
        f, _, _, node = heapq.heappop(heap)
        if f > best_f.get(node.state.key(), float("inf")):
            continue  # superseded by a cheaper route to the same state
        if is_goal(node.state, problem):
            return node, expanded
        expanded += 1
        if expanded > node_budget:
            raise BudgetExhausted(f"expansion budget {node_budget} hit")
        for action in legal_actions(node.state, grid_map, Agent.HUMAN) + legal_actions(
            node.state, grid_map, Agent.ROBOT
        ):
            push(apply_action(node.state, action, grid_map), node.path + (action,))
    raise NoPlan("open list exhausted before reaching the goal")


def plan_explicable(
    problem: Problem,
    model,
    start_state: Optional[TeamState] = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> PlanResult:
    """Best-first search under the labeler-in-the-loop heuristic."""
    cache = MapCache(problem.map)
    origin = start_state if start_state is not None else problem.initial_state()

    def h_fn(state: TeamState, path: Tuple[Action, ...]) -> float:
        node = SearchNode(state=state, path=path, g=float(len(path)), h=0.0)
        return explicable_heuristic(node, problem, model, cache=cache, start_state=origin)

    node, expanded = _best_first(problem, h_fn, origin, node_budget)
    plan = CompositePlan(node.path)
    return PlanResult(
        plan=plan,
        cost=float(len(plan)),
        explicability_score=_score_plan(plan, problem, model, start_state=origin, cache=cache),
        nodes_expanded=expanded,
    )


def plan_baseline(
    problem: Problem,
    model=None,
    start_state: Optional[TeamState] = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> PlanResult:
    """Cost-only search (completion length as h); explicability ignored.

    The result is scored post hoc with the supplied model, or 0.0 when no
    model is given.
    """
    cache = MapCache(problem.map)
    origin = start_state if start_state is not None else problem.initial_state()

    def h_fn(state: TeamState, path: Tuple[Action, ...]) -> float:
        return float(len(relaxed_plan(state, problem, cache=cache)))

    node, expanded = _best_first(problem, h_fn, origin, node_budget)
    plan = CompositePlan(node.path)
    return PlanResult(
        plan=plan,
        cost=float(len(plan)),
        explicability_score=_score_plan(plan, problem, model, start_state=origin, cache=cache),
        nodes_expanded=expanded,
    )


def brute_force_oracle(problem: Problem, model, max_len: int) -> PlanResult:
    """Exhaustive argmin of the objective over all goal-reaching plans of
    length <= max_len. Ties break to the lexicographically smallest action
    sequence (commands by room id before moves in Up/Down/Left/Right order).

    Only viable on small instances; used as the testing ground truth.
    """
    cache = MapCache(problem.map)
    grid_map = problem.map
    start = problem.initial_state()
    if is_goal(start, problem):
        return PlanResult(CompositePlan(), 0.0, _score_plan(CompositePlan(), problem, model), 0)

    best: Optional[Tuple[float, Tuple[Tuple[int, int], ...], CompositePlan]] = None
    visited_nodes = 0

    def lex_key(actions: Tuple[Action, ...]) -> Tuple[Tuple[int, int], ...]:
        return tuple(a.sort_key() for a in actions)

    def consider(actions: Tuple[Action, ...]):
        nonlocal best
        plan = CompositePlan(actions)
        value = plan_objective(plan, problem, model, cache=cache)
        key = lex_key(actions)
        if best is None or value < best[0] or (value == best[0] and key < best[1]):
            best = (value, key, plan)

    # Seed with the cost-optimal plan so the cost bound prunes early.
    try:
        seed = plan_baseline(problem, model)
        if len(seed.plan) <= max_len:
            consider(seed.plan.actions)
    except (NoPlan, BudgetExhausted):
        pass

    def remaining_bound(state: TeamState) -> int:
        unvisited = problem.goal - state.visited
        if not unvisited:
            return 0
        moves = 0
        for rid in unvisited:
            d = cache.distance(View.TRUE, state.robot_pos, problem.map.room_cell(rid))
            if d < 0:
                return 10**9
            moves = max(moves, d)
        commands = len(unvisited - ({state.current_command} if state.current_command is not None else set()))
        return moves + commands

    def dfs(state: TeamState, actions: Tuple[Action, ...]):
        nonlocal visited_nodes
        visited_nodes += 1
        if is_goal(state, problem):
            consider(actions)
        if len(actions) >= max_len:
            return
        if best is not None and len(actions) + remaining_bound(state) > best[0]:
            return  # objective >= cost >= this bound
        for action in sorted(
            legal_actions(state, grid_map, Agent.HUMAN) + legal_actions(state, grid_map, Agent.ROBOT),
            key=Action.sort_key,
        ):
            dfs(apply_action(state, action, grid_map), actions + (action,))

    dfs(start, ())
    if best is None:
        raise Infeasible(f"no goal-reaching plan within {max_len} actions")
    _, _, plan = best
    return PlanResult(
        plan=plan,
        cost=float(len(plan)),
        explicability_score=_score_plan(plan, problem, model, cache=cache),
        nodes_expanded=visited_nodes,
    )
