"""Interactive episode execution and replanning.

An episode ticks the world one action at a time: the human side (live or
simulated) may issue a room command, then the robot takes one step of its
true-map shortest path toward the commanded room. Robot actions can be
judged (yes/no) as they happen, producing the labeled traces the labeler
trains on. A separate replanning layer keeps an explicability-aware plan
prediction in sync with what the human actually commands.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence

from .gridworld import (
    Action,
    Agent,
    CompositePlan,
    Problem,
    TeamState,
    View,
    apply_action,
    is_goal,
)
from .labeler import Label
from .paths import MapCache
from .planner import DEFAULT_NODE_BUDGET, PlanResult, plan_explicable, _score_plan


class Outcome(str, Enum):
    COMPLETED = "COMPLETED"
    ABORTED = "ABORTED"


class TraceSource(str, Enum):
    HUMAN_LIVE = "HUMAN_LIVE"
    SIMULATED = "SIMULATED"


class PolicyKind(str, Enum):
    LIVE = "LIVE"
    GREEDY_SIM = "GREEDY_SIM"


@dataclass
class HumanPolicy:
    kind: PolicyKind = PolicyKind.GREEDY_SIM
    patience: int = 3

    def __post_init__(self):
        if self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass
class TraceEvent:
    tick: int
    agent: Agent
    action: Action
    label: Optional[Label]
    state_after: TeamState


@dataclass
class Trace:
    problem_ref: str
    source: TraceSource
    outcome: Outcome
    events: List[TraceEvent] = field(default_factory=list)

    def plan(self) -> CompositePlan:
        return CompositePlan.of([e.action for e in self.events])

    def robot_events(self) -> List[TraceEvent]:
        return [e for e in self.events if e.agent is Agent.ROBOT]


def rule_judge(problem: Problem, cache: Optional[MapCache] = None) -> Callable:
    """Deterministic stand-in for a human judge: a robot move makes sense
    iff it is the next step of the path the human would compute on their
    own (hidden-obstacle-free) map."""
    if cache is None:
        cache = MapCache(problem.map)

    def judge(state_before: TeamState, action: Action, state_after: TeamState) -> bool:
        if action.is_command:
            return True
        room_cell = problem.map.room_cell(state_before.current_command)
        expected = cache.first_step(View.HUMAN, state_before.robot_pos, room_cell)
        return expected is None or action.direction == expected

    return judge


def model_judge(problem: Problem, model, cache: Optional[MapCache] = None) -> Callable:
    """Judge robot actions with a trained labeler, in growing-plan context."""
    if cache is None:
        cache = MapCache(problem.map)
    history: List[Action] = []

    def judge(state_before: TeamState, action: Action, state_after: TeamState) -> bool:
        history.append(action)
        labels = model.label(CompositePlan.of(history), problem, cache=cache)
        return labels[-1] is Label.EXPLICABLE

    return judge


class GreedySimCommander:
    """Simulated human: always points the robot at the nearest unvisited
    goal room as seen on the human-view map, and re-commands when the robot
    makes no apparent progress for `patience` consecutive polls."""

    def __init__(self, problem: Problem, cache: MapCache, patience: int = 3):
        self.problem = problem
        self.cache = cache
        self.patience = patience
        self._stall = 0
        self._last_dist: Optional[int] = None

    def _nearest(self, state: TeamState) -> Optional[int]:
        targets = sorted(self.problem.goal - state.visited)
        if not targets:
            return None
        scored = [
            (self.cache.distance(View.HUMAN, state.robot_pos, self.problem.map.room_cell(r)), r)
            for r in targets
        ]
        return min(scored)[1]

    def next_command(self, state: TeamState) -> Optional[int]:
        nearest = self._nearest(state)
        if nearest is None:
            return None
        if state.current_command is None:
            self._stall = 0
            self._last_dist = self.cache.distance(
                View.HUMAN, state.robot_pos, self.problem.map.room_cell(nearest)
            )
            return nearest
        here = self.cache.distance(
            View.HUMAN, state.robot_pos, self.problem.map.room_cell(state.current_command)
        )
        if self._last_dist is None or (0 <= here < self._last_dist):
            self._last_dist = here
            self._stall = 0
            return None
        self._stall += 1
        if self._stall < self.patience:
            return None
        self._stall = 0
        self._last_dist = None
        if nearest != state.current_command:
            self._last_dist = self.cache.distance(
                View.HUMAN, state.robot_pos, self.problem.map.room_cell(nearest)
            )
            return nearest
        return None


class EpisodeEngine:
    """Single episode state machine, driven synchronously or by a service.

    The robot executes the canonical true-map shortest path toward the
    current command, recomputed whenever the command changes.
    """

    def __init__(
        self,
        problem: Problem,
        problem_ref: str = "problem",
        collect_labels: bool = False,
        judge: Optional[Callable] = None,
        cache: Optional[MapCache] = None,
        tick_budget: Optional[int] = None,
    ):
        self.problem = problem
        self.problem_ref = problem_ref
        self.cache = cache if cache is not None else MapCache(problem.map)
        self.collect_labels = collect_labels
        self.judge = judge
        self.state = problem.initial_state()
        self.events: List[TraceEvent] = []
        self.tick_budget = (
            tick_budget if tick_budget is not None else 10 * problem.map.width * problem.map.height
        )
        self._route: List = []

    @property
    def done(self) -> bool:
        return is_goal(self.state, self.problem)

    @property
    def over_budget(self) -> bool:
        return self.state.tick >= self.tick_budget

    def offer_command(self, room: int) -> TraceEvent:
        """Apply a human command. Raises IllegalAction for visited rooms,
        unknown rooms, or re-issuing the active command."""
        action = Action.command(room)
        self.state = apply_action(self.state, action, self.problem.map)
        self._route = [
            Action.move(d)
            for d in self.cache.path(View.TRUE, self.state.robot_pos, self.problem.map.room_cell(room))
        ]
        return self._record(action, auto_label=False)

    def robot_step(self) -> Optional[TraceEvent]:
        """One robot move along the current route; None when uncommanded."""
        if self.state.current_command is None:
            return None
        if not self._route:
            room_cell = self.problem.map.room_cell(self.state.current_command)
            self._route = [
                Action.move(d) for d in self.cache.path(View.TRUE, self.state.robot_pos, room_cell)
            ]
        action = self._route.pop(0)
        self.state = apply_action(self.state, action, self.problem.map)
        return self._record(action, auto_label=True)

    def apply_robot_move(self, action: Action) -> TraceEvent:
        """Apply an externally chosen robot move (plan-following mode)."""
        self.state = apply_action(self.state, action, self.problem.map)
        self._route = []
        return self._record(action, auto_label=True)

    def set_label(self, event: TraceEvent, explicable: bool):
        event.label = Label.EXPLICABLE if explicable else Label.INEXPLICABLE

    def _record(self, action: Action, auto_label: bool) -> TraceEvent:
        before = self.events[-1].state_after if self.events else None
        label = None
        if auto_label and self.collect_labels and self.judge is not None:
            prev = before if before is not None else self.problem.initial_state()
            label = (
                Label.EXPLICABLE
                if self.judge(prev, action, self.state)
                else Label.INEXPLICABLE
            )
        event = TraceEvent(
            tick=self.state.tick,
            agent=action.agent,
            action=action,
            label=label,
            state_after=self.state,
        )
        self.events.append(event)
        return event

    def build_trace(self, outcome: Outcome, source: TraceSource) -> Trace:
        return Trace(problem_ref=self.problem_ref, source=source, outcome=outcome, events=list(self.events))


def run_episode(
    problem: Problem,
    human: HumanPolicy,
    model=None,
    collect_labels: bool = False,
    judge: Optional[Callable] = None,
    problem_ref: str = "problem",
    delay_ms: int = 0,
    tick_budget: Optional[int] = None,
) -> Trace:
    """Run a headless episode to completion (or abort on the tick budget).

    With collect_labels, robot actions are judged by `judge`; when judge is
    omitted, a trained model judges if provided, otherwise the deterministic
    human-view path rule stands in.
    """
    if human.kind is PolicyKind.LIVE:
        raise ValueError("live episodes run through the session service")
    cache = MapCache(problem.map)
    if collect_labels and judge is None:
        judge = model_judge(problem, model, cache) if model is not None else rule_judge(problem, cache)
    engine = EpisodeEngine(
        problem,
        problem_ref=problem_ref,
        collect_labels=collect_labels,
        judge=judge,
        cache=cache,
        tick_budget=tick_budget,
    )
    commander = GreedySimCommander(problem, cache, patience=human.patience)
    outcome = Outcome.COMPLETED
    while True:
        if engine.done:
            break
        if engine.over_budget:
            outcome = Outcome.ABORTED
            break
        command = commander.next_command(engine.state)
        if command is not None:
            engine.offer_command(command)
        moved = engine.robot_step()
        if moved is None and command is None:
            outcome = Outcome.ABORTED  # nobody can act: stuck episode
            break
        if delay_ms:
            time.sleep(delay_ms / 1000.0)
    return engine.build_trace(outcome, TraceSource.SIMULATED)


# ---------------------------------------------------------------------------
# Replanning against observed behavior

def _consume_prefix(
    problem: Problem,
    model,
    observed: Sequence[Action],
    plan_actions: List[Action],
    state: TeamState,
    node_budget: int,
):
    """Walk observed actions against the predicted plan, replanning at each
    mismatch. Returns (plan_actions, next_idx, state, replans, ended_on_replan)."""
    j = 0
    replans = 0
    ended_on_replan = False
    for action in observed:
        if j < len(plan_actions) and plan_actions[j] == action:
            state = apply_action(state, action, problem.map)
            j += 1
            ended_on_replan = False
            continue
        replans += 1
        ended_on_replan = True
        state = apply_action(state, action, problem.map)
        fresh = plan_explicable(problem, model, start_state=state, node_budget=node_budget)
        plan_actions = [action] + list(fresh.plan)
        j = 1
    return plan_actions, j, state, replans, ended_on_replan


def predict_and_replan(
    problem: Problem,
    model,
    observed_prefix: CompositePlan,
    current: Optional[PlanResult] = None,
    start_state: Optional[TeamState] = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> PlanResult:
    """Reconcile the predicted explicable plan with observed actions.

    While observations match the prediction, the unchanged remainder comes
    back. When an observed action (a human command, in this domain) departs
    from the prediction, the plan is recomputed from the post-observation
    state and anchored on the observed action, so its first human action is
    exactly the command that was seen.
    """
    origin = start_state if start_state is not None else problem.initial_state()
    if current is None:
        current = plan_explicable(problem, model, start_state=origin, node_budget=node_budget)
    plan_actions, j, state, replans, ended_on_replan = _consume_prefix(
        problem, model, list(observed_prefix), list(current.plan), origin, node_budget
    )
    start_idx = j - 1 if ended_on_replan else j
    remainder = CompositePlan.of(plan_actions[start_idx:])
    score_origin = state
    if ended_on_replan:
        # remainder starts at the observed command, one action earlier
        score_origin = _state_before_last(problem, origin, observed_prefix)
    cache = MapCache(problem.map)
    return PlanResult(
        plan=remainder,
        cost=float(len(remainder)),
        explicability_score=_score_plan(remainder, problem, model, start_state=score_origin, cache=cache),
        nodes_expanded=0,
    )


def _state_before_last(problem: Problem, origin: TeamState, observed: CompositePlan) -> TeamState:
    state = origin
    for action in list(observed)[:-1]:
        state = apply_action(state, action, problem.map)
    return state


class ReplanController:
    """Keeps a live explicable-plan prediction during an episode.

    Feed every executed action through observe(); the controller replans
    whenever the observation departs from its prediction and counts how
    often that happened.
    """

    def __init__(self, problem: Problem, model, node_budget: int = DEFAULT_NODE_BUDGET):
        self.problem = problem
        self.model = model
        self.node_budget = node_budget
        self.state = problem.initial_state()
        self.initial_plan = plan_explicable(problem, model, node_budget=node_budget).plan
        self._remainder: List[Action] = list(self.initial_plan)
        self.replans = 0
        self.last_replan_plan: Optional[CompositePlan] = None

    @property
    def remainder(self) -> List[Action]:
        return list(self._remainder)

    def next_action(self) -> Optional[Action]:
        return self._remainder[0] if self._remainder else None

    def observe(self, action: Action):
        plan_actions, j, state, replans, _ = _consume_prefix(
            self.problem, self.model, [action], self._remainder, self.state, self.node_budget
        )
        self.state = state
        self._remainder = plan_actions[j:]
        self.replans += replans
        if replans:
            self.last_replan_plan = CompositePlan.of(plan_actions[j - 1 :])
