"""Problem generation, file formats, augmentation, and the evaluation harness.

All persisted documents are versioned JSON (single-document files) or JSON
Lines (traces, corpora). Serialization is canonical -- sorted keys, fixed
separators -- so identical inputs produce byte-identical artifacts.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidMap, InvalidPermutation, MissingTrace, ParseError, Unsatisfiable
from .episode import Outcome, Trace, TraceEvent, TraceSource
from .gridworld import (
    Action,
    Agent,
    CompositePlan,
    Direction,
    GridMap,
    Problem,
    TeamState,
    View,
)
from .labeler import Label, LabelerModel, JudgedSequence, extract_features
from .paths import MapCache
from .planner import DEFAULT_NODE_BUDGET, plan_baseline, plan_explicable

FORMAT_VERSION = 1

PLAN_TYPE_EXPLICABLE = "EXPLICABLE"
PLAN_TYPE_BASELINE = "BASELINE"
PLAN_TYPE_HUMAN = "HUMAN"

_DISPLAY_NAMES = {
    PLAN_TYPE_EXPLICABLE: "Explicable plan",
    PLAN_TYPE_BASELINE: "Cost-only baseline",
    PLAN_TYPE_HUMAN: "Human",
}


# ---------------------------------------------------------------------------
# Problem generation

@dataclass
class GenConfig:
    grid_w: int = 10
    grid_h: int = 10
    n_rooms: int = 4
    n_visible: Optional[int] = None  # None: draw uniformly from 2..5
    n_hidden: int = 2
    alpha: float = 1.0
    require_divergence: bool = False  # keep only maps where hidden cells matter

    def __post_init__(self):
        if not 0 <= self.n_hidden <= 3:
            raise ValueError("n_hidden must be within 0..3")


@dataclass
class ProblemSet:
    split: str
    items: List[Tuple[str, Problem]] = field(default_factory=list)

    def __post_init__(self):
        ids = [pid for pid, _ in self.items]
        if len(ids) != len(set(ids)):
            raise ValueError("problem ids must be unique")

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def ids(self) -> List[str]:
        return [pid for pid, _ in self.items]

    def get(self, pid: str) -> Problem:
        for candidate, problem in self.items:
            if candidate == pid:
                return problem
        raise KeyError(f"no problem {pid}")


def _views_diverge(grid_map: GridMap) -> bool:
    cache = MapCache(grid_map)
    anchors = [grid_map.robot_start] + [cell for _, cell in grid_map.rooms]
    for src in anchors:
        for _, cell in grid_map.rooms:
            if src == cell:
                continue
            if cache.distance(View.HUMAN, src, cell) < cache.distance(View.TRUE, src, cell):
                return True
    return False


def generate_problem(seed: int, config: GenConfig = GenConfig()) -> Problem:
    """Deterministically sample a valid problem; rejection-sample placements
    until the map invariants (and optional view divergence) hold."""
    rng = random.Random(seed)
    cells = [(r, c) for r in range(config.grid_h) for c in range(config.grid_w)]
    for _ in range(10_000):
        n_visible = config.n_visible if config.n_visible is not None else rng.randint(2, 5)
        need = config.n_rooms + 1 + n_visible + config.n_hidden
        if need > len(cells):
            raise Unsatisfiable("grid too small for the requested layout")
        picks = rng.sample(cells, need)
        rooms = tuple((i, picks[i]) for i in range(config.n_rooms))
        start = picks[config.n_rooms]
        visible = frozenset(picks[config.n_rooms + 1 : config.n_rooms + 1 + n_visible])
        hidden = frozenset(picks[config.n_rooms + 1 + n_visible :])
        try:
            grid_map = GridMap(
                width=config.grid_w,
                height=config.grid_h,
                visible_obstacles=visible,
                hidden_obstacles=hidden,
                rooms=rooms,
                robot_start=start,
            )
        except InvalidMap:
            continue
        if config.require_divergence and not _views_diverge(grid_map):
            continue
        return Problem(
            map=grid_map,
            goal=grid_map.room_ids,
            alpha=config.alpha,
            notes=f"seed={seed}",
        )
    raise Unsatisfiable(f"no valid placement after 10000 rounds (seed={seed})")


def generate_problem_set(
    seed: int, count: int, split: str = "TRAIN", config: GenConfig = GenConfig()
) -> ProblemSet:
    items = []
    for i in range(count):
        pid = f"{split.lower()}-{i:02d}"
        items.append((pid, generate_problem(seed * 100_003 + i, config)))
    return ProblemSet(split=split, items=items)


# ---------------------------------------------------------------------------
# Permutation augmentation

def permute_trace(trace: Trace, problem: Problem, permutation: Dict[int, int]) -> Tuple[Trace, Problem]:
    """Relabel room ids in a trace and its problem; geometry and labels stay.

    permutation maps old room id -> new room id and must be a bijection on
    the problem's room ids.
    """
    ids = sorted(problem.map.room_ids)
    if sorted(permutation.keys()) != ids or sorted(permutation.values()) != ids:
        raise InvalidPermutation(f"not a bijection on room ids {ids}")

    new_rooms = tuple(
        sorted(((permutation[rid], cell) for rid, cell in problem.map.rooms), key=lambda rc: rc[0])
    )
    new_map = GridMap(
        width=problem.map.width,
        height=problem.map.height,
        visible_obstacles=problem.map.visible_obstacles,
        hidden_obstacles=problem.map.hidden_obstacles,
        rooms=new_rooms,
        robot_start=problem.map.robot_start,
    )
    new_problem = Problem(
        map=new_map,
        goal=frozenset(permutation[g] for g in problem.goal),
        alpha=problem.alpha,
        notes=problem.notes,
    )

    def map_state(state: TeamState) -> TeamState:
        return TeamState(
            robot_pos=state.robot_pos,
            visited=frozenset(permutation[v] for v in state.visited),
            current_command=None if state.current_command is None else permutation[state.current_command],
            tick=state.tick,
        )

    events = []
    for event in trace.events:
        action = event.action
        if action.is_command:
            action = Action.command(permutation[action.room])
        events.append(
            TraceEvent(
                tick=event.tick,
                agent=event.agent,
                action=action,
                label=event.label,
                state_after=map_state(event.state_after),
            )
        )
    new_trace = Trace(
        problem_ref=trace.problem_ref, source=trace.source, outcome=trace.outcome, events=events
    )
    return new_trace, new_problem


def trace_to_judged(trace: Trace, problem: Problem) -> JudgedSequence:
    """Convert a labeled trace into a training sequence.

    Human commands carry no judgment and are filled in as EXPLICABLE; every
    robot event must be labeled.
    """
    plan = trace.plan()
    features = extract_features(plan, problem)
    labels = []
    for event in trace.events:
        if event.agent is Agent.HUMAN:
            labels.append(Label.EXPLICABLE)
        elif event.label is None:
            raise ValueError("robot event without a judgment cannot train the labeler")
        else:
            labels.append(event.label)
    return JudgedSequence(features=features, labels=labels)


def augment(
    corpus: Sequence[Trace],
    problems: Dict[str, Problem],
    n_per_trace: int = 1000,
    seed: int = 0,
) -> List[JudgedSequence]:
    """Originals plus n_per_trace random room-relabelings of every trace,
    all converted to judged sequences. Deterministic under the seed.

    The feature templates never mention room symbols, so the relabeled
    copies are exact duplicates in feature space; the step is kept for
    pipeline fidelity and for future symbol-bearing templates.
    """
    rng = random.Random(seed)
    out: List[JudgedSequence] = []
    for trace in corpus:
        problem = problems[trace.problem_ref]
        out.append(trace_to_judged(trace, problem))
        ids = sorted(problem.map.room_ids)
        for _ in range(n_per_trace):
            shuffled = ids[:]
            rng.shuffle(shuffled)
            permutation = dict(zip(ids, shuffled))
            p_trace, p_problem = permute_trace(trace, problem, permutation)
            out.append(trace_to_judged(p_trace, p_problem))
    return out


# ---------------------------------------------------------------------------
# Evaluation harness

@dataclass
class ReportRow:
    plan_type: str
    ratio: float
    explicable_actions: int
    total_actions: int


@dataclass
class EvalReport:
    rows: List[ReportRow]
    per_scenario: Dict[str, Dict[str, dict]]

    def row(self, plan_type: str) -> ReportRow:
        for row in self.rows:
            if row.plan_type == plan_type:
                return row
        raise KeyError(plan_type)

    def to_text(self) -> str:
        lines = ["Aggregate explicability ratio", "-" * 46]
        for row in self.rows:
            lines.append(f"{_DISPLAY_NAMES[row.plan_type]:<28}{row.ratio:>8.3f}")
        lines.append("")
        types = [row.plan_type for row in self.rows]
        header = f"{'Scenario':<12}" + "".join(f"{_DISPLAY_NAMES[t]:>22}" for t in types)
        lines.append("Per-scenario explicability score")
        lines.append("-" * len(header))
        lines.append(header)
        for pid in sorted(self.per_scenario):
            cells = []
            for t in types:
                entry = self.per_scenario[pid].get(t)
                cells.append(f"{entry['score']:>22.3f}" if entry else f"{'-':>22}")
            lines.append(f"{pid:<12}" + "".join(cells))
        return "\n".join(lines) + "\n"


def _labels_for(plan: CompositePlan, problem: Problem, model: LabelerModel, cache: MapCache) -> List[Label]:
    if len(plan) == 0:
        return []
    return model.label(plan, problem, cache=cache)


def _scenario_entry(labels: List[Label]) -> dict:
    explicable = sum(1 for l in labels if l is Label.EXPLICABLE)
    total = len(labels)
    return {
        "score": explicable / total if total else 1.0,
        "explicable_actions": explicable,
        "total_actions": total,
        "labels": [l.value for l in labels],
    }


def evaluate(
    test: ProblemSet,
    model: LabelerModel,
    human_traces: Optional[Sequence[Trace]] = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> EvalReport:
    """Plan every test problem both ways, label with the model, aggregate.

    Passing human_traces adds a HUMAN row scored identically from recorded
    plans; passing an empty list raises MissingTrace.
    """
    if human_traces is not None and len(human_traces) == 0:
        raise MissingTrace("human row requested but no traces supplied")

    per_scenario: Dict[str, Dict[str, dict]] = {}
    totals = {PLAN_TYPE_EXPLICABLE: [0, 0], PLAN_TYPE_BASELINE: [0, 0]}
    for pid, problem in test:
        cache = MapCache(problem.map)
        explicable = plan_explicable(problem, model, node_budget=node_budget)
        baseline = plan_baseline(problem, model, node_budget=node_budget)
        per_scenario[pid] = {
            PLAN_TYPE_EXPLICABLE: _scenario_entry(_labels_for(explicable.plan, problem, model, cache)),
            PLAN_TYPE_BASELINE: _scenario_entry(_labels_for(baseline.plan, problem, model, cache)),
        }
        for plan_type in (PLAN_TYPE_EXPLICABLE, PLAN_TYPE_BASELINE):
            entry = per_scenario[pid][plan_type]
            totals[plan_type][0] += entry["explicable_actions"]
            totals[plan_type][1] += entry["total_actions"]

    if human_traces is not None:
        for trace in human_traces:
            try:
                problem = test.get(trace.problem_ref)
            except KeyError:
                continue  # trace for a problem outside this set
            cache = MapCache(problem.map)
            entry = _scenario_entry(_labels_for(trace.plan(), problem, model, cache))
            bucket = per_scenario.setdefault(trace.problem_ref, {})
            if PLAN_TYPE_HUMAN in bucket:
                # multiple traces per problem: pool actions
                merged = bucket[PLAN_TYPE_HUMAN]["labels"] + entry["labels"]
                entry = _scenario_entry([Label(v) for v in merged])
            bucket[PLAN_TYPE_HUMAN] = entry
        totals[PLAN_TYPE_HUMAN] = [0, 0]
        for bucket in per_scenario.values():
            if PLAN_TYPE_HUMAN in bucket:
                totals[PLAN_TYPE_HUMAN][0] += bucket[PLAN_TYPE_HUMAN]["explicable_actions"]
                totals[PLAN_TYPE_HUMAN][1] += bucket[PLAN_TYPE_HUMAN]["total_actions"]

    rows = []
    for plan_type in (PLAN_TYPE_EXPLICABLE, PLAN_TYPE_BASELINE, PLAN_TYPE_HUMAN):
        if plan_type not in totals:
            continue
        explicable, total = totals[plan_type]
        rows.append(
            ReportRow(
                plan_type=plan_type,
                ratio=explicable / total if total else 1.0,
                explicable_actions=explicable,
                total_actions=total,
            )
        )
    return EvalReport(rows=rows, per_scenario=per_scenario)


# ---------------------------------------------------------------------------
# Serialization

def _dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _check_version(doc: dict, kind: str):
    version = doc.get("version")
    if version is None:
        raise ParseError(f"{kind} document has no version", field="version")
    if version != FORMAT_VERSION:
        raise ParseError(
            f"{kind} document version {version} unsupported; this build reads version {FORMAT_VERSION}",
            field="version",
        )


def _require(doc: dict, key: str, kind: str):
    if key not in doc:
        raise ParseError(f"{kind} document missing '{key}'", field=key)
    return doc[key]


def problem_to_doc(problem: Problem) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "width": problem.map.width,
        "height": problem.map.height,
        "visible": sorted([list(c) for c in problem.map.visible_obstacles]),
        "hidden": sorted([list(c) for c in problem.map.hidden_obstacles]),
        "rooms": [{"id": rid, "cell": list(cell)} for rid, cell in problem.map.rooms],
        "robot_start": list(problem.map.robot_start),
        "alpha": problem.alpha,
    }
    if problem.goal != problem.map.room_ids:
        doc["goal"] = sorted(problem.goal)
    if problem.notes:
        doc["notes"] = problem.notes
    return doc


def problem_from_doc(doc: dict) -> Problem:
    _check_version(doc, "problem")
    try:
        grid_map = GridMap(
            width=_require(doc, "width", "problem"),
            height=_require(doc, "height", "problem"),
            visible_obstacles={tuple(c) for c in _require(doc, "visible", "problem")},
            hidden_obstacles={tuple(c) for c in _require(doc, "hidden", "problem")},
            rooms=tuple((room["id"], tuple(room["cell"])) for room in _require(doc, "rooms", "problem")),
            robot_start=tuple(_require(doc, "robot_start", "problem")),
        )
        goal = frozenset(doc["goal"]) if "goal" in doc else grid_map.room_ids
        return Problem(
            map=grid_map,
            goal=goal,
            alpha=_require(doc, "alpha", "problem"),
            notes=doc.get("notes", ""),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"problem document malformed: {exc}", field=str(exc)) from exc


def save_problem(problem: Problem, path) -> None:
    Path(path).write_text(_dump(problem_to_doc(problem)))


def load_problem(path) -> Problem:
    return problem_from_doc(_read_json(path))


def problem_set_to_doc(pset: ProblemSet) -> dict:
    return {
        "version": FORMAT_VERSION,
        "split": pset.split,
        "problems": [dict(problem_to_doc(p), id=pid) for pid, p in pset.items],
    }


def problem_set_from_doc(doc: dict) -> ProblemSet:
    _check_version(doc, "problem_set")
    split = _require(doc, "split", "problem_set")
    items = []
    for sub in _require(doc, "problems", "problem_set"):
        pid = _require(sub, "id", "problem_set.problems")
        items.append((pid, problem_from_doc(sub)))
    return ProblemSet(split=split, items=items)


def save_problem_set(pset: ProblemSet, path) -> None:
    Path(path).write_text(_dump(problem_set_to_doc(pset)))


def load_problem_set(path) -> ProblemSet:
    return problem_set_from_doc(_read_json(path))


def _read_json(path) -> dict:
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc


def action_to_doc(action: Action) -> dict:
    if action.is_command:
        return {"agent": action.agent.value, "room": action.room}
    return {"agent": action.agent.value, "direction": action.direction.value}


def action_from_doc(doc: dict) -> Action:
    agent = _require(doc, "agent", "action")
    if agent == Agent.HUMAN.value:
        return Action.command(_require(doc, "room", "action"))
    if agent == Agent.ROBOT.value:
        return Action.move(Direction(_require(doc, "direction", "action")))
    raise ParseError(f"unknown agent {agent!r}", field="agent")


def state_to_doc(state: TeamState) -> dict:
    return {
        "robot_pos": list(state.robot_pos),
        "visited": sorted(state.visited),
        "current_command": state.current_command,
        "tick": state.tick,
    }


def state_from_doc(doc: dict) -> TeamState:
    return TeamState(
        robot_pos=tuple(_require(doc, "robot_pos", "state")),
        visited=frozenset(_require(doc, "visited", "state")),
        current_command=doc.get("current_command"),
        tick=_require(doc, "tick", "state"),
    )


def save_trace(trace: Trace, path) -> None:
    lines = [
        _dump(
            {
                "version": FORMAT_VERSION,
                "kind": "trace",
                "problem_ref": trace.problem_ref,
                "source": trace.source.value,
                "outcome": trace.outcome.value,
            }
        )
    ]
    for event in trace.events:
        lines.append(
            _dump(
                {
                    "tick": event.tick,
                    "agent": event.agent.value,
                    "action": action_to_doc(event.action),
                    "label": None if event.label is None else event.label.value,
                    "state_after": state_to_doc(event.state_after),
                }
            )
        )
    Path(path).write_text("".join(lines))


def load_trace(path) -> Trace:
    lines = [line for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines:
        raise ParseError(f"{path}: empty trace file")
    header = json.loads(lines[0])
    _check_version(header, "trace")
    trace = Trace(
        problem_ref=_require(header, "problem_ref", "trace"),
        source=TraceSource(_require(header, "source", "trace")),
        outcome=Outcome(_require(header, "outcome", "trace")),
        events=[],
    )
    for i, line in enumerate(lines[1:], start=2):
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}:{i}: bad event line: {exc}") from exc
        label_value = doc.get("label")
        trace.events.append(
            TraceEvent(
                tick=_require(doc, "tick", "trace.event"),
                agent=Agent(_require(doc, "agent", "trace.event")),
                action=action_from_doc(_require(doc, "action", "trace.event")),
                label=None if label_value is None else Label(label_value),
                state_after=state_from_doc(_require(doc, "state_after", "trace.event")),
            )
        )
    return trace


def model_to_doc(model: LabelerModel) -> dict:
    return {
        "version": FORMAT_VERSION,
        "feature_index": model.feature_index,
        "weights": [float(w) for w in model.weights],
        "l2_sigma": model.l2_sigma,
        "metadata": model.metadata,
    }


def model_from_doc(doc: dict) -> LabelerModel:
    _check_version(doc, "model")
    return LabelerModel(
        feature_index={str(k): int(v) for k, v in _require(doc, "feature_index", "model").items()},
        weights=np.asarray(_require(doc, "weights", "model"), dtype=np.float64),
        l2_sigma=_require(doc, "l2_sigma", "model"),
        metadata=doc.get("metadata", {}),
    )


def save_model(model: LabelerModel, path) -> None:
    Path(path).write_text(_dump(model_to_doc(model)))


def load_model(path) -> LabelerModel:
    return model_from_doc(_read_json(path))


def report_to_doc(report: EvalReport) -> dict:
    return {
        "version": FORMAT_VERSION,
        "rows": [
            {
                "plan_type": row.plan_type,
                "ratio": row.ratio,
                "explicable_actions": row.explicable_actions,
                "total_actions": row.total_actions,
            }
            for row in report.rows
        ],
        "per_scenario": report.per_scenario,
    }


def report_from_doc(doc: dict) -> EvalReport:
    _check_version(doc, "report")
    rows = [
        ReportRow(
            plan_type=_require(sub, "plan_type", "report.rows"),
            ratio=_require(sub, "ratio", "report.rows"),
            explicable_actions=_require(sub, "explicable_actions", "report.rows"),
            total_actions=_require(sub, "total_actions", "report.rows"),
        )
        for sub in _require(doc, "rows", "report")
    ]
    return EvalReport(rows=rows, per_scenario=_require(doc, "per_scenario", "report"))


def save_report(report: EvalReport, path) -> None:
    Path(path).write_text(_dump(report_to_doc(report)))


def load_report(path) -> EvalReport:
    return report_from_doc(_read_json(path))


def save_corpus(corpus: Sequence[JudgedSequence], path) -> None:
    lines = [_dump({"version": FORMAT_VERSION, "kind": "corpus", "count": len(corpus)})]
    for seq in corpus:
        lines.append(
            _dump(
                {
                    "features": seq.features,
                    "labels": [l.value for l in seq.labels],
                }
            )
        )
    Path(path).write_text("".join(lines))


def load_corpus(path) -> List[JudgedSequence]:
    lines = [line for line in Path(path).read_text().splitlines() if line.strip()]
    if not lines:
        raise ParseError(f"{path}: empty corpus file")
    header = json.loads(lines[0])
    _check_version(header, "corpus")
    out = []
    for line in lines[1:]:
        doc = json.loads(line)
        out.append(
            JudgedSequence(
                features=[{str(k): float(v) for k, v in vec.items()} for vec in _require(doc, "features", "corpus")],
                labels=[Label(v) for v in _require(doc, "labels", "corpus")],
            )
        )
    return out


# ---------------------------------------------------------------------------
# Trace store (used by the session service)

class TraceStore:
    """Append-only directory of trace files with sequential ids."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def save(self, trace: Trace) -> str:
        existing = sorted(self.directory.glob("trace-*.jsonl"))
        n = 0
        if existing:
            n = int(existing[-1].stem.split("-")[1]) + 1
        trace_id = f"trace-{n:06d}"
        save_trace(trace, self.directory / f"{trace_id}.jsonl")
        return trace_id

    def load(self, trace_id: str) -> Trace:
        return load_trace(self.directory / f"{trace_id}.jsonl")

    def list(self) -> List[str]:
        return [p.stem for p in sorted(self.directory.glob("trace-*.jsonl"))]


# ---------------------------------------------------------------------------
# Text rendering

def render_map(problem: Problem, view: View = View.TRUE, plan: Optional[CompositePlan] = None) -> str:
    """ASCII map: '.' free, '#' visible obstacle, '!' hidden (true view),
    room digits, 'S' start. With a plan, '*' marks traversed cells and 'C'
    cells where commands were issued."""
    grid = [["." for _ in range(problem.map.width)] for _ in range(problem.map.height)]
    for r, c in problem.map.visible_obstacles:
        grid[r][c] = "#"
    if view is View.TRUE:
        for r, c in problem.map.hidden_obstacles:
            grid[r][c] = "!"
    if plan is not None:
        from .gridworld import replay

        pos = problem.map.robot_start
        for action, state in zip(plan, replay(plan, problem)):
            if action.is_command:
                grid[pos[0]][pos[1]] = "C"
            else:
                pos = state.robot_pos
                if grid[pos[0]][pos[1]] == ".":
                    grid[pos[0]][pos[1]] = "*"
    for rid, (r, c) in problem.map.rooms:
        grid[r][c] = str(rid)
    sr, sc = problem.map.robot_start
    grid[sr][sc] = "S"
    return "\n".join("".join(row) for row in grid) + "\n"
