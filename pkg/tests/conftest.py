"""Shared test fixtures: stub labelers, reference oracles, a scripted client."""
import heapq
import json

import pytest

from gridteam.gridworld import View, replay
from gridteam.labeler import Label
from gridteam.paths import MapCache


class ConstantLabeler:
    """Stub: labels every action with one fixed label."""

    def __init__(self, value: Label = Label.EXPLICABLE):
        self.value = value

    def label(self, plan, problem, start_state=None, cache=None):
        return [self.value] * len(plan)


class PresetLabeler:
    """Stub: returns a canned label list regardless of the plan."""

    def __init__(self, labels):
        self.labels = list(labels)

    def label(self, plan, problem, start_state=None, cache=None):
        return list(self.labels)


class RuleLabeler:
    """The synthetic ground-truth rule: a robot move is explicable iff it is
    the next step of the canonical human-view path to the commanded room.
    Human commands are always explicable."""

    def __init__(self):
        self._caches = {}

    def _cache(self, problem):
        key = id(problem.map)
        if key not in self._caches:
            self._caches[key] = MapCache(problem.map)
        return self._caches[key]

    def label(self, plan, problem, start_state=None, cache=None):
        cache = cache or self._cache(problem)
        state = start_state if start_state is not None else problem.initial_state()
        labels = []
        for action, after in zip(plan, replay(plan, problem, start_state=state)):
            if action.is_command:
                labels.append(Label.EXPLICABLE)
            else:
                room_cell = problem.map.room_cell(state.current_command)
                expected = cache.first_step(View.HUMAN, state.robot_pos, room_cell)
                ok = expected is None or action.direction == expected
                labels.append(Label.EXPLICABLE if ok else Label.INEXPLICABLE)
            state = after
        return labels


def dijkstra_distance(blocked_cells, width, height, src, dst):
    """Independent shortest-path oracle (heap Dijkstra, unit weights)."""
    if src == dst:
        return 0
    dist = {src: 0}
    heap = [(0, src)]
    while heap:
        d, (r, c) = heapq.heappop(heap)
        if (r, c) == dst:
            return d
        if d > dist[(r, c)]:
            continue
        for nr, nc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if 0 <= nr < height and 0 <= nc < width and (nr, nc) not in blocked_cells:
                nd = d + 1
                if nd < dist.get((nr, nc), float("inf")):
                    dist[(nr, nc)] = nd
                    heapq.heappush(heap, (nd, (nr, nc)))
    return -1


@pytest.fixture
def rule_labeler():
    return RuleLabeler()


class ScriptedClient:
    """Minimal session-protocol client for integration tests.

    Commands rooms in the given order (waiting for each visit to land) and
    answers every LABEL_REQUEST positively unless told otherwise.
    """

    def __init__(self, ws, judge=None):
        self.ws = ws
        self.judge = judge or (lambda payload: True)
        self.out_seq = 0
        self.server_seqs = []
        self.states = []
        self.label_requests = []
        self.label_responses = 0
        self.errors = []
        self.episode_end = None
        self.hello = None

    async def send(self, mtype, payload):
        self.out_seq += 1
        await self.ws.send(json.dumps({"type": mtype, "payload": payload, "seq": self.out_seq}))

    async def recv(self):
        doc = json.loads(await self.ws.recv())
        self.server_seqs.append(doc["seq"])
        if doc["type"] == "STATE":
            self.states.append(doc["payload"])
        elif doc["type"] == "LABEL_REQUEST":
            self.label_requests.append(doc["payload"])
        elif doc["type"] == "ERROR":
            self.errors.append(doc["payload"])
        elif doc["type"] == "EPISODE_END":
            self.episode_end = doc["payload"]
        elif doc["type"] == "HELLO":
            self.hello = doc["payload"]
        return doc

    async def run_episode(self, problem_id, room_order, mode="train"):
        await self.send("HELLO", {"problem_id": problem_id, "mode": mode})
        doc = await self.recv()
        assert doc["type"] == "HELLO", doc
        pending = list(room_order)
        await self.send("COMMAND", {"room": pending.pop(0)})
        while self.episode_end is None:
            doc = await self.recv()
            if doc["type"] == "LABEL_REQUEST":
                await self.send(
                    "LABEL_RESPONSE",
                    {
                        "event_id": doc["payload"]["event_id"],
                        "explicable": bool(self.judge(doc["payload"])),
                    },
                )
                self.label_responses += 1
            elif doc["type"] == "STATE" and pending:
                visited = doc["payload"]["visited"]
                if doc["payload"]["current_command"] is None and pending[0] not in visited:
                    await self.send("COMMAND", {"room": pending.pop(0)})
        return self.episode_end
