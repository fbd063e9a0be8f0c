import assert from "node:assert/strict";
import { test } from "node:test";

import type { HelloPayload, ServerMessage, StatePayload } from "../src/protocol.js";
import { applyServerMessage, initialViewState, isRoomClickable, replayLog } from "../src/state.js";

function hello(seq = 1): ServerMessage {
  const payload: HelloPayload = {
    problem_id: "demo",
    mode: "train",
    grid: {
      width: 4,
      height: 3,
      visible: [[1, 1]],
      rooms: [
        { id: 0, cell: [0, 3] },
        { id: 1, cell: [2, 0] },
      ],
      robot_start: [0, 0],
      goal: [0, 1],
    },
    state: { tick: 0, robot_pos: [0, 0], visited: [], current_command: null, grid_delta: {} },
    delay_ms: 0,
  };
  return { type: "HELLO", payload, seq };
}

function state(seq: number, partial: Partial<StatePayload>): ServerMessage {
  const payload: StatePayload = {
    tick: 1,
    robot_pos: [0, 0],
    visited: [],
    current_command: null,
    grid_delta: {},
    ...partial,
  };
  return { type: "STATE", payload, seq };
}

test("hello populates the human-view grid without hidden cells", () => {
  const view = applyServerMessage(initialViewState(), hello());
  assert.equal(view.connection, "ready");
  assert.equal(view.grid?.rooms.length, 2);
  // the wire payload has no hidden-obstacle field at all
  assert.ok(!("hidden" in (view.grid as object)));
});

test("command STATE records a yellow cell; moves do not", () => {
  let view = applyServerMessage(initialViewState(), hello());
  view = applyServerMessage(view, state(2, { tick: 1, current_command: 0 }));
  assert.deepEqual(view.commandCells, [[0, 0]]);
  view = applyServerMessage(view, state(3, { tick: 2, robot_pos: [0, 1], current_command: 0 }));
  assert.equal(view.commandCells.length, 1);
  view = applyServerMessage(view, state(4, { tick: 3, robot_pos: [0, 1], current_command: 1 }));
  assert.deepEqual(view.commandCells[1], [0, 1]);
});

test("visited rooms become unclickable; active target unclickable", () => {
  let view = applyServerMessage(initialViewState(), hello());
  assert.ok(isRoomClickable(view, 0));
  view = applyServerMessage(view, state(2, { current_command: 0 }));
  assert.ok(!isRoomClickable(view, 0)); // already the target
  assert.ok(isRoomClickable(view, 1));
  view = applyServerMessage(view, state(3, { tick: 2, robot_pos: [0, 3], visited: [0] }));
  assert.ok(!isRoomClickable(view, 0)); // visited now
});

test("one pending label request at a time", () => {
  let view = applyServerMessage(initialViewState(), hello());
  view = applyServerMessage(view, {
    type: "LABEL_REQUEST",
    payload: { event_id: 0, action: { agent: "ROBOT", direction: "Right" } },
    seq: 2,
  });
  assert.equal(view.pendingLabel?.eventId, 0);
  const broken = applyServerMessage(view, {
    type: "LABEL_REQUEST",
    payload: { event_id: 1, action: { agent: "ROBOT", direction: "Up" } },
    seq: 3,
  });
  assert.equal(broken.connection, "lost");
});

test("episode end and errors update status", () => {
  let view = applyServerMessage(initialViewState(), hello());
  view = applyServerMessage(view, {
    type: "ERROR",
    payload: { reason: "room 0 already visited", fatal: false },
    seq: 2,
  });
  assert.equal(view.connection, "ready");
  assert.match(view.lastError ?? "", /visited/);
  view = applyServerMessage(view, {
    type: "EPISODE_END",
    payload: { outcome: "COMPLETED", trace_id: "trace-000001" },
    seq: 3,
  });
  assert.equal(view.connection, "ended");
  assert.equal(view.outcome, "COMPLETED");
});

test("rendering state is a pure function of the message log", () => {
  const log: ServerMessage[] = [
    hello(),
    state(2, { tick: 1, current_command: 1 }),
    state(3, { tick: 2, robot_pos: [1, 0], current_command: 1 }),
    {
      type: "LABEL_REQUEST",
      payload: { event_id: 0, action: { agent: "ROBOT", direction: "Down" } },
      seq: 4,
    },
  ];
  assert.deepEqual(replayLog(log), replayLog(log));
  const incremental = log.reduce(applyServerMessage, initialViewState());
  assert.deepEqual(replayLog(log), incremental);
});
