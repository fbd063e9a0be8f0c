import assert from "node:assert/strict";
import { test } from "node:test";

import { buildClientMessage, parseServerMessage } from "../src/protocol.js";

test("parses a valid STATE frame", () => {
  const msg = parseServerMessage(
    JSON.stringify({
      type: "STATE",
      payload: { tick: 3, robot_pos: [1, 2], visited: [0], current_command: null, grid_delta: {} },
      seq: 4,
    }),
  );
  assert.equal(msg.type, "STATE");
  assert.equal(msg.seq, 4);
  if (msg.type === "STATE") {
    assert.deepEqual(msg.payload.robot_pos, [1, 2]);
  }
});

test("rejects malformed frames", () => {
  assert.throws(() => parseServerMessage("garbage"), /unparseable/);
  assert.throws(() => parseServerMessage("[1,2]"), /not an object/);
  assert.throws(() => parseServerMessage('{"type":"NOPE","payload":{},"seq":1}'), /unknown/);
  assert.throws(() => parseServerMessage('{"type":"STATE","payload":{}}'), /seq/);
  assert.throws(() => parseServerMessage('{"type":"STATE","payload":{},"seq":0}'), /seq/);
  assert.throws(() => parseServerMessage('{"type":"STATE","seq":2}'), /payload/);
});

test("builds client frames with explicit sequence numbers", () => {
  const frame = JSON.parse(buildClientMessage("COMMAND", { room: 2 }, 7));
  assert.deepEqual(frame, { type: "COMMAND", payload: { room: 2 }, seq: 7 });
});
