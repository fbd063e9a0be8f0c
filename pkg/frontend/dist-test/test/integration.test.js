// End-to-end: the compiled client drives a real gridteam service over its
// wire protocol, the way the browser UI would. Skipped when python3 or the
// gridteam package is unavailable, or when WebSocket support is missing
// (run node with --experimental-websocket on Node 20/21).
import assert from "node:assert/strict";
import { spawn, spawnSync } from "node:child_process";
import { test } from "node:test";
import { SessionClient } from "../src/session.js";
const SERVE_SCRIPT = `
import tempfile
from gridteam.datakit import GenConfig, ProblemSet, generate_problem
from gridteam.service import run_service

problem = generate_problem(17, GenConfig(grid_w=6, grid_h=6, n_rooms=2, n_hidden=1))
pset = ProblemSet(split="TEST", items=[("demo", problem)])
run_service(pset, tempfile.mkdtemp(), port=0, delay_ms=0, timeout_s=10.0, single_session=True)
`;
function pythonAvailable() {
    const probe = spawnSync("python3", ["-c", "import gridteam"], { timeout: 20_000 });
    return probe.status === 0;
}
const haveWebSocket = typeof globalThis.WebSocket === "function";
test("compiled client completes a train episode against the real service", { skip: !haveWebSocket || !pythonAvailable() }, async () => {
    const server = spawn("python3", ["-c", SERVE_SCRIPT], { stdio: ["ignore", "pipe", "pipe"] });
    try {
        const port = await new Promise((resolve, reject) => {
            let buffer = "";
            const timer = setTimeout(() => reject(new Error("service never announced a port")), 20_000);
            server.stdout.on("data", (chunk) => {
                buffer += chunk.toString();
                const match = buffer.match(/ws:\/\/127\.0\.0\.1:(\d+)/);
                if (match) {
                    clearTimeout(timer);
                    resolve(Number(match[1]));
                }
            });
            server.on("exit", () => reject(new Error("service exited early")));
        });
        const WS = globalThis.WebSocket;
        const ws = new WS(`ws://127.0.0.1:${port}/session`);
        await new Promise((resolve, reject) => {
            ws.onopen = () => resolve();
            ws.onerror = () => reject(new Error("socket failed to open"));
        });
        const result = await new Promise((resolve, reject) => {
            const timer = setTimeout(() => reject(new Error("episode never finished")), 30_000);
            const client = new SessionClient({ send: (d) => ws.send(d), close: () => ws.close() }, {
                problemId: "demo",
                mode: "train",
                onChange: (view) => {
                    if (view.connection === "ended") {
                        clearTimeout(timer);
                        resolve(view);
                        return;
                    }
                    if (view.connection === "lost") {
                        clearTimeout(timer);
                        reject(new Error(view.lastError ?? "connection lost"));
                        return;
                    }
                    // operator behavior: answer prompts, command the next room
                    if (view.pendingLabel) {
                        queueMicrotask(() => client.answerLabel(true));
                        return;
                    }
                    if (view.grid && view.currentCommand === null && view.optimisticCommand === null) {
                        const next = view.grid.rooms.find((room) => !view.visited.includes(room.id));
                        if (next) {
                            queueMicrotask(() => client.commandRoom(next.id));
                        }
                    }
                },
            });
            ws.onmessage = (event) => client.handleRaw(String(event.data));
            ws.onclose = () => client.handleDisconnect();
        });
        assert.equal(result.outcome, "COMPLETED");
        assert.ok(result.traceId);
        assert.equal(result.visited.length, 2);
        ws.close();
    }
    finally {
        server.kill();
    }
});
