// Bootstrap: list problems from the service, open a session, wire rendering.
import { render } from "./render.js";
import { SessionClient } from "./session.js";
function serviceBase() {
    const params = new URLSearchParams(window.location.search);
    return params.get("server") ?? "127.0.0.1:8765";
}
async function listProblems(base) {
    const response = await fetch(`http://${base}/problems`);
    if (!response.ok) {
        throw new Error(`GET /problems: ${response.status}`);
    }
    const doc = (await response.json());
    return doc.problems.map((p) => p.id);
}
function start(base, problemId, mode, root) {
    const ws = new WebSocket(`ws://${base}/session`);
    const client = new SessionClient({ send: (d) => ws.send(d), close: () => ws.close() }, {
        problemId,
        mode,
        onChange: (view) => render(root, view, {
            onRoomClick: (room) => client.commandRoom(room),
            onLabelAnswer: (explicable) => client.answerLabel(explicable),
        }),
    });
    ws.onmessage = (event) => client.handleRaw(String(event.data));
    ws.onclose = () => client.handleDisconnect();
    ws.onerror = () => client.handleDisconnect();
}
async function main() {
    const picker = document.getElementById("picker");
    const root = document.getElementById("session");
    const base = serviceBase();
    const select = document.createElement("select");
    try {
        for (const id of await listProblems(base)) {
            const option = document.createElement("option");
            option.value = id;
            option.textContent = id;
            select.appendChild(option);
        }
    }
    catch (err) {
        picker.textContent = `cannot reach service at ${base}: ${err}`;
        return;
    }
    const modeSelect = document.createElement("select");
    for (const mode of ["train", "play"]) {
        const option = document.createElement("option");
        option.value = mode;
        option.textContent = mode;
        modeSelect.appendChild(option);
    }
    const button = document.createElement("button");
    button.textContent = "Start episode";
    button.addEventListener("click", () => {
        picker.style.display = "none";
        start(base, select.value, modeSelect.value, root);
    });
    picker.append("Problem: ", select, " Mode: ", modeSelect, " ", button);
}
main().catch((err) => {
    document.body.textContent = String(err);
});
