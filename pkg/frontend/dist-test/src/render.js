// DOM rendering: a pure function of the view state. The grid shows the
// human view only; hidden obstacles never reach the client at all.
import { isRoomClickable } from "./state.js";
function cellKey(r, c) {
    return `${r},${c}`;
}
export function render(root, view, callbacks) {
    root.replaceChildren();
    const status = document.createElement("div");
    status.className = `status status-${view.connection}`;
    if (view.connection === "lost") {
        status.textContent = `connection lost${view.lastError ? `: ${view.lastError}` : ""}`;
    }
    else if (view.connection === "ended") {
        status.textContent = `episode ${view.outcome ?? "over"}${view.traceId ? ` (trace ${view.traceId})` : ""}`;
    }
    else if (view.connection === "connecting") {
        status.textContent = "connecting…";
    }
    else {
        const target = view.currentCommand ?? view.optimisticCommand;
        status.textContent =
            target === null ? "click a room to send the robot" : `robot heading to room ${target}`;
    }
    root.appendChild(status);
    if (view.lastError && view.connection === "ready") {
        const note = document.createElement("div");
        note.className = "note";
        note.textContent = view.lastError;
        root.appendChild(note);
    }
    if (!view.grid) {
        return;
    }
    const obstacles = new Set(view.grid.visible.map(([r, c]) => cellKey(r, c)));
    const rooms = new Map(view.grid.rooms.map((room) => [cellKey(room.cell[0], room.cell[1]), room]));
    const commandCells = new Set(view.commandCells.map(([r, c]) => cellKey(r, c)));
    const table = document.createElement("table");
    table.className = "grid";
    for (let r = 0; r < view.grid.height; r++) {
        const row = document.createElement("tr");
        for (let c = 0; c < view.grid.width; c++) {
            const cell = document.createElement("td");
            const key = cellKey(r, c);
            cell.className = "cell";
            if (obstacles.has(key)) {
                cell.classList.add("obstacle");
            }
            if (commandCells.has(key)) {
                cell.classList.add("commanded-here");
            }
            const room = rooms.get(key);
            if (room) {
                cell.classList.add("room");
                cell.textContent = String(room.id);
                if (view.visited.includes(room.id)) {
                    cell.classList.add("room-visited");
                }
                else if (room.id === view.currentCommand) {
                    cell.classList.add("room-target");
                }
                else if (room.id === view.optimisticCommand) {
                    cell.classList.add("room-target-pending");
                }
                if (isRoomClickable(view, room.id)) {
                    cell.classList.add("clickable");
                    cell.addEventListener("click", () => callbacks.onRoomClick(room.id));
                }
            }
            if (view.robot && view.robot[0] === r && view.robot[1] === c) {
                cell.classList.add("robot");
                if (!room) {
                    cell.textContent = "R";
                }
            }
            row.appendChild(cell);
        }
        table.appendChild(row);
    }
    root.appendChild(table);
    if (view.pendingLabel) {
        const prompt = document.createElement("div");
        prompt.className = "label-prompt";
        const action = view.pendingLabel.action;
        const text = document.createElement("span");
        text.textContent = `Robot moved ${action.direction ?? "?"}. Does this action make sense?`;
        prompt.appendChild(text);
        for (const [caption, value] of [
            ["Yes", true],
            ["No", false],
        ]) {
            const button = document.createElement("button");
            button.textContent = caption;
            button.addEventListener("click", () => callbacks.onLabelAnswer(value));
            prompt.appendChild(button);
        }
        root.appendChild(prompt);
    }
}
