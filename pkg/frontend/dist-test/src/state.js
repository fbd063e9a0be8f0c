// View state is a pure fold over the received server messages, so any
// rendering is replayable from the message log.
export function initialViewState() {
    return {
        connection: "connecting",
        problemId: null,
        mode: "play",
        grid: null,
        robot: null,
        visited: [],
        currentCommand: null,
        optimisticCommand: null,
        tick: 0,
        pendingLabel: null,
        commandCells: [],
        outcome: null,
        traceId: null,
        lastError: null,
    };
}
export function applyServerMessage(view, msg) {
    switch (msg.type) {
        case "HELLO": {
            const p = msg.payload;
            return {
                ...view,
                connection: "ready",
                problemId: p.problem_id,
                mode: p.mode,
                grid: p.grid,
                robot: p.state.robot_pos,
                visited: [...p.state.visited],
                currentCommand: p.state.current_command,
                tick: p.state.tick,
            };
        }
        case "STATE": {
            const p = msg.payload;
            const commandCells = [...view.commandCells];
            const commandChanged = p.current_command !== view.currentCommand;
            const robotMoved = view.robot === null || p.robot_pos[0] !== view.robot[0] || p.robot_pos[1] !== view.robot[1];
            if (commandChanged && !robotMoved && p.current_command !== null && view.robot) {
                commandCells.push(view.robot); // a command was received here
            }
            return {
                ...view,
                robot: p.robot_pos,
                visited: [...p.visited],
                currentCommand: p.current_command,
                optimisticCommand: view.optimisticCommand !== null && p.current_command === view.optimisticCommand
                    ? null
                    : view.optimisticCommand,
                tick: p.tick,
                commandCells,
            };
        }
        case "LABEL_REQUEST": {
            if (view.pendingLabel !== null) {
                // protocol invariant: one unanswered request at a time
                return { ...view, lastError: "server sent overlapping label requests", connection: "lost" };
            }
            return {
                ...view,
                pendingLabel: { eventId: msg.payload.event_id, action: msg.payload.action },
            };
        }
        case "EPISODE_END":
            return {
                ...view,
                connection: "ended",
                outcome: msg.payload.outcome,
                traceId: msg.payload.trace_id,
                pendingLabel: null,
            };
        case "ERROR": {
            const next = { ...view, lastError: msg.payload.reason };
            if (msg.payload.fatal) {
                next.connection = "lost";
            }
            else if (view.optimisticCommand !== null) {
                next.optimisticCommand = null; // rejected command: drop the highlight
            }
            return next;
        }
    }
}
export function replayLog(messages) {
    return messages.reduce(applyServerMessage, initialViewState());
}
export function isRoomClickable(view, roomId) {
    if (view.connection !== "ready")
        return false;
    if (view.visited.includes(roomId))
        return false;
    if (roomId === view.currentCommand)
        return false;
    if (roomId === view.optimisticCommand)
        return false; // click already in flight
    return true;
}
