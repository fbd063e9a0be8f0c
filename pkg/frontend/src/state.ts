// View state is a pure fold over the received server messages, so any
// rendering is replayable from the message log.

import type { ActionDoc, GridDoc, ServerMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "ready" | "ended" | "lost";

export interface PendingLabel {
  eventId: number;
  action: ActionDoc;
}

export interface ViewState {
  connection: ConnectionStatus;
  problemId: string | null;
  mode: "train" | "play";
  grid: GridDoc | null;
  robot: [number, number] | null;
  visited: number[];
  currentCommand: number | null;
  optimisticCommand: number | null; // clicked but not yet confirmed by STATE
  tick: number;
  pendingLabel: PendingLabel | null;
  commandCells: [number, number][]; // robot cells where commands took effect
  outcome: string | null;
  traceId: string | null;
  lastError: string | null;
}

export function initialViewState(): ViewState {
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

export function applyServerMessage(view: ViewState, msg: ServerMessage): ViewState {
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
      const robotMoved =
        view.robot === null || p.robot_pos[0] !== view.robot[0] || p.robot_pos[1] !== view.robot[1];
      if (commandChanged && !robotMoved && p.current_command !== null && view.robot) {
        commandCells.push(view.robot); // a command was received here
      }
      return {
        ...view,
        robot: p.robot_pos,
        visited: [...p.visited],
        currentCommand: p.current_command,
        optimisticCommand:
          view.optimisticCommand !== null && p.current_command === view.optimisticCommand
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
      const next: ViewState = { ...view, lastError: msg.payload.reason };
      if (msg.payload.fatal) {
        next.connection = "lost";
      } else if (view.optimisticCommand !== null) {
        next.optimisticCommand = null; // rejected command: drop the highlight
      }
      return next;
    }
  }
}

export function replayLog(messages: ServerMessage[]): ViewState {
  return messages.reduce(applyServerMessage, initialViewState());
}

export function isRoomClickable(view: ViewState, roomId: number): boolean {
  if (view.connection !== "ready") return false;
  if (view.visited.includes(roomId)) return false;
  if (roomId === view.currentCommand) return false;
  if (roomId === view.optimisticCommand) return false; // click already in flight
  return true;
}
