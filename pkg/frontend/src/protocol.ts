// Wire protocol types and validation. One JSON document per text frame;
// seq numbers are gapless per direction, starting at 1.

export type AgentKind = "HUMAN" | "ROBOT";

export interface ActionDoc {
  agent: AgentKind;
  room?: number;
  direction?: string;
}

export interface RoomDoc {
  id: number;
  cell: [number, number];
}

// Human-view map only: the server never sends hidden obstacles.
export interface GridDoc {
  width: number;
  height: number;
  visible: [number, number][];
  rooms: RoomDoc[];
  robot_start: [number, number];
  goal: number[];
}

export interface StatePayload {
  tick: number;
  robot_pos: [number, number];
  visited: number[];
  current_command: number | null;
  grid_delta: Record<string, unknown>;
}

export interface HelloPayload {
  problem_id: string;
  mode: "train" | "play";
  grid: GridDoc;
  state: StatePayload;
  delay_ms: number;
}

export interface LabelRequestPayload {
  event_id: number;
  action: ActionDoc;
}

export interface EpisodeEndPayload {
  outcome: "COMPLETED" | "ABORTED";
  trace_id: string | null;
}

export interface ErrorPayload {
  reason: string;
  fatal: boolean;
}

export type ServerMessage =
  | { type: "HELLO"; payload: HelloPayload; seq: number }
  | { type: "STATE"; payload: StatePayload; seq: number }
  | { type: "LABEL_REQUEST"; payload: LabelRequestPayload; seq: number }
  | { type: "EPISODE_END"; payload: EpisodeEndPayload; seq: number }
  | { type: "ERROR"; payload: ErrorPayload; seq: number };

const SERVER_TYPES = new Set(["HELLO", "STATE", "LABEL_REQUEST", "EPISODE_END", "ERROR"]);

export function parseServerMessage(raw: string): ServerMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(raw);
  } catch (err) {
    throw new Error(`unparseable frame: ${err}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new Error("frame is not an object");
  }
  const msg = doc as { type?: unknown; seq?: unknown; payload?: unknown };
  if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) {
    throw new Error(`unknown server message type: ${String(msg.type)}`);
  }
  if (typeof msg.seq !== "number" || !Number.isInteger(msg.seq) || msg.seq < 1) {
    throw new Error("seq required");
  }
  if (typeof msg.payload !== "object" || msg.payload === null) {
    throw new Error("payload required");
  }
  return msg as ServerMessage;
}

export function buildClientMessage(
  type: "HELLO" | "COMMAND" | "LABEL_RESPONSE",
  payload: Record<string, unknown>,
  seq: number,
): string {
  return JSON.stringify({ type, payload, seq });
}
