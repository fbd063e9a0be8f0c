// Session wiring: outbound sequencing, inbound gap checking, state folding.
// The socket is injected so tests can drive the client without a network.

import { buildClientMessage, parseServerMessage } from "./protocol.js";
import {
  applyServerMessage,
  initialViewState,
  isRoomClickable,
  type ViewState,
} from "./state.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
}

export interface SessionOptions {
  problemId: string;
  mode: "train" | "play";
  onChange?: (view: ViewState) => void;
}

export class SessionClient {
  view: ViewState = initialViewState();
  readonly sent: string[] = []; // outbound frames, newest last

  private outSeq = 0;
  private lastServerSeq = 0;
  private readonly socket: SocketLike;
  private readonly onChange: (view: ViewState) => void;

  constructor(socket: SocketLike, options: SessionOptions) {
    this.socket = socket;
    this.onChange = options.onChange ?? (() => undefined);
    this.send("HELLO", { problem_id: options.problemId, mode: options.mode });
  }

  private send(type: "HELLO" | "COMMAND" | "LABEL_RESPONSE", payload: Record<string, unknown>): void {
    this.outSeq += 1;
    const frame = buildClientMessage(type, payload, this.outSeq);
    this.sent.push(frame);
    this.socket.send(frame);
  }

  private update(view: ViewState): void {
    this.view = view;
    this.onChange(view);
  }

  handleRaw(raw: string): void {
    let msg;
    try {
      msg = parseServerMessage(raw);
    } catch (err) {
      this.update({ ...this.view, connection: "lost", lastError: String(err) });
      return;
    }
    if (msg.seq !== this.lastServerSeq + 1) {
      this.update({
        ...this.view,
        connection: "lost",
        lastError: `server seq gap: expected ${this.lastServerSeq + 1}, got ${msg.seq}`,
      });
      return;
    }
    this.lastServerSeq = msg.seq;
    this.update(applyServerMessage(this.view, msg));
  }

  handleDisconnect(): void {
    if (this.view.connection !== "ended") {
      this.update({ ...this.view, connection: "lost" });
    }
  }

  // A room click: ignored when not clickable (visited, active, or no session).
  commandRoom(roomId: number): boolean {
    if (!isRoomClickable(this.view, roomId)) {
      return false;
    }
    this.send("COMMAND", { room: roomId });
    this.update({ ...this.view, optimisticCommand: roomId });
    return true;
  }

  // Answer the pending judgment prompt.
  answerLabel(explicable: boolean): boolean {
    const pending = this.view.pendingLabel;
    if (pending === null) {
      return false;
    }
    this.send("LABEL_RESPONSE", { event_id: pending.eventId, explicable });
    this.update({ ...this.view, pendingLabel: null });
    return true;
  }

  close(): void {
    this.socket.close();
  }
}
