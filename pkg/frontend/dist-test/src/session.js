// Session wiring: outbound sequencing, inbound gap checking, state folding.
// The socket is injected so tests can drive the client without a network.
import { buildClientMessage, parseServerMessage } from "./protocol.js";
import { applyServerMessage, initialViewState, isRoomClickable, } from "./state.js";
export class SessionClient {
    view = initialViewState();
    sent = []; // outbound frames, newest last
    outSeq = 0;
    lastServerSeq = 0;
    socket;
    onChange;
    constructor(socket, options) {
        this.socket = socket;
        this.onChange = options.onChange ?? (() => undefined);
        this.send("HELLO", { problem_id: options.problemId, mode: options.mode });
    }
    send(type, payload) {
        this.outSeq += 1;
        const frame = buildClientMessage(type, payload, this.outSeq);
        this.sent.push(frame);
        this.socket.send(frame);
    }
    update(view) {
        this.view = view;
        this.onChange(view);
    }
    handleRaw(raw) {
        let msg;
        try {
            msg = parseServerMessage(raw);
        }
        catch (err) {
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
    handleDisconnect() {
        if (this.view.connection !== "ended") {
            this.update({ ...this.view, connection: "lost" });
        }
    }
    // A room click: ignored when not clickable (visited, active, or no session).
    commandRoom(roomId) {
        if (!isRoomClickable(this.view, roomId)) {
            return false;
        }
        this.send("COMMAND", { room: roomId });
        this.update({ ...this.view, optimisticCommand: roomId });
        return true;
    }
    // Answer the pending judgment prompt.
    answerLabel(explicable) {
        const pending = this.view.pendingLabel;
        if (pending === null) {
            return false;
        }
        this.send("LABEL_RESPONSE", { event_id: pending.eventId, explicable });
        this.update({ ...this.view, pendingLabel: null });
        return true;
    }
    close() {
        this.socket.close();
    }
}
