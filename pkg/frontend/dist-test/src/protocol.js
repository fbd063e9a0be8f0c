// Wire protocol types and validation. One JSON document per text frame;
// seq numbers are gapless per direction, starting at 1.
const SERVER_TYPES = new Set(["HELLO", "STATE", "LABEL_REQUEST", "EPISODE_END", "ERROR"]);
export function parseServerMessage(raw) {
    let doc;
    try {
        doc = JSON.parse(raw);
    }
    catch (err) {
        throw new Error(`unparseable frame: ${err}`);
    }
    if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
        throw new Error("frame is not an object");
    }
    const msg = doc;
    if (typeof msg.type !== "string" || !SERVER_TYPES.has(msg.type)) {
        throw new Error(`unknown server message type: ${String(msg.type)}`);
    }
    if (typeof msg.seq !== "number" || !Number.isInteger(msg.seq) || msg.seq < 1) {
        throw new Error("seq required");
    }
    if (typeof msg.payload !== "object" || msg.payload === null) {
        throw new Error("payload required");
    }
    return msg;
}
export function buildClientMessage(type, payload, seq) {
    return JSON.stringify({ type, payload, seq });
}
