// Session-service wire protocol: one JSON object per WebSocket text message,
// newline-terminated, with per-direction strictly increasing sequence
// numbers. Every inbound message is validated against its schema before any
// handler sees it.

import { z } from "zod";

export const noteSchema = z.object({
  degree: z.number().int().min(0).max(6),
  onset: z.number().min(0),
  duration: z.number().positive(),
});

export const pieceSchema = z.object({
  id: z.string(),
  title: z.string(),
  tempo: z.number().positive(),
  beats_per_measure: z.number().int().positive(),
  notes: z.array(noteSchema),
});

export const helloPayload = z.object({
  schema: z.number().int(),
  curriculum: z.object({ id: z.string(), pieces: z.array(pieceSchema) }),
  modes: z.array(z.enum(["A", "B", "C", "D"])),
});

export const startPayload = z.object({
  purpose: z.enum(["practice", "free", "pre-exam", "exam", "skip", "stop"]),
  mode: z.enum(["A", "B", "C", "D"]),
  tempo: z.number().positive(),
  piece: pieceSchema,
});

export const maskSchema = z.object({
  played_row: z.number().int().min(0).max(6),
  target_row: z.number().int().min(0).max(6),
  arrow: z.enum(["up", "down", "none"]),
  span: z.tuple([z.number(), z.number()]),
});

export const framePayload = z.object({
  t: z.number(),
  playhead_beats: z.number().nullable(),
  note_statuses: z
    .array(z.enum(["pending", "in-progress", "correct", "incorrect"]))
    .nullable(),
  active_mask: maskSchema.nullable(),
  metronome_beat: z.number().int().nullable(),
});

export const noteResultPayload = z.object({
  note_index: z.number().int().min(0),
  status: z.enum(["correct", "incorrect"]),
});

export const examResultPayload = z.object({
  piece_id: z.string(),
  kind: z.enum(["pre", "randomized"]),
  score: z.number().min(0).max(1),
  skipped: z.boolean().optional(),
  skip_eligible: z.boolean().optional(),
  curriculum: z.object({
    position: z.number().int(),
    status: z.enum(["running", "achieved", "quit"]),
    consecutive_passes: z.number().int(),
    exams_taken: z.number().int(),
  }),
});

export const segmentSchema = z.object({
  start_ms: z.number(),
  end_ms: z.number(),
  pitch: z.number().int().min(0).max(6).nullable(),
});

export const reviewPayload = z.object({
  piece_id: z.string(),
  tempo: z.number().positive(),
  ground_truth: z.array(segmentSchema),
  played: z.array(segmentSchema),
  note_correct: z.array(z.boolean()),
});

export const errorPayload = z.object({ message: z.string() });

export const serverMessage = z.discriminatedUnion("kind", [
  z.object({ seq: z.number().int().positive(), kind: z.literal("hello"), payload: helloPayload }),
  z.object({ seq: z.number().int().positive(), kind: z.literal("start"), payload: startPayload }),
  z.object({ seq: z.number().int().positive(), kind: z.literal("frame"), payload: framePayload }),
  z.object({
    seq: z.number().int().positive(),
    kind: z.literal("note-result"),
    payload: noteResultPayload,
  }),
  z.object({
    seq: z.number().int().positive(),
    kind: z.literal("exam-result"),
    payload: examResultPayload,
  }),
  z.object({ seq: z.number().int().positive(), kind: z.literal("review"), payload: reviewPayload }),
  z.object({ seq: z.number().int().positive(), kind: z.literal("error"), payload: errorPayload }),
]);

export type ServerMessage = z.infer<typeof serverMessage>;
export type HelloPayload = z.infer<typeof helloPayload>;
export type StartAckPayload = z.infer<typeof startPayload>;
export type FramePayload = z.infer<typeof framePayload>;
export type NoteResultPayload = z.infer<typeof noteResultPayload>;
export type ExamResultPayload = z.infer<typeof examResultPayload>;
export type ReviewPayload = z.infer<typeof reviewPayload>;

export type ClientKind = "start" | "fingering";

/** Minimal transport the client runs over; WebSocket or an in-memory mock. */
export interface Transport {
  send(text: string): void;
  onMessage(handler: (text: string) => void): void;
}

export type Handlers = {
  [K in ServerMessage["kind"]]?: (payload: Extract<ServerMessage, { kind: K }>["payload"]) => void;
};

export class ProtocolViolation extends Error {}

/**
 * Client endpoint: numbers outgoing messages, enforces strictly increasing
 * incoming sequence numbers, and rejects anything off-schema. The only
 * messages a client ever sends are `start` and `fingering`.
 */
export class SessionClient {
  private outSeq = 0;
  private lastInSeq = 0;
  private handlers: Handlers = {};
  violations: string[] = [];

  constructor(private transport: Transport) {
    transport.onMessage((text) => this.receive(text));
  }

  on<K extends ServerMessage["kind"]>(
    kind: K,
    handler: (payload: Extract<ServerMessage, { kind: K }>["payload"]) => void,
  ): void {
    this.handlers[kind] = handler as Handlers[K];
  }

  send(kind: ClientKind, payload: unknown): void {
    this.outSeq += 1;
    this.transport.send(JSON.stringify({ seq: this.outSeq, kind, payload }) + "\n");
  }

  startSession(payload: {
    purpose: string;
    piece_id?: string;
    mode?: string;
    tempo?: number;
    resume?: boolean;
  }): void {
    this.send("start", payload);
  }

  sendFingering(t: number, covered: readonly boolean[]): void {
    this.send("fingering", { t, covered: [...covered] });
  }

  private receive(text: string): void {
    let raw: unknown;
    try {
      raw = JSON.parse(text);
    } catch {
      this.violations.push("not JSON");
      return;
    }
    const parsed = serverMessage.safeParse(raw);
    if (!parsed.success) {
      this.violations.push(parsed.error.message);
      return;
    }
    const message = parsed.data;
    if (message.seq <= this.lastInSeq) {
      this.violations.push(`sequence ${message.seq} after ${this.lastInSeq}`);
      return;
    }
    this.lastInSeq = message.seq;
    const handler = this.handlers[message.kind] as
      | ((payload: ServerMessage["payload"]) => void)
      | undefined;
    handler?.(message.payload);
  }
}

/** Browser transport over a WebSocket speaking the NDJSON protocol. */
export class WebSocketTransport implements Transport {
  private handler: ((text: string) => void) | null = null;

  constructor(private ws: WebSocket) {
    ws.onmessage = (event) => {
      if (typeof event.data === "string") this.handler?.(event.data);
    };
  }

  send(text: string): void {
    this.ws.send(text);
  }

  onMessage(handler: (text: string) => void): void {
    this.handler = handler;
  }
}
