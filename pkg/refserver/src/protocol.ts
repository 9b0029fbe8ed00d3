/**
 * Bridge wire protocol: one JSON object per line, UTF-8, stdin/stdout.
 * Responses preserve the field order {type, id, ...} so transcripts are
 * byte-reproducible.
 */

export interface PredictRequest {
  type: "predict";
  id: number;
  rows: number[][];
}

export interface FitRequest {
  type: "fit";
  id: number;
  rows: number[][];
  targets: number[];
}

export interface ShutdownRequest {
  type: "shutdown";
}

export type Request = PredictRequest | FitRequest | ShutdownRequest;

export function encodeReady(nColumns: number, trainable: boolean): string {
  return JSON.stringify({ type: "ready", n_columns: nColumns, trainable }) + "\n";
}

export function encodePrediction(id: number, values: number[]): string {
  return JSON.stringify({ type: "prediction", id, values }) + "\n";
}

export function encodeFitOk(id: number): string {
  return JSON.stringify({ type: "fit_ok", id }) + "\n";
}

export function encodeError(id: number | null, message: string): string {
  return JSON.stringify({ type: "error", id, message }) + "\n";
}

/** Incremental line splitter for chunked stdin. */
export function makeLineParser(onLine: (line: string) => void) {
  let buffer = "";
  return {
    push(chunk: string) {
      buffer += chunk;
      for (;;) {
        const idx = buffer.indexOf("\n");
        if (idx < 0) break;
        const line = buffer.slice(0, idx);
        buffer = buffer.slice(idx + 1);
        if (line.trim()) onLine(line);
      }
    },
    flush() {
      const line = buffer.trim();
      buffer = "";
      if (line) onLine(line);
    },
  };
}

export function parseRequest(line: string): Request {
  let msg: unknown;
  try {
    msg = JSON.parse(line);
  } catch {
    throw new Error(`invalid JSON: ${line.slice(0, 120)}`);
  }
  if (typeof msg !== "object" || msg === null || typeof (msg as any).type !== "string") {
    throw new Error("message must be an object with a string 'type'");
  }
  const m = msg as any;
  if (m.type === "shutdown") return { type: "shutdown" };
  if (typeof m.id !== "number") {
    throw new Error(`'${m.type}' request is missing a numeric id`);
  }
  if (m.type === "predict") {
    if (!Array.isArray(m.rows)) throw new Error("predict needs a 'rows' array");
    return { type: "predict", id: m.id, rows: m.rows };
  }
  if (m.type === "fit") {
    if (!Array.isArray(m.rows) || !Array.isArray(m.targets)) {
      throw new Error("fit needs 'rows' and 'targets' arrays");
    }
    return { type: "fit", id: m.id, rows: m.rows, targets: m.targets };
  }
  throw new Error(`unsupported type '${m.type}'`);
}
