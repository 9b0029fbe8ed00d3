/**
 * Reference model server for the bridge protocol.
 *
 * Usage: node dist/server.js --model <artifact.json>
 *
 * Emits the ready message, then answers predict/fit requests one response
 * per request id, in request order; a shutdown message exits 0. Malformed
 * requests produce an error message and the server stays alive.
 */

import {
  encodeError,
  encodeFitOk,
  encodePrediction,
  encodeReady,
  makeLineParser,
  parseRequest,
} from "./protocol.js";
import { fit, loadModel, predict, type LinearModel } from "./model.js";

function parseArgs(argv: string[]): { modelPath: string } {
  const idx = argv.indexOf("--model");
  if (idx < 0 || idx + 1 >= argv.length) {
    throw new Error("usage: server.js --model <artifact.json>");
  }
  return { modelPath: argv[idx + 1] };
}

function main(): void {
  let model: LinearModel;
  try {
    const { modelPath } = parseArgs(process.argv.slice(2));
    model = loadModel(modelPath); // must succeed before any ready message
  } catch (err) {
    process.stderr.write(`refserver: ${(err as Error).message}\n`);
    process.exit(2);
  }
  const nColumns = model.coef.length;
  process.stdout.write(encodeReady(nColumns, true));

  const parser = makeLineParser((line) => {
    let id: number | null = null;
    try {
      const req = parseRequest(line);
      if (req.type === "shutdown") {
        process.exit(0);
      }
      id = req.id;
      if (req.type === "predict") {
        process.stdout.write(encodePrediction(req.id, predict(model, req.rows)));
      } else {
        model = fit(req.rows, req.targets, nColumns);
        process.stdout.write(encodeFitOk(req.id));
      }
    } catch (err) {
      if (id === null) {
        try {
          const raw = JSON.parse(line);
          if (typeof raw?.id === "number") id = raw.id;
        } catch {
          // not JSON at all; the error stays id-less
        }
      }
      process.stdout.write(encodeError(id, (err as Error).message));
    }
  });

  process.stdin.setEncoding("utf-8");
  process.stdin.on("data", (chunk: string) => parser.push(chunk));
  process.stdin.on("end", () => {
    parser.flush();
    process.exit(0);
  });
}

main();
