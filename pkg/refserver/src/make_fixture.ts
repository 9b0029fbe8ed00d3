/**
 * Records the protocol transcript fixture: a scripted request stream, a
 * separator line, then the server's exact byte output. Rerun after any
 * change to response encoding and review the diff.
 */

import { execFileSync } from "child_process";
import { writeFileSync } from "fs";
import { dirname, join } from "path";
import { fileURLToPath } from "url";

const here = dirname(fileURLToPath(import.meta.url));
const root = join(here, "..");

export const SCRIPT = [
  '{"type":"predict","id":1,"rows":[[1,2,3]]}',
  '{"type":"predict","id":2,"rows":[[0,0,0],[4,2,8]]}',
  "this is not json",
  '{"type":"frobnicate","id":3}',
  '{"type":"fit","id":4,"rows":[[1,0,0],[0,1,0],[0,0,1],[1,1,1],[2,1,0]],"targets":[3,0,1.5,2.5,4]}',
  '{"type":"predict","id":5,"rows":[[2,2,2]]}',
  '{"type":"shutdown"}',
].join("\n") + "\n";

function main(): void {
  const out = execFileSync(
    process.execPath,
    [join(root, "dist", "server.js"), "--model", join(root, "fixtures", "model.json")],
    { input: SCRIPT },
  );
  writeFileSync(join(root, "fixtures", "transcript.txt"),
    Buffer.concat([Buffer.from(SCRIPT), Buffer.from("\n===\n"), out]));
  process.stderr.write(`recorded ${out.length} output bytes\n`);
}

main();
