#!/usr/bin/env node
/**
 * fsep-export --checkpoint P --data D --out O [--batch 256] [--device auto]
 *
 * Exit codes: 0 success, 1 data/model error, 2 usage error.
 */

import { parseArgs } from "util";

import { CheckpointLoadError, DatasetError } from "./errors";
import { exportBundle } from "./exporter";

export async function runCli(argv: string[]): Promise<number> {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      strict: true,
      options: {
        checkpoint: { type: "string" },
        data: { type: "string" },
        out: { type: "string" },
        batch: { type: "string", default: "256" },
        device: { type: "string", default: "auto" },
      },
    });
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
  const { checkpoint, data, out, batch, device } = parsed.values;
  if (!checkpoint || !data || !out) {
    console.error("error: --checkpoint, --data, and --out are required");
    return 2;
  }
  const batchSize = Number(batch);
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    console.error(`error: --batch must be a positive integer, got ${batch}`);
    return 2;
  }
  if (device !== "auto" && device !== "cpu") {
    console.error(`error: --device must be auto or cpu, got ${device}`);
    return 2;
  }
  try {
    const result = await exportBundle({ checkpoint, data, out, batchSize, device });
    console.log(JSON.stringify(result));
    return 0;
  } catch (err) {
    if (err instanceof CheckpointLoadError || err instanceof DatasetError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

if (require.main === module) {
  runCli(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
