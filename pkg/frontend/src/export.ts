/**
 * Headless demo exporter.
 *
 * Plays the built-in demo scene and captures snapshot bundles into run
 * directories:
 *
 *   <out>/clean-000/snap-000 ...    clean runs
 *   <out>/buggy-000/snap-000 ...    runs with the invisible-sprite fault
 *
 * A buggy run keeps reporting the runner as visible in the scene
 * document while the painter drops it, so a downstream pixel check of
 * screenshot against scene flags the run. Exit code 0 on success, 2 on
 * bad usage or write failure.
 */

import { join } from "node:path";
import { parseArgs } from "node:util";

import { CaptureSession } from "./capture";
import { writeBundleDir } from "./bundle";
import type { DemoFault } from "./demo";
import { DemoGame, SplitMix64 } from "./demo";

const USAGE =
  "usage: export --out DIR [--clean-runs N] [--buggy-runs N] [--seed N] " +
  "[--snapshots N] [--stride N]";

function positiveInt(name: string, raw: string, minimum = 0): number {
  const value = Number(raw);
  if (!Number.isInteger(value) || value < minimum) {
    throw new Error(`${name} must be an integer >= ${minimum}, got ${raw}`);
  }
  return value;
}

interface ExportPlan {
  out: string;
  cleanRuns: number;
  buggyRuns: number;
  seed: number;
  snapshots: number;
  stride: number;
}

function parsePlan(argv: string[]): ExportPlan {
  const { values } = parseArgs({
    args: argv,
    options: {
      out: { type: "string" },
      "clean-runs": { type: "string", default: "3" },
      "buggy-runs": { type: "string", default: "1" },
      seed: { type: "string", default: "1" },
      snapshots: { type: "string", default: "4" },
      stride: { type: "string", default: "5" },
    },
  });
  if (values.out === undefined) throw new Error(USAGE);
  return {
    out: values.out,
    cleanRuns: positiveInt("--clean-runs", values["clean-runs"]),
    buggyRuns: positiveInt("--buggy-runs", values["buggy-runs"]),
    seed: positiveInt("--seed", values.seed),
    snapshots: positiveInt("--snapshots", values.snapshots, 1),
    stride: positiveInt("--stride", values.stride, 1),
  };
}

const pad3 = (n: number) => String(n).padStart(3, "0");

function exportRun(
  dir: string,
  runId: string,
  seed: bigint,
  fault: DemoFault | null,
  snapshots: number,
  stride: number,
): void {
  const game = new DemoGame(seed, { fault });
  const session = new CaptureSession(game.host(), runId);
  for (let snap = 0; snap < snapshots; snap++) {
    for (let i = 0; i < stride; i++) game.step();
    const bundle = session.freezeAndCapture();
    writeBundleDir(join(dir, `snap-${pad3(snap)}`), bundle);
  }
}

export function main(argv: string[]): number {
  let plan: ExportPlan;
  try {
    plan = parsePlan(argv);
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 2;
  }
  try {
    const seeds = new SplitMix64(plan.seed);
    for (let i = 0; i < plan.cleanRuns; i++) {
      const runId = `clean-${pad3(i)}`;
      exportRun(join(plan.out, runId), runId, seeds.nextU64(), null, plan.snapshots, plan.stride);
    }
    for (let i = 0; i < plan.buggyRuns; i++) {
      const runId = `buggy-${pad3(i)}`;
      const fault: DemoFault = { kind: "invisible", nodeId: "runner" };
      exportRun(join(plan.out, runId), runId, seeds.nextU64(), fault, plan.snapshots, plan.stride);
    }
    process.stdout.write(
      `wrote ${plan.cleanRuns} clean and ${plan.buggyRuns} buggy runs ` +
        `(${plan.snapshots} snapshots each) to ${plan.out}\n`,
    );
    return 0;
  } catch (err) {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    return 2;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
