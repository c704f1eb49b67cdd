/**
 * Process plumbing: every binding call marshals into the core CLI so
 * all numerics have a single source of truth.
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { CoreError } from "./errors.js";

export function stallocBinary(): string {
  return process.env.STALLOC_BIN ?? "stalloc";
}

export function runStalloc(args: string[]): string {
  const proc = spawnSync(stallocBinary(), args, {
    encoding: "utf-8",
    maxBuffer: 1 << 28,
  });
  if (proc.error) {
    throw new CoreError(
      "core-unavailable",
      `cannot run ${stallocBinary()}: ${proc.error.message} (set STALLOC_BIN?)`
    );
  }
  if (proc.status !== 0) {
    const match = /^error: ([a-z0-9-]+): (.*)$/m.exec(proc.stderr ?? "");
    if (match) {
      throw new CoreError(match[1], match[2]);
    }
    throw new CoreError("internal-error", proc.stderr || `exit status ${proc.status}`);
  }
  return proc.stdout;
}

export function withTempDir<T>(body: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "stalloc-"));
  try {
    return body(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
