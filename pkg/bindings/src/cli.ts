/**
 * Locating and invoking the core CLI.
 *
 * Everything in this package reaches the core through its command line and
 * file formats; nothing links against it.  The command is taken from the
 * SUBGRID_CLI environment variable (whitespace-separated argv) and defaults
 * to `python3 -m subgrid`.
 */

import { spawnSync } from "node:child_process";

import { SubgridError } from "./errors.js";

export function cliCommand(): string[] {
  const env = process.env.SUBGRID_CLI;
  const parts = env ? env.split(/\s+/).filter((p) => p.length > 0) : ["python3", "-m", "subgrid"];
  if (parts.length === 0) {
    throw new SubgridError("SUBGRID_CLI is set but empty");
  }
  return parts;
}

export interface RunOptions {
  cwd?: string;
}

/**
 * Run one CLI command and return its stdout.
 *
 * A non-zero exit becomes a SubgridError carrying the core's stderr, which
 * is where it prints its own error messages.  Each call is an independent
 * process; there is no shared state between calls, so concurrent use from
 * worker threads is safe.
 */
export function runCli(args: string[], options: RunOptions = {}): string {
  const command = cliCommand();
  const result = spawnSync(command[0]!, [...command.slice(1), ...args], {
    cwd: options.cwd,
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error) {
    throw new SubgridError(`cannot run ${command.join(" ")}: ${result.error.message}`);
  }
  if (result.status !== 0) {
    const detail = (result.stderr || result.stdout || "").trim();
    throw new SubgridError(
      detail || `CLI exited with status ${result.status}: ${args.join(" ")}`
    );
  }
  return result.stdout;
}

/** Run a CLI command with --json appended and parse the structured reply. */
export function runCliJson(args: string[], options: RunOptions = {}): Record<string, unknown> {
  const out = runCli([...args, "--json"], options);
  try {
    return JSON.parse(out) as Record<string, unknown>;
  } catch (exc) {
    throw new SubgridError(`CLI emitted unparseable JSON: ${(exc as Error).message}`);
  }
}
