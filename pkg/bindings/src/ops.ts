/**
 * High-level operations: each one stages its inputs as files, invokes the
 * core CLI, and reads the outputs back.  All numeric exchange happens
 * through the file formats, so results are bit-identical to driving the
 * CLI by hand on the same inputs.
 */

import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import * as path from "node:path";

import { SubgridError } from "./errors.js";
import { runCli, runCliJson } from "./cli.js";
import {
  readAlignedTensor,
  readCloud,
  readPartition,
  writeAlignedTensor,
  writeCloud,
  writePartition,
  type AlignedTensor,
  type Cloud,
  type Partition,
} from "./formats.js";

export type ResizeMethod = "fft" | "multilinear";

function withTempDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(path.join(tmpdir(), "subgrid-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function flag(value: number): string {
  if (!Number.isFinite(value)) throw new SubgridError(`non-finite argument: ${value}`);
  return String(value);
}

// ---------------------------------------------------------------------------
// file-level operations (paths in, paths out)

export interface SynthOptions {
  dims?: number;
  count?: number;
  /** JSON-compatible cluster list: {center, sigma, weight} entries. */
  clusters?: { center: number[]; sigma: number; weight: number }[];
  background?: number;
  field?: "none" | "smooth";
  fieldSeed?: number;
}

export function synthToFile(seed: number, outPath: string, options: SynthOptions = {}): void {
  const args = ["synth", "--seed", flag(seed), "--out", outPath];
  if (options.dims !== undefined) args.push("--dims", flag(options.dims));
  if (options.count !== undefined) args.push("--count", flag(options.count));
  if (options.clusters !== undefined) args.push("--clusters", JSON.stringify(options.clusters));
  if (options.background !== undefined) args.push("--background", flag(options.background));
  if (options.field !== undefined) args.push("--field", options.field);
  if (options.fieldSeed !== undefined) args.push("--field-seed", flag(options.fieldSeed));
  runCli(args);
}

export interface DecomposeOptions {
  nMax?: number;
}

export function decomposeToFile(
  cloudPath: string,
  n: number,
  outPath: string,
  options: DecomposeOptions = {}
): void {
  const args = ["decompose", "--cloud", cloudPath, "--n", flag(n), "--out", outPath];
  if (options.nMax !== undefined) args.push("--nmax", flag(options.nMax));
  runCli(args);
}

/** Annotate the partition file in place with one grid per leaf. */
export function allocateFile(partitionPath: string, ratio: number): void {
  runCli(["allocate", "--partition", partitionPath, "--ratio", flag(ratio)]);
}

export function forwardInterpToFile(
  cloudPath: string,
  partitionPath: string,
  outPath: string,
  method: ResizeMethod = "fft"
): void {
  runCli([
    "interp",
    "--cloud", cloudPath,
    "--partition", partitionPath,
    "--direction", "forward",
    "--method", method,
    "--out", outPath,
  ]);
}

export function backwardInterpToFile(
  cloudPath: string,
  partitionPath: string,
  gridsPath: string,
  outPath: string,
  method: ResizeMethod = "fft"
): void {
  runCli([
    "interp",
    "--cloud", cloudPath,
    "--partition", partitionPath,
    "--direction", "backward",
    "--grids", gridsPath,
    "--method", method,
    "--out", outPath,
  ]);
}

export interface ExportOptions {
  method?: ResizeMethod;
  workers?: number;
}

export interface ExportPaths {
  inputs: string;
  targets: string;
  partition: string;
}

/** Build aligned input/target tensors from matched cloud file globs. */
export function exportDataset(
  inputsGlob: string,
  targetsGlob: string,
  partitionPath: string,
  outDir: string,
  options: ExportOptions = {}
): ExportPaths {
  const args = [
    "export",
    "--inputs", inputsGlob,
    "--targets", targetsGlob,
    "--partition", partitionPath,
    "--out", outDir,
  ];
  if (options.method !== undefined) args.push("--method", options.method);
  if (options.workers !== undefined) args.push("--workers", flag(options.workers));
  const reply = runCliJson(args);
  return {
    inputs: String(reply.inputs),
    targets: String(reply.targets),
    partition: String(reply.partition),
  };
}

// ---------------------------------------------------------------------------
// object-level operations (typed arrays in, typed arrays out)

export function synthCloud(seed: number, options: SynthOptions = {}): Cloud {
  return withTempDir((dir) => {
    const out = path.join(dir, "cloud.json");
    synthToFile(seed, out, options);
    return readCloud(out);
  });
}

export function decompose(cloud: Cloud, n: number, options: DecomposeOptions = {}): Partition {
  return withTempDir((dir) => {
    const cloudPath = path.join(dir, "cloud.json");
    const outPath = path.join(dir, "part.json");
    writeCloud(cloud, cloudPath);
    decomposeToFile(cloudPath, n, outPath, options);
    return readPartition(outPath);
  });
}

/** Size one grid per leaf; returns the partition with its grid annotations. */
export function allocateShapes(cloud: Cloud, partition: Partition, ratio: number): Partition {
  return withTempDir((dir) => {
    const partPath = path.join(dir, "part.json");
    writePartition(partition, partPath);
    allocateFile(partPath, ratio);
    return readPartition(partPath);
  });
}

/** Scatter point values onto the per-leaf grids, spectrally aligned to a common shape. */
export function forwardInterp(
  cloud: Cloud,
  partition: Partition,
  method: ResizeMethod = "fft"
): AlignedTensor {
  return withTempDir((dir) => {
    const cloudPath = path.join(dir, "cloud.json");
    const partPath = path.join(dir, "part.json");
    const outPath = path.join(dir, "grids.json");
    writeCloud(cloud, cloudPath);
    writePartition(partition, partPath);
    forwardInterpToFile(cloudPath, partPath, outPath, method);
    return readAlignedTensor(outPath);
  });
}

/** Gather a single-sample aligned tensor back to per-point values (count x channels). */
export function backwardInterp(
  cloud: Cloud,
  partition: Partition,
  tensor: AlignedTensor,
  method: ResizeMethod = "fft"
): Float64Array {
  if (tensor.samples !== 1) {
    throw new SubgridError("backward interpolation expects a single-sample tensor");
  }
  return withTempDir((dir) => {
    const cloudPath = path.join(dir, "cloud.json");
    const partPath = path.join(dir, "part.json");
    const gridsPath = path.join(dir, "grids.json");
    const outPath = path.join(dir, "back.json");
    writeCloud(cloud, cloudPath);
    writePartition(partition, partPath);
    writeAlignedTensor(tensor, gridsPath);
    backwardInterpToFile(cloudPath, partPath, gridsPath, outPath, method);
    const back = readCloud(outPath);
    if (back.values === null) {
      throw new SubgridError("backward interpolation returned a valueless cloud");
    }
    return back.values;
  });
}

export interface RoundtripReport {
  ratio: number;
  n: number;
  global: { l2re: number; seconds: number };
  subdomain: { l2re: number; seconds: number };
}

/** Compare global vs. per-subdomain round-trip error at one oversampling ratio. */
export function roundtripErrors(cloud: Cloud, n: number, ratio: number): RoundtripReport {
  return withTempDir((dir) => {
    const cloudPath = path.join(dir, "cloud.json");
    writeCloud(cloud, cloudPath);
    const reply = runCliJson([
      "roundtrip", "--cloud", cloudPath, "--n", flag(n), "--ratio", flag(ratio),
    ]) as unknown as RoundtripReport;
    return reply;
  });
}

/** Stage in-memory cloud pairs as files and export them as aligned tensors. */
export function buildDataset(
  samples: { input: Cloud; target: Cloud }[],
  partition: Partition,
  outDir: string,
  options: ExportOptions = {}
): ExportPaths {
  if (samples.length === 0) throw new SubgridError("no samples to export");
  return withTempDir((dir) => {
    const partPath = path.join(dir, "part.json");
    writePartition(partition, partPath);
    const width = String(samples.length - 1).length;
    samples.forEach((pair, i) => {
      const tag = String(i).padStart(width, "0");
      writeCloud(pair.input, path.join(dir, `in_${tag}.json`));
      writeCloud(pair.target, path.join(dir, `tg_${tag}.json`));
    });
    return exportDataset(
      path.join(dir, "in_*.json"),
      path.join(dir, "tg_*.json"),
      partPath,
      outDir,
      options
    );
  });
}
