/**
 * Native readers and writers for the core's file formats.
 *
 * Each format is a JSON manifest with, for bulk data, a raw little-endian
 * float64 payload at the manifest path with its suffix swapped to `.bin`
 * (partitions are pure JSON).  Writers emit the same canonical bytes as the
 * core, so a file read here and written back is byte-identical.
 *
 * Payloads are exposed as Float64Array views over the read buffer when the
 * platform is little-endian and the buffer is 8-byte aligned; otherwise one
 * copy is made at the boundary.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { endianness } from "node:os";
import * as path from "node:path";

import { z } from "zod";

import { SubgridError } from "./errors.js";
import { canonicalJson, F64, type JsonValue } from "./pyjson.js";

const DTYPE_TAG = "f64le";

export interface BoundingBox {
  lo: number[];
  hi: number[];
}

/** Points row-major (count x dims); values row-major (count x channels) or null. */
export interface Cloud {
  dims: number;
  count: number;
  channels: number;
  points: Float64Array;
  values: Float64Array | null;
}

export interface TreeNode {
  axis: number;
  /** Points with coordinate <= threshold go left. */
  threshold: number;
  /** Child reference: >= 0 is a node index, < 0 is leaf -(ref + 1). */
  left: number;
  right: number;
}

export interface Leaf {
  pointIds: number[];
  box: BoundingBox;
  unsplittable: boolean;
  /** Grid node counts per axis once allocated; null before allocation. */
  grid: number[] | null;
}

export interface Partition {
  nodes: TreeNode[];
  leaves: Leaf[];
}

export interface Grid {
  shape: number[];
  channels: number;
  box: BoundingBox;
  /** Node values row-major (nodes x channels), nodes in C order over the axes. */
  values: Float64Array;
}

/** Stacked export tensor (samples, leaves, channels, *shape), C order. */
export interface AlignedTensor {
  samples: number;
  leaves: number;
  channels: number;
  shape: number[];
  values: Float64Array;
}

export function payloadPath(manifestPath: string): string {
  const parsed = path.parse(manifestPath);
  return path.join(parsed.dir, parsed.name + ".bin");
}

// ---------------------------------------------------------------------------
// payload plumbing

function readPayload(manifestPath: string, expectedCount: number): Float64Array {
  const p = payloadPath(manifestPath);
  let buf: Buffer;
  try {
    buf = readFileSync(p);
  } catch (exc) {
    throw new SubgridError(`cannot read payload ${p}: ${(exc as Error).message}`);
  }
  if (buf.byteLength !== expectedCount * 8) {
    throw new SubgridError(
      `payload ${p} holds ${buf.byteLength} bytes, expected ${expectedCount * 8}`
    );
  }
  let out: Float64Array;
  if (endianness() === "LE") {
    if (buf.byteOffset % 8 === 0) {
      out = new Float64Array(buf.buffer, buf.byteOffset, expectedCount);
    } else {
      // the read landed unaligned in the buffer pool: one copy
      const aligned = new Uint8Array(buf.byteLength);
      aligned.set(buf);
      out = new Float64Array(aligned.buffer);
    }
  } else {
    const view = new DataView(buf.buffer, buf.byteOffset, buf.byteLength);
    out = new Float64Array(expectedCount);
    for (let i = 0; i < expectedCount; i++) out[i] = view.getFloat64(i * 8, true);
  }
  for (let i = 0; i < out.length; i++) {
    if (!Number.isFinite(out[i]!)) {
      throw new SubgridError(`payload ${p} contains a non-finite value at index ${i}`);
    }
  }
  return out;
}

function writePayload(manifestPath: string, values: Float64Array): void {
  let bytes: Uint8Array;
  if (endianness() === "LE") {
    bytes = new Uint8Array(values.buffer, values.byteOffset, values.byteLength);
  } else {
    const swapped = new DataView(new ArrayBuffer(values.byteLength));
    for (let i = 0; i < values.length; i++) swapped.setFloat64(i * 8, values[i]!, true);
    bytes = new Uint8Array(swapped.buffer);
  }
  writeFileSync(payloadPath(manifestPath), bytes);
}

function readManifest(manifestPath: string): unknown {
  let text: string;
  try {
    text = readFileSync(manifestPath, "utf8");
  } catch (exc) {
    throw new SubgridError(`cannot read manifest ${manifestPath}: ${(exc as Error).message}`);
  }
  try {
    return JSON.parse(text);
  } catch (exc) {
    throw new SubgridError(`cannot read manifest ${manifestPath}: ${(exc as Error).message}`);
  }
}

function parseManifest<T>(schema: z.ZodType<T>, raw: unknown, manifestPath: string): T {
  const result = schema.safeParse(raw);
  if (!result.success) {
    const first = result.error.issues[0];
    const where = first && first.path.length ? ` at ${first.path.join(".")}` : "";
    const what = first ? first.message : "invalid structure";
    throw new SubgridError(`manifest ${manifestPath} is malformed${where}: ${what}`);
  }
  return result.data;
}

const nonNegInt = z.number().int().min(0);
const posInt = z.number().int().min(1);

const boxSchema = z.object({
  lo: z.array(z.number()).min(1),
  hi: z.array(z.number()).min(1),
});

function checkBox(box: BoundingBox, where: string): void {
  if (box.lo.length !== box.hi.length) {
    throw new SubgridError(`${where}: box lo and hi lengths differ`);
  }
  for (let i = 0; i < box.lo.length; i++) {
    if (!(box.lo[i]! <= box.hi[i]!)) {
      throw new SubgridError(`${where}: box lo exceeds hi on axis ${i}`);
    }
  }
}

function boxToJson(box: BoundingBox): JsonValue {
  return {
    lo: box.lo.map((v) => new F64(v)),
    hi: box.hi.map((v) => new F64(v)),
  };
}

// ---------------------------------------------------------------------------
// point clouds

const cloudSchema = z.object({
  dims: posInt,
  count: nonNegInt,
  channels: nonNegInt,
  dtype: z.literal(DTYPE_TAG),
});

export function readCloud(manifestPath: string): Cloud {
  const m = parseManifest(cloudSchema, readManifest(manifestPath), manifestPath);
  const flat = readPayload(manifestPath, m.count * (m.dims + m.channels));
  if (m.channels === 0) {
    return { dims: m.dims, count: m.count, channels: 0, points: flat, values: null };
  }
  // rows interleave coordinates and values; split them apart
  const points = new Float64Array(m.count * m.dims);
  const values = new Float64Array(m.count * m.channels);
  const stride = m.dims + m.channels;
  for (let r = 0; r < m.count; r++) {
    for (let j = 0; j < m.dims; j++) points[r * m.dims + j] = flat[r * stride + j]!;
    for (let c = 0; c < m.channels; c++) values[r * m.channels + c] = flat[r * stride + m.dims + c]!;
  }
  return { dims: m.dims, count: m.count, channels: m.channels, points, values };
}

export function checkCloud(cloud: Cloud): void {
  if (!Number.isSafeInteger(cloud.dims) || cloud.dims < 1) {
    throw new SubgridError("cloud dims must be a positive integer");
  }
  if (!Number.isSafeInteger(cloud.count) || cloud.count < 0) {
    throw new SubgridError("cloud count must be a non-negative integer");
  }
  if (!Number.isSafeInteger(cloud.channels) || cloud.channels < 0) {
    throw new SubgridError("cloud channels must be a non-negative integer");
  }
  if (cloud.points.length !== cloud.count * cloud.dims) {
    throw new SubgridError(
      `cloud points length ${cloud.points.length} != count*dims ${cloud.count * cloud.dims}`
    );
  }
  if (cloud.channels === 0) {
    if (cloud.values !== null && cloud.values.length !== 0) {
      throw new SubgridError("cloud with zero channels must not carry values");
    }
  } else {
    if (cloud.values === null || cloud.values.length !== cloud.count * cloud.channels) {
      throw new SubgridError("cloud values length must be count*channels");
    }
  }
}

export function writeCloud(cloud: Cloud, manifestPath: string): void {
  checkCloud(cloud);
  const manifest: JsonValue = {
    dims: cloud.dims,
    count: cloud.count,
    channels: cloud.channels,
    dtype: DTYPE_TAG,
  };
  writeFileSync(manifestPath, canonicalJson(manifest));
  const stride = cloud.dims + cloud.channels;
  const flat = new Float64Array(cloud.count * stride);
  for (let r = 0; r < cloud.count; r++) {
    for (let j = 0; j < cloud.dims; j++) flat[r * stride + j] = cloud.points[r * cloud.dims + j]!;
    for (let c = 0; c < cloud.channels; c++) {
      flat[r * stride + cloud.dims + c] = cloud.values![r * cloud.channels + c]!;
    }
  }
  writePayload(manifestPath, flat);
}

// ---------------------------------------------------------------------------
// partitions

const nodeSchema = z.object({
  axis: nonNegInt,
  threshold: z.number(),
  left: z.number().int(),
  right: z.number().int(),
});

const leafSchema = z.object({
  point_ids: z.array(nonNegInt),
  box: boxSchema,
  unsplittable: z.boolean(),
  grid: z.array(posInt).min(1).optional(),
});

const partitionSchema = z.object({
  nodes: z.array(nodeSchema),
  leaves: z.array(leafSchema).min(1),
});

export function readPartition(manifestPath: string): Partition {
  const m = parseManifest(partitionSchema, readManifest(manifestPath), manifestPath);
  const annotated = m.leaves.filter((lf) => lf.grid !== undefined).length;
  if (annotated !== 0 && annotated !== m.leaves.length) {
    throw new SubgridError(`partition file ${manifestPath} annotates grids on only some leaves`);
  }
  const leaves: Leaf[] = m.leaves.map((lf, k) => {
    checkBox(lf.box, `partition file ${manifestPath} leaf ${k}`);
    return {
      pointIds: lf.point_ids,
      box: { lo: lf.box.lo, hi: lf.box.hi },
      unsplittable: lf.unsplittable,
      grid: lf.grid ?? null,
    };
  });
  return { nodes: m.nodes, leaves };
}

export function writePartition(partition: Partition, manifestPath: string): void {
  const annotated = partition.leaves.filter((lf) => lf.grid !== null).length;
  if (annotated !== 0 && annotated !== partition.leaves.length) {
    throw new SubgridError("either every leaf carries a grid or none does");
  }
  if (partition.leaves.length === 0) {
    throw new SubgridError("partition must hold at least one leaf");
  }
  const nodes: JsonValue[] = partition.nodes.map((nd) => ({
    axis: nd.axis,
    threshold: new F64(nd.threshold),
    left: nd.left,
    right: nd.right,
  }));
  const leaves: JsonValue[] = partition.leaves.map((lf, k) => {
    checkBox(lf.box, `leaf ${k}`);
    const entry: { [key: string]: JsonValue } = {
      point_ids: lf.pointIds,
      box: boxToJson(lf.box),
      unsplittable: lf.unsplittable,
    };
    if (lf.grid !== null) entry.grid = lf.grid;
    return entry;
  });
  writeFileSync(manifestPath, canonicalJson({ nodes, leaves }));
}

// ---------------------------------------------------------------------------
// grids

const gridSchema = z.object({
  shape: z.array(posInt).min(1),
  channels: posInt,
  box: boxSchema,
  dtype: z.literal(DTYPE_TAG),
});

export function readGrid(manifestPath: string): Grid {
  const m = parseManifest(gridSchema, readManifest(manifestPath), manifestPath);
  checkBox(m.box, `grid file ${manifestPath}`);
  if (m.box.lo.length !== m.shape.length) {
    throw new SubgridError(`grid file ${manifestPath}: box and shape dimensionality differ`);
  }
  const nodes = m.shape.reduce((a, b) => a * b, 1);
  const values = readPayload(manifestPath, nodes * m.channels);
  return { shape: m.shape, channels: m.channels, box: { lo: m.box.lo, hi: m.box.hi }, values };
}

export function writeGrid(grid: Grid, manifestPath: string): void {
  checkBox(grid.box, "grid");
  if (grid.box.lo.length !== grid.shape.length) {
    throw new SubgridError("grid box and shape dimensionality differ");
  }
  const nodes = grid.shape.reduce((a, b) => a * b, 1);
  if (grid.values.length !== nodes * grid.channels) {
    throw new SubgridError(
      `grid values length ${grid.values.length} != nodes*channels ${nodes * grid.channels}`
    );
  }
  const manifest: JsonValue = {
    shape: grid.shape,
    channels: grid.channels,
    box: boxToJson(grid.box),
    dtype: DTYPE_TAG,
  };
  writeFileSync(manifestPath, canonicalJson(manifest));
  writePayload(manifestPath, grid.values);
}

// ---------------------------------------------------------------------------
// aligned tensors

const tensorSchema = z.object({
  samples: nonNegInt,
  leaves: posInt,
  channels: posInt,
  shape: z.array(posInt).min(1),
  dtype: z.literal(DTYPE_TAG),
});

export function readAlignedTensor(manifestPath: string): AlignedTensor {
  const m = parseManifest(tensorSchema, readManifest(manifestPath), manifestPath);
  const perSample = m.leaves * m.channels * m.shape.reduce((a, b) => a * b, 1);
  const values = readPayload(manifestPath, m.samples * perSample);
  return { samples: m.samples, leaves: m.leaves, channels: m.channels, shape: m.shape, values };
}

export function writeAlignedTensor(tensor: AlignedTensor, manifestPath: string): void {
  const count =
    tensor.samples * tensor.leaves * tensor.channels * tensor.shape.reduce((a, b) => a * b, 1);
  if (tensor.values.length !== count) {
    throw new SubgridError(
      `aligned tensor values length ${tensor.values.length} != manifest size ${count}`
    );
  }
  const manifest: JsonValue = {
    samples: tensor.samples,
    leaves: tensor.leaves,
    channels: tensor.channels,
    shape: tensor.shape,
    dtype: DTYPE_TAG,
  };
  writeFileSync(manifestPath, canonicalJson(manifest));
  writePayload(manifestPath, tensor.values);
}
