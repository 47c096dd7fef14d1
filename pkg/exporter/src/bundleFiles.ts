/**
 * Binary feature-bundle containers, matching the fsep toolkit's on-disk
 * format byte for byte.
 *
 * Matrix container (features.fsb / logits.fsb): 4 magic bytes "FSB1",
 * u32 LE version (= 1), u64 LE rows, u64 LE cols, then rows*cols
 * float32 LE values in row-major order.
 *
 * Label container (labels.fsl): 4 magic bytes "FSL1", u32 LE version
 * (= 1), u64 LE count, then count u32 LE values.
 */

import * as fs from "fs";
import * as os from "os";

import { DatasetError } from "./errors";

const MATRIX_MAGIC = "FSB1";
const LABEL_MAGIC = "FSL1";
const FORMAT_VERSION = 1;

function assertLittleEndian(): void {
  // payloads are memcpy'd from typed arrays, which are platform-endian
  if (os.endianness() !== "LE") {
    throw new Error("bundle writer requires a little-endian platform");
  }
}

export function writeMatrixFile(
  filePath: string,
  data: Float32Array,
  rows: number,
  cols: number
): void {
  assertLittleEndian();
  if (data.length !== rows * cols) {
    throw new DatasetError(
      `matrix payload has ${data.length} values, expected ${rows}x${cols}`
    );
  }
  const header = Buffer.alloc(24);
  header.write(MATRIX_MAGIC, 0, "ascii");
  header.writeUInt32LE(FORMAT_VERSION, 4);
  header.writeBigUInt64LE(BigInt(rows), 8);
  header.writeBigUInt64LE(BigInt(cols), 16);
  const payload = Buffer.from(data.buffer, data.byteOffset, data.byteLength);
  fs.writeFileSync(filePath, Buffer.concat([header, payload]));
}

export function readMatrixFile(filePath: string): {
  rows: number;
  cols: number;
  data: Float32Array;
} {
  assertLittleEndian();
  const raw = fs.readFileSync(filePath);
  if (raw.subarray(0, 4).toString("ascii") !== MATRIX_MAGIC) {
    throw new DatasetError(`${filePath}: bad magic`);
  }
  if (raw.readUInt32LE(4) !== FORMAT_VERSION) {
    throw new DatasetError(`${filePath}: unsupported version`);
  }
  const rows = Number(raw.readBigUInt64LE(8));
  const cols = Number(raw.readBigUInt64LE(16));
  const expected = 24 + rows * cols * 4;
  if (raw.length !== expected) {
    throw new DatasetError(
      `${filePath}: expected ${expected} bytes, found ${raw.length}`
    );
  }
  // copy out so the Float32Array is 4-byte aligned regardless of Buffer pooling
  const payload = Buffer.alloc(rows * cols * 4);
  raw.copy(payload, 0, 24);
  return {
    rows,
    cols,
    data: new Float32Array(payload.buffer, payload.byteOffset, rows * cols),
  };
}

export function writeLabelFile(filePath: string, labels: Uint32Array): void {
  assertLittleEndian();
  const header = Buffer.alloc(16);
  header.write(LABEL_MAGIC, 0, "ascii");
  header.writeUInt32LE(FORMAT_VERSION, 4);
  header.writeBigUInt64LE(BigInt(labels.length), 8);
  const payload = Buffer.from(labels.buffer, labels.byteOffset, labels.byteLength);
  fs.writeFileSync(filePath, Buffer.concat([header, payload]));
}

export function readLabelFile(filePath: string): Uint32Array {
  assertLittleEndian();
  const raw = fs.readFileSync(filePath);
  if (raw.subarray(0, 4).toString("ascii") !== LABEL_MAGIC) {
    throw new DatasetError(`${filePath}: bad magic`);
  }
  if (raw.readUInt32LE(4) !== FORMAT_VERSION) {
    throw new DatasetError(`${filePath}: unsupported version`);
  }
  const count = Number(raw.readBigUInt64LE(8));
  if (raw.length !== 16 + count * 4) {
    throw new DatasetError(`${filePath}: truncated label payload`);
  }
  const payload = Buffer.alloc(count * 4);
  raw.copy(payload, 0, 16);
  return new Uint32Array(payload.buffer, payload.byteOffset, count);
}

export interface BundleMeta {
  name: string;
  shift_family: string;
  severity: number;
  k: number;
  true_error?: number;
}

export function writeMetaFile(filePath: string, meta: BundleMeta): void {
  const out: Record<string, unknown> = {
    name: meta.name,
    shift_family: meta.shift_family,
    severity: meta.severity,
    k: meta.k,
  };
  if (meta.true_error !== undefined) {
    out.true_error = meta.true_error;
  }
  fs.writeFileSync(filePath, JSON.stringify(out, null, 2) + "\n");
}
