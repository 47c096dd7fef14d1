/**
 * Export a feature bundle from a checkpoint and a dataset directory.
 *
 * The dataset directory holds raw model inputs in the same FSB1 matrix
 * container the bundles use (`inputs.fsb`, one row per example, in
 * iteration order), an optional `labels.fsl`, and a `dataset.json`
 * describing it: {"name", "k", "shift_family"?, "severity"?,
 * "input_shape"?}. `input_shape` reshapes each row (e.g. [8, 8, 1] for
 * image models); its product must equal the row width.
 *
 * Inference runs on the deterministic CPU backend, batch by batch, in
 * file order, so repeated exports are bit-identical.
 */

import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import {
  BundleMeta,
  readLabelFile,
  readMatrixFile,
  writeLabelFile,
  writeMatrixFile,
  writeMetaFile,
} from "./bundleFiles";
import { DatasetError } from "./errors";
import { loadModelFromDir, withFeatureTap } from "./modelStore";

export interface ExportSpec {
  checkpoint: string;
  data: string;
  out: string;
  batchSize?: number;
  device?: string;
}

export interface ExportResult {
  outDir: string;
  rows: number;
  featureDim: number;
  classes: number;
  labeled: boolean;
}

interface DatasetInfo {
  inputs: Float32Array;
  rows: number;
  cols: number;
  labels: Uint32Array | null;
  name: string;
  k: number;
  shiftFamily: string;
  severity: number;
  inputShape: number[] | null;
}

function loadDataset(dir: string): DatasetInfo {
  const inputsPath = path.join(dir, "inputs.fsb");
  if (!fs.existsSync(inputsPath)) {
    throw new DatasetError(`dataset is missing inputs.fsb: ${inputsPath}`);
  }
  const metaPath = path.join(dir, "dataset.json");
  if (!fs.existsSync(metaPath)) {
    throw new DatasetError(`dataset is missing dataset.json: ${metaPath}`);
  }
  let meta: Record<string, unknown>;
  try {
    meta = JSON.parse(fs.readFileSync(metaPath, "utf8"));
  } catch (err) {
    throw new DatasetError(`cannot parse ${metaPath}: ${err}`);
  }
  if (typeof meta.name !== "string") {
    throw new DatasetError(`${metaPath}: "name" must be a string`);
  }
  if (typeof meta.k !== "number" || !Number.isInteger(meta.k) || meta.k < 2) {
    throw new DatasetError(`${metaPath}: "k" must be an integer >= 2`);
  }
  const { rows, cols, data } = readMatrixFile(inputsPath);
  if (rows < 1) {
    throw new DatasetError(`${inputsPath}: dataset has no rows`);
  }
  let inputShape: number[] | null = null;
  if (meta.input_shape !== undefined) {
    if (
      !Array.isArray(meta.input_shape) ||
      meta.input_shape.some((v) => typeof v !== "number" || !Number.isInteger(v) || v < 1)
    ) {
      throw new DatasetError(`${metaPath}: "input_shape" must be positive integers`);
    }
    const product = (meta.input_shape as number[]).reduce((a, b) => a * b, 1);
    if (product !== cols) {
      throw new DatasetError(
        `${metaPath}: input_shape product ${product} != row width ${cols}`
      );
    }
    inputShape = meta.input_shape as number[];
  }
  let labels: Uint32Array | null = null;
  const labelsPath = path.join(dir, "labels.fsl");
  if (fs.existsSync(labelsPath)) {
    labels = readLabelFile(labelsPath);
    if (labels.length !== rows) {
      throw new DatasetError(
        `${labelsPath}: ${labels.length} labels for ${rows} input rows`
      );
    }
    for (const value of labels) {
      if (value >= meta.k) {
        throw new DatasetError(`${labelsPath}: label ${value} out of range [0, ${meta.k})`);
      }
    }
  }
  return {
    inputs: data,
    rows,
    cols,
    labels,
    name: meta.name,
    k: meta.k,
    shiftFamily: typeof meta.shift_family === "string" ? meta.shift_family : "none",
    severity:
      typeof meta.severity === "number" && Number.isInteger(meta.severity) && meta.severity >= 0
        ? meta.severity
        : 0,
    inputShape,
  };
}

function argmaxRows(values: Float32Array, rows: number, cols: number): Uint32Array {
  const out = new Uint32Array(rows);
  for (let i = 0; i < rows; i++) {
    let best = 0;
    let bestValue = values[i * cols];
    for (let j = 1; j < cols; j++) {
      const v = values[i * cols + j];
      if (v > bestValue) {
        best = j;
        bestValue = v;
      }
    }
    out[i] = best;
  }
  return out;
}

export async function exportBundle(spec: ExportSpec): Promise<ExportResult> {
  const device = spec.device ?? "auto";
  if (device !== "auto" && device !== "cpu") {
    throw new Error(`unsupported device "${device}" (expected auto or cpu)`);
  }
  await tf.setBackend("cpu");
  await tf.ready();

  const batchSize = spec.batchSize ?? 256;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error(`batch size must be a positive integer, got ${batchSize}`);
  }

  const dataset = loadDataset(spec.data);
  const model = await loadModelFromDir(spec.checkpoint);
  const tap = withFeatureTap(model);

  const featureChunks: Float32Array[] = [];
  const logitChunks: Float32Array[] = [];
  let featureDim = -1;
  let logitDim = -1;
  for (let start = 0; start < dataset.rows; start += batchSize) {
    const count = Math.min(batchSize, dataset.rows - start);
    const slice = dataset.inputs.subarray(
      start * dataset.cols,
      (start + count) * dataset.cols
    );
    const shape = dataset.inputShape ? [count, ...dataset.inputShape] : [count, dataset.cols];
    const [features, logits] = tf.tidy(() => {
      const batch = tf.tensor(slice, shape, "float32");
      const [rawFeatures, rawLogits] = tap.predict(batch) as [tf.Tensor, tf.Tensor];
      return [
        rawFeatures.reshape([count, -1]) as tf.Tensor2D,
        rawLogits.reshape([count, -1]) as tf.Tensor2D,
      ];
    });
    featureDim = features.shape[1];
    logitDim = logits.shape[1];
    featureChunks.push(features.dataSync() as Float32Array);
    logitChunks.push(logits.dataSync() as Float32Array);
    features.dispose();
    logits.dispose();
  }
  if (logitDim !== dataset.k) {
    throw new DatasetError(
      `model emits ${logitDim} logits but dataset.json declares k = ${dataset.k}`
    );
  }

  const featureData = new Float32Array(dataset.rows * featureDim);
  const logitData = new Float32Array(dataset.rows * logitDim);
  let featureOffset = 0;
  let logitOffset = 0;
  for (let i = 0; i < featureChunks.length; i++) {
    featureData.set(featureChunks[i], featureOffset);
    featureOffset += featureChunks[i].length;
    logitData.set(logitChunks[i], logitOffset);
    logitOffset += logitChunks[i].length;
  }

  const meta: BundleMeta = {
    name: dataset.name,
    shift_family: dataset.shiftFamily,
    severity: dataset.severity,
    k: dataset.k,
  };
  if (dataset.labels) {
    const predictions = argmaxRows(logitData, dataset.rows, logitDim);
    let wrong = 0;
    for (let i = 0; i < dataset.rows; i++) {
      if (predictions[i] !== dataset.labels[i]) {
        wrong += 1;
      }
    }
    meta.true_error = wrong / dataset.rows;
  }

  fs.mkdirSync(spec.out, { recursive: true });
  writeMatrixFile(path.join(spec.out, "features.fsb"), featureData, dataset.rows, featureDim);
  writeMatrixFile(path.join(spec.out, "logits.fsb"), logitData, dataset.rows, logitDim);
  if (dataset.labels) {
    writeLabelFile(path.join(spec.out, "labels.fsl"), dataset.labels);
  }
  writeMetaFile(path.join(spec.out, "meta.json"), meta);

  return {
    outDir: spec.out,
    rows: dataset.rows,
    featureDim,
    classes: logitDim,
    labeled: dataset.labels !== null,
  };
}
