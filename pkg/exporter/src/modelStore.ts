/**
 * Save/load tfjs layers models to a plain checkpoint directory
 * (model.json + weights.bin) without the tfjs-node filesystem handler,
 * and build the feature-tap model that exposes the inputs of the final
 * layer alongside the logits.
 */

import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import { CheckpointLoadError } from "./errors";

export async function saveModelToDir(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = tf.io.CompositeArrayBuffer.join(artifacts.weightData);
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: "layers-model",
        generatedBy: "fsep-export",
        convertedBy: null,
        weightsManifest: [{ paths: ["weights.bin"], weights: artifacts.weightSpecs }],
      };
      fs.writeFileSync(path.join(dir, "model.json"), JSON.stringify(modelJson));
      fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(weightData));
      return {
        modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: "JSON" as const },
      };
    })
  );
}

interface WeightsManifestGroup {
  paths: string[];
  weights: tf.io.WeightsManifestEntry[];
}

export async function loadModelFromDir(dir: string): Promise<tf.LayersModel> {
  const modelJsonPath = path.join(dir, "model.json");
  if (!fs.existsSync(modelJsonPath)) {
    throw new CheckpointLoadError(`checkpoint not found: ${modelJsonPath}`);
  }
  let parsed: {
    modelTopology: unknown;
    weightsManifest: WeightsManifestGroup[];
    trainingConfig?: unknown;
  };
  try {
    parsed = JSON.parse(fs.readFileSync(modelJsonPath, "utf8"));
  } catch (err) {
    throw new CheckpointLoadError(`cannot parse ${modelJsonPath}: ${err}`);
  }
  if (!parsed.modelTopology || !Array.isArray(parsed.weightsManifest)) {
    throw new CheckpointLoadError(
      `${modelJsonPath}: missing modelTopology or weightsManifest`
    );
  }
  const weightSpecs = parsed.weightsManifest.flatMap((group) => group.weights);
  const buffers: Buffer[] = [];
  for (const group of parsed.weightsManifest) {
    for (const relPath of group.paths) {
      const weightsPath = path.join(dir, relPath);
      if (!fs.existsSync(weightsPath)) {
        throw new CheckpointLoadError(`missing weight shard: ${weightsPath}`);
      }
      buffers.push(fs.readFileSync(weightsPath));
    }
  }
  const joined = Buffer.concat(buffers);
  const weightData = joined.buffer.slice(
    joined.byteOffset,
    joined.byteOffset + joined.byteLength
  );
  try {
    return await tf.loadLayersModel(
      tf.io.fromMemory({
        modelTopology: parsed.modelTopology as object,
        weightSpecs,
        weightData,
        trainingConfig: parsed.trainingConfig as tf.io.TrainingConfig | undefined,
      })
    );
  } catch (err) {
    throw new CheckpointLoadError(`cannot reconstruct model from ${dir}: ${err}`);
  }
}

/**
 * Functional model emitting [penultimate features, logits]: the features
 * are whatever feeds the final layer, the standard tap for classifiers
 * whose last layer maps the embedding to class scores.
 */
export function withFeatureTap(model: tf.LayersModel): tf.LayersModel {
  if (model.layers.length < 2) {
    throw new CheckpointLoadError("model needs at least two layers for a feature tap");
  }
  const lastLayer = model.layers[model.layers.length - 1];
  const tapPoint = lastLayer.input;
  if (Array.isArray(tapPoint)) {
    throw new CheckpointLoadError("final layer has multiple inputs; cannot tap features");
  }
  return tf.model({
    inputs: model.inputs,
    outputs: [tapPoint, model.outputs[0] as tf.SymbolicTensor],
  });
}
