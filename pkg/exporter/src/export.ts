import { readFile, writeFile } from "node:fs/promises";
import { fileURLToPath } from "node:url";

import { Modality, Reference, contentText, readReferences, readQuestions } from "./corpus.js";
import { Encoder, createEncoder } from "./encoder.js";
import { Metric, writeMoqi } from "./moqi.js";

export interface ExportJob {
  referencesPath: string;
  modality: Modality;
  model: string;
  outPath: string;
  metric?: Metric;
  batchSize?: number;
  device?: string; // hint for neural encoders; the hash encoder ignores it
}

export interface SkippedRecord {
  id: string;
  reason: string;
}

export interface ExportResult {
  outPath: string;
  metric: Metric;
  dim: number;
  written: number;
  skipped: SkippedRecord[];
}

function defaultMetric(modality: Modality): Metric {
  return modality === "image" ? "cosine" : "inner_product";
}

function imagePath(uri: string): string {
  if (uri.startsWith("file://")) return fileURLToPath(uri);
  if (/^[a-z][a-z0-9+.-]*:\/\//i.test(uri)) {
    throw new Error(`non-file image uri '${uri}'`);
  }
  return uri;
}

async function encodeReference(ref: Reference, encoder: Encoder): Promise<Float32Array> {
  if (ref.modality === "image") {
    // image pixels only; titles/captions stay out of the vector
    const bytes = await readFile(imagePath(ref.imageUri!));
    return encoder.encodeBytes(bytes);
  }
  return encoder.encodeText(contentText(ref));
}

/**
 * Embeds a reference corpus and writes a MOQI index file. Unreadable
 * images are skipped and logged with their id; any dim drift aborts.
 */
export async function runExport(job: ExportJob): Promise<ExportResult> {
  const references = await readReferences(job.referencesPath, job.modality);
  const encoder = createEncoder(job.model);
  const metric = job.metric ?? defaultMetric(job.modality);
  const batchSize = job.batchSize ?? 32;
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error(`bad batch size ${batchSize}`);
  }

  const ids: string[] = [];
  const vectors: Float32Array[] = [];
  const skipped: SkippedRecord[] = [];
  for (let start = 0; start < references.length; start += batchSize) {
    for (const ref of references.slice(start, start + batchSize)) {
      let vector: Float32Array;
      try {
        vector = await encodeReference(ref, encoder);
      } catch (err) {
        if (ref.modality !== "image") throw err;
        const reason = (err as Error).message;
        console.error(`skipping unreadable image '${ref.id}': ${reason}`);
        skipped.push({ id: ref.id, reason });
        continue;
      }
      if (vector.length !== encoder.dim) {
        throw new Error(
          `dim drift at '${ref.id}': got ${vector.length}, expected ${encoder.dim}`,
        );
      }
      ids.push(ref.id);
      vectors.push(vector);
    }
  }

  await writeMoqi(job.outPath, { metric, dim: encoder.dim, ids, vectors });
  return { outPath: job.outPath, metric, dim: encoder.dim, written: ids.length, skipped };
}

export interface EmbedQueriesJob {
  questionsPath: string;
  model: string;
  outPath: string;
}

/**
 * Encodes questions with the same encoder the corpus used and writes one
 * {qid, vector} JSON line per question.
 */
export async function embedQueries(job: EmbedQueriesJob): Promise<number> {
  const questions = await readQuestions(job.questionsPath);
  const encoder = createEncoder(job.model);
  const lines = questions.map(({ qid, question }) =>
    JSON.stringify({ qid, vector: Array.from(encoder.encodeText(question)) }),
  );
  await writeFile(job.outPath, lines.map((l) => l + "\n").join(""));
  return questions.length;
}
