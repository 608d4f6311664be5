import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";

import { MODALITIES, Modality } from "./corpus.js";
import { Metric } from "./moqi.js";
import { ExportJob, embedQueries, runExport } from "./export.js";

const USAGE = `usage:
  moqa-export export --references <refs.jsonl> --modality <text|table|image>
               --out <index.moqi> [--model hash-v1:64] [--metric inner_product|cosine]
               [--batch-size 32] [--device cpu]
  moqa-export embed-queries --questions <questions.jsonl> --out <vectors.jsonl>
               [--model hash-v1:64]`;

export function parseExportFlags(args: string[]): ExportJob {
  const { values } = parseArgs({
    args,
    options: {
      references: { type: "string" },
      modality: { type: "string" },
      model: { type: "string", default: "hash-v1:64" },
      metric: { type: "string" },
      "batch-size": { type: "string" },
      out: { type: "string" },
      device: { type: "string" },
    },
  });
  if (!values.references || !values.modality || !values.out) {
    throw new Error("export needs --references, --modality, and --out");
  }
  if (!MODALITIES.includes(values.modality as Modality)) {
    throw new Error(`bad modality '${values.modality}'`);
  }
  if (values.metric && !["inner_product", "cosine"].includes(values.metric)) {
    throw new Error(`bad metric '${values.metric}'`);
  }
  const job: ExportJob = {
    referencesPath: values.references,
    modality: values.modality as Modality,
    model: values.model!,
    outPath: values.out,
  };
  if (values.metric) job.metric = values.metric as Metric;
  if (values["batch-size"]) job.batchSize = Number(values["batch-size"]);
  if (values.device) job.device = values.device;
  return job;
}

export function parseEmbedQueriesFlags(args: string[]) {
  const { values } = parseArgs({
    args,
    options: {
      questions: { type: "string" },
      model: { type: "string", default: "hash-v1:64" },
      out: { type: "string" },
    },
  });
  if (!values.questions || !values.out) {
    throw new Error("embed-queries needs --questions and --out");
  }
  return { questionsPath: values.questions, model: values.model!, outPath: values.out };
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === "export") {
      const result = await runExport(parseExportFlags(rest));
      console.log(
        `wrote ${result.outPath}: ${result.written} vectors, dim ${result.dim}, ` +
          `metric ${result.metric}` +
          (result.skipped.length ? `, skipped ${result.skipped.length}` : ""),
      );
      return 0;
    }
    if (command === "embed-queries") {
      const job = parseEmbedQueriesFlags(rest);
      const count = await embedQueries(job);
      console.log(`wrote ${job.outPath}: ${count} query vectors`);
      return 0;
    }
    console.error(USAGE);
    return 1;
  } catch (err) {
    console.error((err as Error).message);
    return 1;
  }
}

const entryUrl = process.argv[1] ? pathToFileURL(process.argv[1]).href : "";
if (import.meta.url === entryUrl) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
