import { createReadStream } from "node:fs";
import { createInterface } from "node:readline";

export type Modality = "text" | "table" | "image";

export const MODALITIES: Modality[] = ["text", "table", "image"];

export interface TableData {
  headers: string[];
  rows: string[][];
}

export interface Reference {
  id: string;
  modality: Modality;
  title?: string;
  text?: string;
  table?: TableData;
  imageUri?: string;
}

function escapeCell(value: string): string {
  // backslash first so the escaping stays injective
  return value
    .replaceAll("\\", "\\\\")
    .replaceAll("|", "\\|")
    .replaceAll("\n", "\\n");
}

/**
 * Renders a table as deterministic text, one line per row; the exact same
 * convention the QA pipeline uses, so exported vectors match what its
 * prompts see. With headers each cell becomes "header: value"; cells are
 * joined by " | " and rows by newlines.
 */
export function linearizeTable(table: TableData): string {
  const lines: string[] = [];
  for (const row of table.rows) {
    const cells = table.headers.length
      ? row.map((value, i) => `${escapeCell(table.headers[i])}: ${escapeCell(value)}`)
      : row.map(escapeCell);
    lines.push(cells.join(" | "));
  }
  return lines.join("\n");
}

export function contentText(ref: Reference): string {
  if (ref.modality === "text") return ref.text ?? "";
  if (ref.modality === "table") return linearizeTable(ref.table!);
  return ref.imageUri ?? "";
}

function parseTable(raw: unknown, where: string): TableData {
  const obj = raw as { headers?: unknown[]; rows?: unknown[][] };
  if (typeof raw !== "object" || raw === null || !Array.isArray(obj.rows)) {
    throw new Error(`${where}: table payload must have a rows array`);
  }
  const headers = (obj.headers ?? []).map(String);
  const rows = obj.rows.map((row) => {
    if (!Array.isArray(row)) throw new Error(`${where}: table row is not an array`);
    return row.map(String);
  });
  let width = headers.length || null;
  for (const row of rows) {
    if (width === null) width = row.length;
    if (row.length !== width) {
      throw new Error(`${where}: row has ${row.length} cells, expected ${width}`);
    }
  }
  return { headers, rows };
}

/**
 * Loads a line-delimited reference file (one JSON object per line:
 * {id, modality, title?, text? | table? | image_uri?}), preserving order.
 * Every record must carry the requested modality and a matching payload.
 */
export async function readReferences(
  path: string,
  modality: Modality,
): Promise<Reference[]> {
  const references: Reference[] = [];
  const seen = new Set<string>();
  const lines = createInterface({
    input: createReadStream(path, "utf-8"),
    crlfDelay: Infinity,
  });
  let lineNo = 0;
  for await (const line of lines) {
    lineNo += 1;
    const trimmed = line.trim();
    if (!trimmed) continue;
    const where = `${path}:${lineNo}`;
    let record: Record<string, unknown>;
    try {
      record = JSON.parse(trimmed);
    } catch (err) {
      throw new Error(`${where}: malformed JSON: ${(err as Error).message}`);
    }
    const id = record.id;
    if (typeof id !== "string" || !id) {
      throw new Error(`${where}: reference id must be a non-empty string`);
    }
    if (record.modality !== modality) {
      throw new Error(
        `${where}: record modality ${JSON.stringify(record.modality)} does not match requested '${modality}'`,
      );
    }
    if (seen.has(id)) throw new Error(`${where}: duplicate reference id '${id}'`);
    seen.add(id);
    const ref: Reference = { id, modality };
    if (typeof record.title === "string") ref.title = record.title;
    if (modality === "text") {
      if (typeof record.text !== "string") {
        throw new Error(`${where}: text reference needs a text field`);
      }
      ref.text = record.text;
    } else if (modality === "table") {
      ref.table = parseTable(record.table, where);
    } else {
      if (typeof record.image_uri !== "string" || !record.image_uri) {
        throw new Error(`${where}: image reference needs an image_uri field`);
      }
      ref.imageUri = record.image_uri;
    }
    references.push(ref);
  }
  return references;
}

export interface Question {
  qid: string;
  question: string;
}

/** Loads {qid, question, ...} JSONL, preserving order; qids must be unique. */
export async function readQuestions(path: string): Promise<Question[]> {
  const questions: Question[] = [];
  const seen = new Set<string>();
  const lines = createInterface({
    input: createReadStream(path, "utf-8"),
    crlfDelay: Infinity,
  });
  let lineNo = 0;
  for await (const line of lines) {
    lineNo += 1;
    const trimmed = line.trim();
    if (!trimmed) continue;
    const where = `${path}:${lineNo}`;
    let record: Record<string, unknown>;
    try {
      record = JSON.parse(trimmed);
    } catch (err) {
      throw new Error(`${where}: malformed JSON: ${(err as Error).message}`);
    }
    const { qid, question } = record;
    if (typeof qid !== "string" || !qid || typeof question !== "string" || !question) {
      throw new Error(`${where}: need non-empty qid and question fields`);
    }
    if (seen.has(qid)) throw new Error(`${where}: duplicate qid '${qid}'`);
    seen.add(qid);
    questions.push({ qid, question });
  }
  return questions;
}
