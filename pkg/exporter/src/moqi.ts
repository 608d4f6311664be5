import { readFile, writeFile } from "node:fs/promises";

/**
 * MOQI binary index file, the retrieval pipeline's on-disk format.
 * Little-endian layout:
 *
 *   "MOQI" | u32 version=1 | u8 metric (0 inner_product, 1 cosine)
 *   | u32 dim | u64 count | count*dim float32 row-major
 *   | per id: u16 byte length + UTF-8 bytes
 */

export type Metric = "inner_product" | "cosine";

const MAGIC = "MOQI";
const FORMAT_VERSION = 1;
const METRIC_CODES: Record<Metric, number> = { inner_product: 0, cosine: 1 };
const CODE_METRICS: Record<number, Metric> = { 0: "inner_product", 1: "cosine" };

export interface IndexData {
  metric: Metric;
  dim: number;
  ids: string[];
  vectors: Float32Array[];
}

export async function writeMoqi(path: string, data: IndexData): Promise<void> {
  const { metric, dim, ids, vectors } = data;
  if (ids.length !== vectors.length) {
    throw new Error(`${ids.length} ids for ${vectors.length} vectors`);
  }
  if (!Number.isInteger(dim) || dim < 1) throw new Error(`bad dim ${dim}`);
  vectors.forEach((vec, row) => {
    if (vec.length !== dim) {
      throw new Error(`vector dim drift at row ${row}: ${vec.length} != ${dim}`);
    }
    if (metric === "cosine" && vec.every((x) => x === 0)) {
      throw new Error(`zero vector at row ${row} (id '${ids[row]}') under cosine metric`);
    }
  });

  const header = Buffer.alloc(4 + 4 + 1 + 4 + 8);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt32LE(FORMAT_VERSION, 4);
  header.writeUInt8(METRIC_CODES[metric], 8);
  header.writeUInt32LE(dim, 9);
  header.writeBigUInt64LE(BigInt(ids.length), 13);

  const matrix = Buffer.alloc(ids.length * dim * 4);
  vectors.forEach((vec, row) => {
    for (let j = 0; j < dim; j++) matrix.writeFloatLE(vec[j], (row * dim + j) * 4);
  });

  const idChunks: Buffer[] = [];
  for (const id of ids) {
    const encoded = Buffer.from(id, "utf-8");
    if (encoded.length > 0xffff) throw new Error(`id too long: '${id.slice(0, 40)}...'`);
    const len = Buffer.alloc(2);
    len.writeUInt16LE(encoded.length, 0);
    idChunks.push(len, encoded);
  }

  await writeFile(path, Buffer.concat([header, matrix, ...idChunks]));
}

export async function readMoqi(path: string): Promise<IndexData> {
  const buf = await readFile(path);
  const need = (offset: number, n: number, what: string) => {
    if (offset + n > buf.length) throw new Error(`truncated file while reading ${what}`);
  };
  need(0, 4, "magic");
  if (buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString("ascii", 0, 4))}`);
  }
  need(4, 4, "version");
  const version = buf.readUInt32LE(4);
  if (version !== FORMAT_VERSION) {
    throw new Error(`unsupported version ${version}, expected ${FORMAT_VERSION}`);
  }
  need(8, 1, "metric");
  const metric = CODE_METRICS[buf.readUInt8(8)];
  if (!metric) throw new Error(`unknown metric code ${buf.readUInt8(8)}`);
  need(9, 4, "dim");
  const dim = buf.readUInt32LE(9);
  need(13, 8, "count");
  const count = Number(buf.readBigUInt64LE(13));

  let offset = 21;
  need(offset, count * dim * 4, "vector matrix");
  const vectors: Float32Array[] = [];
  for (let row = 0; row < count; row++) {
    const vec = new Float32Array(dim);
    for (let j = 0; j < dim; j++) vec[j] = buf.readFloatLE(offset + (row * dim + j) * 4);
    vectors.push(vec);
  }
  offset += count * dim * 4;

  const ids: string[] = [];
  for (let row = 0; row < count; row++) {
    need(offset, 2, "id length");
    const len = buf.readUInt16LE(offset);
    offset += 2;
    need(offset, len, "id bytes");
    ids.push(buf.toString("utf-8", offset, offset + len));
    offset += len;
  }
  return { metric, dim, ids, vectors };
}
