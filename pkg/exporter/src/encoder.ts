/**
 * Deterministic encoders. Real deployments swap in frozen neural encoders
 * (CLIP-class for images, dense passage encoders for text); the desk-scale
 * default is a seeded hashed-feature encoder so exports are reproducible
 * with no model weights. Model ids select the encoder: "hash-v1:<dim>".
 */

export interface Encoder {
  modelId: string;
  dim: number;
  encodeText(text: string): Float32Array;
  encodeBytes(bytes: Uint8Array): Float32Array;
}

function fnv1a(data: Uint8Array, seed: number): number {
  let hash = (0x811c9dc5 ^ seed) >>> 0;
  for (const byte of data) {
    hash ^= byte;
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

const textEncoder = new TextEncoder();

class HashEncoder implements Encoder {
  constructor(
    public modelId: string,
    public dim: number,
  ) {}

  private accumulate(out: Float32Array, feature: Uint8Array): void {
    const bucket = fnv1a(feature, 0) % this.dim;
    const sign = fnv1a(feature, 0x9e3779b9) & 1 ? 1 : -1;
    out[bucket] += sign;
  }

  private normalize(out: Float32Array): Float32Array {
    let sumSquares = 0;
    for (const x of out) sumSquares += x * x;
    if (sumSquares > 0) {
      const inv = 1 / Math.sqrt(sumSquares);
      for (let i = 0; i < out.length; i++) out[i] *= inv;
    }
    return out;
  }

  encodeText(text: string): Float32Array {
    const out = new Float32Array(this.dim);
    const lowered = text.toLowerCase();
    for (const word of lowered.split(/\s+/)) {
      if (word) this.accumulate(out, textEncoder.encode(`w:${word}`));
    }
    for (let i = 0; i + 3 <= lowered.length; i++) {
      this.accumulate(out, textEncoder.encode(`c:${lowered.slice(i, i + 3)}`));
    }
    return this.normalize(out);
  }

  encodeBytes(bytes: Uint8Array): Float32Array {
    const out = new Float32Array(this.dim);
    const feature = new Uint8Array(5);
    feature[0] = 0x62; // 'b' prefix keeps byte features apart from text ones
    feature[1] = 0x3a; // ':'
    for (let i = 0; i + 3 <= bytes.length; i++) {
      feature[2] = bytes[i];
      feature[3] = bytes[i + 1];
      feature[4] = bytes[i + 2];
      this.accumulate(out, feature);
    }
    return this.normalize(out);
  }
}

const DEFAULT_DIM = 64;
const MAX_DIM = 4096;

/** Builds the encoder a model id names, e.g. "hash-v1:64". */
export function createEncoder(modelId: string): Encoder {
  const [family, dimPart] = modelId.split(":", 2);
  if (family !== "hash-v1") {
    throw new Error(`unknown encoder model '${modelId}' (expected hash-v1[:dim])`);
  }
  const dim = dimPart === undefined ? DEFAULT_DIM : Number(dimPart);
  if (!Number.isInteger(dim) || dim < 1 || dim > MAX_DIM) {
    throw new Error(`bad encoder dim '${dimPart}' (need an integer in 1..${MAX_DIM})`);
  }
  return new HashEncoder(modelId, dim);
}
