import { promises as fs } from 'node:fs';

// EMB1 layout: "EMB1" magic, u32le row count, u32le dimension, then
// rows * dim float32le values in row-major order. Row ids live in a text
// sidecar (one per line) at <path>.ids unless another path is given.

const MAGIC = 'EMB1';
const HEADER_BYTES = 12;

export function defaultIdsPath(path: string): string {
  return `${path}.ids`;
}

export function encodeEmb1(vectors: number[][]): Buffer {
  const n = vectors.length;
  const d = n > 0 ? vectors[0].length : 0;
  const buf = Buffer.alloc(HEADER_BYTES + 4 * n * d);
  buf.write(MAGIC, 0, 'ascii');
  buf.writeUInt32LE(n, 4);
  buf.writeUInt32LE(d, 8);
  let off = HEADER_BYTES;
  for (const row of vectors) {
    if (row.length !== d) {
      throw new Error(`ragged embedding rows: ${row.length} vs ${d}`);
    }
    for (const x of row) {
      buf.writeFloatLE(x, off);
      off += 4;
    }
  }
  return buf;
}

export function decodeEmb1(buf: Buffer): { vectors: number[][] } {
  if (buf.length < HEADER_BYTES) {
    throw new Error(`truncated header: ${buf.length} bytes`);
  }
  if (buf.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`bad magic ${JSON.stringify(buf.toString('ascii', 0, 4))}`);
  }
  const n = buf.readUInt32LE(4);
  const d = buf.readUInt32LE(8);
  const expected = HEADER_BYTES + 4 * n * d;
  if (buf.length !== expected) {
    throw new Error(`payload is ${buf.length} bytes, expected ${expected}`);
  }
  const vectors: number[][] = [];
  let off = HEADER_BYTES;
  for (let i = 0; i < n; i++) {
    const row = new Array<number>(d);
    for (let j = 0; j < d; j++) {
      row[j] = buf.readFloatLE(off);
      off += 4;
    }
    vectors.push(row);
  }
  return { vectors };
}

export async function writeEmb1(
  path: string,
  ids: string[],
  vectors: number[][],
  idsPath?: string,
): Promise<void> {
  if (ids.length !== vectors.length) {
    throw new Error(`${ids.length} ids for ${vectors.length} rows`);
  }
  await fs.writeFile(path, encodeEmb1(vectors));
  await fs.writeFile(
    idsPath ?? defaultIdsPath(path),
    ids.map((id) => `${id}\n`).join(''),
    'utf8',
  );
}

export async function readEmb1(
  path: string,
  idsPath?: string,
): Promise<{ ids: string[]; vectors: number[][] }> {
  const { vectors } = decodeEmb1(await fs.readFile(path));
  const raw = await fs.readFile(idsPath ?? defaultIdsPath(path), 'utf8');
  const ids = raw.split('\n').filter((line) => line.length > 0);
  if (ids.length !== vectors.length) {
    throw new Error(`${ids.length} ids for ${vectors.length} rows`);
  }
  return { ids, vectors };
}
