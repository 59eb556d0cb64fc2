import { mkdtempSync, readFileSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, describe, expect, it } from 'vitest';
import { decodeEmb1, encodeEmb1, readEmb1, writeEmb1 } from '../src/emb1.js';

const dir = mkdtempSync(join(tmpdir(), 'emb1-'));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

describe('encode/decode', () => {
  it('round-trips float32 values bit-exactly', () => {
    const vectors = [
      [Math.fround(0.1), Math.fround(-2.5), 3],
      [Math.fround(1e-7), 0, Math.fround(123.456)],
    ];
    expect(decodeEmb1(encodeEmb1(vectors)).vectors).toEqual(vectors);
  });

  it('writes the documented layout', () => {
    const buf = encodeEmb1([[1, 2]]);
    expect(buf.subarray(0, 4).toString('ascii')).toBe('EMB1');
    expect(buf.readUInt32LE(4)).toBe(1);
    expect(buf.readUInt32LE(8)).toBe(2);
    expect(buf.readFloatLE(12)).toBe(1);
    expect(buf.readFloatLE(16)).toBe(2);
    expect(buf.length).toBe(12 + 2 * 4);
  });

  it('produces a header-only file for zero rows', () => {
    const buf = encodeEmb1([]);
    expect(buf.length).toBe(12);
    expect(buf.readUInt32LE(4)).toBe(0);
    expect(decodeEmb1(buf).vectors).toEqual([]);
  });

  it('rejects ragged rows', () => {
    expect(() => encodeEmb1([[1, 2], [3]])).toThrow(/ragged/);
  });

  it('rejects a bad magic', () => {
    const buf = encodeEmb1([[1]]);
    buf.write('NOPE', 0, 'ascii');
    expect(() => decodeEmb1(buf)).toThrow(/magic/);
  });

  it('rejects a truncated payload', () => {
    const buf = encodeEmb1([
      [1, 2],
      [3, 4],
    ]);
    expect(() => decodeEmb1(buf.subarray(0, buf.length - 4))).toThrow(/payload/);
    expect(() => decodeEmb1(buf.subarray(0, 8))).toThrow(/header/);
  });
});

describe('file + ids sidecar', () => {
  it('round-trips through disk with ids in order', async () => {
    const path = join(dir, 'v.emb1');
    const ids = ['a:00', 'a:01', 'b:00'];
    const vectors = [
      [1, 2],
      [3, 4],
      [5, 6],
    ];
    await writeEmb1(path, ids, vectors);
    const back = await readEmb1(path);
    expect(back.ids).toEqual(ids);
    expect(back.vectors).toEqual(vectors);
    expect(readFileSync(`${path}.ids`, 'utf8')).toBe('a:00\na:01\nb:00\n');
  });

  it('writes an empty-but-valid pair for zero rows', async () => {
    const path = join(dir, 'empty.emb1');
    await writeEmb1(path, [], []);
    expect(readFileSync(path).length).toBe(12);
    expect(readFileSync(`${path}.ids`, 'utf8')).toBe('');
    const back = await readEmb1(path);
    expect(back.ids).toEqual([]);
    expect(back.vectors).toEqual([]);
  });

  it('rejects an ids count that disagrees with the vector count', async () => {
    const path = join(dir, 'bad.emb1');
    await expect(writeEmb1(path, ['only-one'], [[1], [2]])).rejects.toThrow(/ids/);
  });
});
