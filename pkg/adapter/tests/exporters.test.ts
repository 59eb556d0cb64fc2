import { createHash } from 'node:crypto';
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, describe, expect, it } from 'vitest';
import { LOGPROB_SEEN, LOGPROB_UNSEEN, ToyBackend } from '../src/backend.js';
import { readEmb1 } from '../src/emb1.js';
import { exportEmbeddings, exportReplay } from '../src/exporters.js';
import { AdapterConfig, ReplayRecord } from '../src/schemas.js';

const dir = mkdtempSync(join(tmpdir(), 'exporters-'));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

const backend = new ToyBackend(AdapterConfig.parse({}));

function sha256(text: string): string {
  return createHash('sha256').update(text, 'utf8').digest('hex');
}

describe('exportEmbeddings', () => {
  it('reads id<TAB>text lines and writes one vector per id', async () => {
    const texts = join(dir, 'texts.txt');
    writeFileSync(
      texts,
      's0\tle chat dort\ns1\tbonjour tout le monde\n\ns2\tle chat dort\n',
      'utf8',
    );
    const out = join(dir, 'vecs.emb1');
    const n = await exportEmbeddings(backend, texts, out);
    expect(n).toBe(3);
    const back = await readEmb1(out);
    expect(back.ids).toEqual(['s0', 's1', 's2']);
    expect(back.vectors).toHaveLength(3);
    expect(back.vectors[0]).toHaveLength(backend.dim);
    // identical sentences embed identically, so the duplicate is a twin
    expect(back.vectors[2]).toEqual(back.vectors[0]);
    expect(back.vectors[1]).not.toEqual(back.vectors[0]);
  });

  it('falls back to line numbers as ids for bare lines', async () => {
    const texts = join(dir, 'bare.txt');
    writeFileSync(texts, 'first line\nsecond line\n', 'utf8');
    const out = join(dir, 'bare.emb1');
    await exportEmbeddings(backend, texts, out);
    expect((await readEmb1(out)).ids).toEqual(['0', '1']);
  });

  it('turns an empty input into a valid zero-row file', async () => {
    const texts = join(dir, 'none.txt');
    writeFileSync(texts, '', 'utf8');
    const out = join(dir, 'none.emb1');
    expect(await exportEmbeddings(backend, texts, out)).toBe(0);
    expect(readFileSync(out).length).toBe(12);
  });
});

describe('exportReplay', () => {
  it('writes one schema-valid record per row, keyed by content hash', async () => {
    const prompts = join(dir, 'prompts.jsonl');
    const promptText = 'English: the cat sleeps\nFrench:';
    const rows = [
      JSON.stringify({ prompt: promptText, test_id: 'd0:03', max_new_tokens: 8 }),
      JSON.stringify({ prompt: 'hello world', test_id: 'd0:04' }),
      JSON.stringify({ context: 'je mange une pomme', continuation: 'je bois' }),
    ];
    writeFileSync(prompts, `${rows.join('\n')}\n`, 'utf8');
    const out = join(dir, 'replay.jsonl');
    expect(await exportReplay(backend, prompts, out)).toBe(3);

    const lines = readFileSync(out, 'utf8').split('\n').filter(Boolean);
    expect(lines).toHaveLength(3);
    const records = lines.map((l) => ReplayRecord.parse(JSON.parse(l)));

    expect(records[0].prompt_hash).toBe(sha256(promptText));
    expect(records[0].test_id).toBe('d0:03');
    expect(records[0].raw_output).toBe(
      backend.generate(promptText, 8, ['\n'], true).text,
    );
    expect(records[1].prompt_hash).toBe(sha256('hello world'));

    // scoring rows are keyed by sha256(context + continuation)
    expect(records[2].prompt_hash).toBe(sha256('je mange une pommeje bois'));
    expect(records[2].token_logprobs).toEqual([LOGPROB_SEEN, LOGPROB_UNSEEN]);
    expect(records[2].raw_output).toBeUndefined();
  });

  it('writes nothing for an empty prompt file', async () => {
    const prompts = join(dir, 'empty.jsonl');
    writeFileSync(prompts, '\n\n', 'utf8');
    const out = join(dir, 'empty-replay.jsonl');
    expect(await exportReplay(backend, prompts, out)).toBe(0);
    expect(readFileSync(out, 'utf8')).toBe('');
  });

  it('reports the offending line on a malformed row', async () => {
    const prompts = join(dir, 'bad.jsonl');
    writeFileSync(prompts, '{"nonsense": true}\n', 'utf8');
    const out = join(dir, 'bad-replay.jsonl');
    await expect(exportReplay(backend, prompts, out)).rejects.toThrow();
  });
});
