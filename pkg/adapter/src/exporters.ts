import { promises as fs } from 'node:fs';
import type { ToyBackend } from './backend.js';
import { promptHash } from './backend.js';
import { writeEmb1 } from './emb1.js';
import { PromptRow, ReplayRecord, type ReplayRecordT } from './schemas.js';

// Input lines are either "id<TAB>text" or bare text (the id then defaults to
// the zero-based line number). Blank lines are skipped.
export async function exportEmbeddings(
  backend: ToyBackend,
  textsPath: string,
  outPath: string,
  idsPath?: string,
): Promise<number> {
  const raw = await fs.readFile(textsPath, 'utf8');
  const ids: string[] = [];
  const texts: string[] = [];
  raw.split('\n').forEach((line, i) => {
    if (line.length === 0) return;
    const tab = line.indexOf('\t');
    if (tab >= 0) {
      ids.push(line.slice(0, tab));
      texts.push(line.slice(tab + 1));
    } else {
      ids.push(String(i));
      texts.push(line);
    }
  });
  const vectors: number[][] = [];
  for (let at = 0; at < texts.length; at += backend.maxBatch) {
    vectors.push(...backend.embed(texts.slice(at, at + backend.maxBatch)).vectors);
  }
  await writeEmb1(outPath, ids, vectors, idsPath);
  return ids.length;
}

// Prompt rows become generation records keyed by sha256(prompt);
// {context, continuation} rows become scoring records keyed by
// sha256(context + continuation). Output order follows input order.
export async function exportReplay(
  backend: ToyBackend,
  promptsPath: string,
  outPath: string,
): Promise<number> {
  const raw = await fs.readFile(promptsPath, 'utf8');
  const records: ReplayRecordT[] = [];
  raw.split('\n').forEach((line, i) => {
    if (line.trim().length === 0) return;
    const row = PromptRow.parse(JSON.parse(line), {
      path: [`${promptsPath}:${i + 1}`],
    });
    if ('prompt' in row) {
      const out = backend.generate(row.prompt, row.max_new_tokens, row.stop, true);
      records.push(
        ReplayRecord.parse({
          prompt_hash: promptHash(row.prompt),
          test_id: row.test_id,
          raw_output: out.text,
          token_logprobs: out.token_logprobs,
        }),
      );
    } else {
      records.push(
        ReplayRecord.parse({
          prompt_hash: promptHash(row.context + row.continuation),
          token_logprobs: backend.score(row.context, row.continuation),
        }),
      );
    }
  });
  const body = records.map((r) => `${JSON.stringify(r)}\n`).join('');
  await fs.writeFile(outPath, body, 'utf8');
  return records.length;
}
