import { createHash } from 'node:crypto';
import type { AdapterConfigT, GenerateResponseT } from './schemas.js';

// Token probabilities of the toy scorer: a continuation token that already
// appears in the context is "coherent" (p = 1/2), anything else is a
// surprise (p = 1/10). Both are hand-checkable closed forms.
export const LOGPROB_SEEN = -Math.log(2);
export const LOGPROB_UNSEEN = -Math.log(10);

export function promptHash(text: string): string {
  return createHash('sha256').update(text, 'utf8').digest('hex');
}

function words(text: string): string[] {
  return text.split(/\s+/).filter(Boolean);
}

// mulberry32: tiny deterministic PRNG, seeded from the prompt hash
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Deterministic stand-in for a checkpoint-backed model. Generation echoes
 * vocabulary from the prompt under a PRNG seeded by the prompt's hash, so
 * identical requests always produce identical output; scoring and embedding
 * are pure functions of their inputs. Exists so fixtures can be produced and
 * the wire contract exercised on machines with no accelerator or weights.
 */
export class ToyBackend {
  readonly model: string;
  readonly encoder: string;
  readonly device: string;
  readonly maxBatch: number;
  readonly dim: number;
  ready = true;

  constructor(cfg: AdapterConfigT) {
    this.model = cfg.model;
    this.encoder = cfg.encoder;
    this.device = cfg.device;
    this.maxBatch = cfg.maxBatch;
    this.dim = cfg.dim;
  }

  generate(
    prompt: string,
    maxNewTokens: number,
    stop: string[],
    greedy: boolean,
  ): GenerateResponseT {
    const vocab = [...new Set(words(prompt))];
    if (vocab.length === 0) vocab.push('...');
    const rand = mulberry32(parseInt(promptHash(prompt).slice(0, 8), 16));
    // greedy repeats the argmax-like first draw pattern; sampling just keeps
    // drawing — both fully determined by the prompt hash
    const count = Math.min(maxNewTokens, greedy ? 12 : 16);
    const picked: string[] = [];
    for (let i = 0; i < count; i++) {
      picked.push(vocab[Math.floor(rand() * vocab.length)]);
    }
    let text = picked.join(' ');
    for (const s of stop) {
      if (s === '') continue;
      const at = text.indexOf(s);
      if (at >= 0) text = text.slice(0, at);
    }
    return { text, token_logprobs: this.score(prompt, text) };
  }

  score(context: string, continuation: string): number[] {
    const seen = new Set(words(context.toLowerCase()));
    return words(continuation).map((w) =>
      seen.has(w.toLowerCase()) ? LOGPROB_SEEN : LOGPROB_UNSEEN,
    );
  }

  // Feature-hash bag of words: sha256(token) picks a bucket and a sign.
  // Values are small integers, exactly representable in float32.
  embed(texts: string[]): { dim: number; vectors: number[][] } {
    const vectors = texts.map((text) => {
      const v = new Float32Array(this.dim);
      for (const w of words(text.toLowerCase())) {
        const h = createHash('sha256').update(w, 'utf8').digest();
        const bucket = h.readUInt32BE(0) % this.dim;
        v[bucket] += h[4] & 1 ? 1 : -1;
      }
      return Array.from(v);
    });
    return { dim: this.dim, vectors };
  }
}
