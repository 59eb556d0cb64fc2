import { describe, expect, it } from 'vitest';
import {
  LOGPROB_SEEN,
  LOGPROB_UNSEEN,
  promptHash,
  ToyBackend,
} from '../src/backend.js';
import { AdapterConfig } from '../src/schemas.js';

const backend = new ToyBackend(AdapterConfig.parse({}));

describe('score', () => {
  it('gives p=1/2 to context tokens and p=1/10 to new ones', () => {
    const lp = backend.score('je mange une pomme', 'je bois');
    expect(lp).toEqual([-Math.log(2), -Math.log(10)]);
  });

  it('reproduces conditional perplexity closed forms', () => {
    // exp of the negative mean logprob
    const perplexity = (lps: number[]) =>
      Math.exp(-lps.reduce((a, b) => a + b, 0) / lps.length);
    expect(perplexity(backend.score('a b c', 'a b'))).toBeCloseTo(2.0, 12);
    expect(perplexity(backend.score('a b c', 'x y z'))).toBeCloseTo(10.0, 12);
    // mixed: one seen, one unseen -> sqrt(2 * 10)
    const mixed = backend.score('je mange une pomme', 'je bois');
    expect(perplexity(mixed)).toBeCloseTo(Math.sqrt(20), 12);
  });

  it('matches tokens case-insensitively', () => {
    expect(backend.score('Hello World', 'hello')).toEqual([LOGPROB_SEEN]);
  });

  it('returns an empty list for an empty continuation', () => {
    expect(backend.score('anything at all', '')).toEqual([]);
    expect(backend.score('anything at all', '   ')).toEqual([]);
  });
});

describe('generate', () => {
  it('is deterministic: identical requests give identical output', () => {
    const a = backend.generate('English: the cat sleeps French:', 24, ['\n'], true);
    const b = backend.generate('English: the cat sleeps French:', 24, ['\n'], true);
    expect(a).toEqual(b);
  });

  it('derives its output from the prompt alone', () => {
    const a = backend.generate('one prompt', 8, [], true);
    const b = backend.generate('another prompt entirely', 8, [], true);
    expect(a.text).not.toEqual(b.text);
  });

  it('respects max_new_tokens', () => {
    const out = backend.generate('a b c d e f g', 3, [], true);
    expect(out.text.split(/\s+/).filter(Boolean).length).toBeLessThanOrEqual(3);
  });

  it('truncates at the first stop sequence', () => {
    const out = backend.generate('aaa bbb', 12, ['bbb'], true);
    expect(out.text).not.toContain('bbb');
  });

  it('reports a logprob for every surviving token', () => {
    const out = backend.generate('un deux trois quatre', 10, ['\n'], true);
    const tokens = out.text.split(/\s+/).filter(Boolean);
    expect(out.token_logprobs).toHaveLength(tokens.length);
    for (const lp of out.token_logprobs ?? []) {
      expect(lp).toBeLessThanOrEqual(0);
    }
  });
});

describe('embed', () => {
  it('returns one vector of constant dim per text', () => {
    const { dim, vectors } = backend.embed(['le chat', 'dort', '']);
    expect(dim).toBe(16);
    expect(vectors).toHaveLength(3);
    for (const v of vectors) expect(v).toHaveLength(16);
  });

  it('embeds the empty text as the zero vector', () => {
    const { vectors } = backend.embed(['']);
    expect(vectors[0].every((x) => x === 0)).toBe(true);
  });

  it('gives identical texts identical vectors', () => {
    const { vectors } = backend.embed(['même phrase', 'même phrase']);
    expect(vectors[0]).toEqual(vectors[1]);
  });

  it('honors a configured dimension', () => {
    const wide = new ToyBackend(AdapterConfig.parse({ dim: 64 }));
    expect(wide.embed(['x']).vectors[0]).toHaveLength(64);
  });
});

describe('promptHash', () => {
  it('is the lowercase hex sha256 of the utf-8 text', () => {
    expect(promptHash('abc')).toBe(
      'ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad',
    );
  });
});
