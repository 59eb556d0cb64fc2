import { describe, expect, it } from 'vitest';
import {
  AdapterConfig,
  EmbedResponse,
  GenerateRequest,
  GenerateResponse,
  ReplayRecord,
  ScoreRequest,
  ScoreResponse,
} from '../src/schemas.js';

describe('request schemas', () => {
  it('round-trips a full generate request', () => {
    const body = {
      prompt: 'English: hi French:',
      max_new_tokens: 32,
      stop: ['\n'],
      greedy: true,
    };
    expect(GenerateRequest.parse(body)).toEqual(body);
  });

  it('fills generate defaults', () => {
    const parsed = GenerateRequest.parse({ prompt: 'p', max_new_tokens: 4 });
    expect(parsed.stop).toEqual([]);
    expect(parsed.greedy).toBe(true);
  });

  it('rejects non-positive max_new_tokens', () => {
    expect(() => GenerateRequest.parse({ prompt: 'p', max_new_tokens: 0 })).toThrow();
  });

  it('requires both score fields', () => {
    expect(ScoreRequest.parse({ context: 'a', continuation: '' })).toBeTruthy();
    expect(() => ScoreRequest.parse({ context: 'a' })).toThrow();
  });
});

describe('response schemas', () => {
  it('accepts null logprobs on generate but not on score', () => {
    expect(GenerateResponse.parse({ text: 't', token_logprobs: null })).toBeTruthy();
    expect(() => ScoreResponse.parse({ token_logprobs: null })).toThrow();
  });

  it('rejects positive logprobs', () => {
    expect(() => ScoreResponse.parse({ token_logprobs: [0.5] })).toThrow();
    expect(ScoreResponse.parse({ token_logprobs: [0, -1.2] })).toBeTruthy();
  });

  it('rejects embed vectors that disagree with dim', () => {
    expect(() =>
      EmbedResponse.parse({ dim: 3, vectors: [[1, 2]] }),
    ).toThrow();
    expect(
      EmbedResponse.parse({ dim: 2, vectors: [[1, 2], [3, 4]] }).vectors,
    ).toHaveLength(2);
  });
});

describe('replay records', () => {
  it('accepts generation and scoring shapes', () => {
    const hash = 'a'.repeat(64);
    expect(
      ReplayRecord.parse({ prompt_hash: hash, raw_output: 'le chat', test_id: 't0' }),
    ).toBeTruthy();
    expect(
      ReplayRecord.parse({ prompt_hash: hash, token_logprobs: [-0.7] }),
    ).toBeTruthy();
  });

  it('rejects malformed hashes', () => {
    expect(() => ReplayRecord.parse({ prompt_hash: 'ABC' })).toThrow();
  });
});

describe('adapter config', () => {
  it('has serviceable defaults', () => {
    const cfg = AdapterConfig.parse({});
    expect(cfg.dim).toBe(16);
    expect(cfg.maxBatch).toBe(256);
    expect(cfg.device).toBe('cpu');
  });

  it('rejects a zero dimension', () => {
    expect(() => AdapterConfig.parse({ dim: 0 })).toThrow();
  });
});
