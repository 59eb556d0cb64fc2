import { z } from 'zod';

// Wire protocol, as consumed by the harness's live client:
//   POST /generate {prompt, max_new_tokens, stop, greedy}
//       -> {text, token_logprobs | null}
//   POST /score    {context, continuation} -> {token_logprobs}
//   POST /embed    {texts} -> {dim, vectors}

export const GenerateRequest = z.object({
  prompt: z.string(),
  max_new_tokens: z.number().int().positive(),
  stop: z.array(z.string()).default([]),
  greedy: z.boolean().default(true),
});

export const GenerateResponse = z.object({
  text: z.string(),
  token_logprobs: z.array(z.number().max(0)).nullable(),
});

export const ScoreRequest = z.object({
  context: z.string(),
  continuation: z.string(),
});

// natural-log token probabilities, so never positive
export const ScoreResponse = z.object({
  token_logprobs: z.array(z.number().max(0)),
});

export const EmbedRequest = z.object({
  texts: z.array(z.string()),
});

export const EmbedResponse = z
  .object({
    dim: z.number().int().positive(),
    vectors: z.array(z.array(z.number())),
  })
  .refine((r) => r.vectors.every((v) => v.length === r.dim), {
    message: 'every vector must have exactly `dim` entries',
  });

// One line of a replay fixture. Generation records carry raw_output (and get
// their hypothesis re-extracted downstream); scoring records carry only the
// logprobs, keyed by the hash of context + continuation.
export const ReplayRecord = z.object({
  prompt_hash: z.string().regex(/^[0-9a-f]{64}$/),
  test_id: z.string().optional(),
  raw_output: z.string().optional(),
  hypothesis: z.string().optional(),
  token_logprobs: z.array(z.number()).nullable().optional(),
});

export const PromptRow = z.union([
  z.object({
    prompt: z.string(),
    test_id: z.string().optional(),
    max_new_tokens: z.number().int().positive().default(48),
    stop: z.array(z.string()).default(['\n']),
  }),
  z.object({
    context: z.string(),
    continuation: z.string(),
  }),
]);

export const AdapterConfig = z.object({
  model: z.string().default('toy-echo'),
  encoder: z.string().default('toy-hash-16'),
  device: z.string().default('cpu'),
  maxBatch: z.number().int().positive().default(256),
  dim: z.number().int().positive().default(16),
});

export type GenerateRequestT = z.infer<typeof GenerateRequest>;
export type GenerateResponseT = z.infer<typeof GenerateResponse>;
export type ScoreRequestT = z.infer<typeof ScoreRequest>;
export type ScoreResponseT = z.infer<typeof ScoreResponse>;
export type EmbedRequestT = z.infer<typeof EmbedRequest>;
export type EmbedResponseT = z.infer<typeof EmbedResponse>;
export type ReplayRecordT = z.infer<typeof ReplayRecord>;
export type PromptRowT = z.infer<typeof PromptRow>;
export type AdapterConfigT = z.infer<typeof AdapterConfig>;
