import express from 'express';
import type { Express, NextFunction, Request, Response } from 'express';
import { ToyBackend } from './backend.js';
import {
  EmbedRequest,
  GenerateRequest,
  ScoreRequest,
} from './schemas.js';

export function createApp(backend: ToyBackend): Express {
  const app = express();
  app.use(express.json({ limit: '32mb' }));

  app.use((req: Request, res: Response, next: NextFunction) => {
    if (req.method === 'POST' && !backend.ready) {
      res.status(503).json({ error: 'model is loading' });
      return;
    }
    next();
  });

  app.get('/healthz', (_req, res) => {
    res.json({
      ready: backend.ready,
      model: backend.model,
      encoder: backend.encoder,
      dim: backend.dim,
    });
  });

  app.post('/generate', (req, res) => {
    const parsed = GenerateRequest.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.message });
      return;
    }
    const { prompt, max_new_tokens, stop, greedy } = parsed.data;
    res.json(backend.generate(prompt, max_new_tokens, stop, greedy));
  });

  app.post('/score', (req, res) => {
    const parsed = ScoreRequest.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.message });
      return;
    }
    const { context, continuation } = parsed.data;
    res.json({ token_logprobs: backend.score(context, continuation) });
  });

  app.post('/embed', (req, res) => {
    const parsed = EmbedRequest.safeParse(req.body);
    if (!parsed.success) {
      res.status(400).json({ error: parsed.error.message });
      return;
    }
    // process in maxBatch chunks so one request can carry a whole bank
    const { texts } = parsed.data;
    const vectors: number[][] = [];
    for (let at = 0; at < texts.length; at += backend.maxBatch) {
      vectors.push(...backend.embed(texts.slice(at, at + backend.maxBatch)).vectors);
    }
    res.json({ dim: backend.dim, vectors });
  });

  // express raises on malformed JSON bodies before any route runs
  app.use((err: Error & { type?: string }, _req: Request, res: Response, next: NextFunction) => {
    if (res.headersSent) {
      next(err);
      return;
    }
    const status = err.type === 'entity.parse.failed' ? 400 : 500;
    res.status(status).json({ error: err.message });
  });

  return app;
}
