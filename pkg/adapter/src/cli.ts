import { parseArgs } from 'node:util';
import { ToyBackend } from './backend.js';
import { exportEmbeddings, exportReplay } from './exporters.js';
import { AdapterConfig } from './schemas.js';
import { createApp } from './server.js';

const USAGE = `usage:
  cli serve             [--port N] [--model NAME] [--encoder NAME] [--dim N] [--max-batch N]
  cli export-embeddings --texts FILE --out FILE [--ids FILE]
  cli export-replay     --prompts FILE --out FILE

exit codes: 0 ok, 1 runtime failure, 2 bad usage`;

function buildBackend(values: Record<string, unknown>): ToyBackend {
  const cfg = AdapterConfig.parse({
    ...(values.model ? { model: values.model } : {}),
    ...(values.encoder ? { encoder: values.encoder } : {}),
    ...(values.dim ? { dim: Number(values.dim) } : {}),
    ...(values['max-batch'] ? { maxBatch: Number(values['max-batch']) } : {}),
  });
  return new ToyBackend(cfg);
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === 'serve') {
      const { values } = parseArgs({
        args: rest,
        options: {
          port: { type: 'string', default: '8400' },
          model: { type: 'string' },
          encoder: { type: 'string' },
          dim: { type: 'string' },
          'max-batch': { type: 'string' },
        },
      });
      const backend = buildBackend(values);
      const app = createApp(backend);
      const port = Number(values.port);
      await new Promise<void>((resolve) => {
        const server = app.listen(port, () => {
          // report the bound port: with --port 0 the OS picks one
          const addr = server.address();
          const bound = addr !== null && typeof addr === 'object' ? addr.port : port;
          console.log(`serving ${backend.model} on :${bound}`);
        });
        server.on('close', resolve);
      });
      return 0;
    }
    if (command === 'export-embeddings') {
      const { values } = parseArgs({
        args: rest,
        options: {
          texts: { type: 'string' },
          out: { type: 'string' },
          ids: { type: 'string' },
          dim: { type: 'string' },
          'max-batch': { type: 'string' },
        },
      });
      if (!values.texts || !values.out) {
        console.error(USAGE);
        return 2;
      }
      const n = await exportEmbeddings(
        buildBackend(values), values.texts, values.out, values.ids,
      );
      console.log(`${values.out}: ${n} rows`);
      return 0;
    }
    if (command === 'export-replay') {
      const { values } = parseArgs({
        args: rest,
        options: {
          prompts: { type: 'string' },
          out: { type: 'string' },
        },
      });
      if (!values.prompts || !values.out) {
        console.error(USAGE);
        return 2;
      }
      const n = await exportReplay(buildBackend(values), values.prompts, values.out);
      console.log(`${values.out}: ${n} records`);
      return 0;
    }
    console.error(USAGE);
    return 2;
  } catch (err) {
    if (err instanceof TypeError && /Unknown option/.test(err.message)) {
      console.error(err.message);
      console.error(USAGE);
      return 2;
    }
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
}

const entry = process.argv[1] ?? '';
if (entry.endsWith('cli.js') || entry.endsWith('cli.ts')) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
