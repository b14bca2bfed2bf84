import { loadConfig } from "./config.js";
import { runSuite } from "./runner.js";

function usage(): never {
  console.error(
    "usage: node dist/cli.js --manifest suite/manifest.json --prompts suite/prompts " +
      "--config runner.json --out records/",
  );
  process.exit(2);
}

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const flag = argv[i];
    const value = argv[i + 1];
    if (!flag?.startsWith("--") || value === undefined) usage();
    out[flag.slice(2)] = value;
  }
  return out;
}

async function main(): Promise<number> {
  const args = parseArgs(process.argv.slice(2));
  for (const key of ["manifest", "prompts", "config", "out"]) {
    if (!args[key]) usage();
  }
  const config = await loadConfig(args.config);
  const result = await runSuite(args.manifest, args.prompts, args.out, config);
  console.log(
    `records: ${result.written.length} written, ${result.skipped.length} skipped (resume), ` +
      `${result.failed.length} failed`,
  );
  return result.failed.length > 0 ? 1 : 0;
}

main().then(
  (code) => process.exit(code),
  (error) => {
    console.error(`error: ${error instanceof Error ? error.message : error}`);
    process.exit(1);
  },
);
