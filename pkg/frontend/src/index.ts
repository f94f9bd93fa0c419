#!/usr/bin/env node
/**
 * CLI entry point for the oracle server.
 */
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { ServerConfig, loadConfig } from "./config.js";
import { startServer } from "./server.js";

async function main(): Promise<void> {
  const argv = await yargs(hideBin(process.argv))
    .scriptName("freqadv-oracle-server")
    .usage("$0 [options]", "Serve the /v1 oracle wire protocol")
    .option("config", { type: "string", describe: "JSON config file" })
    .option("host", { type: "string" })
    .option("port", { type: "number" })
    .option("token", { type: "string", describe: "Require this bearer token" })
    .option("max-image-side", { type: "number" })
    .option("gain", { type: "number", describe: "Realism mock logistic gain" })
    .option("offset", { type: "number", describe: "Realism mock energy offset" })
    .option("nbuckets", { type: "number", describe: "Caption mock bucket count" })
    .option("e-min", { type: "number", describe: "Caption mock range lower edge" })
    .option("e-max", { type: "number", describe: "Caption mock range upper edge" })
    .option("embed-dim", { type: "number" })
    .option("upstream-url", {
      type: "string",
      describe: "Forward to this OpenAI-compatible endpoint instead of the mocks",
    })
    .option("upstream-api-key", { type: "string" })
    .strict()
    .help()
    .parse();

  const overrides: Partial<ServerConfig> = {
    host: argv.host,
    port: argv.port,
    token: argv.token,
    max_image_side: argv.maxImageSide,
    gain: argv.gain,
    offset: argv.offset,
    nbuckets: argv.nbuckets,
    e_min: argv.eMin,
    e_max: argv.eMax,
    embed_dim: argv.embedDim,
    upstream_url: argv.upstreamUrl,
    upstream_api_key: argv.upstreamApiKey,
  };
  const config = loadConfig(argv.config, overrides);
  const { url } = await startServer(config);
  const mode = config.upstream_url ? `upstream ${config.upstream_url}` : "mock";
  console.log(`oracle server listening on ${url} (${mode})`);
}

main().catch((err) => {
  console.error(err);
  process.exit(1);
});
