/**
 * Server configuration: mock model parameters plus optional upstream
 * forwarding. The JSON config file shape matches the canonical "params"
 * block shipped with the protocol conformance fixtures, so a conformance
 * harness can feed that block straight in.
 */
import { readFileSync } from "node:fs";
import { z } from "zod";

const bandSchema = z.tuple([z.number().min(0), z.number().min(0)]);

export const serverConfigSchema = z
  .object({
    host: z.string().default("127.0.0.1"),
    port: z.number().int().min(0).max(65535).default(8008),
    token: z.string().min(1).optional(),
    max_image_side: z.number().int().min(8).default(4096),
    realism_band: bandSchema.default([0.85, 1.0]),
    gain: z.number().default(0),
    offset: z.number().default(0),
    caption_band: bandSchema.default([0.49, 0.51]),
    nbuckets: z.number().int().min(2).default(63),
    e_min: z.number().default(0),
    e_max: z.number().default(1e9),
    embed_dim: z.number().int().min(1).default(256),
    upstream_url: z.string().url().optional(),
    upstream_api_key: z.string().optional(),
    upstream_realism_model: z.string().default("realism-judge"),
    upstream_caption_model: z.string().default("captioner"),
    upstream_embed_model: z.string().default("text-embedder"),
  })
  .strict();

export type ServerConfig = z.infer<typeof serverConfigSchema>;

export function loadConfig(
  filePath: string | undefined,
  overrides: Partial<ServerConfig> = {},
): ServerConfig {
  let fromFile: Record<string, unknown> = {};
  if (filePath !== undefined) {
    fromFile = JSON.parse(readFileSync(filePath, "utf-8"));
  }
  const defined = Object.fromEntries(
    Object.entries(overrides).filter(([, value]) => value !== undefined),
  );
  return serverConfigSchema.parse({ ...fromFile, ...defined });
}
