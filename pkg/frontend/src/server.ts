/**
 * Express app speaking the /v1 oracle wire protocol.
 *
 * Stub mode (default) serves the deterministic mock models; configuring
 * an upstream URL forwards queries to an OpenAI-compatible endpoint
 * instead. Error contract: 400 malformed input, 401 bad bearer token,
 * 404 unknown endpoint, 502 upstream failure, 500 anything else.
 */
import express, { Express, Request, Response } from "express";
import { Server } from "node:http";
import { AddressInfo } from "node:net";
import { z } from "zod";

import { ServerConfig } from "./config.js";
import {
  BandEnergyRealismMock,
  BucketCaptionMock,
  HashProjectionEmbedder,
} from "./mock.js";
import { DecodedImage, ImageDecodeError, decodeBase64Strict, decodePng } from "./png.js";
import { UpstreamError, UpstreamOracle } from "./upstream.js";
import { canonicalJson } from "./util.js";

const imageRequestSchema = z
  .object({
    image_png_b64: z.string(),
    query: z.string(),
  })
  .strict();

const embedRequestSchema = z
  .object({
    text: z.string(),
  })
  .strict();

class RequestError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

function reply(res: Response, status: number, payload: unknown): void {
  res.status(status).set("Content-Type", "application/json").send(canonicalJson(payload));
}

function parseBody<T>(req: Request, schema: z.ZodType<T>): T {
  let raw: unknown;
  try {
    raw = JSON.parse(typeof req.body === "string" ? req.body : "");
  } catch (err) {
    throw new RequestError(400, `malformed JSON body: ${err}`);
  }
  const result = schema.safeParse(raw);
  if (!result.success) {
    throw new RequestError(400, `invalid request: ${result.error.issues[0]?.message}`);
  }
  return result.data;
}

export function createApp(config: ServerConfig): Express {
  const realism = new BandEnergyRealismMock(
    { alpha1: config.realism_band[0], alpha2: config.realism_band[1] },
    config.gain,
    config.offset,
  );
  const captioner = new BucketCaptionMock(
    { alpha1: config.caption_band[0], alpha2: config.caption_band[1] },
    config.nbuckets,
    config.e_min,
    config.e_max,
  );
  const embedder = new HashProjectionEmbedder(config.embed_dim);
  const upstream = config.upstream_url
    ? new UpstreamOracle({
        url: config.upstream_url,
        apiKey: config.upstream_api_key,
        realismModel: config.upstream_realism_model,
        captionModel: config.upstream_caption_model,
        embedModel: config.upstream_embed_model,
      })
    : undefined;

  const app = express();
  app.use(express.text({ type: "*/*", limit: "64mb" }));

  app.use((req, res, next) => {
    if (!config.token) {
      next();
      return;
    }
    if (req.headers.authorization === `Bearer ${config.token}`) {
      next();
      return;
    }
    reply(res, 401, { error: "missing or invalid bearer token" });
  });

  const decodeImage = (b64: string): DecodedImage => {
    const image = decodePng(decodeBase64Strict(b64));
    const side = Math.max(image.height, image.width);
    if (side > config.max_image_side) {
      throw new RequestError(
        400,
        `image side ${side} exceeds max_image_side=${config.max_image_side}`,
      );
    }
    return image;
  };

  const handle = (
    handler: (req: Request) => Promise<[number, unknown]> | [number, unknown],
  ) => {
    return async (req: Request, res: Response) => {
      try {
        const [status, payload] = await handler(req);
        reply(res, status, payload);
      } catch (err) {
        if (err instanceof RequestError) {
          reply(res, err.status, { error: err.message });
        } else if (err instanceof ImageDecodeError) {
          reply(res, 400, { error: err.message });
        } else if (err instanceof UpstreamError) {
          reply(res, 502, { error: err.message });
        } else {
          reply(res, 500, { error: `internal error: ${err}` });
        }
      }
    };
  };

  app.post(
    "/v1/realism",
    handle(async (req) => {
      const request = parseBody(req, imageRequestSchema);
      const image = decodeImage(request.image_png_b64);
      if (upstream) {
        const text = await upstream.realismText(request.image_png_b64, request.query);
        return [200, { model_id: config.upstream_realism_model, score_text: text }];
      }
      const score = realism.scoreImage(image);
      return [200, { model_id: realism.modelId, score_text: String(score) }];
    }),
  );

  app.post(
    "/v1/caption",
    handle(async (req) => {
      const request = parseBody(req, imageRequestSchema);
      const image = decodeImage(request.image_png_b64);
      if (upstream) {
        const text = await upstream.captionText(request.image_png_b64, request.query);
        return [200, { caption: text, model_id: config.upstream_caption_model }];
      }
      return [200, { caption: captioner.captionImage(image), model_id: captioner.modelId }];
    }),
  );

  app.post(
    "/v1/embed",
    handle(async (req) => {
      const request = parseBody(req, embedRequestSchema);
      if (request.text.trim().length === 0) {
        throw new RequestError(400, "text must not be empty");
      }
      const vector = upstream ? await upstream.embed(request.text) : embedder.embed(request.text);
      return [200, { dim: vector.length, vector }];
    }),
  );

  app.use((req, res) => {
    reply(res, 404, { error: `unknown endpoint ${req.path}` });
  });

  return app;
}

export function startServer(config: ServerConfig): Promise<{ server: Server; url: string }> {
  const app = createApp(config);
  return new Promise((resolve, reject) => {
    const server = app.listen(config.port, config.host, () => {
      const address = server.address() as AddressInfo;
      resolve({ server, url: `http://${config.host}:${address.port}` });
    });
    server.on("error", reject);
  });
}
