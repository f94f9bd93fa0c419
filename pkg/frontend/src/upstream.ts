/**
 * Forwarding to an OpenAI-compatible upstream: realism and caption
 * queries become single-turn vision chat completions, embeddings go to
 * the embeddings endpoint. Replies are passed through as raw text; all
 * score parsing stays on the client side of the wire protocol.
 */
import axios, { AxiosInstance } from "axios";

export class UpstreamError extends Error {}

export interface UpstreamOptions {
  url: string;
  apiKey?: string;
  realismModel: string;
  captionModel: string;
  embedModel: string;
}

export class UpstreamOracle {
  private http: AxiosInstance;

  constructor(
    readonly options: UpstreamOptions,
    http?: AxiosInstance,
  ) {
    this.http =
      http ??
      axios.create({
        baseURL: options.url,
        timeout: 120_000,
        headers: options.apiKey ? { Authorization: `Bearer ${options.apiKey}` } : {},
      });
  }

  private async chat(model: string, pngBase64: string, query: string): Promise<string> {
    let reply;
    try {
      reply = await this.http.post("/chat/completions", {
        model,
        messages: [
          {
            role: "user",
            content: [
              { type: "text", text: query },
              {
                type: "image_url",
                image_url: { url: `data:image/png;base64,${pngBase64}` },
              },
            ],
          },
        ],
      });
    } catch (err) {
      throw new UpstreamError(`upstream chat request failed: ${err}`);
    }
    const text = reply.data?.choices?.[0]?.message?.content;
    if (typeof text !== "string") {
      throw new UpstreamError("upstream chat reply held no message content");
    }
    return text;
  }

  realismText(pngBase64: string, query: string): Promise<string> {
    return this.chat(this.options.realismModel, pngBase64, query);
  }

  captionText(pngBase64: string, query: string): Promise<string> {
    return this.chat(this.options.captionModel, pngBase64, query);
  }

  async embed(text: string): Promise<number[]> {
    let reply;
    try {
      reply = await this.http.post("/embeddings", {
        model: this.options.embedModel,
        input: text,
      });
    } catch (err) {
      throw new UpstreamError(`upstream embeddings request failed: ${err}`);
    }
    const vector = reply.data?.data?.[0]?.embedding;
    if (!Array.isArray(vector) || vector.some((x) => typeof x !== "number")) {
      throw new UpstreamError("upstream embeddings reply held no vector");
    }
    return vector;
  }
}
