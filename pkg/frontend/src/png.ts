/**
 * PNG payload decoding with the same channel normalization the engine
 * applies: grayscale stays single-channel, everything else lands on RGB
 * with any alpha dropped.
 */
import { PNG } from "pngjs";

export class ImageDecodeError extends Error {}

export interface DecodedImage {
  height: number;
  width: number;
  channels: number;
  /** Row-major planes, one Float64Array of length height*width per channel. */
  planes: Float64Array[];
}

const MIN_SIDE = 8;
const PNG_SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];
const GRAY_COLOR_TYPES = new Set([0, 4]);

function colorTypeOf(data: Buffer): number {
  if (data.length < 26) {
    throw new ImageDecodeError("payload too short to be a PNG");
  }
  for (let i = 0; i < PNG_SIGNATURE.length; i++) {
    if (data[i] !== PNG_SIGNATURE[i]) {
      throw new ImageDecodeError("payload is not a PNG");
    }
  }
  // Signature (8) + IHDR length/type (8) + width/height (8) + bit depth (1).
  return data[25];
}

export function decodePng(data: Buffer): DecodedImage {
  const colorType = colorTypeOf(data);
  let parsed: PNG;
  try {
    parsed = PNG.sync.read(data);
  } catch (err) {
    throw new ImageDecodeError(`cannot decode image payload: ${err}`);
  }
  const { width, height } = parsed;
  if (height < MIN_SIDE || width < MIN_SIDE) {
    throw new ImageDecodeError(
      `image must be at least ${MIN_SIDE}x${MIN_SIDE}, got ${height}x${width}`,
    );
  }
  const channels = GRAY_COLOR_TYPES.has(colorType) ? 1 : 3;
  const planes: Float64Array[] = [];
  for (let c = 0; c < channels; c++) {
    planes.push(new Float64Array(height * width));
  }
  const rgba = parsed.data;
  for (let i = 0; i < height * width; i++) {
    for (let c = 0; c < channels; c++) {
      planes[c][i] = rgba[i * 4 + c];
    }
  }
  return { height, width, channels, planes };
}

const BASE64_PATTERN = /^[A-Za-z0-9+/]*={0,2}$/;

export function decodeBase64Strict(value: string): Buffer {
  if (value.length % 4 !== 0 || !BASE64_PATTERN.test(value)) {
    throw new ImageDecodeError("invalid base64 payload");
  }
  return Buffer.from(value, "base64");
}
