/**
 * Deterministic mock models mirroring the engine's in-process oracles.
 *
 * Realism scores are a rounded logistic of mean spectral energy inside a
 * radial frequency band; captions bucket that energy; embeddings sum
 * per-token pseudorandom sign vectors. All three are pure functions of
 * their inputs, so identical requests always produce identical replies.
 */
import { forward2d } from "./fft.js";
import { DecodedImage } from "./png.js";
import { fnv1a64, logistic, roundHalfUp, splitmix64 } from "./util.js";

export interface BandCoord {
  u: number;
  v: number;
}

/** Coordinates whose normalized radius lies inside [alpha1, alpha2]. */
export function bandMembers(
  height: number,
  width: number,
  alpha1: number,
  alpha2: number,
): BandCoord[] {
  const rMax = Math.sqrt((height / 2) ** 2 + (width / 2) ** 2);
  const halfH = Math.floor(height / 2);
  const halfW = Math.floor(width / 2);
  const members: BandCoord[] = [];
  for (let u = 0; u < height; u++) {
    const su = ((u + halfH) % height) - halfH;
    for (let v = 0; v < width; v++) {
      const sv = ((v + halfW) % width) - halfW;
      const r = Math.sqrt(su * su + sv * sv) / rMax;
      if (r >= alpha1 && r <= alpha2) {
        members.push({ u, v });
      }
    }
  }
  return members;
}

/** Mean squared spectral magnitude over band coordinates and channels. */
export function bandEnergy(image: DecodedImage, members: BandCoord[]): number {
  let total = 0;
  for (const plane of image.planes) {
    const grid = forward2d(plane, image.height, image.width);
    for (const { u, v } of members) {
      const idx = u * image.width + v;
      total += grid.re[idx] * grid.re[idx] + grid.im[idx] * grid.im[idx];
    }
  }
  return total / (members.length * image.planes.length);
}

export interface BandParams {
  alpha1: number;
  alpha2: number;
}

export class BandEnergyRealismMock {
  readonly modelId = "mock-band-energy";

  constructor(
    readonly band: BandParams,
    readonly gain: number,
    readonly offset: number,
  ) {}

  scoreForEnergy(energy: number): number {
    const score = roundHalfUp(10 * logistic(this.gain * (energy - this.offset)));
    return Math.max(0, Math.min(10, score));
  }

  scoreImage(image: DecodedImage): number {
    const members = bandMembers(image.height, image.width, this.band.alpha1, this.band.alpha2);
    return this.scoreForEnergy(bandEnergy(image, members));
  }
}

function pad3(n: number): string {
  return n.toString().padStart(3, "0");
}

export function bucketCaption(bucket: number): string {
  return `scene-${pad3(bucket)} texture-${pad3(bucket)}`;
}

export class BucketCaptionMock {
  readonly modelId = "mock-caption-bucket";

  constructor(
    readonly band: BandParams,
    readonly nbuckets: number,
    readonly eMin: number,
    readonly eMax: number,
  ) {
    if (nbuckets < 2) {
      throw new Error(`nbuckets must be at least 2, got ${nbuckets}`);
    }
    if (!(eMax > eMin)) {
      throw new Error(`e_max must exceed e_min, got [${eMin}, ${eMax}]`);
    }
  }

  bucketForEnergy(energy: number): number {
    const width = (this.eMax - this.eMin) / this.nbuckets;
    const idx = Math.floor((energy - this.eMin) / width);
    return Math.max(0, Math.min(this.nbuckets - 1, idx));
  }

  captionImage(image: DecodedImage): string {
    const members = bandMembers(image.height, image.width, this.band.alpha1, this.band.alpha2);
    return bucketCaption(this.bucketForEnergy(bandEnergy(image, members)));
  }
}

/** Published hash-projection of one token onto {-1, +1}^dim. */
export function tokenSignVector(token: string, dim: number): Int8Array {
  let state = fnv1a64(new TextEncoder().encode(token));
  const out = new Int8Array(dim);
  for (let j = 0; j < dim; j++) {
    let word: bigint;
    [state, word] = splitmix64(state);
    out[j] = word >> 63n ? 1 : -1;
  }
  return out;
}

export class HashProjectionEmbedder {
  private cache = new Map<string, Int8Array>();

  constructor(readonly dim: number = 256) {}

  embed(text: string): number[] {
    const tokens = text.split(/\s+/).filter(Boolean);
    if (tokens.length === 0) {
      throw new Error("cannot embed empty text");
    }
    const total = new Array<number>(this.dim).fill(0);
    for (const token of tokens) {
      let vec = this.cache.get(token);
      if (vec === undefined) {
        vec = tokenSignVector(token, this.dim);
        this.cache.set(token, vec);
      }
      for (let j = 0; j < this.dim; j++) {
        total[j] += vec[j];
      }
    }
    return total;
  }
}
