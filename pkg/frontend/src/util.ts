/**
 * Deterministic 64-bit helpers shared with the attack engine.
 *
 * These constants are part of the wire-level contract: the embedding
 * endpoint's vectors are a pure function of splitmix64 and FNV-1a, so any
 * server implementation must reproduce them bit for bit.
 */

const MASK64 = (1n << 64n) - 1n;
const SPLITMIX_GAMMA = 0x9e3779b97f4a7c15n;

/** Advance a splitmix64 state, returning [new state, output word]. */
export function splitmix64(state: bigint): [bigint, bigint] {
  const next = (state + SPLITMIX_GAMMA) & MASK64;
  let z = next;
  z = ((z ^ (z >> 30n)) * 0xbf58476d1ce4e5b9n) & MASK64;
  z = ((z ^ (z >> 27n)) * 0x94d049bb133111ebn) & MASK64;
  z = z ^ (z >> 31n);
  return [next, z & MASK64];
}

/** 64-bit FNV-1a hash of a byte buffer. */
export function fnv1a64(data: Uint8Array): bigint {
  let h = 0xcbf29ce484222325n;
  for (const byte of data) {
    h ^= BigInt(byte);
    h = (h * 0x100000001b3n) & MASK64;
  }
  return h;
}

/** Round to nearest integer with ties toward +infinity. */
export function roundHalfUp(x: number): number {
  return Math.floor(x + 0.5);
}

/** Numerically stable logistic function. */
export function logistic(x: number): number {
  if (x >= 0) {
    return 1 / (1 + Math.exp(-x));
  }
  const e = Math.exp(x);
  return e / (1 + e);
}

function sortKeysDeep(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortKeysDeep);
  }
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value as Record<string, unknown>).sort()) {
      out[key] = sortKeysDeep((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

/** Canonical JSON: sorted keys, compact separators, trailing newline. */
export function canonicalJson(value: unknown): string {
  return JSON.stringify(sortKeysDeep(value)) + "\n";
}
