import { describe, expect, it } from "vitest";

import { canonicalJson, fnv1a64, logistic, roundHalfUp, splitmix64 } from "../src/util.js";

describe("splitmix64", () => {
  it("reproduces the published sequence from state 0", () => {
    const expected = [0xe220a8397b1dcdafn, 0x6e789e6aa1b965f4n, 0x06c45d188009454fn];
    let state = 0n;
    for (const word of expected) {
      let out: bigint;
      [state, out] = splitmix64(state);
      expect(out).toBe(word);
    }
  });

  it("stays inside 64 bits", () => {
    let state = (1n << 64n) - 1n;
    for (let i = 0; i < 100; i++) {
      let out: bigint;
      [state, out] = splitmix64(state);
      expect(state < 1n << 64n && state >= 0n).toBe(true);
      expect(out < 1n << 64n && out >= 0n).toBe(true);
    }
  });
});

describe("fnv1a64", () => {
  const encode = (s: string) => new TextEncoder().encode(s);

  it("matches the published vectors", () => {
    expect(fnv1a64(encode(""))).toBe(0xcbf29ce484222325n);
    expect(fnv1a64(encode("a"))).toBe(12638187200555641996n);
    expect(fnv1a64(encode("foobar"))).toBe(9625390261332436968n);
  });
});

describe("roundHalfUp", () => {
  it("rounds ties toward +infinity", () => {
    expect(roundHalfUp(0.5)).toBe(1);
    expect(roundHalfUp(1.5)).toBe(2);
    expect(roundHalfUp(2.5)).toBe(3);
    expect(roundHalfUp(-0.5)).toBe(0);
    expect(roundHalfUp(-1.5)).toBe(-1);
    expect(roundHalfUp(2.4)).toBe(2);
    expect(roundHalfUp(2.6)).toBe(3);
  });
});

describe("logistic", () => {
  it("is symmetric and bounded", () => {
    expect(logistic(0)).toBe(0.5);
    expect(logistic(500)).toBe(1);
    expect(logistic(-500)).toBeGreaterThan(0);
    expect(logistic(-500)).toBeLessThan(1e-200);
    expect(logistic(1.5) + logistic(-1.5)).toBeCloseTo(1, 12);
  });
});

describe("canonicalJson", () => {
  it("sorts keys, compacts separators, appends newline", () => {
    expect(canonicalJson({ b: 1, a: [2, { d: 3, c: 4 }] })).toBe(
      '{"a":[2,{"c":4,"d":3}],"b":1}\n',
    );
  });
});
