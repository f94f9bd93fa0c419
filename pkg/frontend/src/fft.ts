/**
 * Unnormalized forward 2D DFT, enough to reproduce the band-energy
 * statistic the mock models are built on. Power-of-two lengths use an
 * iterative radix-2 FFT; other lengths fall back to a direct transform.
 */

export interface ComplexGrid {
  re: Float64Array;
  im: Float64Array;
  height: number;
  width: number;
}

function isPowerOfTwo(n: number): boolean {
  return n > 0 && (n & (n - 1)) === 0;
}

/** In-place radix-2 FFT of a power-of-two length signal. */
function fftRadix2(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) {
      j ^= bit;
    }
    j ^= bit;
    if (i < j) {
      [re[i], re[j]] = [re[j], re[i]];
      [im[i], im[j]] = [im[j], im[i]];
    }
  }
  for (let len = 2; len <= n; len <<= 1) {
    const angle = (-2 * Math.PI) / len;
    const wRe = Math.cos(angle);
    const wIm = Math.sin(angle);
    for (let start = 0; start < n; start += len) {
      let curRe = 1;
      let curIm = 0;
      for (let k = 0; k < len / 2; k++) {
        const even = start + k;
        const odd = start + k + len / 2;
        const tRe = re[odd] * curRe - im[odd] * curIm;
        const tIm = re[odd] * curIm + im[odd] * curRe;
        re[odd] = re[even] - tRe;
        im[odd] = im[even] - tIm;
        re[even] += tRe;
        im[even] += tIm;
        const nextRe = curRe * wRe - curIm * wIm;
        curIm = curRe * wIm + curIm * wRe;
        curRe = nextRe;
      }
    }
  }
}

/** Direct O(n^2) DFT for lengths without a radix-2 factorization. */
function dftDirect(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  const outRe = new Float64Array(n);
  const outIm = new Float64Array(n);
  for (let k = 0; k < n; k++) {
    let sumRe = 0;
    let sumIm = 0;
    for (let t = 0; t < n; t++) {
      const angle = (-2 * Math.PI * k * t) / n;
      const c = Math.cos(angle);
      const s = Math.sin(angle);
      sumRe += re[t] * c - im[t] * s;
      sumIm += re[t] * s + im[t] * c;
    }
    outRe[k] = sumRe;
    outIm[k] = sumIm;
  }
  re.set(outRe);
  im.set(outIm);
}

function transformLine(re: Float64Array, im: Float64Array): void {
  if (isPowerOfTwo(re.length)) {
    fftRadix2(re, im);
  } else {
    dftDirect(re, im);
  }
}

/**
 * Forward unnormalized 2D DFT of one real channel stored row-major.
 */
export function forward2d(pixels: Float64Array, height: number, width: number): ComplexGrid {
  const re = Float64Array.from(pixels);
  const im = new Float64Array(height * width);

  const rowRe = new Float64Array(width);
  const rowIm = new Float64Array(width);
  for (let r = 0; r < height; r++) {
    rowRe.set(re.subarray(r * width, (r + 1) * width));
    rowIm.set(im.subarray(r * width, (r + 1) * width));
    transformLine(rowRe, rowIm);
    re.set(rowRe, r * width);
    im.set(rowIm, r * width);
  }

  const colRe = new Float64Array(height);
  const colIm = new Float64Array(height);
  for (let c = 0; c < width; c++) {
    for (let r = 0; r < height; r++) {
      colRe[r] = re[r * width + c];
      colIm[r] = im[r * width + c];
    }
    transformLine(colRe, colIm);
    for (let r = 0; r < height; r++) {
      re[r * width + c] = colRe[r];
      im[r * width + c] = colIm[r];
    }
  }
  return { re, im, height, width };
}
