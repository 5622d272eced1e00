/**
 * Log-mel spectrum of fixed-length audio frames.
 *
 * One frame in, one vector out: Hann window, zero-padded power spectrum,
 * triangular mel filterbank, natural log with a small floor.
 */

const twiddleCache = new Map<number, { cos: Float64Array; sin: Float64Array }>();

function twiddles(n: number): { cos: Float64Array; sin: Float64Array } {
  let t = twiddleCache.get(n);
  if (t === undefined) {
    const cos = new Float64Array(n / 2);
    const sin = new Float64Array(n / 2);
    for (let k = 0; k < n / 2; k++) {
      cos[k] = Math.cos((-2 * Math.PI * k) / n);
      sin[k] = Math.sin((-2 * Math.PI * k) / n);
    }
    t = { cos, sin };
    twiddleCache.set(n, t);
  }
  return t;
}

/** In-place iterative radix-2 FFT; re and im must have power-of-two length. */
export function fft(re: Float64Array, im: Float64Array): void {
  const n = re.length;
  if (n !== im.length) throw new Error("fft: re/im length mismatch");
  if (n === 0 || (n & (n - 1)) !== 0) throw new Error("fft: length must be a power of two");
  for (let i = 1, j = 0; i < n; i++) {
    let bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) {
      const tr = re[i];
      re[i] = re[j];
      re[j] = tr;
      const ti = im[i];
      im[i] = im[j];
      im[j] = ti;
    }
  }
  const tw = twiddles(n);
  for (let len = 2; len <= n; len <<= 1) {
    const stride = n / len;
    const half = len >> 1;
    for (let start = 0; start < n; start += len) {
      for (let k = 0; k < half; k++) {
        const wRe = tw.cos[k * stride];
        const wIm = tw.sin[k * stride];
        const a = start + k;
        const b = a + half;
        const vRe = re[b] * wRe - im[b] * wIm;
        const vIm = re[b] * wIm + im[b] * wRe;
        re[b] = re[a] - vRe;
        im[b] = im[a] - vIm;
        re[a] += vRe;
        im[a] += vIm;
      }
    }
  }
}

export function nextPowerOfTwo(n: number): number {
  let p = 1;
  while (p < n) p <<= 1;
  return p;
}

export function hannWindow(n: number): Float64Array {
  const w = new Float64Array(n);
  for (let i = 0; i < n; i++) w[i] = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / n);
  return w;
}

function hzToMel(f: number): number {
  return 2595 * Math.log10(1 + f / 700);
}

function melToHz(m: number): number {
  return 700 * (Math.pow(10, m / 2595) - 1);
}

export interface MelFilterbank {
  nBands: number;
  fftSize: number;
  /** weights[band] is a dense row over the nFft/2+1 spectrum bins. */
  weights: Float64Array[];
}

/** Triangular filters with edges spaced uniformly on the mel scale. */
export function melFilterbank(
  nBands: number,
  fftSize: number,
  sampleRate: number,
  fMin = 125,
  fMax?: number
): MelFilterbank {
  const top = Math.min(fMax ?? 7500, sampleRate / 2);
  if (top <= fMin) throw new Error(`mel filterbank: fMax ${top} must exceed fMin ${fMin}`);
  const nBins = fftSize / 2 + 1;
  const melLo = hzToMel(fMin);
  const melHi = hzToMel(top);
  const edges = new Float64Array(nBands + 2);
  for (let i = 0; i < nBands + 2; i++) {
    edges[i] = melToHz(melLo + ((melHi - melLo) * i) / (nBands + 1));
  }
  const weights: Float64Array[] = [];
  for (let b = 0; b < nBands; b++) {
    const row = new Float64Array(nBins);
    const [e0, e1, e2] = [edges[b], edges[b + 1], edges[b + 2]];
    for (let k = 0; k < nBins; k++) {
      const f = (k * sampleRate) / fftSize;
      let w = 0;
      if (f > e0 && f < e2) {
        w = f <= e1 ? (f - e0) / (e1 - e0) : (e2 - f) / (e2 - e1);
      }
      row[k] = w;
    }
    weights.push(row);
  }
  return { nBands, fftSize, weights };
}

const LOG_FLOOR = 1e-6;

/** Log-mel vector of one windowed, zero-padded frame. */
export function logMelFrame(frame: Float64Array, bank: MelFilterbank, window: Float64Array): Float64Array {
  if (frame.length !== window.length) throw new Error("logMelFrame: frame/window length mismatch");
  const n = bank.fftSize;
  const re = new Float64Array(n);
  const im = new Float64Array(n);
  for (let i = 0; i < frame.length; i++) re[i] = frame[i] * window[i];
  fft(re, im);
  const nBins = n / 2 + 1;
  const power = new Float64Array(nBins);
  for (let k = 0; k < nBins; k++) power[k] = re[k] * re[k] + im[k] * im[k];
  const out = new Float64Array(bank.nBands);
  for (let b = 0; b < bank.nBands; b++) {
    const row = bank.weights[b];
    let acc = 0;
    for (let k = 0; k < nBins; k++) acc += row[k] * power[k];
    out[b] = Math.log(acc + LOG_FLOOR);
  }
  return out;
}
