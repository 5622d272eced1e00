import { describe, expect, test } from "vitest";
import { fft, hannWindow, logMelFrame, melFilterbank } from "../src/mel";
import { lcg, sineWave } from "./helpers";

function naiveDft(re: number[], im: number[]): { re: number[]; im: number[] } {
  const n = re.length;
  const outRe = new Array(n).fill(0);
  const outIm = new Array(n).fill(0);
  for (let k = 0; k < n; k++) {
    for (let t = 0; t < n; t++) {
      const ang = (-2 * Math.PI * k * t) / n;
      outRe[k] += re[t] * Math.cos(ang) - im[t] * Math.sin(ang);
      outIm[k] += re[t] * Math.sin(ang) + im[t] * Math.cos(ang);
    }
  }
  return { re: outRe, im: outIm };
}

describe("fft", () => {
  test("matches a direct DFT on random input", () => {
    const rand = lcg(3);
    const n = 16;
    const re = Array.from({ length: n }, () => 2 * rand() - 1);
    const im = Array.from({ length: n }, () => 2 * rand() - 1);
    const want = naiveDft(re, im);
    const gotRe = Float64Array.from(re);
    const gotIm = Float64Array.from(im);
    fft(gotRe, gotIm);
    for (let k = 0; k < n; k++) {
      expect(gotRe[k]).toBeCloseTo(want.re[k], 9);
      expect(gotIm[k]).toBeCloseTo(want.im[k], 9);
    }
  });

  test("unit impulse gives a flat spectrum", () => {
    const re = new Float64Array(64);
    const im = new Float64Array(64);
    re[0] = 1;
    fft(re, im);
    for (let k = 0; k < 64; k++) {
      expect(Math.hypot(re[k], im[k])).toBeCloseTo(1, 12);
    }
  });

  test("non power-of-two length is rejected", () => {
    expect(() => fft(new Float64Array(12), new Float64Array(12))).toThrow(/power of two/);
  });
});

describe("mel filterbank", () => {
  test("weights are nonnegative and band peaks move upward", () => {
    const bank = melFilterbank(128, 8192, 16000);
    let prevPeak = -1;
    for (const row of bank.weights) {
      let peak = 0;
      for (let k = 0; k < row.length; k++) {
        expect(row[k]).toBeGreaterThanOrEqual(0);
        if (row[k] > row[peak]) peak = k;
      }
      expect(row[peak]).toBeGreaterThan(0);
      expect(peak).toBeGreaterThanOrEqual(prevPeak);
      prevPeak = peak;
    }
  });

  test("band ceiling clamps to the Nyquist frequency", () => {
    const bank = melFilterbank(40, 1024, 8000);
    const nyquistBin = 512;
    const lastRow = bank.weights[39];
    for (let k = 0; k <= nyquistBin; k++) {
      expect(Number.isFinite(lastRow[k])).toBe(true);
    }
  });
});

describe("log-mel frames", () => {
  test("a higher tone excites a higher band", () => {
    const sr = 8000;
    const frameLen = Math.round(0.96 * sr);
    const window = hannWindow(frameLen);
    const bank = melFilterbank(128, 8192, sr);
    const argmax = (v: Float64Array) => v.indexOf(Math.max(...Array.from(v)));
    const low = logMelFrame(sineWave(frameLen, sr, 300, 0.5), bank, window);
    const high = logMelFrame(sineWave(frameLen, sr, 2500, 0.5), bank, window);
    expect(argmax(high)).toBeGreaterThan(argmax(low));
  });

  test("silence hits the log floor everywhere", () => {
    const sr = 8000;
    const frameLen = Math.round(0.96 * sr);
    const out = logMelFrame(new Float64Array(frameLen), melFilterbank(128, 8192, sr), hannWindow(frameLen));
    for (const v of out) expect(v).toBeCloseTo(Math.log(1e-6), 12);
  });

  test("identical input gives identical output", () => {
    const sr = 8000;
    const frameLen = Math.round(0.96 * sr);
    const window = hannWindow(frameLen);
    const bank = melFilterbank(128, 8192, sr);
    const rand = lcg(11);
    const frame = new Float64Array(frameLen);
    for (let i = 0; i < frameLen; i++) frame[i] = 2 * rand() - 1;
    const first = logMelFrame(frame, bank, window);
    const second = logMelFrame(frame, bank, window);
    expect(Array.from(first)).toEqual(Array.from(second));
  });
});
