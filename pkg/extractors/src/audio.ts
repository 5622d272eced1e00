import { hannWindow, logMelFrame, melFilterbank, nextPowerOfTwo, MelFilterbank } from "./mel";

export const AUDIO_DIM = 128;
export const FRAME_SECONDS = 0.96;

export interface AudioClipOptions {
  pool?: boolean;
}

interface FrameSetup {
  frameLen: number;
  bank: MelFilterbank;
  window: Float64Array;
}

const setupCache = new Map<number, FrameSetup>();

function frameSetup(sampleRate: number): FrameSetup {
  let s = setupCache.get(sampleRate);
  if (s === undefined) {
    const frameLen = Math.round(FRAME_SECONDS * sampleRate);
    const fftSize = nextPowerOfTwo(frameLen);
    s = {
      frameLen,
      bank: melFilterbank(AUDIO_DIM, fftSize, sampleRate),
      window: hannWindow(frameLen),
    };
    setupCache.set(sampleRate, s);
  }
  return s;
}

/**
 * Per-frame log-mel embeddings of one clip span within a mixed session track.
 *
 * The span is cut into consecutive non-overlapping 0.96 s frames from the
 * clip start; a trailing remainder shorter than one frame is dropped, so a
 * 7 s clip yields floor(7 / 0.96) = 7 frames.
 */
export function audioClipFrames(
  mix: Float64Array,
  sampleRate: number,
  start: number,
  end: number
): Float64Array[] {
  if (!(end > start) || start < 0) throw new Error(`bad clip span [${start}, ${end}]`);
  const s0 = Math.round(start * sampleRate);
  const s1 = Math.round(end * sampleRate);
  if (s1 > mix.length) {
    throw new Error(
      `clip span [${start}, ${end}] ends beyond the recording (${(mix.length / sampleRate).toFixed(2)} s)`
    );
  }
  const { frameLen, bank, window } = frameSetup(sampleRate);
  const nFrames = Math.floor((s1 - s0) / frameLen);
  const frames: Float64Array[] = [];
  for (let f = 0; f < nFrames; f++) {
    const lo = s0 + f * frameLen;
    frames.push(logMelFrame(mix.subarray(lo, lo + frameLen), bank, window));
  }
  return frames;
}

/**
 * One embedding row for a clip: frame embeddings concatenated in time order,
 * or their mean when `pool` is set.  Returns null when the span is shorter
 * than one frame (no audio row for the clip).
 */
export function audioClipRow(
  mix: Float64Array,
  sampleRate: number,
  start: number,
  end: number,
  opts: AudioClipOptions = {}
): Float64Array | null {
  const frames = audioClipFrames(mix, sampleRate, start, end);
  if (frames.length === 0) return null;
  if (opts.pool) {
    const out = new Float64Array(AUDIO_DIM);
    for (const fr of frames) {
      for (let i = 0; i < AUDIO_DIM; i++) out[i] += fr[i];
    }
    for (let i = 0; i < AUDIO_DIM; i++) out[i] /= frames.length;
    return out;
  }
  const out = new Float64Array(frames.length * AUDIO_DIM);
  frames.forEach((fr, f) => out.set(fr, f * AUDIO_DIM));
  return out;
}
