import * as fs from "fs";
import * as path from "path";

export interface WavData {
  sampleRate: number;
  samples: Float64Array;
}

export interface SessionTracks {
  sessionId: string;
  speakerIds: string[];
  tracks: Float64Array[];
  sampleRate: number;
}

/**
 * Parse a mono RIFF WAV file holding PCM-16 or IEEE-float-32 samples.
 * Samples come back as float64 in [-1, 1] (int16 divided by 32768).
 */
export function readWav(file: string): WavData {
  const buf = fs.readFileSync(file);
  if (buf.length < 12 || buf.toString("ascii", 0, 4) !== "RIFF" || buf.toString("ascii", 8, 12) !== "WAVE") {
    throw new Error(`${file}: malformed RIFF header`);
  }
  let fmt: { format: number; channels: number; rate: number; bits: number } | null = null;
  let samples: Float64Array | null = null;
  let pos = 12;
  while (pos + 8 <= buf.length) {
    const id = buf.toString("ascii", pos, pos + 4);
    const size = buf.readUInt32LE(pos + 4);
    const body = buf.subarray(pos + 8, Math.min(pos + 8 + size, buf.length));
    if (id === "fmt ") {
      if (body.length < 16) throw new Error(`${file}: truncated fmt chunk`);
      fmt = {
        format: body.readUInt16LE(0),
        channels: body.readUInt16LE(2),
        rate: body.readUInt32LE(4),
        bits: body.readUInt16LE(14),
      };
    } else if (id === "data") {
      if (fmt === null) throw new Error(`${file}: data chunk before fmt chunk`);
      if (fmt.channels !== 1) {
        throw new Error(`${file}: expected mono audio, got ${fmt.channels} channels`);
      }
      if (fmt.format === 1 && fmt.bits === 16) {
        const n = Math.floor(body.length / 2);
        samples = new Float64Array(n);
        for (let i = 0; i < n; i++) samples[i] = body.readInt16LE(2 * i) / 32768;
      } else if (fmt.format === 3 && fmt.bits === 32) {
        const n = Math.floor(body.length / 4);
        samples = new Float64Array(n);
        for (let i = 0; i < n; i++) {
          samples[i] = Math.max(-1, Math.min(1, body.readFloatLE(4 * i)));
        }
      } else {
        throw new Error(
          `${file}: unsupported format (wFormatTag=${fmt.format}, bits=${fmt.bits}); ` +
            "only PCM-16 and float-32 are handled"
        );
      }
    }
    pos += 8 + size + (size & 1); // chunks are word-aligned
  }
  if (fmt === null || samples === null) throw new Error(`${file}: missing fmt or data chunk`);
  return { sampleRate: fmt.rate, samples };
}

/** Write a mono WAV file (pcm16 or float32); used by fixtures and tests. */
export function writeWav(
  file: string,
  samples: ArrayLike<number>,
  sampleRate: number,
  encoding: "pcm16" | "float32" = "pcm16"
): void {
  let body: Buffer;
  let fmt: Buffer;
  if (encoding === "pcm16") {
    body = Buffer.alloc(samples.length * 2);
    for (let i = 0; i < samples.length; i++) {
      const s = Math.max(-1, Math.min(1, samples[i]));
      body.writeInt16LE(Math.round(s * 32767), 2 * i);
    }
    fmt = makeFmtChunk(1, sampleRate, 2, 16);
  } else {
    body = Buffer.alloc(samples.length * 4);
    for (let i = 0; i < samples.length; i++) {
      body.writeFloatLE(Math.max(-1, Math.min(1, samples[i])), 4 * i);
    }
    fmt = makeFmtChunk(3, sampleRate, 4, 32);
  }
  const chunks = Buffer.concat([
    Buffer.from("WAVE", "ascii"),
    Buffer.from("fmt ", "ascii"),
    uint32(fmt.length),
    fmt,
    Buffer.from("data", "ascii"),
    uint32(body.length),
    body,
  ]);
  fs.writeFileSync(file, Buffer.concat([Buffer.from("RIFF", "ascii"), uint32(chunks.length), chunks]));
}

function makeFmtChunk(format: number, rate: number, blockAlign: number, bits: number): Buffer {
  const b = Buffer.alloc(16);
  b.writeUInt16LE(format, 0);
  b.writeUInt16LE(1, 2); // mono
  b.writeUInt32LE(rate, 4);
  b.writeUInt32LE(rate * blockAlign, 8);
  b.writeUInt16LE(blockAlign, 12);
  b.writeUInt16LE(bits, 14);
  return b;
}

function uint32(n: number): Buffer {
  const b = Buffer.alloc(4);
  b.writeUInt32LE(n, 0);
  return b;
}

/**
 * Load every `<speaker>.wav` in a session directory, sorted by filename.
 * Tracks must share one sample rate and are trimmed to the shortest track.
 */
export function readSessionTracks(sessionDir: string): SessionTracks {
  const files = fs
    .readdirSync(sessionDir)
    .filter((f) => f.endsWith(".wav"))
    .sort();
  if (files.length === 0) throw new Error(`${sessionDir}: no speaker WAV files found`);
  const speakerIds: string[] = [];
  const tracks: Float64Array[] = [];
  let rate: number | null = null;
  for (const f of files) {
    const wav = readWav(path.join(sessionDir, f));
    if (rate === null) rate = wav.sampleRate;
    else if (wav.sampleRate !== rate) {
      throw new Error(`${sessionDir}: mismatched sample rates across tracks (${f}=${wav.sampleRate}, expected ${rate})`);
    }
    speakerIds.push(f.slice(0, -4));
    tracks.push(wav.samples);
  }
  const n = Math.min(...tracks.map((t) => t.length));
  return {
    sessionId: path.basename(sessionDir),
    speakerIds,
    tracks: tracks.map((t) => t.subarray(0, n)),
    sampleRate: rate as number,
  };
}

/** Average all speaker tracks into a single mixed signal. */
export function mixTracks(tracks: Float64Array[]): Float64Array {
  if (tracks.length === 0) throw new Error("no tracks to mix");
  const n = tracks[0].length;
  const mix = new Float64Array(n);
  for (const t of tracks) {
    for (let i = 0; i < n; i++) mix[i] += t[i];
  }
  for (let i = 0; i < n; i++) mix[i] /= tracks.length;
  return mix;
}
