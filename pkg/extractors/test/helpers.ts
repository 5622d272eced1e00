import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { writeWav } from "../src/wav";

/** Small deterministic PRNG so fixtures are reproducible across runs. */
export function lcg(seed: number): () => number {
  let s = seed >>> 0;
  return () => {
    s = (Math.imul(s, 1664525) + 1013904223) >>> 0;
    return s / 2 ** 32;
  };
}

export function makeTmpDir(prefix: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), prefix));
}

export function sineWave(n: number, sampleRate: number, freq: number, amp: number): Float64Array {
  const out = new Float64Array(n);
  for (let i = 0; i < n; i++) out[i] = amp * Math.sin((2 * Math.PI * freq * i) / sampleRate);
  return out;
}

export interface Fixture {
  dir: string;
  manifest: string;
  mediaRoot: string;
  transcripts: string;
  clipIds: string[];
  speakerIds: string[];
}

/**
 * Three 7-second clips in one session with two speakers: WAV tracks, action
 * unit series, and transcripts that cover the first two clips only.
 */
export function makeFixture(): Fixture {
  const dir = makeTmpDir("extractors-fixture-");
  const mediaRoot = path.join(dir, "media");
  const sessionDir = path.join(mediaRoot, "s1");
  fs.mkdirSync(sessionDir, { recursive: true });

  const sampleRate = 16000;
  const duration = 35;
  const n = duration * sampleRate;
  const speakers: Array<{ id: string; freq: number; seed: number }> = [
    { id: "a", freq: 220, seed: 7 },
    { id: "b", freq: 330, seed: 19 },
  ];
  for (const sp of speakers) {
    const rand = lcg(sp.seed);
    const track = sineWave(n, sampleRate, sp.freq, 0.2);
    for (let i = 0; i < n; i++) track[i] += 0.01 * (2 * rand() - 1);
    writeWav(path.join(sessionDir, `${sp.id}.wav`), track, sampleRate, "pcm16");
  }

  for (const sp of speakers) {
    const lines = ["time," + Array.from({ length: 17 }, (_, j) => `au${j + 1}`).join(",")];
    for (let t = 0; t <= duration; t = Math.round((t + 0.1) * 10) / 10) {
      const cells = [String(t)];
      for (let j = 0; j < 17; j++) {
        const v = 0.5 + 0.4 * Math.sin(2 * Math.PI * (0.05 * t + j / 17) + sp.seed);
        cells.push(v.toFixed(6));
      }
      lines.push(cells.join(","));
    }
    fs.writeFileSync(path.join(sessionDir, `${sp.id}.aus.csv`), lines.join("\n") + "\n");
  }

  const transcripts = path.join(dir, "transcripts.csv");
  fs.writeFileSync(
    transcripts,
    [
      "session_id,speaker,start,end,text",
      's1,a,5.2,7.0,"well, that was ""fun"""',
      "s1,b,6.5,9.8,i guess so",
      "s1,a,16.0,18.0,right",
      "s1,b,18.2,21.5,let's move on then",
      "",
    ].join("\n")
  );

  const manifest = path.join(dir, "manifest.jsonl");
  const clips = [
    { clip_id: "c1", session_id: "s1", mark_time: 8.0, start: 5.0, end: 12.0, kind: "gap" },
    { clip_id: "c2", session_id: "s1", mark_time: 18.0, start: 15.0, end: 22.0, kind: "overlap" },
    { clip_id: "c3", session_id: "s1", mark_time: 28.5, start: 25.0, end: 32.0, kind: "non_targeted" },
  ];
  fs.writeFileSync(manifest, clips.map((c) => JSON.stringify(c)).join("\n") + "\n");

  return {
    dir,
    manifest,
    mediaRoot,
    transcripts,
    clipIds: clips.map((c) => c.clip_id),
    speakerIds: speakers.map((s) => s.id),
  };
}
